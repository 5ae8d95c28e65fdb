#pragma once

// Stationary points of C0 on the 2pi-torus, separatrices from saddles and the partition of the
// torus into invariant curved polygons bounded by separatrices.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "beltrami/energy_density.hpp"
#include "beltrami/error.hpp"
#include "beltrami/streamline.hpp"
#include "beltrami/vec.hpp"

namespace beltrami {

enum class CriticalKind { maximum, minimum, saddle, degenerate };

inline const char* to_string(CriticalKind k) {
  switch (k) {
    case CriticalKind::maximum: return "maximum";
    case CriticalKind::minimum: return "minimum";
    case CriticalKind::saddle: return "saddle";
    case CriticalKind::degenerate: return "degenerate";
  }
  return "unknown";
}

struct CriticalPoint {
  double xi = 0.0;
  double eta = 0.0;
  double value = 0.0;
  CriticalKind kind = CriticalKind::degenerate;
  Mat2Sym hessian{};
  SymEigen2 eig{};

  Vec2 pos() const { return {xi, eta}; }
  bool degenerate() const { return kind == CriticalKind::degenerate; }
};

struct CriticalSearchOptions {
  double dedup_radius = 1e-6 * two_pi;
  /// Relative eigenvalue threshold below which a Hessian counts as singular.
  double degeneracy_tol = 1e-7;
  int max_newton_iter = 50;
};

/// Classification by eigenvalue signs; `scale` sets the singularity threshold.
inline CriticalKind classify(const SymEigen2& e, double scale, double rel_tol) {
  const double floor = rel_tol * scale;
  if (std::abs(e.l1) <= floor || std::abs(e.l2) <= floor) return CriticalKind::degenerate;
  if (e.l1 < 0.0) return CriticalKind::maximum;
  if (e.l2 > 0.0) return CriticalKind::minimum;
  return CriticalKind::saddle;
}

namespace detail {

/// Natural second-derivative scale of the modulations.
inline double hessian_scale(const EnergyDensity& E) {
  const double d = std::max(1, E.degree());
  return std::max((E.gamma0().l1_norm() + E.gamma1().l1_norm()) * d * d, 1e-300);
}

}  // namespace detail

/// Newton from every node of a scan_n x scan_n grid, roots reduced to [0, 2pi)^2 and merged
/// within dedup_radius. Sorted by (xi, eta).
inline std::vector<CriticalPoint> find_critical_points(const EnergyDensity& E, int scan_n, double newton_tol,
                                                       const CriticalSearchOptions& opt = {}) {
  if (E.is_constant()) throw Error(ErrorKind::no_critical_points, "constant energy density has no isolated critical points");
  if (scan_n < 8 * std::max(1, E.degree()))
    throw Error(ErrorKind::invalid_resolution, "scan_n must be at least 8 * degree");
  const double scale = detail::hessian_scale(E);
  std::vector<CriticalPoint> out;
  for (int j = 0; j < scan_n; ++j)
    for (int i = 0; i < scan_n; ++i) {
      const Vec2 seed{two_pi * (i + 0.5) / scan_n, two_pi * (j + 0.5) / scan_n};
      const auto root = newton_critical(E, seed, newton_tol, opt.max_newton_iter);
      if (!root) continue;
      Vec2 p{wrap_2pi(root->x), wrap_2pi(root->y)};
      // snap coordinates that are a rounding error away from 2pi
      if (two_pi - p.x < 1e-13) p.x = 0.0;
      if (two_pi - p.y < 1e-13) p.y = 0.0;
      const bool seen = std::any_of(out.begin(), out.end(),
                                    [&](const CriticalPoint& c) { return torus_distance(c.pos(), p) < opt.dedup_radius; });
      if (seen) continue;
      CriticalPoint c;
      c.xi = p.x;
      c.eta = p.y;
      const Jet2 jt = E.jet(p.x, p.y);
      c.value = jt.value;
      c.hessian = jt.hess;
      c.eig = jt.hess.eigen();
      c.kind = classify(c.eig, scale, opt.degeneracy_tol);
      out.push_back(c);
    }
  if (out.empty()) throw Error(ErrorKind::no_critical_points, "no critical points found");
  std::sort(out.begin(), out.end(), [](const CriticalPoint& a, const CriticalPoint& b) {
    return a.xi != b.xi ? a.xi < b.xi : a.eta < b.eta;
  });
  return out;
}

/// Whether the point lies strictly inside the square (0, 2pi)^2 (not on its boundary).
inline bool in_open_square(const CriticalPoint& c, double margin = 1e-9) {
  return c.xi > margin && c.eta > margin && c.xi < two_pi - margin && c.eta < two_pi - margin;
}

struct CriticalCounts {
  int maxima = 0, minima = 0, saddles = 0, degenerate = 0;
};

inline CriticalCounts count_kinds(const std::vector<CriticalPoint>& pts) {
  CriticalCounts c;
  for (const auto& p : pts) {
    switch (p.kind) {
      case CriticalKind::maximum: ++c.maxima; break;
      case CriticalKind::minimum: ++c.minima; break;
      case CriticalKind::saddle: ++c.saddles; break;
      case CriticalKind::degenerate: ++c.degenerate; break;
    }
  }
  return c;
}

/// #max + #min - #saddle; zero for every nondegenerate field on the torus.
inline int euler_check(const std::vector<CriticalPoint>& pts) {
  const auto c = count_kinds(pts);
  if (c.degenerate > 0) throw Error(ErrorKind::degenerate, "degenerate critical point present");
  return c.maxima + c.minima - c.saddles;
}

struct Separatrix {
  int saddle_id = -1;
  /// 0, 1: ascending along +v1, -v1; 2, 3: descending along +v2, -v2 (v1 for the positive
  /// Hessian eigenvalue).
  int branch = 0;
  Direction direction = Direction::ascend;
  Vec2 seed_direction{};
  Trajectory path;
  int endpoint_id = -1;
};

struct SeparatrixOptions {
  double seed_offset = 1e-4;
  double tol = 1e-10;
  double tau_max = 500.0;
  TraceOptions trace{};
};

/// Index of the critical point nearest to p on the torus (within `radius`), or -1.
inline int nearest_point(const std::vector<CriticalPoint>& pts, Vec2 p, double radius) {
  int best = -1;
  double bd = radius;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const double d = torus_distance(pts[k].pos(), p);
    if (d < bd) {
      bd = d;
      best = static_cast<int>(k);
    }
  }
  return best;
}

/// Four gradient lines leaving a saddle: two ascending along the unstable eigenvector of the
/// ascending flow and two descending along the other eigenvector. Endpoints are matched to
/// `points` when given.
inline std::vector<Separatrix> trace_separatrices(const EnergyDensity& E, const CriticalPoint& saddle, int saddle_id,
                                                  const std::vector<CriticalPoint>& points,
                                                  const SeparatrixOptions& opt = {}) {
  if (saddle.kind != CriticalKind::saddle) throw Error(ErrorKind::invalid_argument, "not a saddle point");
  if (!(opt.seed_offset > 0.0 && opt.seed_offset < opt.trace.stop_radius))
    throw Error(ErrorKind::invalid_argument, "seed_offset must be positive and inside the stop radius");
  std::vector<Separatrix> out;
  TraceOptions topt = opt.trace;
  topt.ignore_point = saddle.pos();
  const Vec2 v1 = saddle.eig.v1, v2 = saddle.eig.v2;
  const std::pair<Vec2, Direction> seeds[4] = {
      {v1, Direction::ascend}, {-v1, Direction::ascend}, {v2, Direction::descend}, {-v2, Direction::descend}};
  for (int b = 0; b < 4; ++b) {
    Separatrix s;
    s.saddle_id = saddle_id;
    s.branch = b;
    s.direction = seeds[b].second;
    s.seed_direction = seeds[b].first;
    const Vec2 start = saddle.pos() + opt.seed_offset * seeds[b].first;
    s.path = trace_gradient_line(E, start, s.direction, opt.tau_max, opt.tol, topt);
    // prepend the saddle itself so the path starts at its vertex
    s.path.samples.insert(s.path.samples.begin(), TrajSample{0.0, saddle.xi, saddle.eta, 0.0, 0.0});
    if (s.path.termination != Termination::entered_critical_ball || !s.path.endpoint)
      throw Error(ErrorKind::unresolved_separatrix, "separatrix branch did not reach a critical point");
    if (!points.empty()) {
      s.endpoint_id = nearest_point(points, *s.path.endpoint, 1e-6);
      if (s.endpoint_id < 0)
        throw Error(ErrorKind::unresolved_separatrix, "separatrix ended at a point missing from the table");
      s.path.endpoint_id = s.endpoint_id;
    }
    out.push_back(std::move(s));
  }
  return out;
}

struct Polygon {
  std::vector<int> vertices;  // critical-point ids in traversal order
  std::vector<int> edges;     // separatrix ids in traversal order
  std::vector<int> sources;   // maxima on the boundary
  std::vector<int> sinks;     // minima on the boundary
};

struct PolygonPartition {
  std::vector<Polygon> polygons;
  int V = 0, E = 0, F = 0;
  int euler_characteristic() const { return V - E + F; }
};

namespace detail {

/// Angle at which the path crosses the circle of radius rho around its start (from_end=false)
/// or its end (from_end=true). Coordinates of the path are unwrapped.
inline double crossing_angle(const std::vector<TrajSample>& s, Vec2 center, double rho, bool from_end) {
  const std::size_t n = s.size();
  auto at = [&](std::size_t k) { return from_end ? s[n - 1 - k] : s[k]; };
  auto rel = [&](std::size_t k) { return Vec2{at(k).xi - center.x, at(k).eta - center.y}; };
  for (std::size_t k = 1; k < n; ++k) {
    const Vec2 a = rel(k - 1), b = rel(k);
    if (norm(b) >= rho) {
      const double na = norm(a), nb = norm(b);
      const double f = nb > na ? (rho - na) / (nb - na) : 1.0;
      const Vec2 p = a + std::clamp(f, 0.0, 1.0) * (b - a);
      return std::atan2(p.y, p.x);
    }
  }
  const Vec2 p = rel(n - 1);
  return std::atan2(p.y, p.x);
}

}  // namespace detail

/// Builds the toroidal graph (critical points, separatrices) and traces its faces from the
/// rotation system given by the angular order of edges around each vertex. Faces must be
/// discs: V - E + F = 0 is enforced.
inline PolygonPartition partition_polygons(const std::vector<CriticalPoint>& points,
                                           const std::vector<Separatrix>& seps) {
  PolygonPartition part;
  part.V = static_cast<int>(points.size());
  part.E = static_cast<int>(seps.size());
  if (seps.empty()) {
    Polygon whole;
    for (std::size_t k = 0; k < points.size(); ++k) {
      whole.vertices.push_back(static_cast<int>(k));
      if (points[k].kind == CriticalKind::maximum) whole.sources.push_back(static_cast<int>(k));
      if (points[k].kind == CriticalKind::minimum) whole.sinks.push_back(static_cast<int>(k));
    }
    part.polygons.push_back(whole);
    part.F = 1;
    return part;
  }
  // rho: well inside the smallest vertex separation
  double min_sep = pi;
  for (std::size_t a = 0; a < points.size(); ++a)
    for (std::size_t b = a + 1; b < points.size(); ++b) min_sep = std::min(min_sep, torus_distance(points[a].pos(), points[b].pos()));
  const double rho = std::min(0.1, 0.25 * min_sep);

  // half-edge 2e leaves the saddle, 2e+1 arrives from the endpoint side (reverse direction)
  const int H = 2 * part.E;
  std::vector<int> origin(H);
  std::vector<double> angle(H);
  for (int e = 0; e < part.E; ++e) {
    const auto& s = seps[e];
    if (s.saddle_id < 0 || s.endpoint_id < 0 || s.saddle_id >= part.V || s.endpoint_id >= part.V)
      throw Error(ErrorKind::topology, "separatrix with unresolved endpoints");
    const auto& smp = s.path.samples;
    if (smp.size() < 2) throw Error(ErrorKind::topology, "separatrix path too short");
    origin[2 * e] = s.saddle_id;
    origin[2 * e + 1] = s.endpoint_id;
    const Vec2 start{smp.front().xi, smp.front().eta};
    const Vec2 last{smp.back().xi, smp.back().eta};
    const Vec2 endp = points[s.endpoint_id].pos();
    const Vec2 end_unwrapped{last.x + periodic_delta(endp.x, last.x), last.y + periodic_delta(endp.y, last.y)};
    angle[2 * e] = detail::crossing_angle(smp, start, rho, false);
    angle[2 * e + 1] = detail::crossing_angle(smp, end_unwrapped, rho, true);
  }
  // rotation system: half-edges around each vertex in counter-clockwise order
  std::vector<std::vector<int>> rot(part.V);
  for (int h = 0; h < H; ++h) rot[origin[h]].push_back(h);
  std::vector<int> pos_in_rot(H);
  for (auto& r : rot) {
    std::sort(r.begin(), r.end(), [&](int a, int b) { return angle[a] < angle[b]; });
    for (std::size_t k = 0; k < r.size(); ++k) pos_in_rot[r[k]] = static_cast<int>(k);
    for (std::size_t k = 1; k < r.size(); ++k)
      if (std::abs(angle[r[k]] - angle[r[k - 1]]) < 1e-9)
        throw Error(ErrorKind::topology, "separatrices leave a vertex in the same direction");
  }
  auto twin = [](int h) { return h ^ 1; };
  // next half-edge of the face: at the head of h, take the edge clockwise-after twin(h)
  auto next = [&](int h) {
    const int t = twin(h);
    const auto& r = rot[origin[t]];
    const int k = pos_in_rot[t];
    return r[(k + r.size() - 1) % r.size()];
  };
  std::vector<bool> used(H, false);
  for (int h0 = 0; h0 < H; ++h0) {
    if (used[h0]) continue;
    Polygon poly;
    int h = h0;
    int guard = 0;
    do {
      used[h] = true;
      poly.vertices.push_back(origin[h]);
      poly.edges.push_back(h / 2);
      h = next(h);
      if (++guard > H + 1) throw Error(ErrorKind::topology, "face traversal did not close");
    } while (h != h0);
    for (int v : poly.vertices) {
      if (points[v].kind == CriticalKind::maximum && std::find(poly.sources.begin(), poly.sources.end(), v) == poly.sources.end())
        poly.sources.push_back(v);
      if (points[v].kind == CriticalKind::minimum && std::find(poly.sinks.begin(), poly.sinks.end(), v) == poly.sinks.end())
        poly.sinks.push_back(v);
    }
    part.polygons.push_back(std::move(poly));
  }
  part.F = static_cast<int>(part.polygons.size());
  if (part.euler_characteristic() != 0)
    throw Error(ErrorKind::topology, "V - E + F = " + std::to_string(part.euler_characteristic()) +
                                         " on the torus; separatrix graph is not a cellular embedding");
  return part;
}

/// All critical points, all separatrices of every saddle and the resulting partition.
struct MorseComplex {
  std::vector<CriticalPoint> points;
  std::vector<Separatrix> separatrices;
  PolygonPartition partition;
};

inline MorseComplex build_morse_complex(const EnergyDensity& E, int scan_n, double newton_tol,
                                        const SeparatrixOptions& sopt = {}) {
  MorseComplex mc;
  mc.points = find_critical_points(E, scan_n, newton_tol);
  euler_check(mc.points);
  for (std::size_t k = 0; k < mc.points.size(); ++k) {
    if (mc.points[k].kind != CriticalKind::saddle) continue;
    auto s = trace_separatrices(E, mc.points[k], static_cast<int>(k), mc.points, sopt);
    for (auto& x : s) mc.separatrices.push_back(std::move(x));
  }
  mc.partition = partition_polygons(mc.points, mc.separatrices);
  return mc;
}

}  // namespace beltrami
