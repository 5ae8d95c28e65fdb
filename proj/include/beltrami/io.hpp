#pragma once

// JSON descriptors for slow fields, CSV writers for the analysis outputs, config hashing.

#include <cstdint>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "beltrami/energy_density.hpp"
#include "beltrami/error.hpp"
#include "beltrami/morse.hpp"
#include "beltrami/phase.hpp"
#include "beltrami/streamline.hpp"
#include "beltrami/trig_poly.hpp"
#include "beltrami/vorticity.hpp"

namespace beltrami::io {

using json = nlohmann::json;

/// Polynomial as [[m, n, re, im], ...], sorted by wavevector.
inline json poly_to_json(const TrigPoly2D& p) {
  json a = json::array();
  for (const auto& [k, c] : p.terms()) a.push_back({k.first, k.second, c.real(), c.imag()});
  return a;
}

/// Accepts either the coefficient list or an object summing any of
///   "coeffs": [[m, n, re, im]], "cos": [[m, n, amp]], "sin": [[m, n, amp]],
///   "constant": c, "sin_product": K, "arnold": [a, b, c, d, p, q], "scale": s (applied last).
inline TrigPoly2D poly_from_json(const json& j) {
  auto coeff_list = [](const json& a) {
    TrigPoly2D p;
    for (const auto& e : a) {
      if (!e.is_array() || e.size() != 4) throw Error(ErrorKind::format, "coefficient entries are [m, n, re, im]");
      p.add_term(e[0].get<int>(), e[1].get<int>(), {e[2].get<double>(), e[3].get<double>()});
    }
    return p;
  };
  if (j.is_null()) return {};
  if (j.is_array()) return coeff_list(j);
  if (!j.is_object()) throw Error(ErrorKind::format, "polynomial must be an array or an object");
  static const char* known[] = {"coeffs", "cos", "sin", "constant", "sin_product", "arnold", "scale"};
  for (const auto& [key, _] : j.items())
    if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return key == k; }) == std::end(known))
      throw Error(ErrorKind::format, "unknown polynomial key '" + key + "'");
  TrigPoly2D p;
  if (j.contains("coeffs")) p = p + coeff_list(j["coeffs"]);
  for (const char* kind : {"cos", "sin"})
    if (j.contains(kind))
      for (const auto& e : j[kind]) {
        if (!e.is_array() || e.size() != 3) throw Error(ErrorKind::format, "cos/sin entries are [m, n, amp]");
        if (std::string(kind) == "cos")
          p.add_cos(e[0].get<int>(), e[1].get<int>(), e[2].get<double>());
        else
          p.add_sin(e[0].get<int>(), e[1].get<int>(), e[2].get<double>());
      }
  if (j.contains("constant")) p = p + TrigPoly2D::constant(j["constant"].get<double>());
  if (j.contains("sin_product")) p = p + TrigPoly2D::sin_product(j["sin_product"].get<double>());
  if (j.contains("arnold")) {
    const auto& a = j["arnold"];
    if (!a.is_array() || a.size() != 6) throw Error(ErrorKind::format, "arnold takes [a, b, c, d, p, q]");
    p = p + TrigPoly2D::arnold(a[0], a[1], a[2], a[3], a[4], a[5]);
  }
  if (j.contains("scale")) p = j["scale"].get<double>() * p;
  return p;
}

inline json field_to_json(const EnergyDensity& E) {
  return {{"A", E.A()}, {"b0", E.b0()}, {"gamma0", poly_to_json(E.gamma0())}, {"gamma1", poly_to_json(E.gamma1())}};
}

inline EnergyDensity field_from_json(const json& j) {
  if (!j.is_object() || !j.contains("A")) throw Error(ErrorKind::format, "field needs at least \"A\"");
  return {j["A"].get<double>(), j.value("b0", 1.0), poly_from_json(j.value("gamma0", json())),
          poly_from_json(j.value("gamma1", json()))};
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

/// Hash of the canonical (sorted-key) dump.
inline std::string config_hash(const json& j) { return hex64(fnv1a(j.dump())); }

// ---- CSV ------------------------------------------------------------------------------------

/// Round-trip precision for doubles.
inline void csv_setup(std::ostream& os) { os << std::setprecision(17); }

inline void write_trajectory_csv(std::ostream& os, const Trajectory& tr) {
  csv_setup(os);
  os << "tau,xi,eta,z\n";
  for (const auto& s : tr.samples) os << s.tau << ',' << s.xi << ',' << s.eta << ',' << s.z << '\n';
  os << "# termination=" << to_string(tr.termination) << '\n';
}

inline void write_critical_points_csv(std::ostream& os, const std::vector<CriticalPoint>& pts) {
  csv_setup(os);
  os << "xi,eta,kind,lambda1,lambda2,detB\n";
  for (const auto& p : pts)
    os << p.xi << ',' << p.eta << ',' << to_string(p.kind) << ',' << p.eig.l1 << ',' << p.eig.l2 << ','
       << p.hessian.det() << '\n';
}

inline void write_phase_spectrum_csv(std::ostream& os, const PhaseState& st) {
  csv_setup(os);
  os << "m,n,re_phi,im_phi,re_dphi,im_dphi\n";
  for (int n = -st.cutoff(); n <= st.cutoff(); ++n)
    for (int m = -st.cutoff(); m <= st.cutoff(); ++m) {
      const cplx a = st.phi(m, n), b = st.dphi(m, n);
      os << m << ',' << n << ',' << a.real() << ',' << a.imag() << ',' << b.real() << ',' << b.imag() << '\n';
    }
}

/// r * omega_z samples on every ring of the fit: r,phi,omega.
inline void write_ring_profile_csv(std::ostream& os, const EnergyDensity& E, const SingularityFit& fit) {
  csv_setup(os);
  os << "r,phi,omega\n";
  const auto& e = fit.point.eig;
  for (double r : fit.radii)
    for (double a : fit.angles) {
      const Vec2 p = fit.point.pos() + r * std::cos(a) * e.v1 + r * std::sin(a) * e.v2;
      os << r << ',' << a << ',' << gradient_field_vorticity(E, p.x, p.y) << '\n';
    }
}

inline json critical_point_json(const CriticalPoint& p) {
  return {{"xi", p.xi}, {"eta", p.eta}, {"kind", std::string(to_string(p.kind))}, {"lambda1", p.eig.l1},
          {"lambda2", p.eig.l2}, {"detB", p.hessian.det()}, {"C0", p.value}};
}

inline json singularity_fit_json(const SingularityFit& f) {
  return {{"point", critical_point_json(f.point)},
          {"slope", f.slope},
          {"slope_ci95", {f.slope - 1.96 * f.slope_stderr, f.slope + 1.96 * f.slope_stderr}},
          {"prefactor", f.prefactor},
          {"isotropic", f.isotropic},
          {"radii", f.radii},
          {"amplitudes", f.amplitudes}};
}

}  // namespace beltrami::io
