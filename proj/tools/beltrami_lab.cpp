// beltrami_lab: scenario-driven front end for the beltrami library.
//
//   beltrami_lab <subcommand> --scenario s.json --out dir [--set a.b=v ...] [--threads N]
//
// Exit status: 0 ok, 2 validation (bad scenario or violated precondition), 3 runtime failure.

#include <fftw3.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "beltrami/beltrami.hpp"
#include "beltrami/io.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace beltrami;

namespace {

constexpr const char* tool_version = "0.1.0";

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---- scenario ---------------------------------------------------------------------------------

json defaults() {
  return json::parse(R"({
    "name": "unnamed",
    "seed": 1,
    "R": 10000,
    "triplet": {"gamma0": 1.0, "gamma1": 0.0, "delta": 0.5, "delta_amp": 0.0, "delta_omega": 0.0,
                "t_end": 10.0, "samples": 101},
    "trace": {"mode": "gradient", "direction": "ascend", "starts": [], "random_starts": 0, "tau_end": 20.0,
              "tol": 1e-10, "phase": null},
    "topology": {"scan_n": 16, "newton_tol": 1e-13, "domain": "open_square", "separatrices": true},
    "phase": {"initial": "field", "initial_degree": 4, "dphi0": null, "cutoff": 0, "dt": 0.0, "tau_end": 1.0,
              "record_every": 10, "sensitivity": true, "upward_grid": 32, "correction": null},
    "latetime": {"delta": {"cos": [[1, 0, 1.0]]}, "tau1": 1.0, "cross_grid": 64},
    "vorticity": {"scan_n": 16, "newton_tol": 1e-13, "r_min": 0.001, "r_max": 0.1, "n_r": 9, "n_phi": 64,
                  "plane": null, "collinearity": null},
    "validate": {"case": "trkal", "n": 32, "R": 100.0, "dt": 0.1, "t_end": 0.0, "snapshot": false,
                 "triplet": {"gamma0": 0.8, "gamma1": -0.3, "delta": 0.4},
                 "phase": {"mode": [1, 1], "amplitude": 0.1, "theta": 0.2}}
  })");
}

/// Recursive merge: values in `over` replace those in `base`, objects merge.
void merge(json& base, const json& over) {
  for (auto it = over.begin(); it != over.end(); ++it) {
    if (it.value().is_object() && base.contains(it.key()) && base[it.key()].is_object())
      merge(base[it.key()], it.value());
    else
      base[it.key()] = it.value();
  }
}

void apply_override(json& cfg, const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos || eq == 0) throw ValidationError("--set expects key=value, got '" + kv + "'");
  const std::string key = kv.substr(0, eq), raw = kv.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;  // bare strings need no quoting
  }
  json* node = &cfg;
  std::stringstream ss(key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    json& next = (*node)[parts[i]];
    if (next.is_null()) next = json::object();
    if (!next.is_object()) throw ValidationError("--set path '" + key + "' crosses a non-object");
    node = &next;
  }
  (*node)[parts.back()] = value;
}

double num(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number()) throw ValidationError(std::string("expected a number for '") + key + "'");
  return j[key].get<double>();
}

int integer(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number_integer())
    throw ValidationError(std::string("expected an integer for '") + key + "'");
  return j[key].get<int>();
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

ModePhase mode_phase_from(const json& j, double c) {
  require(j.contains("mode") && j["mode"].is_array() && j["mode"].size() == 2, "phase block needs \"mode\": [m, n]");
  return {j.value("amplitude", 1e-3), j["mode"][0].get<int>(), j["mode"][1].get<int>(), j.value("theta", 0.0), c};
}

/// Checks every block the subcommand reads before anything runs.
void validate_scenario(const std::string& sub, const json& cfg) {
  require(cfg.contains("field"), "scenario needs a \"field\" block");
  const EnergyDensity E = io::field_from_json(cfg["field"]);
  const json& b = cfg[sub];
  if (sub == "triplet") {
    require(num(b, "t_end") >= 0.0, "triplet.t_end must be non-negative");
    require(integer(b, "samples") >= 2, "triplet.samples must be at least 2");
    require(num(cfg, "R") > 0.0, "R must be positive");
  } else if (sub == "trace") {
    const std::string mode = b.value("mode", "");
    require(mode == "gradient" || mode == "quasi" || mode == "free", "trace.mode is gradient, quasi or free");
    require(b["direction"] == "ascend" || b["direction"] == "descend", "trace.direction is ascend or descend");
    require(num(b, "tau_end") > 0.0 && num(b, "tol") > 0.0, "trace.tau_end and trace.tol must be positive");
    require(b["starts"].is_array(), "trace.starts must be an array");
    for (const auto& s : b["starts"]) require(s.is_array() && (s.size() == 2 || s.size() == 3), "starts are [xi, eta] or [xi, eta, z]");
    require(!b["starts"].empty() || integer(b, "random_starts") > 0, "trace needs starts or random_starts");
    if (!b["phase"].is_null()) mode_phase_from(b["phase"], 1.0);
  } else if (sub == "topology") {
    require(integer(b, "scan_n") >= 8 * std::max(1, E.degree()), "topology.scan_n must be at least 8 x degree");
    require(num(b, "newton_tol") > 0.0, "topology.newton_tol must be positive");
    require(b["domain"] == "open_square" || b["domain"] == "torus", "topology.domain is open_square or torus");
  } else if (sub == "phase") {
    require(num(b, "tau_end") >= 0.0, "phase.tau_end must be non-negative");
    require(num(b, "dt") >= 0.0, "phase.dt must be non-negative (0 selects one)");
    require(integer(b, "cutoff") >= 0 && integer(b, "record_every") >= 1, "phase.cutoff >= 0 and record_every >= 1");
    if (b["initial"].is_string()) require(b["initial"] == "field", "phase.initial is \"field\" or a polynomial");
    if (!b["correction"].is_null()) {
      require(num(cfg, "R") > 1.0, "R must exceed 1 for the correction");
      require(integer(b["correction"], "grid") >= 1, "phase.correction.grid must be positive");
    }
  } else if (sub == "latetime") {
    io::poly_from_json(b["delta"]);
    require(num(b, "tau1") >= 0.0, "latetime.tau1 must be non-negative");
  } else if (sub == "vorticity") {
    require(num(cfg, "R") > 1.0, "R must exceed 1");
    require(num(b, "r_min") > 0.0 && num(b, "r_max") > num(b, "r_min"), "vorticity needs 0 < r_min < r_max");
    require(integer(b, "n_r") >= 2 && integer(b, "n_phi") >= 4, "vorticity.n_r >= 2 and n_phi >= 4");
    if (!b["plane"].is_null()) {
      mode_phase_from(b["plane"], 1.0);
      require(b["plane"].contains("times") && b["plane"]["times"].size() >= 2, "vorticity.plane.times needs two entries");
    }
    if (!b["collinearity"].is_null()) mode_phase_from(b["collinearity"], 1.0);
  } else if (sub == "validate") {
    const std::string c = b.value("case", "");
    require(c == "trkal" || c == "triplet" || c == "residual" || c == "short_time" || c == "all",
            "validate.case is trkal, triplet, residual, short_time or all");
    const int n = integer(b, "n");
    require(n >= 8 && (n & (n - 1)) == 0, "validate.n must be a power of two >= 8");
    require(num(b, "R") > 1.0 && num(b, "dt") > 0.0, "validate.R > 1 and validate.dt > 0");
  }
}

// ---- output directory -------------------------------------------------------------------------

class OutputDir {
 public:
  explicit OutputDir(fs::path dir) : dir_(std::move(dir)) {
    created_dir_ = !fs::exists(dir_);
    fs::create_directories(dir_);
    lock_ = dir_ / ".lock";
    FILE* f = std::fopen(lock_.c_str(), "wx");
    if (!f) throw ValidationError("output directory is locked by another run: " + lock_.string());
    std::fclose(f);
  }
  OutputDir(const OutputDir&) = delete;
  OutputDir& operator=(const OutputDir&) = delete;

  ~OutputDir() {
    std::error_code ec;
    if (!keep_) {
      for (const auto& p : files_) fs::remove(p, ec);
    }
    fs::remove(lock_, ec);
    if (!keep_ && created_dir_ && fs::is_empty(dir_, ec)) fs::remove(dir_, ec);
  }

  std::ofstream open(const std::string& name) {
    const fs::path p = dir_ / name;
    files_.push_back(p);
    names_.push_back(name);
    std::ofstream os(p, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + p.string());
    return os;
  }

  void write(const std::string& name, const std::string& content) { open(name) << content; }
  void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

  std::string path_of(const std::string& name) {
    files_.push_back(dir_ / name);
    names_.push_back(name);
    return (dir_ / name).string();
  }

  const std::vector<std::string>& names() const { return names_; }
  void commit() { keep_ = true; }

 private:
  fs::path dir_, lock_;
  bool created_dir_ = false, keep_ = false;
  std::vector<fs::path> files_;
  std::vector<std::string> names_;
};

std::string gnuplot_lines(const std::string& title, const std::vector<std::string>& files, const std::string& using_cols,
                          const std::string& points_file = "") {
  std::ostringstream gp;
  gp << "set datafile separator ','\nset key off\nset size square\nset title '" << title << "'\n"
     << "set xrange [0:2*pi]\nset yrange [0:2*pi]\nset xlabel 'xi'\nset ylabel 'eta'\nplot ";
  bool first = true;
  for (const auto& f : files) {
    gp << (first ? "" : ", \\\n     ") << "'" << f << "' every ::1 using " << using_cols << " with lines lc 'black'";
    first = false;
  }
  if (!points_file.empty())
    gp << (first ? "" : ", \\\n     ") << "'" << points_file << "' every ::1 using 1:2 with points pt 7 ps 1.2";
  gp << "\n";
  return gp.str();
}

// ---- subcommands ------------------------------------------------------------------------------

struct Context {
  json cfg;
  unsigned threads = 1;
};

json run_triplet(const Context& ctx, OutputDir& out) {
  const json& b = ctx.cfg["triplet"];
  const double R = num(ctx.cfg, "R");
  const double d0 = num(b, "delta"), da = num(b, "delta_amp"), dw = num(b, "delta_omega");
  const auto delta = [=](double t) { return d0 + da * std::sin(dw * t); };
  TripletState s0;
  s0.gamma0 = num(b, "gamma0");
  s0.gamma1 = num(b, "gamma1");
  s0.delta = delta(0.0);
  s0.A = io::field_from_json(ctx.cfg["field"]).A();
  s0.R = R;
  const int samples = integer(b, "samples");
  const double t_end = num(b, "t_end");
  auto os = out.open("triplet.csv");
  io::csv_setup(os);
  os << "t,gamma0,gamma1,delta,amplitude,phase,identity_error\n";
  double worst = 0.0;
  const double c2 = s0.gamma0 * s0.gamma0 + s0.gamma1 * s0.gamma1;
  for (int k = 0; k < samples; ++k) {
    const double t = t_end * k / (samples - 1);
    const auto st = triplet_evolve(s0, delta, t, 1e-12);
    const double err = std::abs(st.gamma0 * st.gamma0 + st.gamma1 * st.gamma1 - c2 * std::exp(-2 * t / R));
    worst = std::max(worst, err);
    os << t << ',' << st.gamma0 << ',' << st.gamma1 << ',' << st.delta << ',' << st.amplitude() << ',' << st.phase()
       << ',' << err << '\n';
  }
  out.write("triplet.gp",
            "set datafile separator ','\nset xlabel 't'\nplot 'triplet.csv' every ::1 using 1:2 with lines title 'gamma0', \\\n"
            "     'triplet.csv' every ::1 using 1:3 with lines title 'gamma1'\n");
  return {{"max_identity_error", worst}};
}

json run_trace(const Context& ctx, OutputDir& out) {
  const json& b = ctx.cfg["trace"];
  const EnergyDensity E = io::field_from_json(ctx.cfg["field"]);
  std::vector<std::array<double, 3>> starts;
  for (const auto& s : b["starts"]) starts.push_back({s[0].get<double>(), s[1].get<double>(), s.size() == 3 ? s[2].get<double>() : 0.0});
  std::mt19937_64 rng(ctx.cfg["seed"].get<std::uint64_t>());
  std::uniform_real_distribution<double> U(0.0, two_pi);
  for (int k = 0; k < integer(b, "random_starts"); ++k) {
    const double x = U(rng), y = U(rng);
    starts.push_back({x, y, 0.0});
  }
  const std::string mode = b["mode"];
  const Direction dir = b["direction"] == "ascend" ? Direction::ascend : Direction::descend;
  const double tau_end = num(b, "tau_end"), tol = num(b, "tol");
  PhaseField phi = zero_phase();
  if (!b["phase"].is_null()) phi = to_phase_field(mode_phase_from(b["phase"], E.A() * E.b0()).field());
  std::vector<Trajectory> trajs(starts.size());
  std::vector<std::string> errors(starts.size());
  parallel_for(starts.size(), ctx.threads, [&](std::size_t i) {
    const auto& s = starts[i];
    try {
      if (mode == "gradient")
        trajs[i] = trace_gradient_line(E, {s[0], s[1]}, dir, tau_end, tol);
      else if (mode == "quasi")
        trajs[i] = integrate_quasi_stationary(E, phi, {s[0], s[1]}, tau_end, tol);
      else
        trajs[i] = integrate_streamline(E, phi, {s[0], s[1], s[2]}, tau_end, tol);
    } catch (const Error& e) {
      // starting inside a critical ball is reported per start, not fatal
      if (e.kind() != ErrorKind::near_critical_point) throw;
      errors[i] = e.what();
    }
  });
  json summary = json::array();
  std::vector<std::string> files;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    json rec = {{"start", starts[i]}};
    if (!errors[i].empty()) {
      rec["skipped"] = errors[i];
    } else {
      const std::string name = "trajectory_" + std::to_string(i) + ".csv";
      auto os = out.open(name);
      io::write_trajectory_csv(os, trajs[i]);
      files.push_back(name);
      rec["file"] = name;
      rec["termination"] = to_string(trajs[i].termination);
      rec["samples"] = trajs[i].samples.size();
      if (trajs[i].endpoint) rec["endpoint"] = {trajs[i].endpoint->x, trajs[i].endpoint->y};
      if (mode != "free") rec["growth_law_error"] = growth_law_error(E, trajs[i]);
    }
    summary.push_back(rec);
  }
  out.write("trace.gp", gnuplot_lines("streamline projections", files, "2:3"));
  return {{"mode", mode}, {"trajectories", summary}};
}

json run_topology(const Context& ctx, OutputDir& out) {
  const json& b = ctx.cfg["topology"];
  const EnergyDensity E = io::field_from_json(ctx.cfg["field"]);
  const int scan_n = integer(b, "scan_n");
  const double tol = num(b, "newton_tol");
  const auto pts = find_critical_points(E, scan_n, tol);
  std::vector<CriticalPoint> listed;
  for (const auto& p : pts)
    if (b["domain"] == "torus" || in_open_square(p)) listed.push_back(p);
  {
    auto os = out.open("critical_points.csv");
    io::write_critical_points_csv(os, listed);
  }
  const auto counts = count_kinds(pts);
  json summary = {{"torus_points", pts.size()},
                  {"listed_points", listed.size()},
                  {"domain", b["domain"]},
                  {"maxima", counts.maxima},
                  {"minima", counts.minima},
                  {"saddles", counts.saddles},
                  {"degenerate", counts.degenerate}};
  std::vector<std::string> files;
  if (b["separatrices"].get<bool>()) {
    if (counts.degenerate > 0) throw Error(ErrorKind::degenerate, "degenerate critical points: no Morse complex");
    const auto mc = build_morse_complex(E, scan_n, tol);
    for (std::size_t k = 0; k < mc.separatrices.size(); ++k) {
      const auto& s = mc.separatrices[k];
      const std::string name = "separatrix_" + std::to_string(k) + ".csv";
      auto os = out.open(name);
      io::csv_setup(os);
      os << "xi,eta\n";
      for (const auto& p : s.path.samples) os << p.xi << ',' << p.eta << '\n';
      files.push_back(name);
    }
    json seps = json::array();
    for (const auto& s : mc.separatrices)
      seps.push_back({{"saddle", s.saddle_id}, {"branch", s.branch},
                      {"direction", s.direction == Direction::ascend ? "ascend" : "descend"}, {"endpoint", s.endpoint_id}});
    json polys = json::array();
    for (const auto& p : mc.partition.polygons)
      polys.push_back({{"vertices", p.vertices}, {"edges", p.edges}, {"sources", p.sources}, {"sinks", p.sinks}});
    json all_points = json::array();
    for (const auto& p : mc.points) all_points.push_back(io::critical_point_json(p));
    out.write_json("morse_complex.json", {{"points", all_points}, {"separatrices", seps}, {"polygons", polys}});
    summary["V"] = mc.partition.V;
    summary["E"] = mc.partition.E;
    summary["F"] = mc.partition.F;
    summary["euler_characteristic"] = mc.partition.euler_characteristic();
  }
  out.write("topology.gp", gnuplot_lines("separatrices and stationary points", files, "1:2", "critical_points.csv"));
  return summary;
}

json run_phase(const Context& ctx, OutputDir& out) {
  const json& b = ctx.cfg["phase"];
  const EnergyDensity E = io::field_from_json(ctx.cfg["field"]);
  const TrigPoly2D phi0 = b["initial"].is_string() ? initial_phase(E, integer(b, "initial_degree"))
                                                   : io::poly_from_json(b["initial"]);
  const TrigPoly2D dphi0 = io::poly_from_json(b["dphi0"]);
  int cutoff = integer(b, "cutoff");
  if (cutoff == 0) cutoff = std::max(1, default_cutoff(E, phi0, dphi0));
  double dt = num(b, "dt");
  if (dt == 0.0) dt = 0.05 / std::max(1e-12, PhaseSolver(E, 2 * cutoff).max_rate());
  const double tau_end = num(b, "tau_end");
  PhaseRunOptions opt;
  opt.record_every = integer(b, "record_every");
  const auto hist = phase_cauchy_history(E, phi0, dphi0, tau_end, cutoff, dt, opt);
  const auto& last = hist.states.back();
  json tau_grid = json::array();
  for (std::size_t k = 0; k < hist.states.size(); ++k) {
    char name[40];
    std::snprintf(name, sizeof name, "phase_spectrum_%04zu.csv", k);
    auto os = out.open(name);
    io::write_phase_spectrum_csv(os, hist.states[k]);
    tau_grid.push_back(hist.states[k].tau);
  }
  {
    auto os = out.open("phase_growth.csv");
    io::csv_setup(os);
    os << "tau,max_abs_phi,max_abs_dphi\n";
    for (const auto& st : hist.states) {
      double a = 0.0, d = 0.0;
      for (const auto& c : st.phi_coeffs()) a = std::max(a, std::abs(c));
      for (const auto& c : st.dphi_coeffs()) d = std::max(d, std::abs(c));
      os << st.tau << ',' << a << ',' << d << '\n';
    }
  }
  {
    const int g = integer(b, "upward_grid");
    auto os = out.open("upward_velocity.csv");
    io::csv_setup(os);
    os << "xi,eta,delta1\n";
    for (int j = 0; j < g; ++j)
      for (int i = 0; i < g; ++i) {
        const double x = two_pi * i / g, y = two_pi * j / g;
        os << x << ',' << y << ',' << upward_velocity(last, x, y) << '\n';
      }
  }
  out.write("phase.gp",
            "set datafile separator ','\nset logscale y\nset xlabel 'tau'\n"
            "plot 'phase_growth.csv' every ::1 using 1:2 with lines title 'max |phi_hat|'\n");
  json summary = {{"cutoff", cutoff}, {"dt", dt}, {"tau_end", last.tau}, {"tau_grid", tau_grid},
                  {"max_abs_coefficient", last.max_abs()}};
  if (b["sensitivity"].get<bool>()) {
    // same run at twice the cutoff; modes beyond M compared against zero
    const auto wide = phase_cauchy_solve(E, phi0, dphi0, tau_end, 2 * cutoff, dt * 0.5);
    double diff = 0.0;
    for (int n = -2 * cutoff; n <= 2 * cutoff; ++n)
      for (int m = -2 * cutoff; m <= 2 * cutoff; ++m) diff = std::max(diff, std::abs(wide.phi(m, n) - last.phi(m, n)));
    summary["cutoff_sensitivity"] = diff;
    summary["cutoff_sensitivity_relative"] = diff / std::max(1e-300, wide.max_abs());
  }
  if (!b["correction"].is_null()) {
    const json& c = b["correction"];
    const TrigPoly2D offset = io::poly_from_json(c.value("offset", json()));
    const int g = integer(c, "grid");
    const double tau = c.value("tau", tau_end);
    CorrectionOptions copt;
    copt.eps0 = c.value("eps0", 0.1);
    copt.cos_floor = c.value("cos_floor", 0.1);
    const auto cf = first_correction(E, hist, offset, tau, g, copt);
    auto os = out.open("correction.csv");
    io::csv_setup(os);
    os << "xi,eta,C_tilde\n";
    for (int j = 0; j < g; ++j)
      for (int i = 0; i < g; ++i) os << two_pi * i / g << ',' << two_pi * j / g << ',' << cf.at(i, j) << '\n';
    const auto rep = order_consistency_report(num(ctx.cfg, "R"), E, hist, offset, tau, g, copt);
    summary["order_consistency"] = {{"eps", rep.frame.eps},
                                    {"max_C_k_gt_2", rep.max_C_k_gt_2},
                                    {"max_C_k_eq_2", rep.max_C_k_eq_2},
                                    {"max_quadrature_C", rep.max_quadrature_C},
                                    {"closure_mismatch", rep.closure_mismatch},
                                    {"M_bound", rep.M_bound},
                                    {"worst_bound_ratio", rep.worst_bound_ratio},
                                    {"bound_holds", rep.bound_holds}};
  }
  return summary;
}

json run_latetime(const Context& ctx, OutputDir& out) {
  const json& b = ctx.cfg["latetime"];
  const TrigPoly2D d0 = io::poly_from_json(b["delta"]);
  const double tau1 = num(b, "tau1");
  const TrigPoly2D d1 = late_time_decay(d0, tau1);
  auto os = out.open("latetime.csv");
  io::csv_setup(os);
  os << "m,n,re0,im0,re,im,ratio\n";
  double n0 = 0.0, n1 = 0.0;
  for (const auto& [k, c] : d0.terms()) {
    const cplx e = d1.coeff(k.first, k.second);
    os << k.first << ',' << k.second << ',' << c.real() << ',' << c.imag() << ',' << e.real() << ',' << e.imag() << ','
       << std::abs(e) / std::abs(c) << '\n';
    if (k.first != 0 || k.second != 0) {
      n0 += std::norm(c);
      n1 += std::norm(e);
    }
  }
  const double contraction = n0 > 0.0 ? std::sqrt(n1 / n0) : 0.0;
  return {{"tau1", tau1},
          {"zero_mean_contraction", contraction},
          {"contraction_bound", std::exp(-tau1)},
          {"contraction_within_bound", contraction <= std::exp(-tau1) * (1 + 1e-12)},
          {"cross_term_residual", verify_rescaled_cross_term(d0, static_cast<std::size_t>(integer(b, "cross_grid")))}};
}

json run_vorticity(const Context& ctx, OutputDir& out) {
  const json& b = ctx.cfg["vorticity"];
  const EnergyDensity E = io::field_from_json(ctx.cfg["field"]);
  const double R = num(ctx.cfg, "R");
  const auto pts = find_critical_points(E, integer(b, "scan_n"), num(b, "newton_tol"));
  std::vector<std::optional<SingularityFit>> fits(pts.size());
  std::vector<std::string> skipped(pts.size());
  parallel_for(pts.size(), ctx.threads, [&](std::size_t i) {
    try {
      fits[i] = vertical_singularity_fit(E, pts[i], pts, num(b, "r_min"), num(b, "r_max"), integer(b, "n_r"), integer(b, "n_phi"));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::geometry && e.kind() != ErrorKind::degenerate) throw;
      skipped[i] = e.what();
    }
  });
  json arr = json::array();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (!fits[i]) {
      arr.push_back({{"point", io::critical_point_json(pts[i])}, {"skipped", skipped[i]}});
      continue;
    }
    const std::string name = "ring_profile_" + std::to_string(i) + ".csv";
    auto os = out.open(name);
    io::write_ring_profile_csv(os, E, *fits[i]);
    json j = io::singularity_fit_json(*fits[i]);
    j["ring_profile"] = name;
    arr.push_back(j);
  }
  json summary = {{"fits", arr}};
  if (!b["plane"].is_null()) {
    const json& p = b["plane"];
    json growth = json::array();
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (!fits[i] || fits[i]->isotropic) continue;
      const ModePhase mp = mode_phase_from(p, pts[i].value);
      const AsymptoticVelocity V{E, mp.field(), {}, {}, ScalingFrame::from_reynolds(R)};
      const auto rep = plane_component_growth(V, pts[i], pts, p["times"].get<std::vector<double>>(),
                                              p.value("r_probe", 0.01), mp.rate(), integer(b, "n_phi"));
      const std::string name = "plane_growth_" + std::to_string(i) + ".csv";
      auto os = out.open(name);
      io::csv_setup(os);
      os << "tau,amplitude\n";
      for (std::size_t k = 0; k < rep.times.size(); ++k) os << rep.times[k] << ',' << rep.amplitudes[k] << '\n';
      growth.push_back({{"point", i}, {"fitted_rate", rep.fitted_rate}, {"predicted_rate", rep.predicted_rate},
                        {"rate_error", rep.rate_error}, {"half_radius_ratio", rep.half_radius_ratio}, {"file", name}});
    }
    summary["plane_growth"] = growth;
  }
  if (!b["collinearity"].is_null()) {
    const json& c = b["collinearity"];
    const ModePhase mp = mode_phase_from(c, E.A() * E.b0());
    const double tau = c.value("tau", 1.0);
    json runs = json::array();
    for (double r : {R, 4 * R}) {
      const AsymptoticVelocity V{E, mp.field(), {}, {}, ScalingFrame::from_reynolds(r)};
      const auto rep = collinearity_defect(V, tau, c.value("n_slow", 8), c.value("n_z", 16));
      runs.push_back({{"R", r}, {"eps", rep.eps}, {"defect_l2", rep.defect_l2}, {"eps_delta1_l2", rep.reference_l2},
                      {"relative_mismatch", rep.relative_mismatch}});
    }
    summary["collinearity"] = {{"runs", runs},
                               {"defect_ratio", runs[0]["defect_l2"].get<double>() / runs[1]["defect_l2"].get<double>()}};
  }
  return summary;
}

json run_validate(const Context& ctx, OutputDir& out) {
  const json& b = ctx.cfg["validate"];
  const std::string which = b["case"];
  const std::size_t n = static_cast<std::size_t>(integer(b, "n"));
  const double R = num(b, "R"), dt = num(b, "dt");
  json report = json::object();
  auto want = [&](const char* c) { return which == "all" || which == c; };
  if (want("trkal")) {
    const double t_end = num(b, "t_end") > 0.0 ? num(b, "t_end") : R / 10;
    auto f = trkal_field(n, R);
    DnsSolver solver(n);
    const double e0 = energy(f);
    auto os = out.open("trkal_energy.csv");
    io::csv_setup(os);
    os << "t,energy,exact,rel_err\n";
    os << 0.0 << ',' << e0 << ',' << e0 << ',' << 0.0 << '\n';
    double worst = 0.0;
    const long steps = std::lround(std::ceil(t_end / dt - 1e-9));
    for (long k = 0; k < steps; ++k) {
      solver.step(f, t_end / steps);
      const double ex = e0 * std::exp(-2 * f.t / R), rel = std::abs(energy(f) / ex - 1.0);
      worst = std::max(worst, rel);
      os << f.t << ',' << energy(f) << ',' << ex << ',' << rel << '\n';
    }
    report["trkal"] = {{"t_end", t_end}, {"max_relative_energy_error", worst}, {"pass", worst < 1e-8}};
    if (b["snapshot"].get<bool>()) {
      write_snapshot(out.path_of("trkal_final.bin"), f);
      report["trkal"]["snapshot"] = {{"file", "trkal_final.bin"}, {"box", f.L}};
    }
  }
  if (want("triplet")) {
    const json& t = b["triplet"];
    const double g0 = num(t, "gamma0"), g1 = num(t, "gamma1"), d = num(t, "delta");
    const double t_end = num(b, "t_end") > 0.0 ? num(b, "t_end") : R / 10;
    auto f = triplet_field(n, R, g0, g1, d);
    DnsSolver solver(n);
    const long steps = std::lround(std::ceil(t_end / (0.25 * dt) - 1e-9));
    for (long k = 0; k < steps; ++k) solver.step(f, t_end / steps);
    const auto st = triplet_evolve({g0, g1, d, 1.0, R, 0.0}, [&](double) { return d; }, f.t, 1e-12);
    const auto r = to_real(f);
    double worst = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const Vec3 v = triplet_velocity(st, two_pi * k / n);
      for (std::size_t p = k * n * n; p < (k + 1) * n * n; ++p)
        worst = std::max({worst, std::abs(r[0][p] - v.x), std::abs(r[1][p] - v.y), std::abs(r[2][p] - v.z)});
    }
    report["triplet"] = {{"t_end", f.t}, {"max_pointwise_error", worst}, {"pass", worst < 1e-6}};
  }
  const EnergyDensity E = io::field_from_json(ctx.cfg["field"]);
  const ModePhase mp = mode_phase_from(b["phase"], E.A() * E.b0());
  if (want("residual")) {
    const double Rr = num(ctx.cfg, "R");
    json runs = json::array();
    for (double r : {Rr, 4 * Rr}) {
      const AsymptoticVelocity V{E, mp.field(), {}, {}, ScalingFrame::from_reynolds(r)};
      SpectralField3D grid;
      grid.n = n;
      grid.L = slow_box(V.frame.eps);
      grid.R = r;
      const double res = residual_of(grid, candidate_from([&](double x, double y, double z, double t) {
                                       return composed_physical(V, x, y, z, t, false);
                                     }),
                                     0.5 / V.frame.eps);
      runs.push_back({{"R", r}, {"residual", res}});
    }
    const double ratio = runs[0]["residual"].get<double>() / runs[1]["residual"].get<double>();
    report["residual"] = {{"runs", runs}, {"ratio", ratio}, {"pass", std::abs(ratio - 4.0) < 1.0}};
  }
  if (want("short_time")) {
    json runs = json::array();
    const double Rs = num(ctx.cfg, "R");
    for (double r : {Rs, 4 * Rs}) {
      const AsymptoticVelocity V{E, mp.field(), {}, {}, ScalingFrame::from_reynolds(r)};
      const auto s0 = make_field(std::min<std::size_t>(n, 32), slow_box(V.frame.eps), r, 0.0,
                                 [&](double x, double y, double z) { return composed_physical(V, x, y, z, 0.0); });
      const double t_end = 0.1 * std::sqrt(Rs);
      const auto rep = compare_short_time(V, s0, t_end, std::min(dt, 0.05), 4);
      runs.push_back({{"R", r}, {"times", rep.times}, {"errors", rep.errors}, {"initial_error", rep.initial_error}});
    }
    const double ratio = runs[0]["errors"].back().get<double>() / runs[1]["errors"].back().get<double>();
    report["short_time"] = {{"runs", runs}, {"final_error_ratio", ratio}};
  }
  out.write_json("validate_report.json", report);
  return report;
}

int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::invalid_argument:
    case ErrorKind::invalid_resolution:
    case ErrorKind::invalid_reynolds:
    case ErrorKind::precondition:
    case ErrorKind::setup:
    case ErrorKind::format:
    case ErrorKind::near_singular_offset:
      return 2;
    default:
      return 3;
  }
}

int report_error(const std::string& kind, const std::string& message, int code) {
  std::cerr << json{{"error", kind}, {"message", message}, {"exit_code", code}}.dump() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Beltrami triplets: streamlines, topology, phase instability and vorticity singularities"};
  app.require_subcommand(1);
  std::string scenario_path, out_dir = "out", case_name;
  std::vector<std::string> overrides;
  unsigned threads = 1;
  const std::vector<std::pair<std::string, std::string>> subs = {
      {"triplet", "evolve a Beltrami triplet"},
      {"trace", "trace streamlines or gradient lines"},
      {"topology", "critical points, separatrices and polygon partition"},
      {"phase", "phase Cauchy problem, upward velocity and first correction"},
      {"latetime", "late-time heat decay of the vertical velocity"},
      {"vorticity", "vorticity singularity fits at stationary points"},
      {"validate", "pseudo-spectral DNS oracle suite"}};
  for (const auto& [name, help] : subs) {
    auto* s = app.add_subcommand(name, help);
    s->add_option("--scenario", scenario_path, "scenario JSON file")->required()->check(CLI::ExistingFile);
    s->add_option("--out", out_dir, "output directory");
    s->add_option("--set", overrides, "override a scenario value, dotted path key=value (repeatable)");
    s->add_option("--threads", threads, "worker threads for independent batches")->check(CLI::Range(1u, 1024u));
    if (name == "validate") s->add_option("--case", case_name, "trkal, triplet, residual, short_time or all");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  const std::string sub = app.get_subcommands().front()->get_name();

  Context ctx;
  ctx.threads = threads;
  try {
    std::ifstream in(scenario_path);
    json user = json::parse(in);
    ctx.cfg = defaults();
    merge(ctx.cfg, user);
    for (const auto& kv : overrides) apply_override(ctx.cfg, kv);
    if (!case_name.empty()) ctx.cfg["validate"]["case"] = case_name;
    validate_scenario(sub, ctx.cfg);
  } catch (const json::exception& e) {
    return report_error("format", e.what(), 2);
  } catch (const ValidationError& e) {
    return report_error("validation", e.what(), 2);
  } catch (const Error& e) {
    return report_error(std::string(to_string(e.kind())), e.what(), 2);
  }

  try {
    OutputDir out(out_dir);
    json summary;
    if (sub == "triplet") summary = run_triplet(ctx, out);
    else if (sub == "trace") summary = run_trace(ctx, out);
    else if (sub == "topology") summary = run_topology(ctx, out);
    else if (sub == "phase") summary = run_phase(ctx, out);
    else if (sub == "latetime") summary = run_latetime(ctx, out);
    else if (sub == "vorticity") summary = run_vorticity(ctx, out);
    else summary = run_validate(ctx, out);
    out.write_json("summary.json", summary);
    out.write_json("scenario.json", ctx.cfg);  // resolved: rerun with --scenario <out>/scenario.json
    const std::string json_version = std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                     std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                     std::to_string(NLOHMANN_JSON_VERSION_PATCH);
    json manifest;
    manifest["tool"] = "beltrami_lab";
    manifest["version"] = tool_version;
    manifest["subcommand"] = sub;
    manifest["scenario"] = fs::path(scenario_path).filename().string();
    manifest["config"] = ctx.cfg;
    manifest["config_hash"] = io::config_hash(ctx.cfg);
    manifest["seed"] = ctx.cfg["seed"];
    manifest["versions"] = {{"fftw", std::string(fftw_version)}, {"nlohmann_json", json_version}};
    manifest["artifacts"] = out.names();
    out.write_json("manifest.json", manifest);
    out.commit();
    std::cout << summary.dump(2) << "\n";
    return 0;
  } catch (const ValidationError& e) {
    return report_error("validation", e.what(), 2);
  } catch (const BlowupError& e) {
    std::cerr << json{{"error", "blowup"}, {"message", e.what()}, {"tau_reached", e.tau_reached()}, {"exit_code", 3}}.dump()
              << "\n";
    return 3;
  } catch (const Error& e) {
    const int code = exit_code_for(e.kind());
    return report_error(std::string(to_string(e.kind())), e.what(), code);
  } catch (const std::exception& e) {
    return report_error("runtime", e.what(), 3);
  }
}
