#pragma once

#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <ostream>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "zfcert/certifier.hpp"
#include "zfcert/flocking.hpp"
#include "zfcert/iqc_suite.hpp"
#include "zfcert/plant_io.hpp"
#include "zfcert/simulate.hpp"

namespace zfcert {

using ojson = nlohmann::ordered_json;

enum ExitCode { kExitOk = 0, kExitError = 1, kExitInfeasible = 2 };

struct RunConfig {
  std::string command;
  std::string builtin = "nonmin-phase";
  std::string plant_path;  // overrides builtin when set
  double m = 1.0;
  double l = 1.0;
  std::string multiplier = "zf";
  int order = 1;
  double lambda = -1.0;
  std::string positivity = "published";
  double alpha_max = 0.0;  // 0 selects the default bracket
  double grid_tol = kDefaultGridTol;
  double kp = 1.0, kd = 9.0;

  // sweep
  std::string sweep_var = "L";
  double sweep_from = 1.0, sweep_to = 2.5, sweep_step = 0.1;
  std::vector<double> sweep_values;  // explicit list, overrides the range
  int jobs = 0;                      // 0 picks the hardware concurrency

  // simulation
  double dt = 1e-3;
  double horizon = 30.0;
  double curvature = 0.0;  // 0 selects L
  std::vector<double> target;
  int dim = 1;
  std::string schedule = "frozen";
  bool with_states = false;

  // flocking
  int agents = 5;
  std::string graph = "ring";
  double spring_k = 0.5;
  double spring_rest = 1.0;

  // validation
  int samples = 100;
  std::uint64_t seed = 42;

  std::string out;  // empty writes to stdout

  void validate() const {
    auto need = [](bool ok, const std::string& what) {
      if (!ok) throw InvalidArgument(what);
    };
    need(m > 0.0, "--m must be positive");
    need(l >= m, "--L must be at least --m");
    need(order >= 1 && order <= 8, "--order must be in 1..8");
    need(lambda < 0.0, "--lambda must be negative");
    need(alpha_max >= 0.0, "--alpha-max must be nonnegative");
    need(grid_tol > 0.0, "--grid-tol must be positive");
    need(kp > 0.0 && kd >= 0.0, "--kp must be positive and --kd nonnegative");
    need(sweep_var == "L" || sweep_var == "gain-ratio", "--var must be L or gain-ratio");
    need(sweep_step > 0.0, "--step must be positive");
    need(sweep_to >= sweep_from, "--to must be at least --from");
    need(jobs >= 0, "--jobs must be nonnegative");
    need(dt > 0.0, "--dt must be positive");
    need(horizon > 0.0, "--horizon must be positive");
    need(curvature >= 0.0, "--curvature must be nonnegative");
    need(dim >= 1, "--dim must be positive");
    need(schedule == "frozen" || schedule == "sine", "--schedule must be frozen or sine");
    need(agents >= 1, "--agents must be positive");
    need(graph == "ring" || graph == "complete", "--graph must be ring or complete");
    need(spring_k >= 0.0 && spring_rest >= 0.0, "spring parameters must be nonnegative");
    need(samples >= 1, "--samples must be positive");
    parse_positivity();
    parse_multiplier_class(multiplier);
  }

  PositivityPolicy parse_positivity() const {
    if (positivity == "published") return PositivityPolicy::Published;
    if (positivity == "strict") return PositivityPolicy::Strict;
    throw InvalidArgument("--positivity must be published or strict");
  }

  MultiplierConfig multiplier_config(MultiplierClass cls) const {
    MultiplierConfig c;
    c.cls = cls;
    c.order = order;
    c.lambda = lambda;
    c.positivity = parse_positivity();
    return c;
  }
  MultiplierConfig multiplier_config() const { return multiplier_config(parse_multiplier_class(multiplier)); }

  SectorBounds sector() const { return {m, l}; }
};

namespace detail {

inline ojson matrix_json(const Matrix& a) {
  ojson rows = ojson::array();
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    ojson row = ojson::array();
    for (Eigen::Index c = 0; c < a.cols(); ++c) row.push_back(a(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline ojson number_or_null(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

inline PlantModel lift_plant(PlantModel p, int d) {
  if (d == p.d) return p;
  if (p.d != 1) throw InvalidArgument("cannot lift a plant with d = " + std::to_string(p.d));
  for (auto& v : p.vertices) v = kron_lift(v, d);
  p.d = d;
  p.validate();
  return p;
}

class OutputTarget {
 public:
  OutputTarget(const std::string& path, std::ostream& fallback) : os_(&fallback) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw InvalidArgument("cannot open output file '" + path + "'");
      os_ = &file_;
    }
  }
  std::ostream& operator*() { return *os_; }

 private:
  std::ofstream file_;
  std::ostream* os_;
};

}  // namespace detail

inline PlantModel load_config_plant(const RunConfig& c, const ReferenceGains& gains) {
  if (!c.plant_path.empty()) return load_plant(c.plant_path);
  return builtin_plant(c.builtin, gains);
}
inline PlantModel load_config_plant(const RunConfig& c) { return load_config_plant(c, {c.kp, c.kd}); }

inline ojson witness_summary(const RateEstimate& est) {
  if (est.infeasible_at_zero || est.witness.witness.size() == 0) return nullptr;
  const auto& pr = est.problem;
  const Vector& y = est.witness.witness;
  ojson w;
  w["margin"] = est.witness.margin;
  w["iterations"] = est.witness.iterations;
  w["H"] = pr.value("H", y)(0, 0);
  if (pr.has_variable("P1")) w["P1"] = detail::matrix_json(pr.value("P1", y));
  if (pr.has_variable("P3")) w["P3"] = detail::matrix_json(pr.value("P3", y));
  Eigen::SelfAdjointEigenSolver<Matrix> es(pr.value("X", y));
  w["X_size"] = pr.value("X", y).rows();
  w["X_min_eig"] = es.eigenvalues().minCoeff();
  w["X_max_eig"] = es.eigenvalues().maxCoeff();
  ojson res = ojson::array();
  for (const auto& r : est.witness.residuals)
    res.push_back({{"constraint", r.name}, {"min_eig", r.min_eig}, {"relative", r.relative()}});
  w["residuals"] = std::move(res);
  return w;
}

inline ojson certify_report(const RunConfig& c, const PlantModel& p, const RateEstimate& est) {
  const MultiplierConfig mc = c.multiplier_config();
  ojson j;
  j["alpha_star"] = est.reported();
  j["status"] = est.infeasible_at_zero ? "infeasible-at-zero" : (est.at_bracket_top ? "bracket-top" : "certified");
  j["grid_tol"] = est.grid_tol;
  j["alpha_max"] = est.alpha_max;
  j["multiplier"] = {{"class", to_string(mc.cls)},
                     {"order", mc.order},
                     {"lambda", mc.lambda},
                     {"positivity", c.positivity}};
  j["sector"] = {{"m", c.m}, {"L", c.l}};
  j["plant"] = {{"label", p.label},
                {"kind", p.kind == PlantKind::Lti ? "lti" : "lpv"},
                {"vertices", p.vertices.size()},
                {"states", p.lti().nx()},
                {"d", p.d}};
  ojson log = ojson::array();
  for (const auto& s : est.log)
    log.push_back({{"alpha", s.alpha}, {"status", to_string(s.status)}, {"margin", detail::number_or_null(s.margin)}});
  j["bisection_log"] = std::move(log);
  j["witness_summary"] = witness_summary(est);
  return j;
}

inline int cmd_certify(const RunConfig& c, std::ostream& out) {
  PlantModel p = load_config_plant(c);
  RateEstimate est = certify_rate(p.vertices, c.sector(), c.multiplier_config(), c.alpha_max, c.grid_tol);
  detail::OutputTarget o(c.out, out);
  *o << certify_report(c, p, est).dump(2) << "\n";
  return est.infeasible_at_zero ? kExitInfeasible : kExitOk;
}

struct SweepRow {
  double value = 0.0;
  double cc = NAN, causal = NAN, anticausal = NAN, zf = NAN, oracle = NAN;

  bool failed() const {
    return std::isnan(cc) || std::isnan(causal) || std::isnan(anticausal) || std::isnan(zf) || std::isnan(oracle);
  }
};

inline std::vector<double> sweep_points(const RunConfig& c) {
  if (!c.sweep_values.empty()) return c.sweep_values;
  const long n = static_cast<long>(std::floor((c.sweep_to - c.sweep_from) / c.sweep_step + 1e-9)) + 1;
  std::vector<double> v;
  for (long i = 0; i < n; ++i) v.push_back(std::round((c.sweep_from + i * c.sweep_step) * 1e12) / 1e12);
  return v;
}

/// One sweep point: the four multiplier classes and the quadratic oracle.
/// Any failing entry becomes NaN.
inline SweepRow sweep_point(const RunConfig& c, double value) {
  SweepRow r;
  r.value = value;
  PlantModel p;
  SectorBounds s = c.sector();
  try {
    if (c.sweep_var == "L") {
      p = load_config_plant(c);
      s = SectorBounds(c.m, value);
    } else {
      p = load_config_plant(c, {c.kp, value * c.kp});
    }
  } catch (const std::exception&) {
    return r;
  }
  auto run = [&](MultiplierClass cls) {
    try {
      return certify_rate(p.vertices, s, c.multiplier_config(cls), c.alpha_max, c.grid_tol).reported();
    } catch (const std::exception&) {
      return static_cast<double>(NAN);
    }
  };
  r.cc = run(MultiplierClass::CircleCriterion);
  r.causal = run(MultiplierClass::CausalZF);
  r.anticausal = run(MultiplierClass::AntiCausalZF);
  r.zf = run(MultiplierClass::FullZF);
  try {
    r.oracle = worst_case_quadratic_rate(p, s);
  } catch (const std::exception&) {
  }
  return r;
}

/// Evaluates every point on a worker pool; rows come back in sweep order.
inline std::vector<SweepRow> run_sweep(const RunConfig& c) {
  const std::vector<double> pts = sweep_points(c);
  std::vector<SweepRow> rows(pts.size());
  int jobs = c.jobs > 0 ? c.jobs : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  jobs = std::min<int>(jobs, static_cast<int>(pts.size()));
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i; (i = next.fetch_add(1)) < pts.size();) rows[i] = sweep_point(c, pts[i]);
  };
  std::vector<std::thread> pool;
  for (int k = 1; k < jobs; ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return rows;
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "sweep_value,alpha_cc,alpha_causal,alpha_anticausal,alpha_zf,alpha_oracle\n";
  for (const auto& r : rows) {
    for (double v : {r.value, r.cc, r.causal, r.anticausal, r.zf}) {
      write_csv_number(os, v);
      os << ',';
    }
    write_csv_number(os, r.oracle);
    os << "\n";
  }
}

inline int cmd_sweep(const RunConfig& c, std::ostream& out, std::ostream& err) {
  if (c.sweep_var == "gain-ratio" && (!c.plant_path.empty() || c.builtin.rfind("quadrotor", 0) != 0))
    throw InvalidArgument("a gain-ratio sweep needs a quadrotor builtin");
  auto rows = run_sweep(c);
  detail::OutputTarget o(c.out, out);
  write_sweep_csv(*o, rows);
  size_t failed = 0;
  for (const auto& r : rows) failed += r.failed();
  if (failed) err << failed << " of " << rows.size() << " sweep points had failures (NaN entries)\n";
  return !rows.empty() && failed == rows.size() ? kExitError : kExitOk;
}

inline Vector config_target(const RunConfig& c, int d) {
  if (c.target.empty()) return Vector::Ones(d);
  if (static_cast<int>(c.target.size()) != d)
    throw InvalidArgument("--target needs " + std::to_string(d) + " values");
  return Eigen::Map<const Vector>(c.target.data(), d);
}

/// Quadratic-field run from rest at the origin equilibrium toward --target.
inline int cmd_simulate(const RunConfig& c, std::ostream& out, std::ostream& err) {
  PlantModel p = detail::lift_plant(load_config_plant(c), c.dim);
  const double k = c.curvature > 0.0 ? c.curvature : c.l;
  FieldSpec f = FieldSpec::curvature(k, config_target(c, p.d), c.sector());
  Vector x0 = equilibrium_state(p, Vector::Zero(p.d));
  Schedule sched = nullptr;
  if (c.schedule == "sine" && p.vertices.size() == 2)
    sched = [](double t) {
      Vector w(2);
      w(0) = 0.5 + 0.5 * std::sin(t);
      w(1) = 1.0 - w(0);
      return w;
    };
  Trajectory tr = simulate_closed_loop(p, f, x0, c.dt, c.horizon, sched);
  detail::OutputTarget o(c.out, out);
  write_trajectory_csv(*o, tr, c.with_states);
  try {
    err << "fitted decay rate: " << fit_decay_rate(tr, field_minimizer(f)) << "\n";
  } catch (const InvalidArgument& e) {
    err << "no decay fit: " << e.what() << "\n";
  }
  return kExitOk;
}

struct FlockReport {
  double max_com_deviation = 0.0;
  double final_com_error = 0.0;
  Trajectory com, single;
};

/// Runs the flock and the single-agent loop from the average initial state.
inline FlockReport run_flock(const FlockSpec& spec, const PlantModel& p, const FieldSpec& f,
                             const std::vector<Vector>& x0s, double dt, double horizon) {
  FlockReport rep;
  rep.com = com_reduce(flocking_simulate(spec, p, f, x0s, dt, horizon));
  Vector xc = Vector::Zero(x0s.front().size());
  for (const auto& x : x0s) xc += x;
  xc /= static_cast<double>(x0s.size());
  rep.single = simulate_closed_loop(p, f, xc, dt, horizon);
  for (size_t k = 0; k < rep.com.size(); ++k)
    rep.max_com_deviation = std::max(rep.max_com_deviation, (rep.com.y[k] - rep.single.y[k]).norm());
  rep.final_com_error = (rep.com.y.back() - field_minimizer(f)).norm();
  return rep;
}

inline Matrix graph_laplacian(const std::string& graph, int n) {
  if (graph == "ring") return ring_laplacian(n);
  Matrix l = -Matrix::Ones(n, n);
  l.diagonal().setConstant(n - 1.0);
  return l;
}

inline int cmd_flocking(const RunConfig& c, std::ostream& out) {
  PlantModel p = detail::lift_plant(load_config_plant(c), c.dim);
  if (p.kind != PlantKind::Lti) throw InvalidArgument("flocking needs an lti plant");
  FlockSpec spec{c.agents, graph_laplacian(c.graph, c.agents), c.spring_rest, c.spring_k};
  const double k = c.curvature > 0.0 ? c.curvature : c.l;
  FieldSpec f = FieldSpec::curvature(k, config_target(c, p.d), c.sector());
  std::mt19937_64 rng(c.seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<Vector> x0s;
  for (int i = 0; i < c.agents; ++i) {
    Vector y0(p.d);
    for (int j = 0; j < p.d; ++j) y0(j) = 2.0 * nd(rng);
    x0s.push_back(equilibrium_state(p, y0));
  }
  FlockReport rep = run_flock(spec, p, f, x0s, c.dt, c.horizon);
  ojson j;
  j["agents"] = c.agents;
  j["graph"] = c.graph;
  j["d"] = p.d;
  j["dt"] = c.dt;
  j["horizon"] = c.horizon;
  j["max_com_deviation"] = rep.max_com_deviation;
  j["final_com_error"] = rep.final_com_error;
  detail::OutputTarget o(c.out, out);
  *o << j.dump(2) << "\n";
  return kExitOk;
}

inline int cmd_oracle(const RunConfig& c, std::ostream& out) {
  PlantModel p = load_config_plant(c);
  ojson j;
  j["alpha_oracle"] = worst_case_quadratic_rate(p, c.sector());
  j["sector"] = {{"m", c.m}, {"L", c.l}};
  j["plant"] = p.label;
  detail::OutputTarget o(c.out, out);
  *o << j.dump(2) << "\n";
  return kExitOk;
}

inline ojson iqc_report_json(const IqcSuiteReport& rep, double tol) {
  ojson j;
  j["samples"] = rep.options.samples;
  j["seed"] = rep.options.seed;
  j["dt"] = rep.options.dt;
  j["horizon"] = rep.options.horizon;
  j["tolerance"] = tol;
  ojson fams = ojson::array();
  for (const auto& f : rep.families)
    fams.push_back({{"family", f.family},
                    {"evaluations", f.evaluations},
                    {"min_relative_residual", f.worst_relative},
                    {"negatives", f.negatives},
                    {"min_refinement_ratio", detail::number_or_null(f.worst_refinement)}});
  j["families"] = std::move(fams);
  j["pass"] = rep.pass(tol);
  return j;
}

inline int cmd_validate_iqc(const RunConfig& c, std::ostream& out) {
  IqcSuiteOptions opt;
  opt.samples = c.samples;
  opt.seed = c.seed;
  IqcSuiteReport rep = run_iqc_suite(default_iqc_cases(), opt);
  detail::OutputTarget o(c.out, out);
  *o << iqc_report_json(rep, 1e-5).dump(2) << "\n";
  return rep.pass() ? kExitOk : kExitError;
}

inline int cmd_export_plant(const RunConfig& c, std::ostream& out) {
  PlantModel p = load_config_plant(c);
  detail::OutputTarget o(c.out, out);
  write_plant(*o, p);
  return kExitOk;
}

/// Validates the config, dispatches, and maps exceptions to exit code 1.
inline int run_command(const RunConfig& c, std::ostream& out, std::ostream& err) {
  try {
    c.validate();
    if (c.command == "certify") return cmd_certify(c, out);
    if (c.command == "sweep") return cmd_sweep(c, out, err);
    if (c.command == "simulate") return cmd_simulate(c, out, err);
    if (c.command == "flocking") return cmd_flocking(c, out);
    if (c.command == "oracle") return cmd_oracle(c, out);
    if (c.command == "validate-iqc") return cmd_validate_iqc(c, out);
    if (c.command == "export-plant") return cmd_export_plant(c, out);
    throw InvalidArgument("unknown command '" + c.command + "'");
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
  }
  return kExitError;
}

}  // namespace zfcert
