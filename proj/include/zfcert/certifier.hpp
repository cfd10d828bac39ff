#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "zfcert/psi.hpp"
#include "zfcert/sdp.hpp"
#include "zfcert/zames_falb.hpp"

namespace zfcert {

inline constexpr double kDefaultGridTol = 1.0 / 8192.0;

/// Rate LMI with one copy of the dissipation block per vertex interconnection
/// and shared (X, H, P₁, P₃, X₁, X₃). Every constraint is posed as strict.
inline SdpProblem assemble_lmi_lpv(const std::vector<StateSpace>& vertices, double alpha,
                                   const MultiplierConfig& cfg, const ZfBasis& z, int d) {
  if (vertices.empty()) throw InvalidArgument("assemble_lmi: no interconnections");
  const int nu = z.order;
  const int n = vertices.front().nx();
  const int nz = 2 * (1 + nu) * d;
  for (const auto& v : vertices) {
    if (v.nx() != n || v.nu() != d || v.ny() != nz)
      throw DimensionError("assemble_lmi: interconnection dimensions are inconsistent");
  }

  SdpProblem prob;
  prob.add_symmetric("X", n);
  prob.add_scalar("H");
  if (cfg.uses_p1()) prob.add_row("P1", nu);
  if (cfg.uses_p3()) prob.add_row("P3", nu);
  if (cfg.certifies_p1() && nu > 1) prob.add_symmetric("X1", nu - 1);
  if (cfg.certifies_p3() && nu > 1) prob.add_symmetric("X3", nu - 1);

  {
    AffineExpr e(n);
    prob.add_linear(e, "X", [](const Matrix& x) { return x; });
    prob.add_constraint("X", std::move(e), Sense::PosDef);
  }

  const Matrix zero_row = Matrix::Zero(1, nu);
  for (size_t k = 0; k < vertices.size(); ++k) {
    const auto& s = vertices[k];
    Matrix cd(nz, n + d);
    cd << s.c, s.d;
    AffineExpr e(n + d);
    prob.add_linear(e, "X", [&](const Matrix& x) {
      Matrix f = Matrix::Zero(n + d, n + d);
      f.topLeftCorner(n, n) = s.a.transpose() * x + x * s.a + 2.0 * alpha * x;
      f.topRightCorner(n, d) = x * s.b;
      f.bottomLeftCorner(d, n) = s.b.transpose() * x;
      return f;
    });
    auto outer = [&](const Matrix& p) { return Matrix(cd.transpose() * kron_lift(p, d) * cd); };
    prob.add_linear(e, "H", [&](const Matrix& h) { return outer(build_P(h(0, 0), zero_row, zero_row, nu)); });
    if (cfg.uses_p1())
      prob.add_linear(e, "P1", [&](const Matrix& p1) { return outer(build_P(0.0, p1, zero_row, nu)); });
    if (cfg.uses_p3())
      prob.add_linear(e, "P3", [&](const Matrix& p3) { return outer(build_P(0.0, zero_row, p3, nu)); });
    const std::string name = vertices.size() == 1 ? "rate" : "rate[" + std::to_string(k) + "]";
    prob.add_constraint(name, std::move(e), Sense::NegDef);
  }

  {
    Vector v = l1_row(z);
    AffineExpr e(1);
    prob.add_linear(e, "H", [](const Matrix& h) { return h; });
    auto row_map = [&](const Matrix& p) { return Matrix::Constant(1, 1, (p * v)(0, 0)); };
    if (cfg.uses_p1()) prob.add_linear(e, "P1", row_map);
    if (cfg.uses_p3()) prob.add_linear(e, "P3", row_map);
    prob.add_constraint("l1", std::move(e), Sense::PosDef);
  }
  if (cfg.certifies_p1()) add_positivity_constraint(prob, z, "P1", "X1", "kernel1");
  if (cfg.certifies_p3()) add_positivity_constraint(prob, z, "P3", "X3", "kernel3");
  return prob;
}

inline SdpProblem assemble_lmi(const StateSpace& interconnection, double alpha,
                               const MultiplierConfig& cfg, const ZfBasis& z, int d) {
  return assemble_lmi_lpv({interconnection}, alpha, cfg, z, d);
}

/// Builds Ψ at alpha for every vertex and assembles the rate LMI.
inline SdpProblem rate_problem(const std::vector<StateSpace>& plant_vertices, const SectorBounds& sec,
                               const MultiplierConfig& cfg, double alpha) {
  if (plant_vertices.empty()) throw InvalidArgument("no plant vertices");
  const int d = plant_vertices.front().ny();
  ZfBasis z = build_basis(cfg);
  PsiRealization psi = build_psi(z, sec, alpha, d);
  std::vector<StateSpace> ic;
  for (const auto& g : plant_vertices) ic.push_back(build_interconnection(psi, g));
  return assemble_lmi_lpv(ic, alpha, cfg, z, d);
}

struct BisectionStep {
  double alpha;
  FeasibilityStatus status;
  double margin;
};

struct RateEstimate {
  bool infeasible_at_zero = false;
  double alpha_star = -1.0;  // −1 when not certifiable at zero
  double grid_tol = kDefaultGridTol;
  double alpha_max = 0.0;
  bool at_bracket_top = false;
  std::vector<BisectionStep> log;
  FeasibilityResult witness;  // at alpha_star
  SdpProblem problem;         // at alpha_star, for re-checking the witness

  /// Reported value: −1 for "not certifiable".
  double reported() const { return infeasible_at_zero ? -1.0 : alpha_star; }
};

/// Bracket top: 1.1 × the slowest decay among the nonzero open-loop modes,
/// capped at 10.
inline double default_alpha_max(const std::vector<StateSpace>& vertices) {
  double slowest = std::numeric_limits<double>::infinity();
  for (const auto& g : vertices) {
    auto ev = eigenvalues(g.a);
    for (Eigen::Index i = 0; i < ev.size(); ++i)
      if (std::abs(ev(i)) > 1e-9 && ev(i).real() < 0) slowest = std::min(slowest, -ev(i).real());
  }
  if (!std::isfinite(slowest)) return 10.0;
  return std::min(10.0, 1.1 * slowest);
}

/// Largest multiple of grid_tol in [0, alpha_max] at which the rate LMI is
/// strictly feasible, found by bisection on the grid index.
inline RateEstimate certify_rate(const std::vector<StateSpace>& plant_vertices, const SectorBounds& sec,
                                 const MultiplierConfig& cfg, double alpha_max = 0.0,
                                 double grid_tol = kDefaultGridTol,
                                 SolverOptions opt = SolverOptions::from_environment()) {
  if (alpha_max <= 0.0) alpha_max = default_alpha_max(plant_vertices);
  if (!(grid_tol > 0.0)) throw InvalidArgument("grid_tol must be positive");
  RateEstimate est;
  est.grid_tol = grid_tol;
  est.alpha_max = alpha_max;

  auto solve = [&](long k, SdpProblem* keep) {
    const double alpha = k * grid_tol;
    SdpProblem prob = rate_problem(plant_vertices, sec, cfg, alpha);
    FeasibilityResult r = check_feasible(prob, opt);
    est.log.push_back({alpha, r.status, r.margin});
    if (opt.verbose)
      std::fprintf(stderr, "alpha %.13g: %s (margin %.3e, %d iterations)\n", alpha, to_string(r.status),
                   r.margin, r.iterations);
    if (r.status == FeasibilityStatus::NumericalFailure)
      throw NumericalFailure("solver failed at alpha = " + std::to_string(alpha) + ": " + r.message, alpha);
    if (r.feasible() && keep) *keep = std::move(prob);
    return r;
  };

  SdpProblem best_prob;
  FeasibilityResult best = solve(0, &best_prob);
  if (!best.feasible()) {
    est.infeasible_at_zero = true;
    est.alpha_star = -1.0;
    est.witness = std::move(best);
    return est;
  }
  long lo = 0, hi = static_cast<long>(std::floor(alpha_max / grid_tol + 1e-9));
  if (hi > 0) {
    SdpProblem top_prob;
    FeasibilityResult top = solve(hi, &top_prob);
    if (top.feasible()) {
      lo = hi;
      best = std::move(top);
      best_prob = std::move(top_prob);
      est.at_bracket_top = true;
    }
  }
  while (hi - lo > 1) {
    const long mid = lo + (hi - lo) / 2;
    SdpProblem mid_prob;
    FeasibilityResult r = solve(mid, &mid_prob);
    if (r.feasible()) {
      lo = mid;
      best = std::move(r);
      best_prob = std::move(mid_prob);
    } else {
      hi = mid;
    }
  }
  est.alpha_star = lo * grid_tol;
  est.witness = std::move(best);
  est.problem = std::move(best_prob);
  return est;
}

}  // namespace zfcert
