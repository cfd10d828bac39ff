#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "zfcert/certifier.hpp"
#include "zfcert/iqc_validate.hpp"
#include "zfcert/plants.hpp"

namespace zfcert {

/// A certified operating point whose witness drives the inequality checks.
struct IqcCase {
  PlantModel plant;
  SectorBounds sector;
  MultiplierConfig cfg;
  double alpha = 0.0;
  double h = 0.0;
  Matrix p1, p3, x, p;
};

inline IqcCase make_iqc_case(PlantModel plant, const SectorBounds& sec, const MultiplierConfig& cfg) {
  RateEstimate est = certify_rate(plant.vertices, sec, cfg);
  if (est.infeasible_at_zero)
    throw ValidationError("validation case " + plant.label + " is not certifiable");
  IqcCase c{std::move(plant), sec, cfg, est.alpha_star, 0.0, {}, {}, {}, {}};
  const auto& pr = est.problem;
  const Vector& y = est.witness.witness;
  const int nu = cfg.order;
  c.h = pr.value("H", y)(0, 0);
  c.p1 = pr.has_variable("P1") ? pr.value("P1", y) : Matrix::Zero(1, nu);
  c.p3 = pr.has_variable("P3") ? pr.value("P3", y) : Matrix::Zero(1, nu);
  c.x = pr.value("X", y);
  c.p = build_P(c.h, c.p1, c.p3, nu);
  return c;
}

/// Operating points spanning every shipped plant and every multiplier class
/// whose kernel carries a nonnegativity certificate.
inline std::vector<IqcCase> default_iqc_cases() {
  auto cfg = [](MultiplierClass c, int nu) {
    MultiplierConfig m;
    m.cls = c;
    m.order = nu;
    m.positivity = PositivityPolicy::Strict;
    return m;
  };
  std::vector<IqcCase> cs;
  cs.push_back(make_iqc_case(nonmin_phase_example(), {1.0, 1.5}, cfg(MultiplierClass::FullZF, 1)));
  cs.push_back(make_iqc_case(nonmin_phase_example(), {1.0, 2.0}, cfg(MultiplierClass::AntiCausalZF, 1)));
  cs.push_back(make_iqc_case(lpv_vehicle_example(), {1.0, 3.0}, cfg(MultiplierClass::CausalZF, 2)));
  cs.push_back(make_iqc_case(builtin_plant("quadrotor"), {1.0, 4.0}, cfg(MultiplierClass::CircleCriterion, 1)));
  cs.push_back(make_iqc_case(builtin_plant("quadrotor-two-mode"), {1.0, 2.0}, cfg(MultiplierClass::FullZF, 2)));
  return cs;
}

struct IqcFamilySummary {
  std::string family;
  int evaluations = 0;
  double worst_relative = std::numeric_limits<double>::infinity();
  int negatives = 0;          // below −roundoff·scale
  double worst_refinement = std::numeric_limits<double>::infinity();  // |r(dt)| / |r(dt/2)| over negatives
};

struct IqcSuiteOptions {
  int samples = 100;
  std::uint64_t seed = 42;
  double dt = 2e-3;
  double horizon = 20.0;
  double roundoff = 1e-12;  // relative residuals above −roundoff count as zero
};

struct IqcSuiteReport {
  std::vector<IqcFamilySummary> families;
  IqcSuiteOptions options;

  bool pass(double tol = 1e-5) const {
    for (const auto& f : families) {
      if (f.worst_relative < -tol) return false;
      if (f.negatives > 0 && f.worst_refinement < 4.0) return false;
    }
    return true;
  }
};

namespace detail {

struct SampleRun {
  Trajectory tr;
  SignalPair sig;
  Vector eta_star;
};

inline SampleRun run_sample(const IqcCase& c, const FieldSpec& f, const Vector& dx0, double omega, double phase,
                            double dt, double horizon) {
  Vector y_star = field_minimizer(f);
  SampleRun s;
  s.eta_star = equilibrium_state(c.plant, y_star);
  Schedule sched = nullptr;
  if (c.plant.vertices.size() == 2)
    sched = [omega, phase](double t) {
      Vector w(2);
      w(0) = 0.5 + 0.5 * std::sin(omega * t + phase);
      w(1) = 1.0 - w(0);
      return w;
    };
  s.tr = simulate_closed_loop(c.plant, f, s.eta_star + dx0, dt, horizon, sched);
  s.sig = make_signals(s.tr, f, c.sector, y_star);
  return s;
}

// Relative residuals of every family for one run, in a fixed order:
// 41 shifted-sector residuals, then the multiplier, filtered-form and
// dissipation residuals.
inline std::vector<WeightedResidual> evaluate_all(const IqcCase& c, const SampleRun& s, double horizon) {
  std::vector<WeightedResidual> out;
  for (int i = -20; i <= 20; ++i) out.push_back(lemma1_residual(s.sig, c.alpha, 0.1 * i, horizon));
  ZfBasis z = build_basis(c.cfg);
  out.push_back(theorem2_residual(s.sig, z, c.h, c.p1, c.p3, c.alpha, horizon));
  PsiRealization psi = build_psi(z, c.sector, c.alpha, c.plant.d);
  out.push_back(theorem3_residual(s.sig, psi, c.p, c.alpha, horizon));
  out.push_back(dissipation_residual(psi, c.x, c.p, s.tr, s.sig, s.eta_star, c.alpha, horizon));
  return out;
}

}  // namespace detail

/// Randomized check of the sector, multiplier, and dissipation inequalities.
/// Sample i uses case i mod |cases|, alternating quadratic and smooth fields.
inline IqcSuiteReport run_iqc_suite(const std::vector<IqcCase>& cases, const IqcSuiteOptions& opt = {}) {
  if (cases.empty()) throw InvalidArgument("no validation cases");
  IqcSuiteReport rep;
  rep.options = opt;
  rep.families = {{"lemma1"}, {"theorem2"}, {"theorem3"}, {"dissipation"}};
  auto family_of = [](size_t idx) { return idx < 41 ? 0 : static_cast<int>(idx - 40); };
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int i = 0; i < opt.samples; ++i) {
    const IqcCase& c = cases[i % cases.size()];
    const int d = c.plant.d;
    Vector center(d);
    for (int k = 0; k < d; ++k) center(k) = nd(rng);
    FieldSpec f = (i / static_cast<int>(cases.size())) % 2 == 0
                      ? FieldSpec::curvature(c.sector.m + (c.sector.l - c.sector.m) * uni(rng), center, c.sector)
                      : FieldSpec::scaled_smooth(center, 0.3 + 2.7 * uni(rng), c.sector);
    Vector dx0(c.plant.lti().nx());
    for (int k = 0; k < dx0.size(); ++k) dx0(k) = 2.0 * nd(rng);
    const double omega = 0.2 + 2.0 * uni(rng), phase = 6.283185307179586 * uni(rng);

    auto run = detail::run_sample(c, f, dx0, omega, phase, opt.dt, opt.horizon);
    auto res = detail::evaluate_all(c, run, opt.horizon);
    std::vector<WeightedResidual> fine;
    for (size_t idx = 0; idx < res.size(); ++idx) {
      auto& fam = rep.families[family_of(idx)];
      ++fam.evaluations;
      const double rel = res[idx].relative();
      fam.worst_relative = std::min(fam.worst_relative, rel);
      if (rel < -opt.roundoff) {
        ++fam.negatives;
        if (fine.empty()) {
          auto run2 = detail::run_sample(c, f, dx0, omega, phase, 0.5 * opt.dt, opt.horizon);
          fine = detail::evaluate_all(c, run2, opt.horizon);
        }
        const double r2 = fine[idx].value;
        const double ratio = r2 >= -opt.roundoff * fine[idx].scale
                                 ? std::numeric_limits<double>::infinity()
                                 : std::abs(res[idx].value) / std::abs(r2);
        fam.worst_refinement = std::min(fam.worst_refinement, ratio);
      }
    }
  }
  return rep;
}

}  // namespace zfcert
