#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "zfcert/state_space.hpp"

namespace zfcert {

enum class PlantKind { Lti, LpvPolytopic };

/// Vehicle model u ↦ y with an integrator in the reference channel. An LPV
/// model lists the vertices of a polytope of realizations under arbitrary
/// switching.
struct PlantModel {
  PlantKind kind = PlantKind::Lti;
  std::vector<StateSpace> vertices;
  int d = 1;
  std::string label;

  const StateSpace& lti() const { return vertices.front(); }

  /// Throws ValidationError naming the violated property.
  void validate() const {
    if (vertices.empty()) throw ValidationError(label + ": no realization given");
    if (kind == PlantKind::Lti && vertices.size() != 1)
      throw ValidationError(label + ": an lti plant has exactly one realization");
    const auto& v0 = vertices.front();
    for (size_t k = 0; k < vertices.size(); ++k) {
      const auto& v = vertices[k];
      const std::string where = label + " vertex " + std::to_string(k);
      if (v.nx() != v0.nx() || v.nu() != v0.nu() || v.ny() != v0.ny())
        throw ValidationError(where + ": dimensions differ from vertex 0");
      if (v.nu() != d || v.ny() != d)
        throw ValidationError(where + ": input and output width must equal d = " + std::to_string(d));
      if (v.d.cwiseAbs().maxCoeff() != 0.0) throw ValidationError(where + ": feedthrough must be zero");
    }
    Vector k0 = null_direction(v0.a);
    if (k0.size() == 0) throw ValidationError(label + ": A has no integrator (no kernel direction)");
    for (size_t k = 0; k < vertices.size(); ++k) {
      Vector kv = null_direction(vertices[k].a);
      if (kv.size() == 0)
        throw ValidationError(label + " vertex " + std::to_string(k) + ": A has no integrator");
      const double sine = (kv - kv.dot(k0) * k0).norm();
      if (sine > 1e-8)
        throw ValidationError(label + " vertex " + std::to_string(k) +
                              ": integrator direction differs from vertex 0");
    }
  }
};

inline PlantModel make_lti(StateSpace g, std::string label) {
  PlantModel p{PlantKind::Lti, {std::move(g)}, 0, std::move(label)};
  p.d = p.vertices.front().ny();
  p.validate();
  return p;
}

inline PlantModel make_lpv(std::vector<StateSpace> vs, std::string label) {
  PlantModel p{PlantKind::LpvPolytopic, std::move(vs), 0, std::move(label)};
  if (p.vertices.empty()) throw ValidationError(p.label + ": no vertices");
  p.d = p.vertices.front().ny();
  p.validate();
  return p;
}

/// G(s) = 5(s−1)/(s(s²+s+25)) in controllable canonical form.
inline PlantModel nonmin_phase_example() {
  Matrix a(3, 3), b(3, 1), c(1, 3);
  a << 0, 1, 0, 0, 0, 1, 0, -25, -1;
  b << 0, 0, 1;
  c << -5, 5, 0;
  return make_lti(StateSpace(a, b, c, Matrix::Zero(1, 1)), "nonmin-phase");
}

/// ẋ = v, v̇ = −ρv − u with ρ switching arbitrarily in [0.8, 1.2].
inline PlantModel lpv_vehicle_example(double rho_lo = 0.8, double rho_hi = 1.2) {
  std::vector<StateSpace> vs;
  for (double rho : {rho_lo, rho_hi}) {
    Matrix a(2, 2), b(2, 1), c(1, 2);
    a << 0, 1, 0, -rho;
    b << 0, -1;
    c << 1, 0;
    vs.emplace_back(a, b, c, Matrix::Zero(1, 1));
  }
  return make_lpv(std::move(vs), "lpv-vehicle");
}

struct QuadrotorMode {
  double mass = 1.0;
  ReferenceGains gains{1.0, 2.0};
  double tracker_bandwidth = 2.0;  // closed-loop tracking pole at unit mass
};

/// Position tracker for one axis of a point-mass vehicle: m ẍ = F with
/// F = ω²(r_pos − x) + 2ω√m (r_vel − v). The tracking poles sit as a double
/// pole at −ω/√m, so the tracker becomes perfect as the mass vanishes.
inline StateSpace quadrotor_tracker(double mass, double bandwidth) {
  if (!(mass > 0.0) || !(bandwidth > 0.0)) throw InvalidArgument("mass and bandwidth must be positive");
  const double w = bandwidth, sm = std::sqrt(mass);
  Matrix a(2, 2), b(2, 2), c(1, 2);
  a << 0, 1, -w * w / mass, -2.0 * w / sm;
  b << 0, 0, w * w / mass, 2.0 * w / sm;
  c << 1, 0;
  return StateSpace(a, b, c, Matrix::Zero(1, 2));
}

inline PlantModel quadrotor_surrogate(const ReferenceGains& gains, double mass, double tracker_bandwidth,
                                      int d = 1) {
  StateSpace g = build_vehicle_G(kron_lift(quadrotor_tracker(mass, tracker_bandwidth), d), gains, d);
  return make_lti(std::move(g), "quadrotor");
}

inline PlantModel two_mode_quadrotor(const QuadrotorMode& m1, const QuadrotorMode& m2, int d = 1) {
  std::vector<StateSpace> vs;
  for (const auto* m : {&m1, &m2}) {
    vs.push_back(build_vehicle_G(kron_lift(quadrotor_tracker(m->mass, m->tracker_bandwidth), d),
                                 m->gains, d));
  }
  if (vs[0].nx() != vs[1].nx()) throw ValidationError("two-mode vertices have different state sizes");
  return make_lpv(std::move(vs), "quadrotor-two-mode");
}

/// Random vehicle: damped second-order position tracker with velocity
/// feed-forward, composed with random reference gains. Always stable apart
/// from the reference integrator.
inline PlantModel random_vehicle_plant(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uw(0.5, 5.0), uz(0.3, 1.5), uf(0.0, 1.0), ukp(0.5, 2.0),
      ukd(0.5, 4.0);
  const double w = uw(rng), zeta = uz(rng), ff = uf(rng);
  Matrix a(2, 2), b(2, 2), c(1, 2);
  a << 0, 1, -w * w, -2 * zeta * w;
  b << 0, 0, w * w, ff * 2 * zeta * w;
  c << 1, 0;
  ReferenceGains g{ukp(rng), ukd(rng)};
  PlantModel p = make_lti(build_vehicle_G(StateSpace(a, b, c, Matrix::Zero(1, 2)), g), "random-vehicle");
  return p;
}

inline std::vector<std::string> builtin_names() {
  return {"nonmin-phase", "lpv-vehicle", "quadrotor", "quadrotor-two-mode"};
}

/// Default two-mode masses and shared gains.
inline PlantModel builtin_plant(const std::string& name, const ReferenceGains& gains = {1.0, 9.0}) {
  if (name == "nonmin-phase") return nonmin_phase_example();
  if (name == "lpv-vehicle") return lpv_vehicle_example();
  if (name == "quadrotor") return quadrotor_surrogate(gains, 1.0, 2.0);
  if (name == "quadrotor-two-mode")
    return two_mode_quadrotor({0.2, gains, 2.0}, {2.0, gains, 2.0});
  throw InvalidArgument("unknown builtin plant '" + name + "'");
}

}  // namespace zfcert
