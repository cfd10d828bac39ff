#pragma once

#include <cmath>
#include <vector>

#include "zfcert/simulate.hpp"

namespace zfcert {

/// Identical agents coupled through a graph Laplacian (velocity consensus)
/// and pairwise springs V = Σ_edges (k/2)(‖y_i − y_j‖ − r₀)².
struct FlockSpec {
  int n_agents = 1;
  Matrix laplacian;
  double spring_rest = 1.0;
  double spring_k = 0.0;

  void validate() const {
    if (n_agents < 1) throw InvalidArgument("flock needs at least one agent");
    if (laplacian.rows() != n_agents || laplacian.cols() != n_agents)
      throw DimensionError("Laplacian must be N×N");
    const double scale = 1.0 + laplacian.cwiseAbs().maxCoeff();
    if ((laplacian - laplacian.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
      throw ValidationError("Laplacian must be symmetric");
    if (laplacian.rowwise().sum().cwiseAbs().maxCoeff() > 1e-12 * scale)
      throw ValidationError("Laplacian rows must sum to zero");
  }
};

inline Matrix ring_laplacian(int n) {
  Matrix l = Matrix::Zero(n, n);
  if (n < 2) return l;
  for (int i = 0; i < n; ++i) {
    const int j = (i + 1) % n;
    if (j == i) continue;
    l(i, j) -= 1.0;
    l(j, i) -= 1.0;
    l(i, i) += 1.0;
    l(j, j) += 1.0;
  }
  return l;
}

/// ∇V for stacked positions (agent i in rows i·d … i·d+d−1). Edges are the
/// nonzero off-diagonal Laplacian entries.
inline Vector spring_gradient(const FlockSpec& s, const Vector& y, int d) {
  Vector g = Vector::Zero(y.size());
  if (s.spring_k == 0.0) return g;
  for (int i = 0; i < s.n_agents; ++i)
    for (int j = i + 1; j < s.n_agents; ++j) {
      if (s.laplacian(i, j) == 0.0) continue;
      Vector diff = y.segment(i * d, d) - y.segment(j * d, d);
      const double r = std::sqrt(diff.squaredNorm() + 1e-18);  // ε = 1e-9 guard
      Vector f = s.spring_k * (r - s.spring_rest) / r * diff;
      g.segment(i * d, d) += f;
      g.segment(j * d, d) -= f;
    }
  return g;
}

/// Stacked flock: û = ∇f̂(ŷ) + ∇V(ŷ) + (ℒ⊗I)ŷ̇, with the interaction terms
/// taking the same sign as the field gradient so that, under the vehicle's
/// input convention, springs and velocity consensus are restoring.
/// ŷ̇ is the exact output derivative from the stacked state; a nonzero CB
/// is handled by solving the resulting linear equation for û.
inline std::vector<Trajectory> flocking_simulate(const FlockSpec& spec, const PlantModel& plant,
                                                 const FieldSpec& field, const std::vector<Vector>& x0s,
                                                 double dt, double t_final) {
  spec.validate();
  if (plant.kind != PlantKind::Lti) throw InvalidArgument("flocking needs an lti plant");
  if (field.kind != FieldKind::Quadratic) throw InvalidArgument("flocking needs a quadratic field");
  if (static_cast<int>(x0s.size()) != spec.n_agents) throw DimensionError("one initial state per agent");
  const auto& g = plant.lti();
  const int n = g.nx(), d = plant.d, N = spec.n_agents;
  Matrix lk = kron_lift(spec.laplacian, d);
  Matrix cb = g.c * g.b;
  Matrix solve_m = Matrix::Identity(N * d, N * d);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) solve_m.block(i * d, j * d, d, d) += spec.laplacian(i, j) * cb;
  Eigen::PartialPivLU<Matrix> solver(solve_m);

  auto outputs = [&](const Vector& x) {
    Vector y(N * d);
    for (int i = 0; i < N; ++i) y.segment(i * d, d) = g.c * x.segment(i * n, n);
    return y;
  };
  auto rhs = [&](const Vector& x) {
    Vector y = outputs(x), ca(N * d), base(N * d);
    for (int i = 0; i < N; ++i) {
      ca.segment(i * d, d) = g.c * g.a * x.segment(i * n, n);
      base.segment(i * d, d) = grad_field(field, y.segment(i * d, d));
    }
    base += spring_gradient(spec, y, d) + lk * ca;
    Vector u = solver.solve(base);
    Vector dx(N * n);
    for (int i = 0; i < N; ++i)
      dx.segment(i * n, n) = g.a * x.segment(i * n, n) + g.b * u.segment(i * d, d);
    return dx;
  };

  Vector x(N * n);
  for (int i = 0; i < N; ++i) {
    if (x0s[i].size() != n) throw DimensionError("agent initial state has wrong size");
    x.segment(i * n, n) = x0s[i];
  }
  std::vector<Trajectory> out(N);
  for (auto& tr : out) tr.dt = dt;
  const long steps = std::lround(t_final / dt);
  for (long k = 0;; ++k) {
    if (!x.allFinite()) throw NumericalFailure("flock simulation blew up at t = " + std::to_string(k * dt), 0.0);
    Vector y = outputs(x);
    for (int i = 0; i < N; ++i) {
      out[i].t.push_back(k * dt);
      out[i].x.push_back(x.segment(i * n, n));
      out[i].y.push_back(y.segment(i * d, d));
    }
    if (k == steps) break;
    Vector k1 = rhs(x);
    Vector k2 = rhs(x + 0.5 * dt * k1);
    Vector k3 = rhs(x + 0.5 * dt * k2);
    Vector k4 = rhs(x + dt * k3);
    x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return out;
}

/// Arithmetic mean across agents at every sample.
inline Trajectory com_reduce(const std::vector<Trajectory>& trs) {
  if (trs.empty()) throw InvalidArgument("com_reduce: no trajectories");
  const size_t len = trs.front().size();
  for (const auto& tr : trs)
    if (tr.size() != len) throw DimensionError("com_reduce: trajectories differ in length");
  Trajectory c = trs.front();
  const double inv = 1.0 / trs.size();
  for (size_t k = 0; k < len; ++k) {
    c.x[k].setZero();
    c.y[k].setZero();
    for (const auto& tr : trs) {
      c.x[k] += tr.x[k];
      c.y[k] += tr.y[k];
    }
    c.x[k] *= inv;
    c.y[k] *= inv;
  }
  return c;
}

}  // namespace zfcert
