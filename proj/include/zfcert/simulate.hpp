#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "zfcert/fields.hpp"
#include "zfcert/plants.hpp"

namespace zfcert {

struct Trajectory {
  double dt = 0.0;
  std::vector<double> t;
  std::vector<Vector> x;  // plant state
  std::vector<Vector> y;  // output

  size_t size() const { return t.size(); }
};

/// Convex weights over the plant vertices as a function of time.
using Schedule = std::function<Vector(double)>;

namespace detail {

inline void blend(const PlantModel& p, const Vector& w, Matrix& a, Matrix& b, Matrix& c) {
  a = Matrix::Zero(p.lti().nx(), p.lti().nx());
  b = Matrix::Zero(p.lti().nx(), p.d);
  c = Matrix::Zero(p.d, p.lti().nx());
  for (size_t k = 0; k < p.vertices.size(); ++k) {
    a += w(k) * p.vertices[k].a;
    b += w(k) * p.vertices[k].b;
    c += w(k) * p.vertices[k].c;
  }
}

inline Vector check_weights(const PlantModel& p, const Vector& w) {
  if (w.size() != static_cast<Eigen::Index>(p.vertices.size()))
    throw DimensionError("schedule returned the wrong number of weights");
  if (w.minCoeff() < -1e-12 || std::abs(w.sum() - 1.0) > 1e-9)
    throw InvalidArgument("schedule weights must be convex");
  return w;
}

}  // namespace detail

/// Fixed-step RK4 of η̇ = A(ρ(t))η + B(ρ(t))∇f(C(ρ(t))η). Without a schedule
/// an LPV plant is frozen at vertex 0.
inline Trajectory simulate_closed_loop(const PlantModel& plant, const FieldSpec& field, const Vector& x0,
                                       double dt, double t_final, const Schedule& schedule = nullptr) {
  if (!(dt > 0.0) || !(t_final >= 0.0)) throw InvalidArgument("simulate: need dt > 0 and t_final >= 0");
  const int n = plant.lti().nx();
  if (x0.size() != n) throw DimensionError("simulate: initial state has wrong size");
  if (field.dim() != plant.d) throw DimensionError("simulate: field dimension differs from plant output");
  Vector w0 = Vector::Zero(plant.vertices.size());
  w0(0) = 1.0;
  auto weights = [&](double t) { return schedule ? detail::check_weights(plant, schedule(t)) : w0; };
  Matrix a, b, c;
  auto rhs = [&](double t, const Vector& x) {
    if (schedule) detail::blend(plant, weights(t), a, b, c);
    return Vector(a * x + b * grad_field(field, c * x));
  };
  detail::blend(plant, weights(0.0), a, b, c);
  const long steps = std::lround(t_final / dt);
  Trajectory tr;
  tr.dt = dt;
  tr.t.reserve(steps + 1);
  tr.x.reserve(steps + 1);
  tr.y.reserve(steps + 1);
  Vector x = x0;
  for (long k = 0;; ++k) {
    const double t = k * dt;
    if (!x.allFinite()) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "simulation blew up at t = %.6g", t);
      throw NumericalFailure(buf, 0.0);
    }
    if (schedule) detail::blend(plant, weights(t), a, b, c);
    tr.t.push_back(t);
    tr.x.push_back(x);
    tr.y.push_back(c * x);
    if (k == steps) break;
    Vector k1 = rhs(t, x);
    Vector k2 = rhs(t + 0.5 * dt, x + 0.5 * dt * k1);
    Vector k3 = rhs(t + 0.5 * dt, x + 0.5 * dt * k2);
    Vector k4 = rhs(t + dt, x + dt * k3);
    x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return tr;
}

/// State η with Aη = 0 and Cη = y_star (vertex 0; the kernel is shared).
inline Vector equilibrium_state(const PlantModel& plant, const Vector& y_star) {
  const auto& g = plant.lti();
  Matrix m(g.nx() + g.ny(), g.nx());
  m << g.a, g.c;
  Vector rhs = Vector::Zero(g.nx() + g.ny());
  rhs.tail(g.ny()) = y_star;
  Vector eta = m.completeOrthogonalDecomposition().solve(rhs);
  if ((m * eta - rhs).norm() > 1e-9 * (1.0 + rhs.norm()))
    throw ValidationError("plant has no equilibrium with the requested output");
  return eta;
}

/// Least-squares decay rate of ‖y − y_star‖ along the points where it touches
/// its nonincreasing upper envelope, after skipping the initial fraction.
inline double fit_decay_rate(const Trajectory& tr, const Vector& y_star, double skip = 0.2) {
  const size_t n = tr.size();
  if (n < 3) throw InvalidArgument("fit_decay_rate: trajectory too short");
  std::vector<double> e(n);
  for (size_t k = 0; k < n; ++k) e[k] = (tr.y[k] - y_star).norm();
  if (!(e.back() < 1e-8 * e.front()))
    throw InvalidArgument("fit_decay_rate: trajectory has not converged (terminal error above 1e-8 of initial)");
  const double floor = 1e-12 * e.front();
  std::vector<double> ts, ls;
  double env = 0.0;
  for (size_t k = n; k-- > 0;) {
    if (e[k] >= env) {
      env = e[k];
      if (tr.t[k] >= skip * tr.t.back() && e[k] > floor) {
        ts.push_back(tr.t[k]);
        ls.push_back(std::log(e[k]));
      }
    }
  }
  if (ts.size() < 2) throw InvalidArgument("fit_decay_rate: not enough envelope points");
  double mt = 0, ml = 0;
  for (size_t i = 0; i < ts.size(); ++i) {
    mt += ts[i];
    ml += ls[i];
  }
  mt /= ts.size();
  ml /= ts.size();
  double num = 0, den = 0;
  for (size_t i = 0; i < ts.size(); ++i) {
    num += (ts[i] - mt) * (ls[i] - ml);
    den += (ts[i] - mt) * (ts[i] - mt);
  }
  return std::max(0.0, -num / den);
}

/// Worst decay rate over linear gradients ∇f = ky, k on a uniform grid of
/// [m, L] (endpoints included), and over plant vertices. Nonpositive values
/// flag an unstable closed loop.
inline double worst_case_quadratic_rate(const PlantModel& plant, const SectorBounds& s, int grid = 201) {
  if (grid < 2) throw InvalidArgument("worst_case_quadratic_rate: grid must be at least 2");
  double worst = std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid; ++i) {
    const double k = i == grid - 1 ? s.l : s.m + (s.l - s.m) * i / (grid - 1);
    for (const auto& g : plant.vertices) worst = std::min(worst, -spectral_abscissa(g.a + k * g.b * g.c));
  }
  return worst;
}

inline void write_csv_number(std::ostream& os, double v) {
  char buf[40];
  if (std::isnan(v))
    std::snprintf(buf, sizeof buf, "nan");
  else
    std::snprintf(buf, sizeof buf, "%.17g", v == 0.0 ? 0.0 : v);
  os << buf;
}

/// Header `t,y1..yd[,x1..xn]`, one row per sample.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& tr, bool with_states = false) {
  if (tr.size() == 0) return;
  const auto d = tr.y.front().size(), n = tr.x.front().size();
  os << "t";
  for (Eigen::Index i = 0; i < d; ++i) os << ",y" << i + 1;
  if (with_states)
    for (Eigen::Index i = 0; i < n; ++i) os << ",x" << i + 1;
  os << "\n";
  for (size_t k = 0; k < tr.size(); ++k) {
    write_csv_number(os, tr.t[k]);
    for (Eigen::Index i = 0; i < d; ++i) {
      os << ',';
      write_csv_number(os, tr.y[k](i));
    }
    if (with_states)
      for (Eigen::Index i = 0; i < n; ++i) {
        os << ',';
        write_csv_number(os, tr.x[k](i));
      }
    os << "\n";
  }
}

}  // namespace zfcert
