#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "zfcert/error.hpp"

namespace zfcert {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Continuous-time LTI realization (A, B, C, D). A system with no states is a
/// static gain and is handled everywhere like any other realization.
struct StateSpace {
  Matrix a, b, c, d;

  StateSpace() = default;
  StateSpace(Matrix a_, Matrix b_, Matrix c_, Matrix d_)
      : a(std::move(a_)), b(std::move(b_)), c(std::move(c_)), d(std::move(d_)) {
    check();
  }

  static StateSpace static_gain(const Matrix& d_) {
    return StateSpace(Matrix(0, 0), Matrix(0, d_.cols()), Matrix(d_.rows(), 0), d_);
  }

  int nx() const { return static_cast<int>(a.rows()); }
  int nu() const { return static_cast<int>(d.cols()); }
  int ny() const { return static_cast<int>(d.rows()); }

  void check() const {
    const auto n = a.rows();
    if (a.cols() != n) throw DimensionError("A must be square");
    if (b.rows() != n) throw DimensionError("B rows must equal the state dimension");
    if (c.cols() != n) throw DimensionError("C columns must equal the state dimension");
    if (d.rows() != c.rows()) throw DimensionError("D rows must equal C rows");
    if (d.cols() != b.cols()) throw DimensionError("D columns must equal B columns");
  }
};

struct ReferenceGains {
  double kp = 1.0;
  double kd = 2.0;
};

/// Cascade front∘back: the output of `back` drives the input of `front`.
/// State ordering is [x_front; x_back].
inline StateSpace series(const StateSpace& front, const StateSpace& back) {
  if (front.nu() != back.ny())
    throw DimensionError("series: input width of front (" + std::to_string(front.nu()) +
                         ") does not match output width of back (" +
                         std::to_string(back.ny()) + ")");
  const int n1 = front.nx(), n2 = back.nx();
  Matrix a = Matrix::Zero(n1 + n2, n1 + n2);
  a.topLeftCorner(n1, n1) = front.a;
  a.topRightCorner(n1, n2) = front.b * back.c;
  a.bottomRightCorner(n2, n2) = back.a;
  Matrix b(n1 + n2, back.nu());
  b << front.b * back.d, back.b;
  Matrix c(front.ny(), n1 + n2);
  c << front.c, front.d * back.c;
  return StateSpace(a, b, c, front.d * back.d);
}

/// Stacks the outputs of two systems driven by the same input.
inline StateSpace stack_outputs(const StateSpace& top, const StateSpace& bottom) {
  if (top.nu() != bottom.nu()) throw DimensionError("stack_outputs: input widths differ");
  const int n1 = top.nx(), n2 = bottom.nx();
  Matrix a = Matrix::Zero(n1 + n2, n1 + n2);
  a.topLeftCorner(n1, n1) = top.a;
  a.bottomRightCorner(n2, n2) = bottom.a;
  Matrix b(n1 + n2, top.nu());
  b << top.b, bottom.b;
  Matrix c = Matrix::Zero(top.ny() + bottom.ny(), n1 + n2);
  c.topLeftCorner(top.ny(), n1) = top.c;
  c.bottomRightCorner(bottom.ny(), n2) = bottom.c;
  Matrix d(top.ny() + bottom.ny(), top.nu());
  d << top.d, bottom.d;
  return StateSpace(a, b, c, d);
}

/// Block-diagonal (parallel, separate inputs and outputs) connection.
inline StateSpace append(const StateSpace& s1, const StateSpace& s2) {
  const int n1 = s1.nx(), n2 = s2.nx();
  Matrix a = Matrix::Zero(n1 + n2, n1 + n2);
  a.topLeftCorner(n1, n1) = s1.a;
  a.bottomRightCorner(n2, n2) = s2.a;
  Matrix b = Matrix::Zero(n1 + n2, s1.nu() + s2.nu());
  b.topLeftCorner(n1, s1.nu()) = s1.b;
  b.bottomRightCorner(n2, s2.nu()) = s2.b;
  Matrix c = Matrix::Zero(s1.ny() + s2.ny(), n1 + n2);
  c.topLeftCorner(s1.ny(), n1) = s1.c;
  c.bottomRightCorner(s2.ny(), n2) = s2.c;
  Matrix d = Matrix::Zero(s1.ny() + s2.ny(), s1.nu() + s2.nu());
  d.topLeftCorner(s1.ny(), s1.nu()) = s1.d;
  d.bottomRightCorner(s2.ny(), s2.nu()) = s2.d;
  return StateSpace(a, b, c, d);
}

/// M ⊗ I_d.
inline Matrix kron_lift(const Matrix& m, int d) {
  if (d < 1) throw InvalidArgument("kron_lift: d must be positive");
  Matrix out = Matrix::Zero(m.rows() * d, m.cols() * d);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (m(i, j) != 0.0)
        out.block(i * d, j * d, d, d).diagonal().setConstant(m(i, j));
  return out;
}

inline StateSpace kron_lift(const StateSpace& s, int d) {
  return StateSpace(kron_lift(s.a, d), kron_lift(s.b, d), kron_lift(s.c, d), kron_lift(s.d, d));
}

/// Reference dynamics r_pos' = r_vel, r_vel' = -kd r_vel - kp u with state
/// and output [r_pos; r_vel], each block of width d.
inline StateSpace reference_block(const ReferenceGains& g, int d = 1) {
  if (!(g.kp > 0.0) || !(g.kd >= 0.0)) throw InvalidArgument("reference gains need kp > 0, kd >= 0");
  Matrix a(2, 2), b(2, 1);
  a << 0, 1, 0, -g.kd;
  b << 0, -g.kp;
  return kron_lift(StateSpace(a, b, Matrix::Identity(2, 2), Matrix::Zero(2, 1)), d);
}

/// Vehicle model G: reference dynamics followed by the tracking closed loop,
/// which maps [r_pos; r_vel] (width 2d) to the position y (width d).
inline StateSpace build_vehicle_G(const StateSpace& closed_loop, const ReferenceGains& gains,
                                  int d = 1) {
  if (closed_loop.nu() != 2 * d || closed_loop.ny() != d)
    throw DimensionError("closed loop must map a width-" + std::to_string(2 * d) +
                         " reference to a width-" + std::to_string(d) + " position");
  return series(closed_loop, reference_block(gains, d));
}

inline Eigen::VectorXcd eigenvalues(const Matrix& a) {
  if (a.rows() != a.cols()) throw DimensionError("eigenvalues: matrix must be square");
  if (a.rows() == 0) return Eigen::VectorXcd(0);
  Eigen::EigenSolver<Matrix> es(a, false);
  if (es.info() != Eigen::Success) throw NumericalFailure("eigenvalue iteration did not converge", 0.0);
  return es.eigenvalues();
}

/// Largest real part of the spectrum; -inf for an empty matrix.
inline double spectral_abscissa(const Matrix& a) {
  auto ev = eigenvalues(a);
  double s = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < ev.size(); ++i) s = std::max(s, ev(i).real());
  return s;
}

/// Unit vector spanning the (numerical) null space of m, or an empty vector
/// when m has full column rank.
inline Vector null_direction(const Matrix& m) {
  if (m.cols() == 0) return Vector(0);
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double smax = s.size() ? s(0) : 0.0;
  const double cut = 1e-10 * std::max(smax, 1e-300);
  const Eigen::Index rank = (s.array() > cut).count();
  if (rank >= m.cols()) return Vector(0);
  Vector v = svd.matrixV().col(m.cols() - 1);
  return v / v.norm();
}

/// Realization has an integrator in the reference channel: A is singular with
/// a null vector that C sees.
inline bool has_integral_action(const StateSpace& g, double tol = 1e-9) {
  Vector v = null_direction(g.a);
  if (v.size() == 0) return false;
  return (g.c * v).norm() > tol;
}

}  // namespace zfcert
