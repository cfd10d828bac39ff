#pragma once

#include <cmath>
#include <random>

#include "zfcert/psi.hpp"
#include "zfcert/state_space.hpp"

namespace zfcert {

enum class FieldKind { Quadratic, ScaledSmooth };

/// Scalar field f with gradient in the sector class S(m, L).
///   Quadratic:    f(y) = yᵀQy + cᵀy, ∇f(y) = 2Qy + c.
///   ScaledSmooth: per coordinate, with e = y − center,
///                 ∇f_i = m e_i + (L − m)(e_i − w tanh(e_i / w)).
struct FieldSpec {
  FieldKind kind = FieldKind::Quadratic;
  SectorBounds sector;
  Matrix q;
  Vector c;
  Vector center;
  double width = 1.0;

  int dim() const { return kind == FieldKind::Quadratic ? static_cast<int>(q.rows()) : static_cast<int>(center.size()); }

  static FieldSpec quadratic(const Matrix& q, const Vector& c, const SectorBounds& s) {
    if (q.rows() != q.cols() || c.size() != q.rows()) throw DimensionError("quadratic field: Q and c sizes differ");
    FieldSpec f;
    f.kind = FieldKind::Quadratic;
    f.q = 0.5 * (q + q.transpose());
    f.c = c;
    f.sector = s;
    Eigen::SelfAdjointEigenSolver<Matrix> es(2.0 * f.q);
    const auto& ev = es.eigenvalues();
    const double tol = 1e-12 * std::max(1.0, s.l);
    if (ev.minCoeff() < s.m - tol || ev.maxCoeff() > s.l + tol)
      throw InvalidArgument("quadratic field: Hessian eigenvalues leave [m, L]");
    return f;
  }

  /// Isotropic quadratic with curvature k and minimizer y_star.
  static FieldSpec curvature(double k, const Vector& y_star, const SectorBounds& s) {
    const int d = static_cast<int>(y_star.size());
    return quadratic(0.5 * k * Matrix::Identity(d, d), -k * y_star, s);
  }

  static FieldSpec scaled_smooth(const Vector& center, double width, const SectorBounds& s) {
    if (!(width > 0.0)) throw InvalidArgument("smooth field: width must be positive");
    FieldSpec f;
    f.kind = FieldKind::ScaledSmooth;
    f.center = center;
    f.width = width;
    f.sector = s;
    return f;
  }
};

inline Vector grad_field(const FieldSpec& f, const Vector& y) {
  if (y.size() != f.dim()) throw DimensionError("grad_field: point has wrong dimension");
  if (f.kind == FieldKind::Quadratic) return 2.0 * f.q * y + f.c;
  const double m = f.sector.m, l = f.sector.l, w = f.width;
  Vector g(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double e = y(i) - f.center(i);
    g(i) = m * e + (l - m) * (e - w * std::tanh(e / w));
  }
  return g;
}

/// Minimizer of f: closed form for quadratics, otherwise gradient descent
/// with step 1/L until ‖∇f‖ ≤ 1e-12.
inline Vector field_minimizer(const FieldSpec& f) {
  if (f.kind == FieldKind::Quadratic) return (2.0 * f.q).ldlt().solve(-f.c);
  Vector y = Vector::Zero(f.dim());
  const double step = 1.0 / f.sector.l;
  for (int it = 0; it < 1000000; ++it) {
    Vector g = grad_field(f, y);
    if (g.norm() <= 1e-12) return y;
    y -= step * g;
  }
  throw NumericalFailure("field minimizer search did not converge", 0.0);
}

/// Largest violation of m‖Δy‖² ≤ Δ∇fᵀΔy ≤ L‖Δy‖² over random pairs, scaled
/// by ‖Δy‖²; nonpositive when the sector holds on the sample.
inline double sector_violation(const FieldSpec& f, std::mt19937_64& rng, int pairs = 1000,
                               double spread = 5.0) {
  std::normal_distribution<double> nd(0.0, spread);
  double worst = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < pairs; ++k) {
    Vector y1(f.dim()), y2(f.dim());
    for (int i = 0; i < f.dim(); ++i) {
      y1(i) = nd(rng);
      y2(i) = nd(rng);
    }
    Vector dy = y1 - y2;
    const double n2 = dy.squaredNorm();
    if (n2 == 0.0) continue;
    const double s = (grad_field(f, y1) - grad_field(f, y2)).dot(dy) / n2;
    worst = std::max({worst, f.sector.m - s, s - f.sector.l});
  }
  return worst;
}

}  // namespace zfcert
