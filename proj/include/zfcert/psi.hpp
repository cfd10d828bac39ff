#pragma once

#include "zfcert/state_space.hpp"
#include "zfcert/zames_falb.hpp"

namespace zfcert {

struct SectorBounds {
  double m = 1.0;
  double l = 1.0;

  SectorBounds() = default;
  SectorBounds(double m_, double l_) : m(m_), l(l_) {
    if (!(m > 0.0) || !(l >= m) || !std::isfinite(l))
      throw InvalidArgument("sector bounds need 0 < m <= L < inf");
  }
};

/// Filter Ψ mapping [ỹ; ũ] to z = [p; x_p; q; x_q], with p = ũ − mỹ,
/// q = Lỹ − ũ and x_p, x_q the states of (A_ν − 2αI, B_ν) driven by p and q.
struct PsiRealization {
  StateSpace ss;
  double alpha = 0.0;
  int nu = 1;
  int d = 1;
  SectorBounds sector;
};

inline PsiRealization build_psi(const ZfBasis& z, const SectorBounds& sec, double alpha, int d) {
  if (!(alpha >= 0.0)) throw InvalidArgument("build_psi: alpha must be nonnegative");
  if (d < 1) throw InvalidArgument("build_psi: d must be positive");
  const int nu = z.order;
  Matrix a_alpha = z.a_nu - 2.0 * alpha * Matrix::Identity(nu, nu);
  Matrix ablk = kron_lift(a_alpha, d);
  const int nh = nu * d;
  Matrix a = Matrix::Zero(2 * nh, 2 * nh);
  a.topLeftCorner(nh, nh) = ablk;
  a.bottomRightCorner(nh, nh) = ablk;

  Matrix bnu = kron_lift(z.b_nu, d);  // νd × d
  Matrix b(2 * nh, 2 * d);
  b << -sec.m * bnu, bnu, sec.l * bnu, -bnu;

  const int nz = 2 * (1 + nu) * d;
  Matrix c = Matrix::Zero(nz, 2 * nh), dd = Matrix::Zero(nz, 2 * d);
  Matrix eye = Matrix::Identity(d, d);
  dd.block(0, 0, d, d) = -sec.m * eye;
  dd.block(0, d, d, d) = eye;
  c.block(d, 0, nh, nh).setIdentity();
  const int qrow = (1 + nu) * d;
  dd.block(qrow, 0, d, d) = sec.l * eye;
  dd.block(qrow, d, d, d) = -eye;
  c.block(qrow + d, nh, nh, nh).setIdentity();
  return {StateSpace(a, b, c, dd), alpha, nu, d, sec};
}

/// Ψ·[G; I]: driven by ũ, state [x_Ψ; x_G].
inline StateSpace build_interconnection(const PsiRealization& psi, const StateSpace& plant) {
  if (plant.nu() != psi.d || plant.ny() != psi.d)
    throw DimensionError("plant must have input and output width " + std::to_string(psi.d));
  StateSpace ident = StateSpace::static_gain(Matrix::Identity(psi.d, psi.d));
  return series(psi.ss, stack_outputs(plant, ident));
}

struct MultiplierVars {
  double h = 0.0;
  Matrix p1, p3;  // 1×ν
  Matrix x1, x3;  // (ν−1)×(ν−1)
};

/// Middle matrix of size 2(1+ν): [[0, M], [Mᵀ, 0]], M = [[H, −P₃], [−P₁ᵀ, 0]],
/// rows of M indexed by [p; x_p] and columns by [q; x_q].
inline Matrix build_P(double h, const Matrix& p1, const Matrix& p3, int nu) {
  if (p1.size() != nu || p3.size() != nu) throw DimensionError("build_P: P1, P3 must have length nu");
  Matrix mm = Matrix::Zero(1 + nu, 1 + nu);
  mm(0, 0) = h;
  for (int k = 0; k < nu; ++k) {
    mm(0, 1 + k) = -p3(k);
    mm(1 + k, 0) = -p1(k);
  }
  Matrix p = Matrix::Zero(2 * (1 + nu), 2 * (1 + nu));
  p.topRightCorner(1 + nu, 1 + nu) = mm;
  p.bottomLeftCorner(1 + nu, 1 + nu) = mm.transpose();
  return p;
}

inline Matrix build_P(const MultiplierVars& v, int nu) { return build_P(v.h, v.p1, v.p3, nu); }

}  // namespace zfcert
