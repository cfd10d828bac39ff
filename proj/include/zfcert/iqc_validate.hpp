#pragma once

#include <unsupported/Eigen/MatrixFunctions>
#include <cmath>
#include <vector>

#include "zfcert/fields.hpp"
#include "zfcert/psi.hpp"
#include "zfcert/simulate.hpp"

namespace zfcert {

/// Deviation signals of a closed-loop run and the sector signals
/// p = ũ − mỹ, q = Lỹ − ũ on the simulation grid.
struct SignalPair {
  double dt = 0.0;
  std::vector<Vector> ytil, util, p, q;
  SectorBounds sector;

  size_t size() const { return p.size(); }
};

struct WeightedResidual {
  double value = 0.0;
  double scale = 0.0;  // integral of the absolute contributions
  double horizon = 0.0;

  double relative() const { return scale > 0.0 ? value / scale : 0.0; }
};

inline SignalPair make_signals(const Trajectory& tr, const FieldSpec& f, const SectorBounds& s,
                               const Vector& y_star) {
  SignalPair sig;
  sig.dt = tr.dt;
  sig.sector = s;
  for (size_t k = 0; k < tr.size(); ++k) {
    Vector yt = tr.y[k] - y_star;
    Vector ut = grad_field(f, tr.y[k]);
    sig.p.push_back(ut - s.m * yt);
    sig.q.push_back(s.l * yt - ut);
    sig.ytil.push_back(std::move(yt));
    sig.util.push_back(std::move(ut));
  }
  return sig;
}

namespace detail {

inline size_t horizon_steps(const SignalPair& sig, double horizon) {
  const double steps = horizon / sig.dt;
  const long k = std::lround(steps);
  if (k < 0 || static_cast<size_t>(k) >= sig.size() || std::abs(steps - k) > 1e-6)
    throw InvalidArgument("horizon must be a grid multiple within the signal length");
  return static_cast<size_t>(k);
}

// Trapezoid sum of f over grid indices [k0, k1].
template <class F>
double trapezoid(F f, size_t k0, size_t k1, double dt) {
  if (k1 <= k0) return 0.0;
  double s = 0.5 * (f(k0) + f(k1));
  for (size_t k = k0 + 1; k < k1; ++k) s += f(k);
  return s * dt;
}

}  // namespace detail

/// States of ẋ = Ax + Bw with w linear between samples (exact first-order-hold
/// discretization), x(0) = x0.
inline std::vector<Vector> filter_states(const Matrix& a, const Matrix& b, const std::vector<Vector>& w,
                                         double dt, const Vector& x0) {
  const int n = static_cast<int>(a.rows()), m = static_cast<int>(b.cols());
  Matrix big = Matrix::Zero(n + 2 * m, n + 2 * m);
  big.topLeftCorner(n, n) = a * dt;
  big.block(0, n, n, m) = b * dt;
  big.block(n, n + m, m, m) = Matrix::Identity(m, m);
  Matrix e = big.exp();
  Matrix phi = e.topLeftCorner(n, n), g0 = e.block(0, n, n, m), g1 = e.block(0, n + m, n, m);
  std::vector<Vector> xs;
  xs.reserve(w.size());
  Vector x = x0;
  xs.push_back(x);
  for (size_t k = 0; k + 1 < w.size(); ++k) {
    x = phi * x + g0 * w[k] + g1 * (w[k + 1] - w[k]);
    xs.push_back(x);
  }
  return xs;
}

/// ∫₀ᵀ e^{2αt} pᵀ(q − β(τ) q_T(· − τ)) dt, β(τ) = min{1, e^{−2ατ}}, q_T the
/// zero extension of q outside [0, T]. τ must be a grid multiple so that the
/// support edges of the shifted term fall on samples.
inline WeightedResidual lemma1_residual(const SignalPair& sig, double alpha, double tau, double horizon) {
  const size_t kt = detail::horizon_steps(sig, horizon);
  const double dt = sig.dt;
  const double sh = tau / dt;
  const long shift = std::lround(sh);
  if (std::abs(sh - shift) > 1e-6) throw InvalidArgument("lemma1_residual: tau must be a multiple of dt");
  const double beta = std::min(1.0, std::exp(-2.0 * alpha * tau));
  auto w = [&](size_t k) { return std::exp(2.0 * alpha * k * dt); };
  auto direct = [&](size_t k) { return w(k) * sig.p[k].dot(sig.q[k]); };
  // Shifted term is nonzero for t ∈ [τ, τ + T] ∩ [0, T].
  const long lo = std::max<long>(0, shift), hi = std::min<long>(static_cast<long>(kt), static_cast<long>(kt) + shift);
  auto shifted = [&](size_t k) { return w(k) * sig.p[k].dot(sig.q[k - shift]); };
  WeightedResidual r;
  r.horizon = horizon;
  const double a = detail::trapezoid(direct, 0, kt, dt);
  const double b = hi > lo ? detail::trapezoid(shifted, lo, hi, dt) : 0.0;
  r.value = a - beta * b;
  r.scale = detail::trapezoid([&](size_t k) { return std::abs(direct(k)); }, 0, kt, dt) +
            (hi > lo ? beta * detail::trapezoid([&](size_t k) { return std::abs(shifted(k)); }, lo, hi, dt) : 0.0);
  return r;
}

/// ∫₀ᵀ e^{2αt}(H pᵀq − pᵀw₁ − qᵀw₂) dt with w₁ = P₃x_q, w₂ = P₁x_p and x_p,
/// x_q the states of (A_ν − 2αI, B_ν) driven by p and q from rest.
inline WeightedResidual theorem2_residual(const SignalPair& sig, const ZfBasis& z, double h, const Matrix& p1,
                                          const Matrix& p3, double alpha, double horizon) {
  const size_t kt = detail::horizon_steps(sig, horizon);
  const int d = static_cast<int>(sig.p.front().size());
  const int nh = z.order * d;
  Matrix a = kron_lift(Matrix(z.a_nu - 2.0 * alpha * Matrix::Identity(z.order, z.order)), d);
  Matrix b = kron_lift(z.b_nu, d);
  auto xp = filter_states(a, b, sig.p, sig.dt, Vector::Zero(nh));
  auto xq = filter_states(a, b, sig.q, sig.dt, Vector::Zero(nh));
  Matrix k1 = kron_lift(p1, d), k3 = kron_lift(p3, d);
  std::vector<double> val(kt + 1), mag(kt + 1);
  for (size_t k = 0; k <= kt; ++k) {
    const double w = std::exp(2.0 * alpha * k * sig.dt);
    const double t1 = h * sig.p[k].dot(sig.q[k]);
    const double t2 = sig.p[k].dot(k3 * xq[k]);
    const double t3 = sig.q[k].dot(k1 * xp[k]);
    val[k] = w * (t1 - t2 - t3);
    mag[k] = w * (std::abs(t1) + std::abs(t2) + std::abs(t3));
  }
  WeightedResidual r;
  r.horizon = horizon;
  r.value = detail::trapezoid([&](size_t k) { return val[k]; }, 0, kt, sig.dt);
  r.scale = detail::trapezoid([&](size_t k) { return mag[k]; }, 0, kt, sig.dt);
  return r;
}

/// Outputs z of Ψ driven by [ỹ; ũ] from rest.
inline std::vector<Vector> psi_outputs(const PsiRealization& psi, const SignalPair& sig) {
  std::vector<Vector> in;
  in.reserve(sig.size());
  for (size_t k = 0; k < sig.size(); ++k) {
    Vector v(sig.ytil[k].size() * 2);
    v << sig.ytil[k], sig.util[k];
    in.push_back(std::move(v));
  }
  auto xs = filter_states(psi.ss.a, psi.ss.b, in, sig.dt, Vector::Zero(psi.ss.nx()));
  std::vector<Vector> z;
  z.reserve(in.size());
  for (size_t k = 0; k < in.size(); ++k) z.push_back(psi.ss.c * xs[k] + psi.ss.d * in[k]);
  return z;
}

/// ∫₀ᵀ e^{2αt} zᵀ(P⊗I_d)z dt with z = Ψ[ỹ; ũ].
inline WeightedResidual theorem3_residual(const SignalPair& sig, const PsiRealization& psi, const Matrix& p,
                                          double alpha, double horizon) {
  const size_t kt = detail::horizon_steps(sig, horizon);
  auto z = psi_outputs(psi, sig);
  Matrix pk = kron_lift(p, psi.d), pabs = pk.cwiseAbs();
  WeightedResidual r;
  r.horizon = horizon;
  auto w = [&](size_t k) { return std::exp(2.0 * alpha * k * sig.dt); };
  r.value = detail::trapezoid([&](size_t k) { return w(k) * z[k].dot(pk * z[k]); }, 0, kt, sig.dt);
  r.scale = detail::trapezoid([&](size_t k) { Vector za = z[k].cwiseAbs(); return w(k) * za.dot(pabs * za); }, 0,
                              kt, sig.dt);
  return r;
}

/// Integrated dissipation inequality for V(ξ) = ξᵀXξ along a run, with
/// ξ = [x_Ψ; η − η_*] and x_Ψ(0) = 0:
///   V(ξ(0)) − e^{2αT}V(ξ(T)) − ∫₀ᵀ e^{2αt} zᵀ(P⊗I_d)z dt ≥ 0.
/// X must be certified with this Ψ. A scheduled LPV run is covered because X
/// is shared by all vertices.
inline WeightedResidual dissipation_residual(const PsiRealization& psi, const Matrix& x_witness,
                                             const Matrix& p, const Trajectory& tr, const SignalPair& sig,
                                             const Vector& eta_star, double alpha, double horizon) {
  const size_t kt = detail::horizon_steps(sig, horizon);
  const int npsi = psi.ss.nx();
  if (x_witness.rows() != npsi + tr.x.front().size()) throw DimensionError("witness size does not match");
  std::vector<Vector> in;
  for (size_t k = 0; k < sig.size(); ++k) {
    Vector v(sig.ytil[k].size() * 2);
    v << sig.ytil[k], sig.util[k];
    in.push_back(std::move(v));
  }
  auto xs = filter_states(psi.ss.a, psi.ss.b, in, sig.dt, Vector::Zero(npsi));
  Matrix pk = kron_lift(p, psi.d), pabs = pk.cwiseAbs();
  auto xi = [&](size_t k) {
    Vector v(x_witness.rows());
    v << xs[k], tr.x[k] - eta_star;
    return v;
  };
  auto w = [&](size_t k) { return std::exp(2.0 * alpha * k * sig.dt); };
  std::vector<double> val(kt + 1), mag(kt + 1);
  for (size_t k = 0; k <= kt; ++k) {
    Vector z = psi.ss.c * xs[k] + psi.ss.d * in[k];
    Vector za = z.cwiseAbs();
    val[k] = w(k) * z.dot(pk * z);
    mag[k] = w(k) * za.dot(pabs * za);
  }
  Vector x0 = xi(0), xt = xi(kt);
  const double v0 = x0.dot(x_witness * x0), vt = w(kt) * xt.dot(x_witness * xt);
  const double integral = detail::trapezoid([&](size_t k) { return val[k]; }, 0, kt, sig.dt);
  WeightedResidual r;
  r.horizon = horizon;
  r.value = v0 - vt - integral;
  r.scale = std::abs(v0) + std::abs(vt) + detail::trapezoid([&](size_t k) { return mag[k]; }, 0, kt, sig.dt);
  return r;
}

}  // namespace zfcert
