#pragma once

#include <cmath>
#include <string>

#include "zfcert/sdp.hpp"
#include "zfcert/state_space.hpp"

namespace zfcert {

enum class MultiplierClass { CircleCriterion, CausalZF, AntiCausalZF, FullZF };

/// Which kernel halves must carry a nonnegativity certificate. `Published`
/// certifies the one-sided classes but leaves both halves of the full class
/// sign-free, which is what reproduces the reference data; `Strict` certifies
/// every active half.
enum class PositivityPolicy { Published, Strict };

struct MultiplierConfig {
  MultiplierClass cls = MultiplierClass::FullZF;
  int order = 1;
  double lambda = -1.0;
  PositivityPolicy positivity = PositivityPolicy::Published;

  bool uses_p1() const {
    return cls == MultiplierClass::AntiCausalZF || cls == MultiplierClass::FullZF;
  }
  bool uses_p3() const {
    return cls == MultiplierClass::CausalZF || cls == MultiplierClass::FullZF;
  }
  bool certifies_p1() const {
    return uses_p1() && (cls != MultiplierClass::FullZF || positivity == PositivityPolicy::Strict);
  }
  bool certifies_p3() const {
    return uses_p3() && (cls != MultiplierClass::FullZF || positivity == PositivityPolicy::Strict);
  }
};

inline const char* to_string(MultiplierClass c) {
  switch (c) {
    case MultiplierClass::CircleCriterion: return "cc";
    case MultiplierClass::CausalZF: return "causal";
    case MultiplierClass::AntiCausalZF: return "anticausal";
    case MultiplierClass::FullZF: return "zf";
  }
  return "?";
}

inline MultiplierClass parse_multiplier_class(const std::string& s) {
  if (s == "cc" || s == "circle") return MultiplierClass::CircleCriterion;
  if (s == "causal") return MultiplierClass::CausalZF;
  if (s == "anticausal" || s == "anti-causal") return MultiplierClass::AntiCausalZF;
  if (s == "zf" || s == "full") return MultiplierClass::FullZF;
  throw InvalidArgument("unknown multiplier class '" + s + "' (expected cc, causal, anticausal, zf)");
}

struct ZfBasis {
  int order = 1;
  double lambda = -1.0;
  Matrix a_nu, b_nu, r_nu;
  /// Single input, `order` outputs s^k/(s-λ)^(order-1), k = 0..order-1.
  StateSpace psi_tilde;
};

inline double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

inline ZfBasis build_basis(int order, double lambda) {
  if (order < 1) throw InvalidArgument("multiplier order must be at least 1");
  if (!(lambda < 0.0)) throw InvalidArgument("multiplier pole lambda must be negative");
  ZfBasis z;
  z.order = order;
  z.lambda = lambda;
  z.a_nu = lambda * Matrix::Identity(order, order);
  for (int i = 1; i < order; ++i) z.a_nu(i, i - 1) = 1.0;
  z.b_nu = Matrix::Zero(order, 1);
  z.b_nu(0, 0) = 1.0;
  z.r_nu = Matrix::Zero(order, order);
  for (int k = 0; k < order; ++k) z.r_nu(k, k) = 1.0 / factorial(k);

  // Controllable canonical form of 1/(s-λ)^n, n = order-1. State j holds
  // s^j/(s-λ)^n; the top power is split into feedthrough plus state readout.
  const int n = order - 1;
  Vector coef = Vector::Zero(n + 1);  // (s-λ)^n = Σ coef_k s^k
  coef(0) = 1.0;
  for (int j = 0; j < n; ++j) {
    Vector next = Vector::Zero(n + 1);
    for (int k = 0; k <= j; ++k) {
      next(k + 1) += coef(k);
      next(k) -= lambda * coef(k);
    }
    coef = next;
  }
  Matrix a = Matrix::Zero(n, n), b = Matrix::Zero(n, 1), c = Matrix::Zero(order, n),
         d = Matrix::Zero(order, 1);
  for (int j = 0; j + 1 < n; ++j) a(j, j + 1) = 1.0;
  if (n > 0) {
    for (int k = 0; k < n; ++k) a(n - 1, k) = -coef(k);
    b(n - 1, 0) = 1.0;
  }
  for (int k = 0; k < n; ++k) c(k, k) = 1.0;
  for (int k = 0; k < n; ++k) c(n, k) = -coef(k);
  d(n, 0) = 1.0;
  z.psi_tilde = StateSpace(a, b, c, d);
  return z;
}

inline ZfBasis build_basis(const MultiplierConfig& cfg) { return build_basis(cfg.order, cfg.lambda); }

/// A_ν⁻¹B_ν by forward substitution; the L1 constraint reads
/// H + (P₁+P₃)·l1_row(basis) ≥ 0.
inline Vector l1_row(const ZfBasis& z) {
  Vector v(z.order);
  v(0) = 1.0 / z.lambda;
  for (int k = 1; k < z.order; ++k) v(k) = -v(k - 1) / z.lambda;
  return v;
}

/// Kernel-positivity form in (P, X): Wᵀ[[0,X,0],[X,0,0],[0,0,diag(P R)]]W with
/// W = [I 0; Ã B̃; C̃ D̃]. Positive definiteness certifies that
/// Σ_k P_k t^k/k! stays nonnegative on t ≥ 0. Linear in (p, x).
inline Matrix positivity_form(const ZfBasis& z, const Matrix& p, const Matrix& x) {
  const auto& s = z.psi_tilde;
  const int n = s.nx();
  if (p.size() != z.order) throw DimensionError("positivity_form: P has wrong length");
  if (x.rows() != n || x.cols() != n) throw DimensionError("positivity_form: X has wrong size");
  Matrix top(n, n + 1), bot(n, n + 1), out(z.order, n + 1);
  top << Matrix::Identity(n, n), Matrix::Zero(n, 1);
  bot << s.a, s.b;
  out << s.c, s.d;
  Vector w(z.order);
  for (int k = 0; k < z.order; ++k) w(k) = p(k) * z.r_nu(k, k);
  Matrix f = top.transpose() * x * bot + bot.transpose() * x * top +
             out.transpose() * w.asDiagonal() * out;
  return 0.5 * (f + f.transpose());
}

/// Registers `form(P, X) ⪰ margin` over the named row and symmetric unknowns.
inline void add_positivity_constraint(SdpProblem& prob, const ZfBasis& z, const std::string& p_name,
                                      const std::string& x_name, const std::string& cname) {
  const int n = z.order - 1;
  AffineExpr e(z.order);
  Matrix zero_x = Matrix::Zero(n, n);
  prob.add_linear(e, p_name, [&](const Matrix& p) { return positivity_form(z, p, zero_x); });
  if (n > 0) {
    Matrix zero_p = Matrix::Zero(1, z.order);
    prob.add_linear(e, x_name, [&](const Matrix& x) { return positivity_form(z, zero_p, x); });
  }
  prob.add_constraint(cname, std::move(e), Sense::PosDef);
}

/// Q_ν(t) = e^{A_ν t} B_ν = e^{λt}·R_ν·[1, t, …, t^{ν−1}]ᵀ.
inline Vector q_eval(const ZfBasis& z, double t) {
  Vector q(z.order);
  double tk = 1.0;
  for (int k = 0; k < z.order; ++k) {
    q(k) = std::exp(z.lambda * t) * z.r_nu(k, k) * tk;
    tk *= t;
  }
  return q;
}

/// Kernel h(t) = P₁Q(−t) for t < 0 and P₃Q(t) for t ≥ 0.
inline double h_eval(const ZfBasis& z, const Matrix& p1, const Matrix& p3, double t) {
  if (p1.size() != z.order || p3.size() != z.order) throw DimensionError("h_eval: P has wrong length");
  const Matrix& p = t < 0 ? p1 : p3;
  Vector q = q_eval(z, std::abs(t));
  return Eigen::Map<const Vector>(p.data(), z.order).dot(q);
}

}  // namespace zfcert
