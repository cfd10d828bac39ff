#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "zfcert/error.hpp"
#include "zfcert/state_space.hpp"

namespace zfcert {

enum class VarKind { Symmetric, Scalar, Row };

struct VariableDecl {
  std::string name;
  VarKind kind;
  int n;       // matrix side (Symmetric) or length (Row); 1 for Scalar
  int offset;  // first scalar index
  int count;   // number of scalar unknowns
};

/// Symmetric matrix-valued affine map y ↦ F0 + Σ_i y_i F_i, with the terms
/// stored sparsely by scalar-unknown index.
struct AffineExpr {
  int dim = 0;
  Matrix constant;
  std::map<int, Matrix> terms;

  AffineExpr() = default;
  explicit AffineExpr(int n) : dim(n), constant(Matrix::Zero(n, n)) {}

  void add_term(int index, const Matrix& coef) {
    if (coef.rows() != dim || coef.cols() != dim) throw DimensionError("affine term has wrong size");
    auto it = terms.find(index);
    if (it == terms.end())
      terms.emplace(index, coef);
    else
      it->second += coef;
  }

  Matrix evaluate(const Vector& y) const {
    Matrix v = constant;
    for (const auto& [i, f] : terms) v += y(i) * f;
    return v;
  }
};

enum class Sense { PosDef, NegDef };

struct Constraint {
  std::string name;
  AffineExpr expr;
  Sense sense;
};

/// Semidefinite feasibility problem over named matrix unknowns.
class SdpProblem {
 public:
  const VariableDecl& add_symmetric(const std::string& name, int n) {
    return declare(name, VarKind::Symmetric, n, n * (n + 1) / 2);
  }
  const VariableDecl& add_scalar(const std::string& name) {
    return declare(name, VarKind::Scalar, 1, 1);
  }
  const VariableDecl& add_row(const std::string& name, int n) {
    return declare(name, VarKind::Row, n, n);
  }

  bool has_variable(const std::string& name) const {
    for (const auto& v : vars_)
      if (v.name == name) return true;
    return false;
  }

  const VariableDecl& variable(const std::string& name) const {
    for (const auto& v : vars_)
      if (v.name == name) return v;
    throw InvalidArgument("unknown variable '" + name + "'");
  }

  /// Basis element of a variable for its k-th scalar unknown, in matrix shape
  /// (n×n for Symmetric, 1×1 for Scalar, 1×n for Row).
  static Matrix basis_element(const VariableDecl& v, int k) {
    switch (v.kind) {
      case VarKind::Scalar:
        return Matrix::Ones(1, 1);
      case VarKind::Row: {
        Matrix e = Matrix::Zero(1, v.n);
        e(0, k) = 1.0;
        return e;
      }
      case VarKind::Symmetric: {
        auto [i, j] = sym_position(v.n, k);
        Matrix e = Matrix::Zero(v.n, v.n);
        e(i, j) = 1.0;
        e(j, i) = 1.0;
        return e;
      }
    }
    return Matrix();
  }

  /// Adds map(V) to expr, where map is linear and V ranges over the variable.
  void add_linear(AffineExpr& expr, const std::string& name,
                  const std::function<Matrix(const Matrix&)>& map) const {
    const auto& v = variable(name);
    for (int k = 0; k < v.count; ++k) {
      Matrix f = map(basis_element(v, k));
      if (f.cwiseAbs().maxCoeff() != 0.0) expr.add_term(v.offset + k, f);
    }
  }

  void add_constraint(const std::string& name, AffineExpr expr, Sense sense) {
    if (expr.constant.rows() != expr.dim) throw DimensionError("constraint '" + name + "' malformed");
    for (auto& [i, f] : expr.terms) {
      if (i < 0 || i >= num_unknowns()) throw DimensionError("constraint '" + name + "' bad index");
      if ((f - f.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + f.cwiseAbs().maxCoeff()))
        throw InvalidArgument("constraint '" + name + "' is not symmetric");
      f = 0.5 * (f + f.transpose());
    }
    cons_.push_back({name, std::move(expr), sense});
  }

  int num_unknowns() const { return next_; }
  const std::vector<VariableDecl>& variables() const { return vars_; }
  const std::vector<Constraint>& constraints() const { return cons_; }

  /// Reassembles one variable's value from the flat unknown vector.
  Matrix value(const std::string& name, const Vector& y) const {
    const auto& v = variable(name);
    switch (v.kind) {
      case VarKind::Scalar:
        return Matrix::Constant(1, 1, y(v.offset));
      case VarKind::Row:
        return y.segment(v.offset, v.n).transpose();
      case VarKind::Symmetric: {
        Matrix m(v.n, v.n);
        for (int k = 0; k < v.count; ++k) {
          auto [i, j] = sym_position(v.n, k);
          m(i, j) = m(j, i) = y(v.offset + k);
        }
        return m;
      }
    }
    return Matrix();
  }

 private:
  static std::pair<int, int> sym_position(int n, int k) {
    for (int j = 0; j < n; ++j) {
      if (k < n - j) return {j + k, j};
      k -= n - j;
    }
    throw InvalidArgument("symmetric index out of range");
  }

  const VariableDecl& declare(const std::string& name, VarKind kind, int n, int count) {
    if (n < 0) throw DimensionError("negative variable size");
    if (has_variable(name)) throw InvalidArgument("duplicate variable '" + name + "'");
    vars_.push_back({name, kind, n, next_, count});
    next_ += count;
    return vars_.back();
  }

  std::vector<VariableDecl> vars_;
  std::vector<Constraint> cons_;
  int next_ = 0;
};

enum class FeasibilityStatus { Feasible, Infeasible, NumericalFailure };

inline const char* to_string(FeasibilityStatus s) {
  switch (s) {
    case FeasibilityStatus::Feasible: return "feasible";
    case FeasibilityStatus::Infeasible: return "infeasible";
    case FeasibilityStatus::NumericalFailure: return "numerical-failure";
  }
  return "?";
}

struct ConstraintResidual {
  std::string name;
  double min_eig;  // smallest eigenvalue of the sense-adjusted expression
  double scale;    // largest eigenvalue magnitude, at least 1e-300
  double relative() const { return min_eig / scale; }
};

struct FeasibilityResult {
  FeasibilityStatus status = FeasibilityStatus::NumericalFailure;
  Vector witness;  // flat unknowns, normalized to max-abs ≤ 1; empty unless feasible
  std::vector<ConstraintResidual> residuals;
  double margin = std::numeric_limits<double>::quiet_NaN();  // best common margin found
  double margin_upper = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  std::string message;

  bool feasible() const { return status == FeasibilityStatus::Feasible; }
};

struct SolverOptions {
  double margin_tol = 1e-9;  // a common margin at least this large certifies strict feasibility
  int max_iterations = 120;
  double gap_tol = 1e-10;
  bool verbose = false;

  static SolverOptions from_environment() {
    SolverOptions o;
    if (const char* v = std::getenv("ZFCERT_SOLVER_VERBOSE")) o.verbose = std::string(v) != "0";
    return o;
  }
};

/// Sense-adjusted eigenvalue report of every constraint at y.
inline std::vector<ConstraintResidual> constraint_residuals(const SdpProblem& p, const Vector& y) {
  std::vector<ConstraintResidual> out;
  for (const auto& c : p.constraints()) {
    Matrix v = c.expr.evaluate(y);
    if (c.sense == Sense::NegDef) v = -v;
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (v + v.transpose()), Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    double scale = std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
    out.push_back({c.name, ev(0), scale});
  }
  return out;
}

namespace detail {

// Dual-form standard SDP:  max bᵀy  s.t.  S = C − Σ y_i A_i ⪰ 0, with dense
// semidefinite blocks and one diagonal (LP) block.
struct DenseBlock {
  int n = 0;
  Matrix c;
  Matrix avec;  // n² × m, column i = vec(A_i)
};

struct StandardForm {
  int m = 0;
  Vector b;
  std::vector<DenseBlock> blocks;
  Vector lp_c;
  Matrix lp_a;  // m × nlp
};

inline double min_step(const Matrix& x, const Matrix& dx) {
  Eigen::LLT<Matrix> llt(x);
  if (llt.info() != Eigen::Success) return 0.0;
  Matrix l = llt.matrixL();
  Matrix w = l.triangularView<Eigen::Lower>().solve(dx);
  w = l.triangularView<Eigen::Lower>().solve(w.transpose()).transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (w + w.transpose()), Eigen::EigenvaluesOnly);
  double lmin = es.eigenvalues()(0);
  return lmin >= 0 ? std::numeric_limits<double>::infinity() : -1.0 / lmin;
}

inline double min_step_lp(const Vector& x, const Vector& dx) {
  double s = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < x.size(); ++k)
    if (dx(k) < 0) s = std::min(s, -x(k) / dx(k));
  return s;
}

inline Matrix reshape(const Vector& v, int n) { return Eigen::Map<const Matrix>(v.data(), n, n); }
inline Eigen::Map<const Vector> flat(const Matrix& m) { return {m.data(), m.size()}; }

}  // namespace detail

/// Decides strict feasibility of all constraints by maximizing a common margin
/// t (every constraint shifted by t·I) over the box |unknowns| ≤ 1, t ∈ [−1, 1].
/// A feasible verdict is returned only for a point whose directly evaluated
/// margin reaches options.margin_tol; an infeasible verdict only when a duality
/// bound places the optimum below it.
inline FeasibilityResult check_feasible(const SdpProblem& problem,
                                        SolverOptions opt = SolverOptions::from_environment()) {
  using namespace detail;
  const int nv = problem.num_unknowns();
  const int m = nv + 1;  // last unknown is the margin t
  StandardForm sf;
  sf.m = m;
  sf.b = Vector::Zero(m);
  sf.b(nv) = 1.0;
  for (const auto& c : problem.constraints()) {
    const double s = c.sense == Sense::PosDef ? 1.0 : -1.0;
    DenseBlock blk;
    blk.n = c.expr.dim;
    blk.c = s * c.expr.constant;
    blk.avec = Matrix::Zero(blk.n * blk.n, m);
    for (const auto& [i, f] : c.expr.terms) blk.avec.col(i) = -s * flat(f);
    blk.avec.col(nv) = flat(Matrix::Identity(blk.n, blk.n));
    if (blk.n > 0) sf.blocks.push_back(std::move(blk));
  }
  const int nlp = 2 * m;
  sf.lp_c = Vector::Ones(nlp);
  sf.lp_a = Matrix::Zero(m, nlp);
  for (int i = 0; i < m; ++i) {
    sf.lp_a(i, 2 * i) = 1.0;       // 1 − y_i ≥ 0
    sf.lp_a(i, 2 * i + 1) = -1.0;  // 1 + y_i ≥ 0
  }

  const int nb = static_cast<int>(sf.blocks.size());
  std::vector<Matrix> X(nb), Z(nb);
  double total_dim = nlp;
  for (int k = 0; k < nb; ++k) {
    const auto& blk = sf.blocks[k];
    double anorm = blk.avec.colwise().norm().maxCoeff();
    double xi = std::max({10.0, std::sqrt(double(blk.n)), anorm});
    double eta = std::max({10.0, std::sqrt(double(blk.n)), anorm, blk.c.norm()});
    X[k] = xi * Matrix::Identity(blk.n, blk.n);
    Z[k] = eta * Matrix::Identity(blk.n, blk.n);
    total_dim += blk.n;
  }
  Vector xl = Vector::Constant(nlp, 10.0), zl = Vector::Constant(nlp, 10.0);
  Vector y = Vector::Zero(m);

  FeasibilityResult res;
  const double eps = opt.margin_tol;
  bool homogeneous = true;
  for (const auto& c : problem.constraints())
    if (c.expr.constant.size() && c.expr.constant.cwiseAbs().maxCoeff() != 0.0) homogeneous = false;
  auto direct_margin = [&](const Vector& yy, std::vector<ConstraintResidual>* out) {
    Vector yv = yy.head(nv);
    const double ymax = nv > 0 ? yv.cwiseAbs().maxCoeff() : 0.0;
    if (ymax > 1.0) {
      // Homogeneous problems are scale free, so the box is only a normalization.
      if (!homogeneous) return -std::numeric_limits<double>::infinity();
      yv /= ymax;
    }
    auto r = constraint_residuals(problem, yv);
    double t = std::numeric_limits<double>::infinity();
    for (const auto& c : r) t = std::min(t, c.min_eig);
    if (out) *out = std::move(r);
    return t;
  };
  auto finish_feasible = [&](int it) {
    res.status = FeasibilityStatus::Feasible;
    res.witness = y.head(nv);
    if (homogeneous && nv > 0 && res.witness.cwiseAbs().maxCoeff() > 1.0)
      res.witness /= res.witness.cwiseAbs().maxCoeff();
    res.margin = direct_margin(y, &res.residuals);
    res.iterations = it;
    return res;
  };

  if (problem.constraints().empty() || nb == 0) {
    res.status = FeasibilityStatus::Feasible;
    res.witness = Vector::Zero(nv);
    res.margin = std::numeric_limits<double>::infinity();
    return res;
  }

  auto inner = [](const std::vector<Matrix>& a, const Vector& al, const std::vector<Matrix>& b,
                  const Vector& bl) {
    double s = al.dot(bl);
    for (size_t k = 0; k < a.size(); ++k) s += (a[k].cwiseProduct(b[k])).sum();
    return s;
  };
  // 𝒜(V) for per-block V (V need not be symmetric since every A_i is).
  auto op_a = [&](const std::vector<Matrix>& v, const Vector& vl) {
    Vector r = sf.lp_a * vl;
    for (int k = 0; k < nb; ++k) r += sf.blocks[k].avec.transpose() * flat(v[k]);
    return r;
  };

  double last_pobj = 0.0, last_dobj = 0.0;
  int stalled = 0;
  for (int it = 0; it < opt.max_iterations; ++it) {
    // Verdicts from the current iterate.
    double t_direct = direct_margin(y, nullptr);
    if (t_direct >= eps) return finish_feasible(it);

    std::vector<Matrix> Zinv(nb), Rd(nb);
    bool ok = true;
    for (int k = 0; k < nb; ++k) {
      Eigen::LLT<Matrix> llt(Z[k]);
      if (llt.info() != Eigen::Success) { ok = false; break; }
      Zinv[k] = llt.solve(Matrix::Identity(Z[k].rows(), Z[k].cols()));
      Zinv[k] = 0.5 * (Zinv[k] + Zinv[k].transpose());
      Vector aty = sf.blocks[k].avec * y;
      Rd[k] = sf.blocks[k].c - reshape(aty, sf.blocks[k].n) - Z[k];
      Rd[k] = 0.5 * (Rd[k] + Rd[k].transpose());
    }
    if (!ok) break;
    Vector rdl = sf.lp_c - sf.lp_a.transpose() * y - zl;
    Vector rp = sf.b - op_a(X, xl);

    double pobj = sf.lp_c.dot(xl);
    for (int k = 0; k < nb; ++k) pobj += sf.blocks[k].c.cwiseProduct(X[k]).sum();
    double dobj = sf.b.dot(y);
    // Every dual-feasible point has |y| ≤ 1, so bᵀy ≤ ⟨C,X⟩ + ‖rp‖₁ bounds the optimum.
    double upper = pobj + rp.lpNorm<1>();
    res.margin_upper = upper;
    res.margin = std::max(t_direct, -1.0);
    double mu = inner(X, xl, Z, zl) / total_dim;
    double dnorm = rdl.norm();
    for (int k = 0; k < nb; ++k) dnorm = std::hypot(dnorm, Rd[k].norm());
    double pinf = rp.norm() / (1.0 + sf.b.norm());
    double dinf = dnorm / (1.0 + std::sqrt(double(nlp)));
    double gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
    if (opt.verbose)
      std::fprintf(stderr, "  ipm %3d pobj %+.6e dobj %+.6e pinf %.1e dinf %.1e gap %.1e mu %.1e t %.3e\n",
                   it, pobj, dobj, pinf, dinf, gap, mu, t_direct);
    if (upper < eps) {
      res.status = FeasibilityStatus::Infeasible;
      res.iterations = it;
      res.message = "duality bound below margin tolerance";
      return res;
    }
    // No visible progress: the iterate sits on a numerically degenerate optimum.
    if (it > 0 && std::abs(pobj - last_pobj) <= 1e-12 * (1.0 + std::abs(pobj)) + 1e-14 &&
        std::abs(dobj - last_dobj) <= 1e-9 * (1.0 + std::abs(dobj)) + 1e-14)
      ++stalled;
    else
      stalled = 0;
    last_pobj = pobj;
    last_dobj = dobj;
    if (stalled >= 4) break;
    if (gap < opt.gap_tol && pinf < opt.gap_tol && dinf < opt.gap_tol) {
      // Converged with an optimum that could not be verified above tolerance:
      // the margin is nonpositive or too thin to claim strict feasibility.
      res.status = FeasibilityStatus::Infeasible;
      res.iterations = it;
      res.message = "optimal margin below tolerance";
      return res;
    }

    // Schur complement M_ij = ⟨A_i, X A_j Z⁻¹⟩.
    Matrix M = sf.lp_a * (xl.cwiseQuotient(zl)).asDiagonal() * sf.lp_a.transpose();
    for (int k = 0; k < nb; ++k) {
      const auto& blk = sf.blocks[k];
      Matrix g(blk.n * blk.n, m);
      for (int i = 0; i < m; ++i) {
        if (blk.avec.col(i).squaredNorm() == 0.0) {
          g.col(i).setZero();
          continue;
        }
        Matrix gi = X[k] * reshape(blk.avec.col(i), blk.n) * Zinv[k];
        g.col(i) = flat(gi);
      }
      M.noalias() += blk.avec.transpose() * g;
    }
    M = 0.5 * (M + M.transpose());
    Eigen::LLT<Matrix> mfac(M);
    if (mfac.info() != Eigen::Success) {
      double reg = 1e-14 * M.diagonal().cwiseAbs().maxCoeff();
      M.diagonal().array() += reg;
      mfac.compute(M);
      if (mfac.info() != Eigen::Success) break;
    }

    auto solve_dir = [&](double sigma_mu, const std::vector<Matrix>* cx, const Vector* cxl,
                         std::vector<Matrix>& dX, Vector& dxl, std::vector<Matrix>& dZ, Vector& dzl,
                         Vector& dy) {
      // rhs = b − σμ𝒜(Z⁻¹) + 𝒜(X Rd Z⁻¹) [+ 𝒜(ΔXa ΔZa Z⁻¹)]
      std::vector<Matrix> v(nb);
      Vector vl = -sigma_mu * zl.cwiseInverse() + xl.cwiseProduct(rdl).cwiseQuotient(zl);
      if (cxl) vl += cxl->cwiseQuotient(zl);
      for (int k = 0; k < nb; ++k) {
        v[k] = -sigma_mu * Zinv[k] + X[k] * Rd[k] * Zinv[k];
        if (cx) v[k] += (*cx)[k] * Zinv[k];
      }
      Vector rhs = sf.b + op_a(v, vl);
      dy = mfac.solve(rhs);
      dzl = rdl - sf.lp_a.transpose() * dy;
      dxl = -xl + sigma_mu * zl.cwiseInverse() - xl.cwiseProduct(dzl).cwiseQuotient(zl);
      if (cxl) dxl -= cxl->cwiseQuotient(zl);
      dX.resize(nb);
      dZ.resize(nb);
      for (int k = 0; k < nb; ++k) {
        const auto& blk = sf.blocks[k];
        Vector aty = blk.avec * dy;
        dZ[k] = Rd[k] - reshape(aty, blk.n);
        dZ[k] = 0.5 * (dZ[k] + dZ[k].transpose());
        Matrix dx = -X[k] + sigma_mu * Zinv[k] - X[k] * dZ[k] * Zinv[k];
        if (cx) dx -= (*cx)[k] * Zinv[k];
        dX[k] = 0.5 * (dx + dx.transpose());
      }
    };
    auto steps = [&](const std::vector<Matrix>& dX, const Vector& dxl, const std::vector<Matrix>& dZ,
                     const Vector& dzl) {
      double ap = min_step_lp(xl, dxl), ad = min_step_lp(zl, dzl);
      for (int k = 0; k < nb; ++k) {
        ap = std::min(ap, min_step(X[k], dX[k]));
        ad = std::min(ad, min_step(Z[k], dZ[k]));
      }
      return std::pair<double, double>{ap, ad};
    };

    std::vector<Matrix> dXa, dZa;
    Vector dxla, dzla, dya;
    solve_dir(0.0, nullptr, nullptr, dXa, dxla, dZa, dzla, dya);
    auto [apa, ada] = steps(dXa, dxla, dZa, dzla);
    apa = std::min(1.0, apa);
    ada = std::min(1.0, ada);
    double mu_aff = 0.0;
    {
      std::vector<Matrix> xa(nb), za(nb);
      for (int k = 0; k < nb; ++k) {
        xa[k] = X[k] + apa * dXa[k];
        za[k] = Z[k] + ada * dZa[k];
      }
      mu_aff = inner(xa, xl + apa * dxla, za, zl + ada * dzla) / total_dim;
    }
    double sigma = std::clamp(std::pow(mu_aff / mu, 3.0), 0.0, 1.0);

    std::vector<Matrix> corr(nb);
    for (int k = 0; k < nb; ++k) corr[k] = dXa[k] * dZa[k];
    Vector corrl = dxla.cwiseProduct(dzla);
    std::vector<Matrix> dX, dZ;
    Vector dxl, dzl, dy;
    solve_dir(sigma * mu, &corr, &corrl, dX, dxl, dZ, dzl, dy);
    auto [ap, ad] = steps(dX, dxl, dZ, dzl);
    const double gamma = 0.9 + 0.08 * std::min({1.0, apa, ada});
    ap = std::min(1.0, gamma * ap);
    ad = std::min(1.0, gamma * ad);
    if (!(ap > 1e-12) && !(ad > 1e-12)) break;

    for (int k = 0; k < nb; ++k) {
      X[k] += ap * dX[k];
      Z[k] += ad * dZ[k];
    }
    xl += ap * dxl;
    zl += ad * dzl;
    y += ad * dy;
    res.iterations = it + 1;
  }
  if (direct_margin(y, nullptr) >= eps) return finish_feasible(res.iterations);
  if (std::max(last_pobj, last_dobj) < eps) {
    // Both objective estimates put the optimal margin below tolerance; the
    // point cannot be certified either way, so no feasibility claim is made.
    res.status = FeasibilityStatus::Infeasible;
    res.message = "iteration stalled with optimal margin below tolerance";
    return res;
  }
  res.status = FeasibilityStatus::NumericalFailure;
  res.message = "interior-point iteration stalled without a verdict";
  return res;
}

}  // namespace zfcert
