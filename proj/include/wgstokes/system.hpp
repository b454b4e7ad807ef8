#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <string>

#include "wgstokes/assembly.hpp"
#include "wgstokes/errors.hpp"
#include "wgstokes/inner_solver.hpp"

namespace wgstokes {

/// General saddle operator [[A, Bt], [C, -D]] with diagonal D.
class SaddleOperator {
 public:
  SaddleOperator() = default;
  SaddleOperator(SpMat a, SpMat bt, SpMat c, VectorXd d)
      : a_(std::move(a)), bt_(std::move(bt)), c_(std::move(c)), d_(std::move(d)) {
    if (bt_.rows() != a_.rows() || c_.cols() != a_.cols() || bt_.cols() != c_.rows() || d_.size() != c_.rows())
      throw InvalidArgument("inconsistent saddle block sizes");
  }

  Eigen::Index size() const { return a_.rows() + c_.rows(); }
  Eigen::Index n_primal() const { return a_.rows(); }
  Eigen::Index n_dual() const { return c_.rows(); }

  void apply(const VectorXd& x, VectorXd& y) const {
    const Eigen::Index nu = n_primal(), np = n_dual();
    y.resize(size());
    y.head(nu).noalias() = a_ * x.head(nu);
    y.head(nu).noalias() += bt_ * x.tail(np);
    y.tail(np).noalias() = c_ * x.head(nu);
    y.tail(np) -= d_.cwiseProduct(x.tail(np));
  }

  const SpMat& a() const { return a_; }
  const SpMat& bt() const { return bt_; }
  const SpMat& c() const { return c_; }
  const VectorXd& d() const { return d_; }

  Eigen::MatrixXd dense() const {
    const Eigen::Index nu = n_primal(), np = n_dual();
    Eigen::MatrixXd m(size(), size());
    m.topLeftCorner(nu, nu) = Eigen::MatrixXd(a_);
    m.topRightCorner(nu, np) = Eigen::MatrixXd(bt_);
    m.bottomLeftCorner(np, nu) = Eigen::MatrixXd(c_);
    m.bottomRightCorner(np, np) = -Eigen::MatrixXd(d_.asDiagonal());
    return m;
  }

 private:
  SpMat a_, bt_, c_;
  VectorXd d_;
};

enum class D11Mode { One, CellMeasure };

inline std::string to_string(D11Mode m) { return m == D11Mode::One ? "one" : "cell"; }
inline D11Mode parse_d11_mode(const std::string& s) {
  if (s == "one" || s == "1") return D11Mode::One;
  if (s == "cell" || s == "cell_measure") return D11Mode::CellMeasure;
  throw InvalidArgument("d11 mode must be 'one' or 'cell'");
}

/// The pinned, rescaled system
///   [[A, -B0^T], [-B0, -mu D]] (mu u, p) = (b1, mu b2),  D = diag(d11, 0, ..., 0).
struct RegularizedSystem {
  SaddleBlocks blocks;
  double mu = 1.0;
  double d11 = 1.0;
  D11Mode d11_mode = D11Mode::One;
  int pinned_index = 0;
  SaddleOperator op;

  Eigen::Index n_velocity() const { return blocks.A.rows(); }
  Eigen::Index n_pressure() const { return blocks.B0.rows(); }
  Eigen::Index size() const { return n_velocity() + n_pressure(); }

  /// The regularization matrix D (not multiplied by mu).
  VectorXd d_diag() const {
    VectorXd d = VectorXd::Zero(n_pressure());
    d(pinned_index) = d11;
    return d;
  }

  VectorXd rhs() const {
    VectorXd r(size());
    r.head(n_velocity()) = blocks.b1;
    r.tail(n_pressure()) = mu * blocks.b2;
    return r;
  }

  /// Splits a solution of the rescaled system into (u, p).
  std::pair<VectorXd, VectorXd> unscale(const VectorXd& x) const {
    return {x.head(n_velocity()) / mu, x.tail(n_pressure())};
  }

  void apply(const VectorXd& x, VectorXd& y) const { op.apply(x, y); }
};

namespace detail {

inline RegularizedSystem build_regularized(SaddleBlocks blocks, double mu, double d11, D11Mode mode) {
  RegularizedSystem sys;
  sys.mu = mu;
  sys.d11 = d11;
  sys.d11_mode = mode;
  sys.blocks = std::move(blocks);
  VectorXd dvec = VectorXd::Zero(sys.blocks.B0.rows());
  dvec(sys.pinned_index) = mu * d11;
  SpMat bt = -SpMat(sys.blocks.B0.transpose());
  SpMat c = -sys.blocks.B0;
  sys.op = SaddleOperator(sys.blocks.A, std::move(bt), std::move(c), std::move(dvec));
  return sys;
}

}  // namespace detail

/// Builds the rescaled system with d11 = 1 or |K_1| (= Mp(0)).
inline RegularizedSystem regularize_and_scale(SaddleBlocks blocks, double mu, D11Mode mode) {
  if (!(mu > 0.0)) throw InvalidArgument("viscosity must be positive");
  const double d11 = mode == D11Mode::One ? 1.0 : blocks.Mp(0);
  if (!(d11 > 0.0)) throw InvalidArgument("d11 must be positive");
  return detail::build_regularized(std::move(blocks), mu, d11, mode);
}

/// Explicit d11 value.  mu = 0 is accepted so the unregularized limit can be
/// studied; the d11 mode is recorded as `mode` for reporting only.
inline RegularizedSystem regularize_with(SaddleBlocks blocks, double mu, double d11,
                                         D11Mode mode = D11Mode::One) {
  if (!(d11 > 0.0)) throw InvalidArgument("d11 must be positive");
  if (mu < 0.0) throw InvalidArgument("viscosity must be non-negative");
  return detail::build_regularized(std::move(blocks), mu, d11, mode);
}

/// Residual of the original, unregularized equations
/// [[mu A, -B0^T], [-B0, 0]] (u, p) = (b1, b2), relative to ||(b1, b2)||.
inline double unregularized_residual(const RegularizedSystem& sys, const VectorXd& u, const VectorXd& p) {
  const auto& b = sys.blocks;
  const VectorXd r1 = b.b1 - (sys.mu * (b.A * u) - b.B0.transpose() * p);
  const VectorXd r2 = b.b2 + b.B0 * u;
  const double scale = std::sqrt(b.b1.squaredNorm() + b.b2.squaredNorm());
  const double r = std::sqrt(r1.squaredNorm() + r2.squaredNorm());
  return scale > 0.0 ? r / scale : r;
}

/// (mu D + B0 A^{-1} B0^T) p, A^{-1} applied by `inner`.
inline VectorXd schur_apply(const RegularizedSystem& sys, const VectorXd& p, const InnerSolver& inner) {
  const VectorXd t = sys.blocks.B0.transpose() * p;
  VectorXd s;
  inner.solve(t, s);
  VectorXd out = sys.blocks.B0 * s;
  out(sys.pinned_index) += sys.mu * sys.d11 * p(sys.pinned_index);
  return out;
}

}  // namespace wgstokes
