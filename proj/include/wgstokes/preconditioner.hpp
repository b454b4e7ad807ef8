#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <memory>
#include <string>

#include "wgstokes/errors.hpp"
#include "wgstokes/inner_solver.hpp"
#include "wgstokes/system.hpp"

namespace wgstokes {

enum class BlockKind { Diagonal, Lower, Upper };

/// Inexact block Schur-complement preconditioner for [[A, Bt], [C, -D]]:
///   Diagonal  [[A^, 0], [0, +-S^]]
///   Lower     [[A^, 0], [C, +-S^]]
///   Upper     [[A^, Bt], [0, +-S^]]
/// with A^ given by an InnerSolver and S^ diagonal (exactly inverted).
/// apply() computes z = P^{-1} r.
class BlockPreconditioner {
 public:
  BlockPreconditioner(BlockKind kind, int sign, std::shared_ptr<const InnerSolver> inner, VectorXd s_hat,
                      SpMat c = {}, SpMat bt = {})
      : kind_(kind), sign_(sign), inner_(std::move(inner)), s_hat_(std::move(s_hat)), c_(std::move(c)),
        bt_(std::move(bt)) {
    if (sign_ != 1 && sign_ != -1) throw InvalidArgument("preconditioner sign must be +1 or -1");
    if (!inner_) throw InvalidArgument("missing inner solver");
    if ((s_hat_.array() == 0.0).any()) throw InvalidArgument("Schur approximation must be nonsingular");
    if (kind_ == BlockKind::Lower && (c_.rows() != s_hat_.size() || c_.cols() != inner_->size()))
      throw InvalidArgument("lower preconditioner needs the (2,1) block");
    if (kind_ == BlockKind::Upper && (bt_.cols() != s_hat_.size() || bt_.rows() != inner_->size()))
      throw InvalidArgument("upper preconditioner needs the (1,2) block");
  }

  Eigen::Index size() const { return inner_->size() + s_hat_.size(); }
  BlockKind kind() const { return kind_; }
  int sign() const { return sign_; }
  const InnerSolver& inner() const { return *inner_; }
  const VectorXd& s_hat() const { return s_hat_; }

  void apply(const VectorXd& r, VectorXd& z) const {
    const Eigen::Index nu = inner_->size(), np = s_hat_.size();
    z.resize(nu + np);
    VectorXd z1;
    switch (kind_) {
      case BlockKind::Diagonal:
        inner_->solve(r.head(nu), z1);
        z.head(nu) = z1;
        z.tail(np) = sign_ * r.tail(np).cwiseQuotient(s_hat_);
        break;
      case BlockKind::Lower: {
        inner_->solve(r.head(nu), z1);
        z.head(nu) = z1;
        const VectorXd t = r.tail(np) - c_ * z1;
        z.tail(np) = sign_ * t.cwiseQuotient(s_hat_);
        break;
      }
      case BlockKind::Upper: {
        const VectorXd z2 = sign_ * r.tail(np).cwiseQuotient(s_hat_);
        const VectorXd t = r.head(nu) - bt_ * z2;
        inner_->solve(t, z1);
        z.head(nu) = z1;
        z.tail(np) = z2;
        break;
      }
    }
  }

  /// The preconditioner matrix P itself (A^ taken as `a`), for dense checks.
  Eigen::MatrixXd dense(const Eigen::MatrixXd& a) const {
    const Eigen::Index nu = inner_->size(), np = s_hat_.size();
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(nu + np, nu + np);
    p.topLeftCorner(nu, nu) = a;
    p.bottomRightCorner(np, np) = sign_ * Eigen::MatrixXd(s_hat_.asDiagonal());
    if (kind_ == BlockKind::Lower) p.bottomLeftCorner(np, nu) = Eigen::MatrixXd(c_);
    if (kind_ == BlockKind::Upper) p.topRightCorner(nu, np) = Eigen::MatrixXd(bt_);
    return p;
  }

 private:
  BlockKind kind_;
  int sign_;
  std::shared_ptr<const InnerSolver> inner_;
  VectorXd s_hat_;
  SpMat c_, bt_;
};

/// Preconditioner names used on the command line.
struct PrecondChoice {
  BlockKind kind = BlockKind::Diagonal;
  int sign = 1;
  bool none = false;
};

inline PrecondChoice parse_precond(const std::string& s) {
  if (s == "pd") return {BlockKind::Diagonal, 1, false};
  if (s == "pl-") return {BlockKind::Lower, -1, false};
  if (s == "pl+") return {BlockKind::Lower, 1, false};
  if (s == "pu-") return {BlockKind::Upper, -1, false};
  if (s == "pu+") return {BlockKind::Upper, 1, false};
  if (s == "none") return {BlockKind::Diagonal, 1, true};
  throw InvalidArgument("preconditioner must be one of pd, pl-, pl+, pu-, pu+, none");
}

inline std::string to_string(const PrecondChoice& p) {
  if (p.none) return "none";
  switch (p.kind) {
    case BlockKind::Diagonal: return "pd";
    case BlockKind::Lower: return p.sign < 0 ? "pl-" : "pl+";
    case BlockKind::Upper: return p.sign < 0 ? "pu-" : "pu+";
  }
  return "?";
}

/// Preconditioner for the regularized Stokes system with S^ = Mp.
inline BlockPreconditioner make_preconditioner(const RegularizedSystem& sys, BlockKind kind, int sign,
                                               std::shared_ptr<const InnerSolver> inner) {
  return BlockPreconditioner(kind, sign, std::move(inner), sys.blocks.Mp, sys.op.c(), sys.op.bt());
}

}  // namespace wgstokes
