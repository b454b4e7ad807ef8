#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <chrono>
#include <cmath>
#include <concepts>
#include <limits>
#include <ostream>
#include <vector>

#include "wgstokes/errors.hpp"

namespace wgstokes {

using Eigen::VectorXd;

/// Anything that maps a vector to a vector of the same length.
template <class T>
concept LinearOperator = requires(const T& op, const VectorXd& x, VectorXd& y) {
  { op.apply(x, y) };
  { op.size() } -> std::convertible_to<Eigen::Index>;
};

/// Wraps a (sparse or dense) matrix.
template <class Matrix>
class MatrixOperator {
 public:
  explicit MatrixOperator(const Matrix& m) : m_(&m) {}
  void apply(const VectorXd& x, VectorXd& y) const { y.noalias() = (*m_) * x; }
  Eigen::Index size() const { return m_->rows(); }

 private:
  const Matrix* m_;
};

class IdentityOperator {
 public:
  explicit IdentityOperator(Eigen::Index n) : n_(n) {}
  void apply(const VectorXd& x, VectorXd& y) const { y = x; }
  Eigen::Index size() const { return n_; }

 private:
  Eigen::Index n_;
};

/// Outcome of an iterative solve.  residual_history[0] refers to the initial
/// guess, residual_history[k] to iterate k; entries are relative to the
/// initial residual in the solver's own norm (preconditioned for MINRES and
/// left-preconditioned GMRES).
struct SolveReport {
  int iterations = 0;
  std::vector<double> residual_history;
  std::vector<double> true_residual_history;  // ||b - A x_k|| / ||b||, may be empty
  bool converged = false;
  bool stagnated = false;
  long inner_iterations_total = 0;
  double final_true_residual = std::numeric_limits<double>::quiet_NaN();
  double wall_time = 0.0;  // seconds
};

/// CSV: iteration,preconditioned_residual,true_residual
inline void write_residual_csv(std::ostream& os, const SolveReport& rep) {
  os << "iteration,preconditioned_residual,true_residual\n";
  os.precision(10);
  for (std::size_t k = 0; k < rep.residual_history.size(); ++k) {
    os << k << ',' << rep.residual_history[k] << ',';
    if (k < rep.true_residual_history.size()) os << rep.true_residual_history[k];
    os << '\n';
  }
}

struct KrylovOptions {
  double tol = 1e-9;
  int maxit = 1000;
  bool record_true_residual = true;
};

namespace detail {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

template <LinearOperator Op>
double true_relative_residual(const Op& op, const VectorXd& b, const VectorXd& x, double bnorm) {
  VectorXd ax(b.size());
  op.apply(x, ax);
  const double r = (b - ax).norm();
  return bnorm > 0.0 ? r / bnorm : r;
}

}  // namespace detail

/// Preconditioned conjugate gradients.  Stops on ||b - A x|| <= tol ||b||.
/// Throws NotPositiveDefinite on non-positive curvature.
template <LinearOperator Op, LinearOperator Prec>
SolveReport pcg(const Op& op, const Prec& prec, const VectorXd& b, VectorXd& x,
                const KrylovOptions& opt = {}) {
  if (!(opt.tol > 0.0)) throw InvalidArgument("tolerance must be positive");
  detail::Stopwatch clock;
  SolveReport rep;
  const Eigen::Index n = b.size();
  if (x.size() != n) x = VectorXd::Zero(n);
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    x.setZero();
    rep.converged = true;
    rep.residual_history = {0.0};
    rep.final_true_residual = 0.0;
    return rep;
  }
  VectorXd r(n), z(n), p(n), q(n);
  op.apply(x, q);
  r = b - q;
  double res = r.norm() / bnorm;
  rep.residual_history.push_back(res);
  if (res <= opt.tol) rep.converged = true;
  double rho_prev = 0.0;
  for (int it = 0; it < opt.maxit && !rep.converged; ++it) {
    prec.apply(r, z);
    const double rho = r.dot(z);
    if (it == 0)
      p = z;
    else
      p = z + (rho / rho_prev) * p;
    op.apply(p, q);
    const double curv = p.dot(q);
    if (!(curv > 0.0)) throw NotPositiveDefinite("negative curvature detected in CG");
    const double alpha = rho / curv;
    x += alpha * p;
    r -= alpha * q;
    rho_prev = rho;
    ++rep.iterations;
    res = r.norm() / bnorm;
    rep.residual_history.push_back(res);
    if (res <= opt.tol) rep.converged = true;
  }
  rep.final_true_residual = detail::true_relative_residual(op, b, x, bnorm);
  rep.wall_time = clock.seconds();
  return rep;
}

/// Preconditioned MINRES (Lanczos in the M^{-1} inner product with Givens
/// QR).  `prec` applies M^{-1} and must be SPD.  Stops when
/// ||r_k||_{M^{-1}} <= tol ||r_0||_{M^{-1}}.
template <LinearOperator Op, LinearOperator Prec>
SolveReport minres(const Op& op, const Prec& prec, const VectorXd& b, VectorXd& x,
                   const KrylovOptions& opt = {}) {
  if (!(opt.tol > 0.0)) throw InvalidArgument("tolerance must be positive");
  detail::Stopwatch clock;
  SolveReport rep;
  const Eigen::Index n = b.size();
  if (x.size() != n) x = VectorXd::Zero(n);
  const double bnorm = b.norm();

  VectorXd v_prev = VectorXd::Zero(n), v(n), v_next(n), z(n), z_next(n), az(n);
  VectorXd w_prev = VectorXd::Zero(n), w = VectorXd::Zero(n), w_next(n);
  op.apply(x, az);
  v = b - az;
  prec.apply(v, z);
  double gamma2 = v.dot(z);
  if (gamma2 < 0.0) throw NotPositiveDefinite("MINRES preconditioner is not positive definite");
  double gamma = std::sqrt(gamma2);
  const double gamma0 = gamma;
  rep.residual_history.push_back(gamma0 > 0.0 ? 1.0 : 0.0);
  if (opt.record_true_residual) rep.true_residual_history.push_back(detail::true_relative_residual(op, b, x, bnorm));
  if (gamma0 == 0.0) {
    rep.converged = true;
    rep.final_true_residual = rep.true_residual_history.empty()
                                  ? detail::true_relative_residual(op, b, x, bnorm)
                                  : rep.true_residual_history.back();
    return rep;
  }

  double gamma_prev = 1.0;
  double eta = gamma;
  double s_prev = 0.0, s = 0.0, c_prev = 1.0, c = 1.0;
  for (int j = 1; j <= opt.maxit; ++j) {
    z /= gamma;
    op.apply(z, az);
    const double delta = az.dot(z);
    v_next = az - (delta / gamma) * v - (gamma / gamma_prev) * v_prev;
    prec.apply(v_next, z_next);
    double gamma_next2 = v_next.dot(z_next);
    if (gamma_next2 < 0.0) {
      if (-gamma_next2 > 1e-24 * gamma0 * gamma0)
        throw NotPositiveDefinite("MINRES preconditioner is not positive definite");
      gamma_next2 = 0.0;
    }
    const double gamma_next = std::sqrt(gamma_next2);
    const double alpha0 = c * delta - c_prev * s * gamma;
    const double alpha1 = std::hypot(alpha0, gamma_next);
    const double alpha2 = s * delta + c_prev * c * gamma;
    const double alpha3 = s_prev * gamma;
    if (alpha1 == 0.0) throw SolverBreakdown(j, "MINRES breakdown: singular tridiagonal factor");
    const double c_next = alpha0 / alpha1;
    const double s_next = gamma_next / alpha1;
    w_next = (z - alpha3 * w_prev - alpha2 * w) / alpha1;
    x += (c_next * eta) * w_next;
    eta = -s_next * eta;

    rep.iterations = j;
    const double rel = std::abs(eta) / gamma0;
    rep.residual_history.push_back(rel);
    if (opt.record_true_residual) rep.true_residual_history.push_back(detail::true_relative_residual(op, b, x, bnorm));
    if (rel <= opt.tol || gamma_next == 0.0) {
      rep.converged = true;
      break;
    }
    v_prev.swap(v);
    v.swap(v_next);
    z.swap(z_next);
    w_prev.swap(w);
    w.swap(w_next);
    gamma_prev = gamma;
    gamma = gamma_next;
    c_prev = c;
    c = c_next;
    s_prev = s;
    s = s_next;
  }
  rep.final_true_residual = detail::true_relative_residual(op, b, x, bnorm);
  rep.wall_time = clock.seconds();
  return rep;
}

enum class PreconditionSide { Left, Right };

struct GmresOptions : KrylovOptions {
  int restart = 30;
  PreconditionSide side = PreconditionSide::Left;
};

/// Restarted GMRES with modified Gram-Schmidt (plus one reorthogonalization
/// pass when the loss of orthogonality exceeds 1e-8).  Left preconditioning
/// minimizes ||M^{-1}(b - A x)||, right preconditioning ||b - A x||.
template <LinearOperator Op, LinearOperator Prec>
SolveReport gmres(const Op& op, const Prec& prec, const VectorXd& b, VectorXd& x,
                  const GmresOptions& opt = {}) {
  if (!(opt.tol > 0.0)) throw InvalidArgument("tolerance must be positive");
  if (opt.restart < 1) throw InvalidArgument("restart must be >= 1");
  detail::Stopwatch clock;
  SolveReport rep;
  const Eigen::Index n = b.size();
  if (x.size() != n) x = VectorXd::Zero(n);
  const bool left = opt.side == PreconditionSide::Left;
  const double bnorm = b.norm();

  VectorXd tmp(n), tmp2(n);
  auto residual = [&](VectorXd& r) {
    op.apply(x, tmp);
    if (left) {
      tmp2 = b - tmp;
      prec.apply(tmp2, r);
    } else {
      r = b - tmp;
    }
  };
  double ref;  // norm of the (preconditioned) right-hand side
  if (left) {
    prec.apply(b, tmp);
    ref = tmp.norm();
  } else {
    ref = bnorm;
  }
  VectorXd r(n);
  residual(r);
  double beta = r.norm();
  if (ref == 0.0) ref = 1.0;
  rep.residual_history.push_back(beta / ref);
  if (opt.record_true_residual) rep.true_residual_history.push_back(detail::true_relative_residual(op, b, x, bnorm));
  if (beta / ref <= opt.tol) {
    rep.converged = true;
    rep.final_true_residual = detail::true_relative_residual(op, b, x, bnorm);
    return rep;
  }

  const int m = opt.restart;
  Eigen::MatrixXd V(n, m + 1);
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m + 1, m);
  VectorXd cs(m), sn(m), g(m + 1), w(n);
  bool done = false;
  while (!done && rep.iterations < opt.maxit) {
    const double cycle_start = beta;
    V.col(0) = r / beta;
    g.setZero();
    g(0) = beta;
    H.setZero();
    int j = 0;
    bool happy = false;
    for (; j < m && rep.iterations < opt.maxit; ++j) {
      if (left) {
        op.apply(V.col(j), tmp);
        prec.apply(tmp, w);
      } else {
        prec.apply(V.col(j), tmp);
        op.apply(tmp, w);
      }
      const double wnorm0 = w.norm();
      for (int i = 0; i <= j; ++i) {
        H(i, j) = V.col(i).dot(w);
        w -= H(i, j) * V.col(i);
      }
      double wnorm = w.norm();
      if (wnorm > 0.0) {
        double loss = 0.0;
        for (int i = 0; i <= j; ++i) loss = std::max(loss, std::abs(V.col(i).dot(w)) / wnorm);
        if (loss > 1e-8) {
          for (int i = 0; i <= j; ++i) {
            const double h = V.col(i).dot(w);
            H(i, j) += h;
            w -= h * V.col(i);
          }
          wnorm = w.norm();
        }
      }
      H(j + 1, j) = wnorm;
      happy = wnorm <= 1e-14 * wnorm0;
      if (!happy) V.col(j + 1) = w / wnorm;
      for (int i = 0; i < j; ++i) {
        const double t = cs(i) * H(i, j) + sn(i) * H(i + 1, j);
        H(i + 1, j) = -sn(i) * H(i, j) + cs(i) * H(i + 1, j);
        H(i, j) = t;
      }
      const double rho = std::hypot(H(j, j), H(j + 1, j));
      if (rho == 0.0) throw SolverBreakdown(rep.iterations + 1, "GMRES breakdown: singular Hessenberg matrix");
      cs(j) = H(j, j) / rho;
      sn(j) = H(j + 1, j) / rho;
      H(j, j) = rho;
      H(j + 1, j) = 0.0;
      g(j + 1) = -sn(j) * g(j);
      g(j) = cs(j) * g(j);
      ++rep.iterations;
      const double rel = std::abs(g(j + 1)) / ref;
      rep.residual_history.push_back(rel);
      if (opt.record_true_residual) {
        // form the current iterate without disturbing the cycle
        VectorXd y = H.topLeftCorner(j + 1, j + 1).triangularView<Eigen::Upper>().solve(g.head(j + 1));
        VectorXd dx = V.leftCols(j + 1) * y;
        VectorXd xk = x;
        if (left) {
          xk += dx;
        } else {
          prec.apply(dx, tmp2);
          xk += tmp2;
        }
        rep.true_residual_history.push_back(detail::true_relative_residual(op, b, xk, bnorm));
      }
      if (rel <= opt.tol || happy) {
        ++j;
        done = true;
        break;
      }
    }
    const VectorXd y = H.topLeftCorner(j, j).triangularView<Eigen::Upper>().solve(g.head(j));
    const VectorXd dx = V.leftCols(j) * y;
    if (left) {
      x += dx;
    } else {
      prec.apply(dx, tmp2);
      x += tmp2;
    }
    if (done) {
      rep.converged = true;
      break;
    }
    residual(r);
    beta = r.norm();
    if (beta / ref <= opt.tol) {
      rep.converged = true;
      break;
    }
    if (j == m && beta >= cycle_start * (1.0 - 1e-12)) {
      rep.stagnated = true;
      break;
    }
  }
  rep.final_true_residual = detail::true_relative_residual(op, b, x, bnorm);
  rep.wall_time = clock.seconds();
  return rep;
}

}  // namespace wgstokes
