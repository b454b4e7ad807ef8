#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "wgstokes/errors.hpp"
#include "wgstokes/inner_solver.hpp"
#include "wgstokes/system.hpp"

namespace wgstokes {

using Eigen::MatrixXd;

/// Total sizes above which dense eigensolves give way to Lanczos iteration.
inline constexpr Eigen::Index kDenseEigenLimit = 6000;

/// Scalars that enter every bound: d, mu, d11, |K_1| and |Omega|.
struct ProblemScales {
  int dim = 2;
  double mu = 0.0;
  double d11 = 1.0;
  double k1 = 1.0;
  double omega = 1.0;

  /// mu d11 / |K_1|, the size of the regularization perturbation.
  double eps() const { return mu * d11 / k1; }
  /// First-order value of the smallest Schur eigenvalue, mu d11 / |Omega|.
  double lambda1_first_order() const { return mu * d11 / omega; }
};

inline ProblemScales scales_of(const RegularizedSystem& sys) {
  ProblemScales s;
  s.dim = sys.blocks.dim;
  s.mu = sys.mu;
  s.d11 = sys.d11;
  s.k1 = sys.blocks.Mp(sys.pinned_index);
  s.omega = sys.blocks.Mp.sum();
  return s;
}

/// Dense B0 A^{-1} B0^T, one inner solve per pressure unknown.
inline MatrixXd dense_schur_product(const SaddleBlocks& blk, const InnerSolver& inner) {
  const Eigen::Index np = blk.B0.rows();
  const SpMat bt = blk.B0.transpose();
  MatrixXd g(np, np);
  VectorXd e = VectorXd::Zero(np), s;
  for (Eigen::Index j = 0; j < np; ++j) {
    e(j) = 1.0;
    const VectorXd t = bt * e;
    e(j) = 0.0;
    inner.solve(t, s);
    g.col(j) = blk.B0 * s;
  }
  return 0.5 * (g + g.transpose());
}

/// Normalized null vector (|K_1|^{1/2}, ..., |K_N|^{1/2}) / |Omega|^{1/2} of
/// Mp^{-1/2} B0 A^{-1} B0^T Mp^{-1/2}.
inline VectorXd pressure_null_vector(const VectorXd& mp) { return mp.cwiseSqrt() / std::sqrt(mp.sum()); }

struct InfSupReport {
  double beta = 0.0;
  double gamma_min_pos = 0.0;
  double gamma_max = 0.0;
  double null_residual = 0.0;  // ||H v1||
  std::vector<double> gammas;  // nonzero eigenvalues of H, ascending (dense path only)
};

namespace detail {

inline std::vector<double> to_std(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

inline std::vector<double> symmetric_eigenvalues(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw EigenSolverFailure("dense symmetric eigensolve failed");
  return to_std(es.eigenvalues());
}

/// Extreme eigenvalues of a symmetric operator restricted to the orthogonal
/// complement of `deflate`; Lanczos with full reorthogonalization.
template <class ApplyFn>
std::pair<double, double> lanczos_extremes(ApplyFn&& apply, Eigen::Index n, const VectorXd& deflate,
                                           int max_steps = 600, double tol = 1e-10) {
  const int m = static_cast<int>(std::min<Eigen::Index>(max_steps, n - 1));
  MatrixXd q(n, m + 1);
  std::vector<double> alpha, beta{0.0};
  VectorXd v = VectorXd::LinSpaced(n, 1.0, static_cast<double>(n)).array().sin() + 1.5;
  v -= deflate.dot(v) * deflate;
  q.col(0) = v.normalized();
  VectorXd w(n);
  double lo = 0.0, hi = 0.0;
  for (int j = 0; j < m; ++j) {
    const VectorXd qj = q.col(j);
    apply(qj, w);
    alpha.push_back(qj.dot(w));
    for (int pass = 0; pass < 2; ++pass) {
      w -= deflate.dot(w) * deflate;
      for (int i = 0; i <= j; ++i) w -= q.col(i).dot(w) * q.col(i);
    }
    beta.push_back(w.norm());
    MatrixXd t = MatrixXd::Zero(j + 1, j + 1);
    for (int i = 0; i <= j; ++i) {
      t(i, i) = alpha[i];
      if (i > 0) t(i, i - 1) = t(i - 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> tri(t);
    lo = tri.eigenvalues()(0);
    hi = tri.eigenvalues()(j);
    const double scale = std::max(std::abs(hi), 1e-300);
    const double res_lo = std::abs(beta[j + 1] * tri.eigenvectors()(j, 0));
    const double res_hi = std::abs(beta[j + 1] * tri.eigenvectors()(j, j));
    if (beta[j + 1] <= tol * scale || (res_lo <= tol * scale && res_hi <= tol * scale)) return {lo, hi};
    q.col(j + 1) = w / beta[j + 1];
  }
  if (m < n - 1) throw EigenSolverFailure("Lanczos did not converge in " + std::to_string(m) + " steps");
  return {lo, hi};
}

}  // namespace detail

/// Inf-sup constant from a precomputed dense B0 A^{-1} B0^T.
inline InfSupReport infsup_from_schur_product(const MatrixXd& g, const VectorXd& mp) {
  const VectorXd v1 = pressure_null_vector(mp);
  const VectorXd isq = mp.cwiseSqrt().cwiseInverse();
  MatrixXd h = isq.asDiagonal() * g * isq.asDiagonal();
  InfSupReport rep;
  rep.null_residual = (h * v1).norm();
  // Move the known zero eigenvalue above the spectrum (gamma <= d <= 3).
  const double shift = 2.0 * h.diagonal().maxCoeff() + 4.0;
  h += shift * v1 * v1.transpose();
  std::vector<double> ev = detail::symmetric_eigenvalues(h);
  ev.pop_back();
  rep.gammas = ev;
  rep.gamma_min_pos = ev.front();
  rep.gamma_max = ev.back();
  if (!(rep.gamma_min_pos > 0.0)) throw EigenSolverFailure("Schur product has more than one zero eigenvalue");
  rep.beta = std::sqrt(rep.gamma_min_pos);
  return rep;
}

/// beta^2 = smallest positive eigenvalue of H = Mp^{-1/2} B0 A^{-1} B0^T Mp^{-1/2},
/// with the zero eigenvalue deflated through v1.  Dense up to
/// kDenseEigenLimit pressure unknowns, Lanczos beyond.
inline InfSupReport infsup_beta(const SaddleBlocks& blk, const InnerSolver& inner) {
  const Eigen::Index np = blk.B0.rows();
  if (np <= kDenseEigenLimit) return infsup_from_schur_product(dense_schur_product(blk, inner), blk.Mp);

  const VectorXd v1 = pressure_null_vector(blk.Mp);
  const VectorXd isq = blk.Mp.cwiseSqrt().cwiseInverse();
  auto apply = [&](const VectorXd& x, VectorXd& y) {
    const VectorXd t = blk.B0.transpose() * isq.cwiseProduct(x);
    VectorXd s;
    inner.solve(t, s);
    y = isq.cwiseProduct(blk.B0 * s);
  };
  InfSupReport rep;
  VectorXd hv;
  apply(v1, hv);
  rep.null_residual = hv.norm();
  std::tie(rep.gamma_min_pos, rep.gamma_max) = detail::lanczos_extremes(apply, np, v1);
  if (!(rep.gamma_min_pos > 0.0)) throw EigenSolverFailure("no positive Schur eigenvalue found");
  rep.beta = std::sqrt(rep.gamma_min_pos);
  return rep;
}

/// beta^2 from the velocity side: smallest positive eigenvalue of the pencil
/// (B0^T Mp^{-1} B0, A).  Dense, independent of infsup_beta.
inline double infsup_beta_squared_velocity_side(const SaddleBlocks& blk) {
  const MatrixXd a(blk.A);
  const MatrixXd b(blk.B0);
  const MatrixXd k = b.transpose() * blk.Mp.cwiseInverse().asDiagonal() * b;
  Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> es(k, a, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw EigenSolverFailure("generalized eigensolve failed");
  // rank(B0) = N - 1: the positive eigenvalues are the top N - 1
  const Eigen::Index n_pos = blk.B0.rows() - 1;
  return es.eigenvalues()(es.eigenvalues().size() - n_pos);
}

struct Interval {
  std::string name;
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x, double slack = 0.0) const { return x >= lo - slack && x <= hi + slack; }
  /// Distance outside the interval (0 inside).
  double distance(double x) const { return x < lo ? lo - x : (x > hi ? x - hi : 0.0); }
};

struct Violation {
  std::size_t index = 0;  // position in the ascending eigenvalue list
  double value = 0.0;
  double margin = 0.0;    // distance to the nearest predicted region
  std::string note;
};

struct SpectrumCheckOptions {
  double slack = 1e-8;
  /// Relative tolerance on the near-zero eigenvalue against -mu d11/|Omega|.
  double lambda1_rel_tol = 0.1;
  /// The first-order lambda_1 prediction is only checked for mu up to this.
  double lambda1_mu_max = 1e-3;
  /// Accept eigenvalues at exactly 1.  They belong to velocities in the null
  /// space of B0, which the diagonal-preconditioned operator leaves fixed.
  bool allow_unit_cluster = false;
};

/// Eigenvalues of a preconditioned operator together with the predicted
/// regions and every eigenvalue found outside them.
struct SpectralReport {
  std::string kind;
  ProblemScales scales;
  double beta = 0.0;
  double gamma_min_pos = 0.0;
  double gamma_max = 0.0;
  double lambda1_mu = 0.0;
  double lambda1_predicted = 0.0;
  int unit_cluster = 0;
  bool proviso_holds = false;
  std::vector<Interval> intervals;
  std::vector<double> eigenvalues;  // ascending
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  double lambda1_relative_error() const {
    return lambda1_predicted != 0.0 ? std::abs(lambda1_mu - lambda1_predicted) / std::abs(lambda1_predicted)
                                    : std::abs(lambda1_mu);
  }
};

namespace detail {

inline void classify(SpectralReport& rep, std::size_t skip, const SpectrumCheckOptions& opt, bool check_unit) {
  for (std::size_t i = 0; i < rep.eigenvalues.size(); ++i) {
    if (i == skip) continue;
    const double x = rep.eigenvalues[i];
    const bool unit = std::abs(x - 1.0) <= opt.slack;
    if (check_unit && unit) ++rep.unit_cluster;
    bool inside = false;
    double margin = std::numeric_limits<double>::infinity();
    for (const Interval& iv : rep.intervals) {
      inside = inside || iv.contains(x, opt.slack);
      margin = std::min(margin, iv.distance(x));
    }
    if (inside) continue;
    if (check_unit && unit && opt.allow_unit_cluster) continue;
    rep.violations.push_back({i, x, margin, unit ? "unit eigenvalue (null space of B0)" : "outside predicted regions"});
  }
}

}  // namespace detail

/// Dense spectrum of T = P_d^{-1/2} calA P_d^{-1/2}, P_d = diag(A, Mp), for
/// the rescaled system, checked against
///   [(1 - sqrt(1+4d))/2 - eps, (1 - sqrt(1+4 beta^2))/2 + eps]
///   U {lambda_1} U
///   [(1 + sqrt(1+4 beta^2))/2 - eps, (1 + sqrt(1+4d))/2 + eps],
/// eps = mu d11/|K_1|, with lambda_1 compared against -mu d11/|Omega| for
/// mu <= opt.lambda1_mu_max.
/// `beta` is the inf-sup constant of the unregularized problem.
inline SpectralReport eig_diag_preconditioned(const RegularizedSystem& sys, double beta,
                                              const SpectrumCheckOptions& opt = {}) {
  const Eigen::Index nu = sys.n_velocity(), np = sys.n_pressure();
  if (nu + np > kDenseEigenLimit) throw InvalidArgument("system too large for a dense spectrum");
  Eigen::SelfAdjointEigenSolver<MatrixXd> ea{MatrixXd(sys.blocks.A)};
  if (ea.info() != Eigen::Success) throw EigenSolverFailure("eigensolve of A failed");
  if (ea.eigenvalues()(0) <= 0.0) throw NotPositiveDefinite("velocity block is not positive definite");
  MatrixXd pinv = MatrixXd::Zero(nu + np, nu + np);
  pinv.topLeftCorner(nu, nu) =
      ea.eigenvectors() * ea.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() * ea.eigenvectors().transpose();
  pinv.bottomRightCorner(np, np) = sys.blocks.Mp.cwiseSqrt().cwiseInverse().asDiagonal();
  MatrixXd t = pinv * sys.op.dense() * pinv;
  t = 0.5 * (t + t.transpose());

  SpectralReport rep;
  rep.kind = "diag_preconditioned";
  rep.scales = scales_of(sys);
  rep.beta = beta;
  rep.gamma_min_pos = beta * beta;
  rep.eigenvalues = detail::symmetric_eigenvalues(t);
  const double d = rep.scales.dim, eps = rep.scales.eps(), b2 = beta * beta;
  rep.proviso_holds = eps < 0.5 * (std::sqrt(1.0 + 4.0 * b2) - 1.0);
  rep.intervals = {
      {"negative", 0.5 * (1.0 - std::sqrt(1.0 + 4.0 * d)) - eps, 0.5 * (1.0 - std::sqrt(1.0 + 4.0 * b2)) + eps},
      {"positive", 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * b2)) - eps, 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * d)) + eps},
  };
  const auto it = std::min_element(rep.eigenvalues.begin(), rep.eigenvalues.end(),
                                   [](double a, double b) { return std::abs(a) < std::abs(b); });
  const std::size_t i1 = static_cast<std::size_t>(it - rep.eigenvalues.begin());
  rep.lambda1_mu = *it;
  rep.lambda1_predicted = -rep.scales.lambda1_first_order();
  bool lambda1_ok = true;
  if (rep.scales.mu <= opt.lambda1_mu_max)
    lambda1_ok = rep.lambda1_predicted == 0.0 ? std::abs(rep.lambda1_mu) <= opt.slack
                                              : rep.lambda1_relative_error() <= opt.lambda1_rel_tol;
  if (!lambda1_ok)
    rep.violations.push_back({i1, rep.lambda1_mu, std::abs(rep.lambda1_mu - rep.lambda1_predicted),
                              "near-zero eigenvalue differs from -mu d11/|Omega|"});
  detail::classify(rep, i1, opt, true);
  return rep;
}

/// Dense spectrum of Mp^{-1} S, S = mu D + B0 A^{-1} B0^T, given the dense
/// product g = B0 A^{-1} B0^T.  Checked in the ordered form
///   mu d11/|Omega| <= lambda_1 <= mu d11/|K_1|,
///   beta^2 - eps <= lambda_i <= d + eps  (i >= 2);
/// `union_only` relaxes this to membership in the union of the two ranges.
inline SpectralReport eig_schur(const RegularizedSystem& sys, const MatrixXd& g, double beta,
                                const SpectrumCheckOptions& opt = {}, bool union_only = false) {
  const VectorXd isq = sys.blocks.Mp.cwiseSqrt().cwiseInverse();
  MatrixXd s = g;
  s(sys.pinned_index, sys.pinned_index) += sys.mu * sys.d11;
  s = isq.asDiagonal() * s * isq.asDiagonal();

  SpectralReport rep;
  rep.kind = "schur";
  rep.scales = scales_of(sys);
  rep.beta = beta;
  rep.gamma_min_pos = beta * beta;
  rep.eigenvalues = detail::symmetric_eigenvalues(s);
  const double d = rep.scales.dim, eps = rep.scales.eps(), b2 = beta * beta;
  rep.proviso_holds = eps < b2;
  const Interval first{"lambda1", rep.scales.lambda1_first_order(), eps};
  const Interval rest{"cluster", b2 - eps, d + eps};
  rep.intervals = {first, rest};
  rep.lambda1_mu = rep.eigenvalues.front();
  rep.lambda1_predicted = rep.scales.lambda1_first_order();
  rep.gamma_max = rep.eigenvalues.back();
  for (std::size_t i = 0; i < rep.eigenvalues.size(); ++i) {
    const double x = rep.eigenvalues[i];
    bool inside;
    double margin;
    if (union_only) {
      inside = first.contains(x, opt.slack) || rest.contains(x, opt.slack);
      margin = std::min(first.distance(x), rest.distance(x));
    } else {
      const Interval& iv = i == 0 ? first : rest;
      inside = iv.contains(x, opt.slack);
      margin = iv.distance(x);
    }
    if (!inside) rep.violations.push_back({i, x, margin, i == 0 ? "lambda1 bound" : "cluster bound"});
  }
  return rep;
}

inline SpectralReport eig_schur(const RegularizedSystem& sys, const InnerSolver& inner, double beta,
                                const SpectrumCheckOptions& opt = {}, bool union_only = false) {
  return eig_schur(sys, dense_schur_product(sys.blocks, inner), beta, opt, union_only);
}

inline void write_eigenvalues_csv(std::ostream& os, const SpectralReport& rep) {
  os << "index,eigenvalue\n" << std::setprecision(17);
  for (std::size_t i = 0; i < rep.eigenvalues.size(); ++i) os << i << ',' << rep.eigenvalues[i] << '\n';
}

inline void write_summary(std::ostream& os, const SpectralReport& rep) {
  const auto& s = rep.scales;
  os << std::setprecision(10);
  os << "kind: " << rep.kind << "\n"
     << "dim: " << s.dim << "  mu: " << s.mu << "  d11: " << s.d11 << "  |K1|: " << s.k1 << "  |Omega|: " << s.omega
     << "\n"
     << "beta: " << rep.beta << "  beta^2: " << rep.gamma_min_pos << "\n"
     << "eigenvalues: " << rep.eigenvalues.size() << "  min: " << rep.eigenvalues.front()
     << "  max: " << rep.eigenvalues.back() << "\n"
     << "lambda1: " << rep.lambda1_mu << "  first-order prediction: " << rep.lambda1_predicted << "\n"
     << "proviso holds: " << (rep.proviso_holds ? "yes" : "no") << "\n";
  if (rep.kind == "diag_preconditioned") os << "eigenvalues at 1: " << rep.unit_cluster << "\n";
  for (const Interval& iv : rep.intervals) os << "region " << iv.name << ": [" << iv.lo << ", " << iv.hi << "]\n";
  os << "violations: " << rep.violations.size() << "\n";
  for (const Violation& v : rep.violations)
    os << "  #" << v.index << " " << v.value << " (margin " << v.margin << "): " << v.note << "\n";
  os << "status: " << (rep.ok() ? "PASS" : "FAIL") << "\n";
}

// ---------------------------------------------------------------------------
// Residual bounds

/// Largest singular value of a dense matrix.
inline double spectral_norm(const MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<MatrixXd> svd(m);
  return svd.singularValues()(0);
}

/// Shifted-Chebyshev value 1 / T_m((b+a)/(b-a)): the minimum over degree-m
/// polynomials with p(0) = 1 of max |p| on [a, b], 0 < a <= b.
inline double chebyshev_interval_value(double a, double b, int m) {
  if (m <= 0) return 1.0;
  if (!(a > 0.0) || b < a) throw InvalidArgument("Chebyshev interval must satisfy 0 < a <= b");
  if (b == a) return 0.0;
  const double x = (b + a) / (b - a);
  const double t = std::cosh(m * std::acosh(x));
  return std::isfinite(t) ? 1.0 / t : 0.0;
}

/// Extreme eigenvalues of S^^{-1} S and the condition number of S^.
struct SchurSpectrumSummary {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double lambda_n = 0.0;
  double cond_s_hat = 1.0;
};

/// Upper bound for min_{p in P_m, p(0)=1} ||p(X)||, X = S^^{-1} S (or S S^^{-1})
/// with S, S^ symmetric positive definite: X is similar to a symmetric matrix
/// through S^^{1/2}, costing a factor sqrt(cond(S^)).  Uses the smaller of the
/// constant polynomial, Chebyshev on [lambda_1, lambda_N], and Chebyshev on
/// [lambda_2, lambda_N] times the linear factor that removes lambda_1.
inline double min_polynomial_surrogate(const SchurSpectrumSummary& s, int m) {
  if (m <= 0) return 1.0;
  const double sim = std::sqrt(s.cond_s_hat);
  double best = 1.0;
  best = std::min(best, sim * chebyshev_interval_value(s.lambda1, s.lambda_n, m));
  if (s.lambda2 > s.lambda1)
    best = std::min(best, sim * (s.lambda_n - s.lambda1) / s.lambda1 *
                              chebyshev_interval_value(s.lambda2, s.lambda_n, m - 1));
  return best;
}

enum class BoundKind { MinresDiagonal, GmresTriangular, GeneralLower, GeneralUpper };

inline std::string to_string(BoundKind k) {
  switch (k) {
    case BoundKind::MinresDiagonal: return "minres_diagonal";
    case BoundKind::GmresTriangular: return "gmres_triangular";
    case BoundKind::GeneralLower: return "general_lower";
    case BoundKind::GeneralUpper: return "general_upper";
  }
  return "?";
}

struct BoundParams {
  ProblemScales scales;
  double beta = 0.0;
  // Stokes GMRES constant: sqrt(d lambda_max(Mp) / lambda_min(A)) bounds ||A^{-1} B0^T||.
  double lambda_max_mp = 0.0;
  double lambda_min_a = 0.0;
  // General block forms: ||A^{-1} B^T|| (or ||C A^{-1}||), ||S^^{-1} S|| (or ||S S^^{-1}||).
  double norm_offdiag = 0.0;
  double norm_schur = 0.0;
  SchurSpectrumSummary schur;
};

struct BoundValue {
  double value = 0.0;
  bool regime_ok = true;  // false when mu d11/|K_1| >= beta^2: no claim is made
  bool surrogate = false;
};

inline double convergence_factor(int dim, double beta) {
  const double sd = std::sqrt(static_cast<double>(dim));
  return (sd - beta) / (sd + beta);
}

/// Right-hand side of the residual bound.  `k` follows each formula's own
/// indexing: MINRES step 2k+1 for MinresDiagonal, GMRES step k otherwise.
inline BoundValue evaluate_bound(BoundKind kind, const BoundParams& p, int k) {
  const ProblemScales& s = p.scales;
  const double d = s.dim;
  BoundValue out;
  switch (kind) {
    case BoundKind::MinresDiagonal: {
      out.regime_ok = s.mu > 0.0 && s.eps() < p.beta * p.beta;
      const double c = 2.0 * s.omega * (d + s.eps() + s.lambda1_first_order()) / (s.mu * s.d11);
      out.value = c * std::pow(convergence_factor(s.dim, p.beta), k);
      break;
    }
    case BoundKind::GmresTriangular: {
      out.regime_ok = s.mu > 0.0 && s.eps() < p.beta * p.beta;
      const double c = 2.0 * s.omega * (d + 1.0) * (d + 2.0 + std::sqrt(d * p.lambda_max_mp / p.lambda_min_a)) /
                       (s.mu * s.d11);
      out.value = c * std::pow(convergence_factor(s.dim, p.beta), k - 2);
      break;
    }
    case BoundKind::GeneralLower:
    case BoundKind::GeneralUpper:
      out.surrogate = true;
      out.value = (1.0 + p.norm_offdiag + p.norm_schur) * min_polynomial_surrogate(p.schur, k - 1);
      break;
  }
  return out;
}

/// Bound parameters for the regularized Stokes system: beta, extreme
/// eigenvalues of Mp and A (dense).
inline BoundParams stokes_bound_params(const RegularizedSystem& sys, double beta) {
  BoundParams p;
  p.scales = scales_of(sys);
  p.beta = beta;
  p.lambda_max_mp = sys.blocks.Mp.maxCoeff();
  const std::vector<double> ea = detail::symmetric_eigenvalues(MatrixXd(sys.blocks.A));
  p.lambda_min_a = ea.front();
  return p;
}

/// Index of the first history entry above its bound, or -1.
struct BoundCheck {
  int first_violation = -1;
  int checked = 0;
  double worst_ratio = 0.0;  // max measured / bound over checked steps
  bool ok() const { return first_violation < 0; }
};

/// MINRES history against the diagonal-preconditioner bound at odd steps j = 2k+1.
inline BoundCheck check_minres_history(const std::vector<double>& hist, const BoundParams& p) {
  BoundCheck c;
  for (std::size_t j = 1; j < hist.size(); j += 2) {
    const double b = evaluate_bound(BoundKind::MinresDiagonal, p, static_cast<int>((j - 1) / 2)).value;
    ++c.checked;
    c.worst_ratio = std::max(c.worst_ratio, hist[j] / b);
    if (hist[j] > b && c.first_violation < 0) c.first_violation = static_cast<int>(j);
  }
  return c;
}

/// GMRES history against `kind` for steps k >= first_step.
inline BoundCheck check_gmres_history(const std::vector<double>& hist, BoundKind kind, const BoundParams& p,
                                      int first_step) {
  BoundCheck c;
  for (std::size_t k = static_cast<std::size_t>(std::max(first_step, 1)); k < hist.size(); ++k) {
    const double b = evaluate_bound(kind, p, static_cast<int>(k)).value;
    ++c.checked;
    c.worst_ratio = std::max(c.worst_ratio, hist[k] / b);
    if (hist[k] > b && c.first_violation < 0) c.first_violation = static_cast<int>(k);
  }
  return c;
}

}  // namespace wgstokes
