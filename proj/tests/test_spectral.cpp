#include <gtest/gtest.h>

#include <map>
#include <sstream>

#include "wgstokes/experiments.hpp"

using namespace wgstokes;
using Eigen::MatrixXd;

namespace {

struct Fixture {
  Problem pr;
  MatrixXd g;
  InfSupReport infsup;
};

/// One assembled problem per (dim, n), with its dense Schur product.
const Fixture& fixture(int dim, int n) {
  static std::map<std::pair<int, int>, Fixture> cache;
  auto it = cache.find({dim, n});
  if (it == cache.end()) {
    Fixture f{build_problem(stokes_case(dim), n, 1.0), {}, {}};
    const DirectInnerSolver inner(f.pr.blocks.A);
    f.g = dense_schur_product(f.pr.blocks, inner);
    f.infsup = infsup_from_schur_product(f.g, f.pr.blocks.Mp);
    it = cache.emplace(std::make_pair(dim, n), std::move(f)).first;
  }
  return it->second;
}

}  // namespace

// ---------------------------------------------------------------------------
// Inf-sup constant

TEST(InfSup, NullVectorAndUpperBound) {
  for (auto [d, n] : {std::pair{2, 4}, std::pair{2, 8}, std::pair{3, 2}}) {
    const Fixture& f = fixture(d, n);
    EXPECT_LE(f.infsup.null_residual, 1e-10);
    EXPECT_LE(f.infsup.gamma_max, d + 1e-8);
    EXPECT_GT(f.infsup.beta, 0.0);
    EXPECT_NEAR(f.infsup.beta * f.infsup.beta, f.infsup.gamma_min_pos, 1e-14);
    EXPECT_EQ(f.infsup.gammas.size(), static_cast<std::size_t>(f.pr.blocks.Mp.size() - 1));
  }
}

TEST(InfSup, MeshIndependent) {
  const double b8 = fixture(2, 8).infsup.beta, b16 = fixture(2, 16).infsup.beta;
  EXPECT_LT(std::abs(b8 - b16) / b8, 0.2);
}

TEST(InfSup, VelocitySideAgrees) {
  for (auto [d, n] : {std::pair{2, 4}, std::pair{3, 2}}) {
    const Fixture& f = fixture(d, n);
    EXPECT_NEAR(infsup_beta_squared_velocity_side(f.pr.blocks), f.infsup.gamma_min_pos, 1e-8);
  }
}

TEST(InfSup, LanczosAgreesWithDense) {
  const Fixture& f = fixture(2, 8);
  const VectorXd mp = f.pr.blocks.Mp;
  const VectorXd isq = mp.cwiseSqrt().cwiseInverse();
  const MatrixXd h = isq.asDiagonal() * f.g * isq.asDiagonal();
  const auto [lo, hi] = detail::lanczos_extremes([&](const VectorXd& x, VectorXd& y) { y = h * x; }, mp.size(),
                                                 pressure_null_vector(mp));
  EXPECT_NEAR(lo, f.infsup.gamma_min_pos, 1e-8);
  EXPECT_NEAR(hi, f.infsup.gamma_max, 1e-8);
  const DirectInnerSolver inner(f.pr.blocks.A);
  EXPECT_NEAR(infsup_beta(f.pr.blocks, inner).beta, f.infsup.beta, 1e-12);
}

// ---------------------------------------------------------------------------
// Diagonally preconditioned spectrum

TEST(DiagSpectrum, UnregularizedLimitHasOneZero) {
  const Fixture& f = fixture(2, 4);
  const RegularizedSystem sys = regularize_with(f.pr.blocks, 0.0, 1.0);
  SpectrumCheckOptions opt;
  opt.allow_unit_cluster = true;
  const SpectralReport rep = eig_diag_preconditioned(sys, f.infsup.beta, opt);
  EXPECT_TRUE(rep.ok()) << rep.violations.size();
  int zeros = 0;
  for (double x : rep.eigenvalues) zeros += std::abs(x) < 1e-10;
  EXPECT_EQ(zeros, 1);
  EXPECT_LT(std::abs(rep.lambda1_mu), 1e-10);
}

TEST(DiagSpectrum, UnitClusterComesFromTheDivergenceKernel) {
  const Fixture& f = fixture(2, 4);
  const RegularizedSystem sys = regularize_and_scale(f.pr.blocks, 1e-4, D11Mode::One);
  const SpectralReport strict = eig_diag_preconditioned(sys, f.infsup.beta);
  const int kernel = static_cast<int>(sys.n_velocity() - (sys.n_pressure() - 1));
  EXPECT_EQ(strict.unit_cluster, kernel);
  EXPECT_EQ(static_cast<int>(strict.violations.size()), kernel);
  for (const auto& v : strict.violations) EXPECT_NEAR(v.value, 1.0, 1e-8);

  SpectrumCheckOptions opt;
  opt.allow_unit_cluster = true;
  const SpectralReport relaxed = eig_diag_preconditioned(sys, f.infsup.beta, opt);
  EXPECT_TRUE(relaxed.ok());
  EXPECT_TRUE(relaxed.proviso_holds);
}

TEST(DiagSpectrum, NearZeroEigenvalueFirstOrder) {
  const Fixture& f = fixture(2, 8);
  const RegularizedSystem sys = regularize_and_scale(f.pr.blocks, 1e-4, D11Mode::One);
  SpectrumCheckOptions opt;
  opt.allow_unit_cluster = true;
  const SpectralReport rep = eig_diag_preconditioned(sys, f.infsup.beta, opt);
  EXPECT_LT(rep.lambda1_relative_error(), 0.1);
  EXPECT_LT(rep.lambda1_mu, 0.0);
  // every other eigenvalue keeps clear of the origin
  for (double x : rep.eigenvalues) {
    if (x != rep.lambda1_mu) {
      EXPECT_GE(std::abs(x), 0.5 * f.infsup.gamma_min_pos);
    }
  }
}

TEST(DiagSpectrum, RefusesLargeSystems) {
  const Problem pr = build_problem(stokes_case(2), 40, 1.0);
  const RegularizedSystem sys = regularize_and_scale(pr.blocks, 1.0, D11Mode::One);
  EXPECT_THROW(eig_diag_preconditioned(sys, 0.5), InvalidArgument);
}

// ---------------------------------------------------------------------------
// Preconditioned Schur complement

TEST(SchurSpectrum, UnregularizedLimit) {
  const Fixture& f = fixture(2, 4);
  const RegularizedSystem sys = regularize_with(f.pr.blocks, 0.0, 1.0);
  const SpectralReport rep = eig_schur(sys, f.g, f.infsup.beta);
  EXPECT_NEAR(rep.eigenvalues[0], 0.0, 1e-10);
  EXPECT_NEAR(rep.eigenvalues[1], f.infsup.gamma_min_pos, 1e-10);
  EXPECT_TRUE(rep.ok());
}

TEST(SchurSpectrum, CellPinningAtSmallViscosity) {
  const Fixture& f = fixture(2, 4);
  const double mu = 1e-4;
  const RegularizedSystem sys = regularize_and_scale(f.pr.blocks, mu, D11Mode::CellMeasure);
  const SpectralReport rep = eig_schur(sys, f.g, f.infsup.beta);
  const double k1 = sys.blocks.Mp(0), omega = sys.blocks.Mp.sum();
  EXPECT_GE(rep.lambda1_mu, mu * k1 / omega - 1e-8);
  EXPECT_LE(rep.lambda1_mu, mu + 1e-8);
  EXPECT_TRUE(rep.ok());
}

TEST(SchurSpectrum, SmallestEigenvalueNeverExceedsFirstOrderValue) {
  // Rayleigh quotient at the constant pressure equals mu d11/|Omega| exactly,
  // so lambda_1 sits at or below it.
  const Fixture& f = fixture(2, 4);
  for (double mu : {1e-1, 1e-2, 1e-3, 1e-4})
    for (D11Mode mode : {D11Mode::One, D11Mode::CellMeasure}) {
      const RegularizedSystem sys = regularize_and_scale(f.pr.blocks, mu, mode);
      const SpectralReport rep = eig_schur(sys, f.g, f.infsup.beta);
      const double first = mu * sys.d11 / sys.blocks.Mp.sum();
      EXPECT_LE(rep.lambda1_mu, first * (1.0 + 1e-10));
      EXPECT_GT(rep.lambda1_mu, 0.0);
      // the O(mu^2) gap shrinks with mu
      EXPECT_LT((first - rep.lambda1_mu) / first, 50.0 * mu * sys.d11 / sys.blocks.Mp(0));
    }
}

TEST(SchurSpectrum, UpperEndInThreeDimensions) {
  const Fixture& f = fixture(3, 4);
  const RegularizedSystem sys = regularize_and_scale(f.pr.blocks, 1e-4, D11Mode::One);
  const SpectralReport rep = eig_schur(sys, f.g, f.infsup.beta, {}, true);
  EXPECT_LE(rep.eigenvalues.back(), 3.0 + rep.scales.eps() + 1e-8);
}

TEST(SpectralReport, OutputFormats) {
  const Fixture& f = fixture(2, 2);
  const RegularizedSystem sys = regularize_and_scale(f.pr.blocks, 1e-2, D11Mode::One);
  const SpectralReport rep = eig_schur(sys, f.g, f.infsup.beta, {}, true);
  std::ostringstream csv, txt;
  write_eigenvalues_csv(csv, rep);
  write_summary(txt, rep);
  EXPECT_EQ(csv.str().rfind("index,eigenvalue\n0,", 0), 0u);
  const std::string s = txt.str();
  EXPECT_NE(s.find("kind: schur"), std::string::npos);
  EXPECT_EQ(s.substr(s.size() - 13), rep.ok() ? "status: PASS\n" : "status: FAIL\n");
}

// ---------------------------------------------------------------------------
// Bounds

TEST(Chebyshev, KnownValues) {
  EXPECT_EQ(chebyshev_interval_value(1.0, 3.0, 0), 1.0);
  EXPECT_NEAR(chebyshev_interval_value(1.0, 3.0, 1), 0.5, 1e-15);
  EXPECT_NEAR(chebyshev_interval_value(1.0, 3.0, 2), 1.0 / 7.0, 1e-15);
  EXPECT_EQ(chebyshev_interval_value(2.0, 2.0, 3), 0.0);
  EXPECT_THROW(chebyshev_interval_value(0.0, 1.0, 2), InvalidArgument);
  EXPECT_EQ(chebyshev_interval_value(1.0, 1.0 + 1e-6, 100000), 0.0);
}

TEST(Chebyshev, SurrogateBoundsGmresOnDiagonalSpectrum) {
  // GMRES on a diagonal SPD matrix attains min_p max|p(lambda_i)| at most
  const int n = 60;
  VectorXd lam(n);
  lam(0) = 1e-3;
  for (int i = 1; i < n; ++i) lam(i) = 0.5 + 1.5 * i / (n - 1.0);
  const MatrixXd a = lam.asDiagonal();
  VectorXd x;
  GmresOptions opt;
  opt.tol = 1e-14;
  opt.restart = n;
  opt.maxit = 40;
  const SolveReport r = gmres(MatrixOperator<MatrixXd>(a), IdentityOperator(n), VectorXd::Ones(n), x, opt);
  const SchurSpectrumSummary s{lam(0), lam(1), lam(n - 1), 1.0};
  for (int k = 1; k < static_cast<int>(r.residual_history.size()); ++k)
    EXPECT_LE(r.residual_history[k], min_polynomial_surrogate(s, k) + 1e-12) << k;
  EXPECT_EQ(min_polynomial_surrogate(s, 0), 1.0);
}

TEST(Bounds, ClosedForms) {
  BoundParams p;
  p.scales = {2, 1e-4, 1.0, 1.0 / 32, 1.0};
  p.beta = 0.5;
  p.lambda_max_mp = 1.0 / 32;
  p.lambda_min_a = 2.0;
  const double rho = (std::sqrt(2.0) - 0.5) / (std::sqrt(2.0) + 0.5);
  const double c1 = 2.0 * (2.0 + 32e-4 + 1e-4) / 1e-4;
  EXPECT_NEAR(evaluate_bound(BoundKind::MinresDiagonal, p, 3).value, c1 * std::pow(rho, 3), 1e-9);
  const double c2 = 2.0 * 3.0 * (4.0 + std::sqrt(2.0 / 32 / 2.0)) / 1e-4;
  EXPECT_NEAR(evaluate_bound(BoundKind::GmresTriangular, p, 5).value, c2 * std::pow(rho, 3), 1e-9);
  EXPECT_TRUE(evaluate_bound(BoundKind::MinresDiagonal, p, 3).regime_ok);
  EXPECT_FALSE(evaluate_bound(BoundKind::GmresTriangular, p, 3).surrogate);

  // beta -> sqrt(d) collapses the geometric factor
  p.beta = std::sqrt(2.0);
  EXPECT_EQ(evaluate_bound(BoundKind::MinresDiagonal, p, 1).value, 0.0);
  EXPECT_EQ(convergence_factor(3, std::sqrt(3.0)), 0.0);

  // mu d11/|K1| >= beta^2: bound not claimed
  p.beta = 0.05;
  EXPECT_FALSE(evaluate_bound(BoundKind::MinresDiagonal, p, 1).regime_ok);

  p.norm_offdiag = 2.0;
  p.norm_schur = 3.0;
  p.schur = {0.5, 0.5, 2.0, 4.0};
  const BoundValue a = evaluate_bound(BoundKind::GeneralLower, p, 3);
  EXPECT_TRUE(a.surrogate);
  EXPECT_NEAR(a.value, 6.0 * std::min(1.0, 2.0 * chebyshev_interval_value(0.5, 2.0, 2)), 1e-14);
}

TEST(Bounds, HistoryChecks) {
  BoundParams p;
  p.scales = {2, 1e-4, 1.0, 1.0 / 32, 1.0};
  p.beta = 0.6;
  p.lambda_max_mp = 1.0 / 32;
  p.lambda_min_a = 1.0;
  std::vector<double> hist{1.0, 1.0, 1.0, 1.0};
  BoundCheck c = check_minres_history(hist, p);
  EXPECT_TRUE(c.ok());
  EXPECT_EQ(c.checked, 2);
  hist.assign(400, 1.0);
  c = check_minres_history(hist, p);
  EXPECT_FALSE(c.ok());
  EXPECT_EQ(c.first_violation % 2, 1);
  c = check_gmres_history(hist, BoundKind::GmresTriangular, p, 3);
  EXPECT_FALSE(c.ok());
  EXPECT_GE(c.first_violation, 3);
  EXPECT_EQ(c.checked, 397);
}

TEST(Bounds, StokesResidualsRespectClosedFormBounds) {
  const Fixture& f = fixture(2, 4);
  const RegularizedSystem sys = regularize_and_scale(f.pr.blocks, 1e-4, D11Mode::One);
  const BoundParams bp = stokes_bound_params(sys, f.infsup.beta);
  ASSERT_LT(bp.scales.eps(), kBoundRegimeRatio * f.infsup.gamma_min_pos);
  SolveSettings s;
  s.tol = 1e-10;
  const SolveResult mr = solve_regularized(sys, s);
  EXPECT_TRUE(check_minres_history(mr.report.residual_history, bp).ok());
  s.solver = SolverKind::Gmres;
  s.precond = parse_precond("pl-");
  s.restart = 1000;
  const SolveResult gr = solve_regularized(sys, s);
  EXPECT_TRUE(check_gmres_history(gr.report.residual_history, BoundKind::GmresTriangular, bp, 3).ok());
}
