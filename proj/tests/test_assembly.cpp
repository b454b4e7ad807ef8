#include <gtest/gtest.h>

#include <numbers>
#include <sstream>

#include "wgstokes/assembly.hpp"
#include "wgstokes/system.hpp"

using namespace wgstokes;

namespace {

VectorField zero_field(int d) {
  return [d](const Vec&) -> Vec { return Vec::Zero(d); };
}

int find_facet(const Mesh& m, const Vec& a, const Vec& b) {
  for (int f = 0; f < m.num_facets(); ++f) {
    const auto& v = m.facet(f).vertices;
    const Vec p = m.vertex(v[0]), q = m.vertex(v[1]);
    if (((p - a).norm() == 0.0 && (q - b).norm() == 0.0) || ((p - b).norm() == 0.0 && (q - a).norm() == 0.0))
      return f;
  }
  return -1;
}

}  // namespace

TEST(Projection, BoundaryFacetAverages) {
  const Mesh m = generate_structured_mesh(2, 1);
  const int f = find_facet(m, Vec{{0.0, 0.0}}, Vec{{1.0, 0.0}});
  ASSERT_GE(f, 0);
  const Vec c = project_boundary(m, [](const Vec&) -> Vec { return Vec{{3.0, -2.0}}; }, f);
  EXPECT_NEAR(c(0), 3.0, 1e-15);
  EXPECT_NEAR(c(1), -2.0, 1e-15);
  const Vec lin = project_boundary(m, [](const Vec& x) -> Vec { return x; }, f);
  EXPECT_NEAR(lin(0), 0.5, 1e-15);
  EXPECT_NEAR(lin(1), 0.0, 1e-15);
  const Vec s = project_boundary(
      m, [](const Vec& x) -> Vec { return Vec{{std::sin(std::numbers::pi * x(0)), 0.0}}; }, f);
  // the default 5-point Gauss rule (degree 9) leaves a 3.5e-8 error here
  EXPECT_NEAR(s(0), 2.0 / std::numbers::pi, 1e-7);
  const Vec fine = project_boundary(
      m, [](const Vec& x) -> Vec { return Vec{{std::sin(std::numbers::pi * x(0)), 0.0}}; }, f, 20);
  EXPECT_NEAR(fine(0), 2.0 / std::numbers::pi, 1e-14);
}

TEST(Projection, InteriorAverages) {
  const Mesh m(2, {Vec{{0.0, 0.0}}, Vec{{1.0, 0.0}}, Vec{{0.0, 1.0}}}, {{{0, 1, 2, -1}}});
  const Vec c = project_interior(m, [](const Vec&) -> Vec { return Vec{{1.5, 2.5}}; }, 0);
  EXPECT_NEAR(c(0), 1.5, 4e-15);
  EXPECT_NEAR(c(1), 2.5, 4e-15);
  const Vec lin = project_interior(m, [](const Vec& x) -> Vec { return x; }, 0);
  EXPECT_NEAR(lin(0), 1.0 / 3.0, 4e-15);
  EXPECT_NEAR(lin(1), 1.0 / 3.0, 4e-15);
  const Vec sq = project_interior(m, [](const Vec& x) -> Vec { return x.cwiseProduct(x); }, 0);
  EXPECT_NEAR(sq(0), 1.0 / 6.0, 4e-15);
  EXPECT_NEAR(sq(1), 1.0 / 6.0, 4e-15);
}

TEST(Space, DofLayout) {
  const Mesh m = generate_structured_mesh(2, 4);
  const WgSpace sp = make_space(m);
  EXPECT_EQ(sp.n_velocity(), 144);
  EXPECT_EQ(sp.n_pressure(), 32);
  EXPECT_EQ(sp.n_unknowns(), 176);
  std::vector<int> used(sp.n_velocity(), 0);
  for (int k = 0; k < m.num_elements(); ++k)
    for (int c = 0; c < 2; ++c) ++used[sp.interior_dof(k, c)];
  for (int f = 0; f < m.num_facets(); ++f)
    for (int c = 0; c < 2; ++c) {
      const int j = sp.facet_dof(f, c);
      if (m.facet(f).boundary()) {
        EXPECT_EQ(j, -1);
      } else {
        ASSERT_GE(j, sp.n_interior_velocity());
        ++used[j];
      }
    }
  for (int u : used) EXPECT_EQ(u, 1);
  const Mesh m8 = generate_structured_mesh(2, 8);
  EXPECT_EQ(make_space(m8).n_unknowns(), 736);
}

class AssemblyInvariants : public ::testing::TestWithParam<int> {};

TEST_P(AssemblyInvariants, BlocksHaveTheExpectedStructure) {
  const int d = GetParam();
  const Mesh m = generate_structured_mesh(d, d == 2 ? 4 : 2);
  auto [sp, blk] = assemble(m, 1.0, zero_field(d), zero_field(d));
  EXPECT_EQ(blk.dim, d);
  EXPECT_EQ(blk.A.rows(), sp.n_velocity());
  EXPECT_EQ(blk.B0.rows(), sp.n_pressure());
  EXPECT_EQ(blk.B0.cols(), sp.n_velocity());

  const Eigen::MatrixXd a(blk.A);
  const double amax = a.cwiseAbs().maxCoeff();
  EXPECT_LE((a - a.transpose()).cwiseAbs().maxCoeff(), 1e-12 * amax);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
  EXPECT_GT(es.eigenvalues()(0), 0.0);

  EXPECT_TRUE((blk.Mp.array() > 0.0).all());
  EXPECT_NEAR(blk.Mp.sum(), 1.0, 1e-13);

  const Eigen::VectorXd bt1 = blk.B0.transpose() * Eigen::VectorXd::Ones(blk.B0.rows());
  EXPECT_LE(bt1.cwiseAbs().maxCoeff(), 1e-12 * Eigen::MatrixXd(blk.B0).cwiseAbs().maxCoeff());

  EXPECT_EQ(blk.b1.norm(), 0.0);
  EXPECT_EQ(blk.b2.norm(), 0.0);
}

INSTANTIATE_TEST_SUITE_P(Dims, AssemblyInvariants, ::testing::Values(2, 3));

TEST(Assembly, RowsAreSortedAfterCompression) {
  const Mesh m = generate_structured_mesh(2, 3);
  auto [sp, blk] = assemble(m, 1.0, zero_field(2), zero_field(2));
  EXPECT_TRUE(blk.A.isCompressed());
  for (int r = 0; r < blk.A.outerSize(); ++r) {
    int prev = -1;
    for (SpMat::InnerIterator it(blk.A, r); it; ++it) {
      EXPECT_GT(it.col(), prev);
      prev = static_cast<int>(it.col());
    }
  }
}

TEST(Assembly, DisconnectedMeshIsRejected) {
  const Mesh m(2, {Vec{{0.0, 0.0}}, Vec{{1.0, 0.0}}, Vec{{0.0, 1.0}}, Vec{{-1.0, 0.0}}, Vec{{0.0, -1.0}}},
               {{{0, 1, 2, -1}}, {{0, 3, 4, -1}}});
  EXPECT_THROW(assemble(m, 1.0, zero_field(2), zero_field(2)), DisconnectedMesh);
}

// Linear divergence-free velocity with constant pressure and zero body force
// is reproduced exactly: the weak gradient of its interpolant is the exact
// (constant) gradient.
class PatchTest : public ::testing::TestWithParam<int> {};

TEST_P(PatchTest, LinearSolenoidalVelocityIsExact) {
  const int d = GetParam();
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(d, d);
  if (d == 2) {
    g << 0.3, -1.2, 0.7, -0.3;
  } else {
    g << 0.5, 0.2, -0.4, 1.1, -0.2, 0.3, 0.6, -0.9, -0.3;
  }
  const VectorField u = [g](const Vec& x) -> Vec { return g * x + Vec::Constant(x.size(), 0.25); };
  const Mesh m = generate_structured_mesh(d, d == 2 ? 3 : 2);
  const double mu = 0.7;
  auto [sp, blk] = assemble(m, mu, zero_field(d), u);
  const RegularizedSystem sys = regularize_and_scale(blk, mu, D11Mode::One);
  const Eigen::VectorXd x = sys.op.dense().partialPivLu().solve(sys.rhs());
  const auto [uh, ph] = sys.unscale(x);

  const VectorXd qu = interpolate_velocity(m, sp, u);
  EXPECT_LT((uh - qu).cwiseAbs().maxCoeff(), 1e-11);
  EXPECT_LT(ph.cwiseAbs().maxCoeff(), 1e-10);

  ExactSolution ex{u, [g](const Vec&) { return g; }, [](const Vec&) { return 4.0; }};
  const ErrorNorms e = compute_errors(m, sp, uh, ph, ex);
  EXPECT_LT(e.err_grad, 1e-11);
  EXPECT_LT(e.err_proj, 1e-11);
  EXPECT_LT(e.err_p, 1e-10);
}

INSTANTIATE_TEST_SUITE_P(Dims, PatchTest, ::testing::Values(2, 3));

TEST(Errors, InjectedExactSolutionGivesZero) {
  const Mesh m = generate_structured_mesh(2, 4);
  const VectorField c = [](const Vec&) -> Vec { return Vec{{1.0, -2.0}}; };
  auto [sp, blk] = assemble(m, 1.0, zero_field(2), c);
  const VectorXd uh = interpolate_velocity(m, sp, c);
  // pinned discrete pressure differs from the exact one by a constant
  const VectorXd ph = VectorXd::Zero(sp.n_pressure());
  ExactSolution ex{c, [](const Vec&) { return Eigen::MatrixXd::Zero(2, 2); }, [](const Vec&) { return 3.0; }};
  const ErrorNorms e = compute_errors(m, sp, uh, ph, ex);
  EXPECT_LT(e.err_p, 1e-14);
  EXPECT_LT(e.err_grad, 1e-13);
  EXPECT_LT(e.err_u0, 1e-14);
  EXPECT_LT(e.err_proj, 1e-14);
}

TEST(Assembly, MatrixMarketHeader) {
  const Mesh m = generate_structured_mesh(2, 1);
  auto [sp, blk] = assemble(m, 1.0, zero_field(2), zero_field(2));
  std::ostringstream os;
  write_matrix_market(os, blk.A);
  std::istringstream is(os.str());
  std::string banner;
  std::getline(is, banner);
  EXPECT_EQ(banner, "%%MatrixMarket matrix coordinate real general");
  long r = 0, c = 0, nnz = 0;
  is >> r >> c >> nnz;
  EXPECT_EQ(r, blk.A.rows());
  EXPECT_EQ(nnz, blk.A.nonZeros());
}
