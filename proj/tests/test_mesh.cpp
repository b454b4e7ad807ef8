#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "wgstokes/mesh.hpp"
#include "wgstokes/quadrature.hpp"

using namespace wgstokes;

namespace {

Mesh unit_right_triangle() {
  return Mesh(2, {Vec{{0.0, 0.0}}, Vec{{1.0, 0.0}}, Vec{{0.0, 1.0}}}, {{{0, 1, 2, -1}}});
}

}  // namespace

TEST(Mesh, SingleSquareHasTwoTrianglesFiveFacets) {
  const Mesh m = generate_structured_mesh(2, 1);
  EXPECT_EQ(m.num_elements(), 2);
  EXPECT_EQ(m.num_vertices(), 4);
  EXPECT_EQ(m.num_facets(), 5);
  EXPECT_EQ(m.num_interior_facets(), 1);
  EXPECT_TRUE(check_connected(m));
}

TEST(Mesh, SingleCubeHasSixTetsSharingTheDiagonal) {
  const Mesh m = generate_structured_mesh(3, 1);
  ASSERT_EQ(m.num_elements(), 6);
  // the main diagonal joins vertex (0,0,0) and (1,1,1)
  int lo = -1, hi = -1;
  for (int i = 0; i < m.num_vertices(); ++i) {
    if (m.vertex(i).norm() == 0.0) lo = i;
    if ((m.vertex(i) - Vec::Ones(3)).norm() == 0.0) hi = i;
  }
  ASSERT_GE(lo, 0);
  ASSERT_GE(hi, 0);
  for (int k = 0; k < 6; ++k) {
    const auto el = m.element(k);
    const std::set<int> s(el.begin(), el.end());
    EXPECT_TRUE(s.count(lo) && s.count(hi)) << "tet " << k;
  }
  EXPECT_NEAR(domain_measure(m), 1.0, 1e-15);
}

TEST(Mesh, StructuredCounts) {
  for (int n : {1, 2, 4, 8}) {
    const Mesh m2 = generate_structured_mesh(2, n);
    EXPECT_EQ(m2.num_elements(), 2 * n * n);
    // each triangle has 3 facets, boundary facets are 4n
    EXPECT_EQ(2 * m2.num_facets() - 4 * n, 3 * m2.num_elements());
    const Mesh m3 = generate_structured_mesh(3, n);
    EXPECT_EQ(m3.num_elements(), 6 * n * n * n);
    EXPECT_EQ(2 * m3.num_facets() - 12 * n * n, 4 * m3.num_elements());
  }
}

TEST(Mesh, FirstElementMeasure) {
  for (int n : {2, 4, 8}) {
    EXPECT_NEAR(element_geometry(generate_structured_mesh(2, n), 0).measure, 1.0 / (2 * n * n), 1e-16);
    EXPECT_NEAR(element_geometry(generate_structured_mesh(3, n), 0).measure, 1.0 / (6 * n * n * n), 1e-16);
  }
}

TEST(Mesh, RejectsBadInput) {
  EXPECT_THROW(Mesh(4, {}, {{{0, 1, 2, 3}}}), InvalidArgument);
  EXPECT_THROW(Mesh(2, {Vec{{0.0, 0.0}}}, {}), InvalidArgument);
  EXPECT_THROW(Mesh(2, {Vec{{0.0, 0.0}}, Vec{{1.0, 0.0}}}, {{{0, 1, 2, -1}}}), InvalidArgument);
  EXPECT_THROW(generate_structured_mesh(2, 0), InvalidArgument);
}

TEST(Mesh, DegenerateElementIsReported) {
  const Mesh m(2, {Vec{{0.0, 0.0}}, Vec{{1.0, 0.0}}, Vec{{2.0, 0.0}}}, {{{0, 1, 2, -1}}});
  try {
    element_geometry(m, 0);
    FAIL() << "expected DegenerateElement";
  } catch (const DegenerateElement& e) {
    EXPECT_EQ(e.element(), 0);
  }
}

TEST(Mesh, DisconnectedMeshIsDetected) {
  // two triangles touching at a single vertex share no facet
  const Mesh m(2, {Vec{{0.0, 0.0}}, Vec{{1.0, 0.0}}, Vec{{0.0, 1.0}}, Vec{{-1.0, 0.0}}, Vec{{0.0, -1.0}}},
               {{{0, 1, 2, -1}}, {{0, 3, 4, -1}}});
  EXPECT_FALSE(check_connected(m));
  EXPECT_TRUE(check_connected(generate_structured_mesh(2, 3)));
  EXPECT_TRUE(check_connected(generate_structured_mesh(3, 2)));
}

TEST(Mesh, UnitRightTriangleGeometry) {
  const ElementGeometry g = element_geometry(unit_right_triangle(), 0);
  EXPECT_NEAR(g.measure, 0.5, 1e-16);
  EXPECT_NEAR(g.second_moment, 1.0 / 18.0, 1e-16);
  EXPECT_NEAR(g.c_k, 18.0, 1e-13);
  EXPECT_NEAR(g.barycenter(0), 1.0 / 3.0, 1e-16);
  // facet opposite vertex 0 is the hypotenuse
  EXPECT_NEAR(g.facet_measures[0], std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(g.facet_normals[0](0), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(g.facet_normals[0](1), 1.0 / std::sqrt(2.0), 1e-15);
}

class MeshGeometry : public ::testing::TestWithParam<int> {};

TEST_P(MeshGeometry, ClosedBoundaryUnitNormalsAndPartition) {
  const int d = GetParam();
  const Mesh m = generate_structured_mesh(d, d == 2 ? 5 : 3);
  double total = 0.0;
  for (int k = 0; k < m.num_elements(); ++k) {
    const ElementGeometry g = element_geometry(m, k);
    total += g.measure;
    Vec closure = Vec::Zero(d);
    for (int i = 0; i <= d; ++i) {
      EXPECT_NEAR(g.facet_normals[i].norm(), 1.0, 1e-14);
      closure += g.facet_measures[i] * g.facet_normals[i];
      // outward: points away from the opposite vertex
      const Vec mid = (g.barycenter * (d + 1) - g.vertices[i]) / d;
      EXPECT_GT((mid - g.vertices[i]).dot(g.facet_normals[i]), 0.0);
    }
    EXPECT_LT(closure.norm(), 1e-14);
  }
  EXPECT_NEAR(total, 1.0, 1e-13);
}

TEST_P(MeshGeometry, InteriorFacetNormalsAreOpposite) {
  const int d = GetParam();
  const Mesh m = generate_structured_mesh(d, d == 2 ? 4 : 2);
  int interior = 0;
  for (int f = 0; f < m.num_facets(); ++f) {
    const Facet& fc = m.facet(f);
    if (fc.boundary()) continue;
    ++interior;
    const Vec n0 = element_geometry(m, fc.elements[0]).facet_normals[fc.local_index[0]];
    const Vec n1 = element_geometry(m, fc.elements[1]).facet_normals[fc.local_index[1]];
    EXPECT_EQ((n0 + n1).norm(), 0.0) << "facet " << f;
    EXPECT_EQ(m.element_facet(fc.elements[0], fc.local_index[0]), f);
    EXPECT_EQ(m.neighbor(fc.elements[0], fc.local_index[0]), fc.elements[1]);
  }
  EXPECT_EQ(interior, m.num_interior_facets());
}

TEST_P(MeshGeometry, WriteReadRoundTrip) {
  const int d = GetParam();
  const Mesh m = generate_structured_mesh(d, 3);
  std::stringstream ss;
  write_mesh(ss, m);
  const Mesh r = read_mesh(ss);
  ASSERT_EQ(r.num_elements(), m.num_elements());
  ASSERT_EQ(r.num_vertices(), m.num_vertices());
  EXPECT_EQ(r.num_facets(), m.num_facets());
  for (int i = 0; i < m.num_vertices(); ++i) EXPECT_EQ((r.vertex(i) - m.vertex(i)).norm(), 0.0);
  for (int k = 0; k < m.num_elements(); ++k)
    for (int i = 0; i <= d; ++i) EXPECT_EQ(r.element(k)[i], m.element(k)[i]);
}

INSTANTIATE_TEST_SUITE_P(Dims, MeshGeometry, ::testing::Values(2, 3));

TEST(Mesh, ReadRejectsMalformedInput) {
  std::istringstream bad("2 3 1\n0 0\n1 0\n");
  EXPECT_THROW(read_mesh(bad), InvalidArgument);
  std::istringstream bad_dim("5 0 0\n");
  EXPECT_THROW(read_mesh(bad_dim), InvalidArgument);
}

TEST(Quadrature, RulesIntegrateMonomialsExactly) {
  // int_T x^a y^b = a! b! / (a+b+2)! on the reference triangle
  auto fact = [](int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
  };
  const std::array<Vec, 3> tri{Vec{{0.0, 0.0}}, Vec{{1.0, 0.0}}, Vec{{0.0, 1.0}}};
  for (int deg = 1; deg <= 8; ++deg) {
    const QuadratureRule r = simplex_rule(2, deg);
    for (int a = 0; a <= deg; ++a)
      for (int b = 0; a + b <= deg; ++b) {
        const double q = integrate(std::span<const Vec>(tri.data(), 3), r,
                                   [&](const Vec& x) { return std::pow(x(0), a) * std::pow(x(1), b); });
        EXPECT_NEAR(q, fact(a) * fact(b) / fact(a + b + 2), 1e-15) << deg << " " << a << " " << b;
      }
  }
  const std::array<Vec, 4> tet{Vec{{0.0, 0.0, 0.0}}, Vec{{1.0, 0.0, 0.0}}, Vec{{0.0, 1.0, 0.0}},
                               Vec{{0.0, 0.0, 1.0}}};
  for (int deg = 1; deg <= 6; ++deg) {
    const QuadratureRule r = simplex_rule(3, deg);
    for (int a = 0; a <= deg; ++a)
      for (int b = 0; a + b <= deg; ++b)
        for (int c = 0; a + b + c <= deg; ++c) {
          const double q = integrate(std::span<const Vec>(tet.data(), 4), r, [&](const Vec& x) {
            return std::pow(x(0), a) * std::pow(x(1), b) * std::pow(x(2), c);
          });
          EXPECT_NEAR(q, fact(a) * fact(b) * fact(c) / fact(a + b + c + 3), 1e-15);
        }
  }
}

TEST(Quadrature, FacetRuleHasEmbeddedMeasure) {
  const std::array<Vec, 2> seg{Vec{{0.0, 0.0}}, Vec{{3.0, 4.0}}};
  EXPECT_NEAR(integrate(std::span<const Vec>(seg.data(), 2), simplex_rule(1, 3), [](const Vec&) { return 1.0; }),
              5.0, 1e-14);
  const std::array<Vec, 3> tri{Vec{{0.0, 0.0, 0.0}}, Vec{{1.0, 0.0, 0.0}}, Vec{{0.0, 1.0, 1.0}}};
  EXPECT_NEAR(embedded_simplex_measure(std::span<const Vec>(tri.data(), 3)), std::sqrt(2.0) / 2.0, 1e-15);
}
