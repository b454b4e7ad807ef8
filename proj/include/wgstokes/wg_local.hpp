#pragma once

#include <Eigen/Dense>

#include <array>
#include <functional>

#include "wgstokes/mesh.hpp"
#include "wgstokes/quadrature.hpp"

namespace wgstokes {

/// Lowest-order Raviart-Thomas field a + c (x - x_K) on one element.
struct Rt0Field {
  Vec a;
  double c = 0.0;

  static Rt0Field zero(int dim) { return {Vec::Zero(dim), 0.0}; }

  Vec operator()(const Vec& x, const Vec& barycenter) const { return a + c * (x - barycenter); }

  Rt0Field& operator+=(const Rt0Field& o) {
    a += o.a;
    c += o.c;
    return *this;
  }
  friend Rt0Field operator+(Rt0Field l, const Rt0Field& r) { return l += r; }
  friend Rt0Field operator*(double s, Rt0Field f) {
    f.a *= s;
    f.c *= s;
    return f;
  }
};

/// L2(K) inner product.  The cross terms vanish because x - x_K has zero mean on K.
inline double inner_product(const Rt0Field& u, const Rt0Field& v, const ElementGeometry& g) {
  return g.measure * u.a.dot(v.a) + u.c * v.c * g.second_moment;
}

using LocalMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 5, 5>;

/// Element-local WG operators for the scalar basis {phi_K, phi_K,1 .. phi_K,d+1}.
/// Slot 0 is the interior basis function; slot 1+i is the one on local facet i.
struct LocalOperators {
  Rt0Field grad_interior;
  std::array<Rt0Field, 4> grad_facet;
  LocalMatrix stiffness;
  std::array<Vec, 4> div_row;
  double pressure_mass = 0.0;
};

/// Closed-form weak gradients of the interior and facet basis functions.
inline LocalOperators weak_gradient_basis(const ElementGeometry& g) {
  const int d = g.dim;
  LocalOperators op;
  op.grad_interior = {Vec::Zero(d), -g.c_k};
  for (int i = 0; i <= d; ++i)
    op.grad_facet[i] = {(g.facet_measures[i] / g.measure) * g.facet_normals[i], g.c_k / (d + 1)};
  return op;
}

/// (grad_w phi_i, grad_w phi_j)_K over the scalar basis, (d+2) x (d+2).
inline LocalMatrix local_stiffness(const ElementGeometry& g) {
  const LocalOperators op = weak_gradient_basis(g);
  const int n = g.dim + 2;
  auto basis = [&](int s) -> const Rt0Field& { return s == 0 ? op.grad_interior : op.grad_facet[s - 1]; };
  LocalMatrix k(n, n);
  for (int s = 0; s < n; ++s)
    for (int t = s; t < n; ++t) k(s, t) = k(t, s) = inner_product(basis(s), basis(t), g);
  return k;
}

/// Rows |e_i| n_i: (div_w u, 1)_K = sum_i row_i . u_i for facet values u_i.
inline std::array<Vec, 4> local_divergence(const ElementGeometry& g) {
  std::array<Vec, 4> rows;
  for (int i = 0; i <= g.dim; ++i) rows[i] = g.facet_measures[i] * g.facet_normals[i];
  return rows;
}

/// Weak divergence (a constant on K) of facet values u_i.
inline double weak_divergence(const ElementGeometry& g, std::span<const Vec> facet_values) {
  double s = 0.0;
  for (int i = 0; i <= g.dim; ++i) s += g.facet_measures[i] * facet_values[i].dot(g.facet_normals[i]);
  return s / g.measure;
}

inline LocalOperators local_operators(const ElementGeometry& g) {
  LocalOperators op = weak_gradient_basis(g);
  op.stiffness = local_stiffness(g);
  op.div_row = local_divergence(g);
  op.pressure_mass = g.measure;
  return op;
}

/// RT0 facet basis with unit normal trace on facet i and zero normal trace on
/// the other facets: (|e_i| / (d |K|)) (x - v_i), v_i the opposite vertex.
inline Vec lifting_basis(const ElementGeometry& g, int i, const Vec& x) {
  return (g.facet_measures[i] / (g.dim * g.measure)) * (x - g.vertices[i]);
}

using VectorField = std::function<Vec(const Vec&)>;

/// (f, Lambda_h phi_i)_K for every local facet i, by quadrature.  For the
/// vector test function phi_i e_c the load is n_i[c] times entry i.
inline std::array<double, 4> lifting_load(const ElementGeometry& g, const VectorField& f,
                                          const QuadratureRule& rule) {
  if (rule.simplex_dim != g.dim) throw InvalidArgument("quadrature rule dimension mismatch");
  std::array<double, 4> load{};
  const std::span<const Vec> verts(g.vertices.data(), g.dim + 1);
  for (std::size_t q = 0; q < rule.points.size(); ++q) {
    const Vec x = map_point(verts, rule.points[q]);
    const Vec fx = f(x);
    const double w = rule.weights[q] * g.measure;
    for (int i = 0; i <= g.dim; ++i) load[i] += w * fx.dot(lifting_basis(g, i, x));
  }
  return load;
}

}  // namespace wgstokes
