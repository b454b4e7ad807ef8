#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <functional>
#include <ostream>
#include <vector>

#include "wgstokes/errors.hpp"
#include "wgstokes/mesh.hpp"
#include "wgstokes/quadrature.hpp"
#include "wgstokes/wg_local.hpp"

namespace wgstokes {

using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Eigen::VectorXd;
using ScalarField = std::function<double(const Vec&)>;
/// Returns the d x d Jacobian, row c being the gradient of component c.
using TensorField = std::function<Eigen::MatrixXd(const Vec&)>;

/// Degree-of-freedom layout.  Velocity unknowns: interior values
/// (element-major, component-minor) followed by interior-facet values.
/// Boundary facets carry no unknowns; their projected data lives in
/// `boundary_values`.
struct WgSpace {
  int dim = 0;
  int n_elements = 0;
  int n_interior_facets = 0;
  std::vector<int> facet_slot;        // facet -> interior slot, -1 on the boundary
  std::vector<Vec> boundary_values;   // facet -> Q_h g (boundary facets only)

  int n_interior_velocity() const noexcept { return dim * n_elements; }
  int n_facet_velocity() const noexcept { return dim * n_interior_facets; }
  int n_velocity() const noexcept { return n_interior_velocity() + n_facet_velocity(); }
  int n_pressure() const noexcept { return n_elements; }
  int n_unknowns() const noexcept { return n_velocity() + n_pressure(); }

  int interior_dof(int k, int c) const noexcept { return k * dim + c; }
  /// -1 for boundary facets.
  int facet_dof(int f, int c) const noexcept {
    const int s = facet_slot[f];
    return s < 0 ? -1 : n_interior_velocity() + s * dim + c;
  }
};

/// Blocks of [[mu A, -B0^T], [-B0, 0]] (u, p) = (b1, b2).  A excludes mu.
struct SaddleBlocks {
  int dim = 0;
  SpMat A;
  SpMat B0;
  VectorXd Mp;  // diagonal pressure mass: element measures
  VectorXd b1;
  VectorXd b2;
};

struct AssemblyOptions {
  int rhs_degree = 4;       // (f, Lambda_h v)_K
  int boundary_degree = 8;  // facet averages of g
};

/// Facet average of g on facet f.
inline Vec project_boundary(const Mesh& mesh, const VectorField& g, int f, const QuadratureRule& rule) {
  const Facet& fc = mesh.facet(f);
  std::array<Vec, 3> verts;
  for (int j = 0; j < mesh.dim(); ++j) verts[j] = mesh.vertex(fc.vertices[j]);
  const std::span<const Vec> s(verts.data(), mesh.dim());
  return Vec(integrate(s, rule, [&](const Vec& x) -> Vec { return g(x); }) / embedded_simplex_measure(s));
}

inline Vec project_boundary(const Mesh& mesh, const VectorField& g, int f, int degree = 8) {
  return project_boundary(mesh, g, f, simplex_rule(mesh.dim() - 1, degree));
}

/// Element average of u on element k.
inline Vec project_interior(const Mesh& mesh, const VectorField& u, int k, const QuadratureRule& rule) {
  const ElementGeometry g = element_geometry(mesh, k);
  const std::span<const Vec> s(g.vertices.data(), mesh.dim() + 1);
  return Vec(integrate(s, rule, [&](const Vec& x) -> Vec { return u(x); }) / g.measure);
}

inline Vec project_interior(const Mesh& mesh, const VectorField& u, int k, int degree = 6) {
  return project_interior(mesh, u, k, simplex_rule(mesh.dim(), degree));
}

inline WgSpace make_space(const Mesh& mesh) {
  WgSpace sp;
  sp.dim = mesh.dim();
  sp.n_elements = mesh.num_elements();
  sp.facet_slot.assign(mesh.num_facets(), -1);
  sp.boundary_values.assign(mesh.num_facets(), Vec::Zero(mesh.dim()));
  for (int f = 0; f < mesh.num_facets(); ++f)
    if (!mesh.facet(f).boundary()) sp.facet_slot[f] = sp.n_interior_facets++;
  return sp;
}

/// Assembles A, B0, Mp, b1 and b2 with the Dirichlet datum g eliminated.
inline std::pair<WgSpace, SaddleBlocks> assemble(const Mesh& mesh, double mu, const VectorField& f,
                                                 const VectorField& g, const AssemblyOptions& opt = {}) {
  if (!check_connected(mesh)) throw DisconnectedMesh("mesh is not connected through interior facets");
  const int d = mesh.dim();
  WgSpace sp = make_space(mesh);
  const QuadratureRule facet_rule = simplex_rule(d - 1, opt.boundary_degree);
  const QuadratureRule cell_rule = simplex_rule(d, opt.rhs_degree);
  for (int fc = 0; fc < mesh.num_facets(); ++fc)
    if (mesh.facet(fc).boundary()) sp.boundary_values[fc] = project_boundary(mesh, g, fc, facet_rule);

  const int nu = sp.n_velocity();
  const int np = sp.n_pressure();
  SaddleBlocks blk;
  blk.dim = d;
  blk.Mp.resize(np);
  blk.b1 = VectorXd::Zero(nu);
  blk.b2 = VectorXd::Zero(np);
  std::vector<Eigen::Triplet<double>> ta, tb;
  ta.reserve(static_cast<std::size_t>(mesh.num_elements()) * d * (d + 2) * (d + 2));
  tb.reserve(static_cast<std::size_t>(mesh.num_elements()) * d * (d + 1));

  for (int k = 0; k < mesh.num_elements(); ++k) {
    const ElementGeometry geom = element_geometry(mesh, k);
    const LocalMatrix stiff = local_stiffness(geom);
    const auto div = local_divergence(geom);
    const auto load = lifting_load(geom, f, cell_rule);
    blk.Mp(k) = geom.measure;

    std::array<int, 5> facet_of{};  // slot -> global facet (slot 0 unused)
    for (int i = 0; i <= d; ++i) facet_of[i + 1] = mesh.element_facet(k, i);
    auto dof = [&](int slot, int c) {
      return slot == 0 ? sp.interior_dof(k, c) : sp.facet_dof(facet_of[slot], c);
    };

    for (int c = 0; c < d; ++c)
      for (int s = 0; s < d + 2; ++s) {
        const int row = dof(s, c);
        if (row < 0) continue;
        for (int t = 0; t < d + 2; ++t) {
          const int col = dof(t, c);
          if (col >= 0)
            ta.emplace_back(row, col, stiff(s, t));
          else
            blk.b1(row) -= mu * stiff(s, t) * sp.boundary_values[facet_of[t]](c);
        }
      }

    for (int i = 0; i <= d; ++i) {
      const int fc = facet_of[i + 1];
      if (sp.facet_slot[fc] < 0) {
        blk.b2(k) += div[i].dot(sp.boundary_values[fc]);
        continue;
      }
      for (int c = 0; c < d; ++c) {
        const int col = sp.facet_dof(fc, c);
        tb.emplace_back(k, col, div[i](c));
        blk.b1(col) += geom.facet_normals[i](c) * load[i];
      }
    }
  }
  blk.A.resize(nu, nu);
  blk.A.setFromTriplets(ta.begin(), ta.end());
  blk.B0.resize(np, nu);
  blk.B0.setFromTriplets(tb.begin(), tb.end());
  blk.A.makeCompressed();
  blk.B0.makeCompressed();
  return {std::move(sp), std::move(blk)};
}

/// WG interpolant (Q_h u on interiors and interior facets).
inline VectorXd interpolate_velocity(const Mesh& mesh, const WgSpace& sp, const VectorField& u,
                                     int degree = 8) {
  VectorXd v(sp.n_velocity());
  const QuadratureRule cell = simplex_rule(mesh.dim(), degree);
  const QuadratureRule face = simplex_rule(mesh.dim() - 1, degree);
  for (int k = 0; k < mesh.num_elements(); ++k) {
    const Vec m = project_interior(mesh, u, k, cell);
    for (int c = 0; c < sp.dim; ++c) v(sp.interior_dof(k, c)) = m(c);
  }
  for (int f = 0; f < mesh.num_facets(); ++f) {
    if (sp.facet_slot[f] < 0) continue;
    const Vec m = project_boundary(mesh, u, f, face);
    for (int c = 0; c < sp.dim; ++c) v(sp.facet_dof(f, c)) = m(c);
  }
  return v;
}

/// Weak gradient of component c of the discrete velocity on element k.
inline Rt0Field weak_gradient(const Mesh& mesh, const WgSpace& sp, const ElementGeometry& geom,
                              int k, int c, const VectorXd& u) {
  const LocalOperators op = weak_gradient_basis(geom);
  Rt0Field grad = u(sp.interior_dof(k, c)) * op.grad_interior;
  for (int i = 0; i <= mesh.dim(); ++i) {
    const int f = mesh.element_facet(k, i);
    const int j = sp.facet_dof(f, c);
    const double val = j >= 0 ? u(j) : sp.boundary_values[f](c);
    grad += val * op.grad_facet[i];
  }
  return grad;
}

struct ErrorNorms {
  double err_p = 0.0;     // ||p - p_h||, both normalized to zero mean
  double err_grad = 0.0;  // ||grad u - grad_w u_h||
  double err_u0 = 0.0;    // ||u - u_h^0||
  double err_proj = 0.0;  // ||Q_h^0 u - u_h^0||
};

struct ExactSolution {
  VectorField u;
  TensorField grad_u;
  ScalarField p;
};

/// L2 error norms of an (unscaled) discrete solution.  The discrete pressure
/// is pinned and the exact one is not, so both are compared modulo constants.
inline ErrorNorms compute_errors(const Mesh& mesh, const WgSpace& sp, const VectorXd& u_h,
                                 const VectorXd& p_h, const ExactSolution& exact, int degree = 6) {
  const int d = mesh.dim();
  const QuadratureRule rule = simplex_rule(d, degree);
  double omega = 0.0, p_int = 0.0, ph_int = 0.0;
  std::vector<ElementGeometry> geoms;
  geoms.reserve(mesh.num_elements());
  for (int k = 0; k < mesh.num_elements(); ++k) {
    geoms.push_back(element_geometry(mesh, k));
    const auto& g = geoms.back();
    const std::span<const Vec> s(g.vertices.data(), d + 1);
    omega += g.measure;
    p_int += integrate(s, rule, [&](const Vec& x) { return exact.p(x); });
    ph_int += g.measure * p_h(k);
  }
  const double p_mean = p_int / omega, ph_mean = ph_int / omega;

  ErrorNorms e;
  for (int k = 0; k < mesh.num_elements(); ++k) {
    const auto& g = geoms[k];
    const std::span<const Vec> s(g.vertices.data(), d + 1);
    Vec uh0(d);
    std::array<Rt0Field, 3> grads;
    for (int c = 0; c < d; ++c) {
      uh0(c) = u_h(sp.interior_dof(k, c));
      grads[c] = weak_gradient(mesh, sp, g, k, c, u_h);
    }
    const double pk = p_h(k) - ph_mean;
    e.err_p += integrate(s, rule, [&](const Vec& x) {
      const double r = exact.p(x) - p_mean - pk;
      return r * r;
    });
    e.err_u0 += integrate(s, rule, [&](const Vec& x) { return (exact.u(x) - uh0).squaredNorm(); });
    e.err_grad += integrate(s, rule, [&](const Vec& x) {
      const Eigen::MatrixXd gu = exact.grad_u(x);
      double sum = 0.0;
      for (int c = 0; c < d; ++c)
        sum += (Vec(gu.row(c).transpose()) - grads[c](x, g.barycenter)).squaredNorm();
      return sum;
    });
    const Vec qu = Vec(integrate(s, rule, [&](const Vec& x) -> Vec { return exact.u(x); }) / g.measure);
    e.err_proj += g.measure * (qu - uh0).squaredNorm();
  }
  e.err_p = std::sqrt(e.err_p);
  e.err_u0 = std::sqrt(e.err_u0);
  e.err_grad = std::sqrt(e.err_grad);
  e.err_proj = std::sqrt(e.err_proj);
  return e;
}

/// Matrix Market coordinate dump (debugging aid).
inline void write_matrix_market(std::ostream& os, const SpMat& m) {
  os << "%%MatrixMarket matrix coordinate real general\n";
  os << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
  os.precision(17);
  for (int r = 0; r < m.outerSize(); ++r)
    for (SpMat::InnerIterator it(m, r); it; ++it) os << r + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
}

}  // namespace wgstokes
