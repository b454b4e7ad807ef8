#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "wgstokes/errors.hpp"

namespace wgstokes {

/// Point or vector in R^d, d <= 3. Fixed capacity, so no heap traffic.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;

/// A (d-1)-simplex of the mesh.  `vertices` is sorted (canonical key).
struct Facet {
  std::array<int, 3> vertices{-1, -1, -1};
  std::array<int, 2> elements{-1, -1};
  std::array<int, 2> local_index{-1, -1};

  bool boundary() const noexcept { return elements[1] < 0; }
};

/// Simplicial mesh with facet topology.  Local facet i of an element is the
/// facet opposite its local vertex i.  Immutable after construction.
class Mesh {
 public:
  Mesh(int dim, std::vector<Vec> vertices, std::vector<std::array<int, 4>> elements)
      : dim_(dim), vertices_(std::move(vertices)), elements_(std::move(elements)) {
    if (dim_ != 2 && dim_ != 3) throw InvalidArgument("mesh dimension must be 2 or 3");
    if (elements_.empty()) throw InvalidArgument("mesh has no elements");
    for (const auto& v : vertices_)
      if (v.size() != dim_) throw InvalidArgument("vertex dimension mismatch");
    for (const auto& el : elements_)
      for (int i = 0; i <= dim_; ++i)
        if (el[i] < 0 || el[i] >= num_vertices())
          throw InvalidArgument("element references an unknown vertex");
    build_topology();
  }

  int dim() const noexcept { return dim_; }
  int num_vertices() const noexcept { return static_cast<int>(vertices_.size()); }
  int num_elements() const noexcept { return static_cast<int>(elements_.size()); }
  int num_facets() const noexcept { return static_cast<int>(facets_.size()); }
  int num_interior_facets() const noexcept { return num_interior_facets_; }

  const Vec& vertex(int i) const { return vertices_[i]; }
  std::span<const int> element(int k) const {
    return {elements_[k].data(), static_cast<std::size_t>(dim_ + 1)};
  }
  const Facet& facet(int f) const { return facets_[f]; }
  /// Global facet index of local facet i (opposite local vertex i) of element k.
  int element_facet(int k, int i) const { return element_facets_[k][i]; }
  /// Element across local facet i of element k, or -1 on the boundary.
  int neighbor(int k, int i) const {
    const Facet& f = facets_[element_facets_[k][i]];
    return f.elements[0] == k ? f.elements[1] : f.elements[0];
  }

 private:
  void build_topology() {
    std::map<std::array<int, 3>, int> index;
    element_facets_.assign(elements_.size(), {-1, -1, -1, -1});
    for (int k = 0; k < num_elements(); ++k) {
      for (int i = 0; i <= dim_; ++i) {
        std::array<int, 3> key{-1, -1, -1};
        int m = 0;
        for (int j = 0; j <= dim_; ++j)
          if (j != i) key[m++] = elements_[k][j];
        std::sort(key.begin(), key.begin() + dim_);
        auto [it, inserted] = index.try_emplace(key, num_facets());
        if (inserted) {
          Facet f;
          f.vertices = key;
          f.elements[0] = k;
          f.local_index[0] = i;
          facets_.push_back(f);
        } else {
          Facet& f = facets_[it->second];
          if (f.elements[1] >= 0)
            throw InvalidArgument("facet shared by more than two elements");
          f.elements[1] = k;
          f.local_index[1] = i;
        }
        element_facets_[k][i] = it->second;
      }
    }
    num_interior_facets_ = static_cast<int>(
        std::count_if(facets_.begin(), facets_.end(), [](const Facet& f) { return !f.boundary(); }));
  }

  int dim_;
  std::vector<Vec> vertices_;
  std::vector<std::array<int, 4>> elements_;
  std::vector<Facet> facets_;
  std::vector<std::array<int, 4>> element_facets_;
  int num_interior_facets_ = 0;
};

/// Structured mesh of the unit square (2 n^2 triangles, each cell cut along
/// the diagonal through its lower-left corner) or the unit cube (6 n^3 Kuhn
/// tetrahedra sharing each cell's main diagonal).  Element 0 touches the origin.
inline Mesh generate_structured_mesh(int dim, int n) {
  if (n < 1) throw InvalidArgument("number of subdivisions must be >= 1");
  const double h = 1.0 / n;
  std::vector<Vec> vertices;
  std::vector<std::array<int, 4>> elements;
  if (dim == 2) {
    auto id = [n](int i, int j) { return j * (n + 1) + i; };
    for (int j = 0; j <= n; ++j)
      for (int i = 0; i <= n; ++i) vertices.push_back(Vec{{i * h, j * h}});
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        elements.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1), -1});
        elements.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1), -1});
      }
  } else if (dim == 3) {
    auto id = [n](int i, int j, int k) { return (k * (n + 1) + j) * (n + 1) + i; };
    for (int k = 0; k <= n; ++k)
      for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i) vertices.push_back(Vec{{i * h, j * h, k * h}});
    std::array<int, 3> perm{0, 1, 2};
    std::vector<std::array<int, 3>> perms;
    do perms.push_back(perm);
    while (std::next_permutation(perm.begin(), perm.end()));
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
          for (const auto& p : perms) {
            std::array<int, 3> c{i, j, k};
            std::array<int, 4> tet{};
            tet[0] = id(c[0], c[1], c[2]);
            for (int s = 0; s < 3; ++s) {
              ++c[p[s]];
              tet[s + 1] = id(c[0], c[1], c[2]);
            }
            // odd permutations give negatively oriented tets
            const bool odd = (p[0] == 0 && p[1] == 2) || (p[0] == 1 && p[1] == 0) ||
                             (p[0] == 2 && p[1] == 1);
            if (odd) std::swap(tet[2], tet[3]);
            elements.push_back(tet);
          }
  } else {
    throw InvalidArgument("mesh dimension must be 2 or 3");
  }
  return Mesh(dim, std::move(vertices), std::move(elements));
}

/// True iff every element is reachable from element 0 through interior facets.
inline bool check_connected(const Mesh& mesh) {
  std::vector<char> seen(mesh.num_elements(), 0);
  std::queue<int> todo;
  todo.push(0);
  seen[0] = 1;
  int reached = 1;
  while (!todo.empty()) {
    const int k = todo.front();
    todo.pop();
    for (int i = 0; i <= mesh.dim(); ++i) {
      const int nb = mesh.neighbor(k, i);
      if (nb >= 0 && !seen[nb]) {
        seen[nb] = 1;
        ++reached;
        todo.push(nb);
      }
    }
  }
  return reached == mesh.num_elements();
}

/// Geometry of one simplex.  facet_* are indexed by local facet.
struct ElementGeometry {
  int dim = 0;
  std::array<Vec, 4> vertices;
  double measure = 0.0;
  Vec barycenter;
  std::array<double, 4> facet_measures{};
  std::array<Vec, 4> facet_normals;
  /// Integral over K of |x - x_K|^2.
  double second_moment = 0.0;
  /// d |K| / second_moment.
  double c_k = 0.0;
};

namespace detail {

inline Vec facet_unit_normal(int dim, std::span<const Vec> pts, double& measure) {
  if (dim == 2) {
    const Vec t = pts[1] - pts[0];
    measure = t.norm();
    return Vec{{t(1) / measure, -t(0) / measure}};
  }
  const Eigen::Vector3d a = pts[1] - pts[0];
  const Eigen::Vector3d b = pts[2] - pts[0];
  const Eigen::Vector3d c = a.cross(b);
  const double len = c.norm();
  measure = 0.5 * len;
  return Vec(c / len);
}

}  // namespace detail

/// Geometry of a simplex given by its d+1 vertices.  `element` is only used in
/// the error report.
inline ElementGeometry simplex_geometry(int dim, std::span<const Vec> verts, int element = -1) {
  ElementGeometry g;
  g.dim = dim;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3> jac(dim, dim);
  double scale = 0.0;
  for (int i = 0; i < dim; ++i) {
    jac.col(i) = verts[i + 1] - verts[0];
    scale = std::max(scale, jac.col(i).norm());
  }
  const double det = jac.determinant();
  const double fact = dim == 2 ? 2.0 : 6.0;
  g.measure = std::abs(det) / fact;
  if (!(std::abs(det) > 1e-13 * std::pow(scale, dim)))
    throw DegenerateElement(element, "degenerate element " + std::to_string(element) +
                                         " (zero measure)");
  g.barycenter = Vec::Zero(dim);
  for (int i = 0; i <= dim; ++i) {
    g.vertices[i] = verts[i];
    g.barycenter += verts[i];
  }
  g.barycenter /= dim + 1;
  double sq = 0.0;
  for (int i = 0; i <= dim; ++i) sq += (verts[i] - g.barycenter).squaredNorm();
  // int_K x_a x_b = |K|/((d+1)(d+2)) (sum_i v_ia v_ib + (sum v)_a (sum v)_b), about x_K
  g.second_moment = g.measure * sq / ((dim + 1) * (dim + 2));
  g.c_k = dim * g.measure / g.second_moment;
  for (int i = 0; i <= dim; ++i) {
    std::array<Vec, 3> fv;
    int m = 0;
    for (int j = 0; j <= dim; ++j)
      if (j != i) fv[m++] = verts[j];
    Vec n = detail::facet_unit_normal(dim, std::span<const Vec>(fv.data(), dim), g.facet_measures[i]);
    if ((verts[i] - fv[0]).dot(n) > 0.0) n = -n;
    g.facet_normals[i] = n;
  }
  return g;
}

/// Geometry of mesh element k.  Facet normals are computed from the facet's
/// canonical vertex order, so the two sides of an interior facet see exactly
/// opposite normals.
inline ElementGeometry element_geometry(const Mesh& mesh, int k) {
  if (k < 0 || k >= mesh.num_elements()) throw InvalidArgument("element index out of range");
  const int d = mesh.dim();
  std::array<Vec, 4> verts;
  const auto el = mesh.element(k);
  for (int i = 0; i <= d; ++i) verts[i] = mesh.vertex(el[i]);
  ElementGeometry g = simplex_geometry(d, std::span<const Vec>(verts.data(), d + 1), k);
  for (int i = 0; i <= d; ++i) {
    const Facet& f = mesh.facet(mesh.element_facet(k, i));
    std::array<Vec, 3> fv;
    for (int j = 0; j < d; ++j) fv[j] = mesh.vertex(f.vertices[j]);
    double meas = 0.0;
    Vec n = detail::facet_unit_normal(d, std::span<const Vec>(fv.data(), d), meas);
    if ((verts[i] - fv[0]).dot(n) > 0.0) n = -n;
    g.facet_normals[i] = n;
    g.facet_measures[i] = meas;
  }
  return g;
}

inline double domain_measure(const Mesh& mesh) {
  double s = 0.0;
  for (int k = 0; k < mesh.num_elements(); ++k) s += element_geometry(mesh, k).measure;
  return s;
}

/// Plain-text dump: `dim n_vertices n_elements`, vertex lines, element lines.
inline void write_mesh(std::ostream& os, const Mesh& mesh) {
  os << mesh.dim() << ' ' << mesh.num_vertices() << ' ' << mesh.num_elements() << '\n';
  os.precision(17);
  for (int i = 0; i < mesh.num_vertices(); ++i) {
    for (int c = 0; c < mesh.dim(); ++c) os << (c ? " " : "") << mesh.vertex(i)(c);
    os << '\n';
  }
  for (int k = 0; k < mesh.num_elements(); ++k) {
    const auto el = mesh.element(k);
    for (int i = 0; i <= mesh.dim(); ++i) os << (i ? " " : "") << el[i];
    os << '\n';
  }
}

inline Mesh read_mesh(std::istream& is) {
  int dim = 0, nv = 0, ne = 0;
  if (!(is >> dim >> nv >> ne)) throw InvalidArgument("malformed mesh header");
  if (dim != 2 && dim != 3) throw InvalidArgument("mesh dimension must be 2 or 3");
  std::vector<Vec> verts(nv, Vec::Zero(dim));
  for (auto& v : verts)
    for (int c = 0; c < dim; ++c)
      if (!(is >> v(c))) throw InvalidArgument("malformed vertex line");
  std::vector<std::array<int, 4>> elems(ne, {-1, -1, -1, -1});
  for (auto& e : elems)
    for (int i = 0; i <= dim; ++i)
      if (!(is >> e[i])) throw InvalidArgument("malformed element line");
  return Mesh(dim, std::move(verts), std::move(elems));
}

}  // namespace wgstokes
