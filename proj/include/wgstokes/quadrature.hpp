#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <type_traits>
#include <utility>
#include <vector>

#include "wgstokes/errors.hpp"
#include "wgstokes/mesh.hpp"

namespace wgstokes {

/// Quadrature on the reference k-simplex {x >= 0, sum x <= 1}.  Weights sum
/// to 1, so a rule integrates the *average* of a function; multiply by the
/// simplex measure for the integral.
struct QuadratureRule {
  int simplex_dim = 0;
  int degree = 0;
  std::vector<Vec> points;
  std::vector<double> weights;
};

/// Gauss-Legendre nodes and weights on [0, 1] (weights sum to 1).
inline void gauss_legendre_01(int m, std::vector<double>& x, std::vector<double>& w) {
  x.assign(m, 0.0);
  w.assign(m, 0.0);
  for (int i = 0; i < m; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 1; j <= m; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
      }
      dp = m * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[i] = 0.5 * (1.0 - z);
    w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
  }
}

/// Conical-product (collapsed Gauss) rule on the reference k-simplex, exact
/// for polynomials of total degree <= `degree`.
inline QuadratureRule simplex_rule(int simplex_dim, int degree) {
  if (simplex_dim < 1 || simplex_dim > 3) throw InvalidArgument("simplex dimension must be 1..3");
  if (degree < 0 || degree > 40)
    throw InvalidArgument("unknown quadrature degree " + std::to_string(degree));
  QuadratureRule rule;
  rule.simplex_dim = simplex_dim;
  rule.degree = degree;
  // the collapsed Jacobian (1-u)^(k-1) raises the degree in u by k-1
  const int m = (degree + simplex_dim) / 2 + 1;
  std::vector<double> x, w;
  gauss_legendre_01(m, x, w);
  const double fact = simplex_dim == 1 ? 1.0 : (simplex_dim == 2 ? 2.0 : 6.0);
  if (simplex_dim == 1) {
    for (int i = 0; i < m; ++i) {
      rule.points.push_back(Vec{{x[i]}});
      rule.weights.push_back(w[i]);
    }
  } else if (simplex_dim == 2) {
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        const double u = x[i], v = x[j];
        rule.points.push_back(Vec{{u, v * (1.0 - u)}});
        rule.weights.push_back(fact * w[i] * w[j] * (1.0 - u));
      }
  } else {
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        for (int l = 0; l < m; ++l) {
          const double u = x[i], v = x[j], t = x[l];
          rule.points.push_back(Vec{{u, v * (1.0 - u), t * (1.0 - u) * (1.0 - v)}});
          rule.weights.push_back(fact * w[i] * w[j] * w[l] * (1.0 - u) * (1.0 - u) * (1.0 - v));
        }
  }
  return rule;
}

/// Maps a reference point onto the simplex with the given vertices.
inline Vec map_point(std::span<const Vec> verts, const Vec& ref) {
  Vec x = verts[0];
  for (int i = 0; i < ref.size(); ++i) x += ref(i) * (verts[i + 1] - verts[0]);
  return x;
}

/// Measure of a k-simplex embedded in R^d (k <= d <= 3).
inline double embedded_simplex_measure(std::span<const Vec> verts) {
  const int k = static_cast<int>(verts.size()) - 1;
  const int d = static_cast<int>(verts[0].size());
  Eigen::MatrixXd e(d, k);
  for (int i = 0; i < k; ++i) e.col(i) = verts[i + 1] - verts[0];
  const double gram = (e.transpose() * e).determinant();
  const double fact = k == 1 ? 1.0 : (k == 2 ? 2.0 : 6.0);
  return std::sqrt(std::max(gram, 0.0)) / fact;
}

/// Integral over the simplex of f, where f returns anything supporting
/// `+=` and scalar multiplication (double, Vec, Eigen matrices).
template <class F>
auto integrate(std::span<const Vec> verts, const QuadratureRule& rule, F&& f) {
  if (static_cast<int>(verts.size()) != rule.simplex_dim + 1)
    throw InvalidArgument("quadrature rule does not match simplex dimension");
  const double meas = embedded_simplex_measure(verts);
  using R = std::decay_t<decltype(f(std::declval<const Vec&>()))>;
  R sum = (rule.weights[0] * meas) * f(map_point(verts, rule.points[0]));
  for (std::size_t q = 1; q < rule.points.size(); ++q)
    sum += (rule.weights[q] * meas) * f(map_point(verts, rule.points[q]));
  return sum;
}

}  // namespace wgstokes
