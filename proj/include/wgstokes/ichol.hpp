#pragma once

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <vector>

#include "wgstokes/errors.hpp"

namespace wgstokes {

/// Lower-triangular factor L with A + shift I ~= L L^T.
struct IncompleteCholesky {
  Eigen::SparseMatrix<double> L;  // column major, sorted rows
  double shift = 0.0;
  long dropped = 0;

  Eigen::Index size() const { return L.rows(); }
  /// z = (L L^T)^{-1} r
  void apply(const Eigen::VectorXd& r, Eigen::VectorXd& z) const {
    z = L.triangularView<Eigen::Lower>().solve(r);
    L.transpose().triangularView<Eigen::Upper>().solveInPlace(z);
  }
};

namespace detail {

/// Column-oriented threshold IC.  Entries below droptol * ||A(j:end, j)||_1
/// are dropped.  Returns false on a non-positive pivot.
inline bool ichol_threshold(const Eigen::SparseMatrix<double>& a_lower, double droptol, double shift,
                            IncompleteCholesky& out) {
  const Eigen::Index n = a_lower.rows();
  std::vector<std::vector<std::pair<int, double>>> cols(n);  // (row, value), row >= col
  std::vector<std::vector<std::pair<int, double>>> rows(n);  // (col, value) for col < row
  std::vector<std::size_t> next(n, 0);  // first entry in cols[k] with row >= current column
  std::vector<double> work(n, 0.0);
  std::vector<char> mark(n, 0);
  std::vector<int> touched;
  long dropped = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    touched.clear();
    double colnorm = 0.0;
    for (Eigen::SparseMatrix<double>::InnerIterator it(a_lower, j); it; ++it) {
      const int i = static_cast<int>(it.row());
      if (i < j) continue;
      double v = it.value();
      if (i == j) v += shift;
      work[i] += v;
      colnorm += std::abs(v);
      if (!mark[i]) {
        mark[i] = 1;
        touched.push_back(i);
      }
    }
    for (const auto& [k, ljk] : rows[j]) {
      auto& ck = cols[k];
      std::size_t p = next[k];
      while (p < ck.size() && ck[p].first < j) ++p;
      next[k] = p;
      for (; p < ck.size(); ++p) {
        const int i = ck[p].first;
        work[i] -= ck[p].second * ljk;
        if (!mark[i]) {
          mark[i] = 1;
          touched.push_back(i);
        }
      }
    }
    const double pivot = work[j];
    if (!(pivot > 0.0)) {
      for (int i : touched) {
        work[i] = 0.0;
        mark[i] = 0;
      }
      return false;
    }
    const double ljj = std::sqrt(pivot);
    std::sort(touched.begin(), touched.end());
    auto& cj = cols[j];
    cj.emplace_back(static_cast<int>(j), ljj);
    for (int i : touched) {
      if (i != j) {
        const double lij = work[i] / ljj;
        if (std::abs(lij) >= droptol * colnorm) {
          cj.emplace_back(i, lij);
          rows[i].emplace_back(static_cast<int>(j), lij);
        } else {
          ++dropped;
        }
      }
      work[i] = 0.0;
      mark[i] = 0;
    }
  }
  std::vector<Eigen::Triplet<double>> trip;
  for (Eigen::Index j = 0; j < n; ++j)
    for (const auto& [i, v] : cols[j]) trip.emplace_back(i, static_cast<int>(j), v);
  out.L.resize(n, n);
  out.L.setFromTriplets(trip.begin(), trip.end());
  out.L.makeCompressed();
  out.shift = shift;
  out.dropped = dropped;
  return true;
}

}  // namespace detail

/// Threshold incomplete Cholesky of a sparse SPD matrix.  On a non-positive
/// pivot the factorization restarts on A + alpha I, alpha starting at
/// 1e-3 * mean(diag A) and doubling, up to `max_shifts` attempts.
template <class SparseMatrix>
IncompleteCholesky incomplete_factorization(const SparseMatrix& a, double droptol = 1e-3,
                                            int max_shifts = 30) {
  if (a.rows() != a.cols()) throw InvalidArgument("matrix must be square");
  if (droptol < 0.0) throw InvalidArgument("drop tolerance must be >= 0");
  const Eigen::SparseMatrix<double> lower = Eigen::SparseMatrix<double>(a).template triangularView<Eigen::Lower>();
  IncompleteCholesky ic;
  if (detail::ichol_threshold(lower, droptol, 0.0, ic)) return ic;
  double alpha = 1e-3 * a.diagonal().mean();
  for (int s = 0; s < max_shifts; ++s, alpha *= 2.0)
    if (detail::ichol_threshold(lower, droptol, alpha, ic)) return ic;
  throw NotPositiveDefinite("incomplete Cholesky broke down after " + std::to_string(max_shifts) +
                            " diagonal shifts");
}

}  // namespace wgstokes
