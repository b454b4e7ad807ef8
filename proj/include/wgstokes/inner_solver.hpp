#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <memory>
#include <string>

#include "wgstokes/errors.hpp"
#include "wgstokes/ichol.hpp"
#include "wgstokes/krylov.hpp"

namespace wgstokes {

/// Approximate action of A^{-1} for the velocity block.
class InnerSolver {
 public:
  virtual ~InnerSolver() = default;
  virtual void solve(const VectorXd& r, VectorXd& z) const = 0;
  virtual Eigen::Index size() const = 0;
  /// Total inner Krylov iterations so far (0 for direct solvers).
  long iterations() const noexcept { return iterations_; }
  void reset_iterations() const noexcept { iterations_ = 0; }
  /// Lets an InnerSolver be used wherever a LinearOperator is expected.
  void apply(const VectorXd& r, VectorXd& z) const { solve(r, z); }

 protected:
  mutable long iterations_ = 0;
};

/// Sparse Cholesky (AMD ordering), i.e. an exact A^{-1}.
class DirectInnerSolver final : public InnerSolver {
 public:
  template <class SparseMatrix>
  explicit DirectInnerSolver(const SparseMatrix& a) : n_(a.rows()) {
    llt_.compute(Eigen::SparseMatrix<double>(a));
    if (llt_.info() != Eigen::Success) throw NotPositiveDefinite("sparse Cholesky of the velocity block failed");
  }
  void solve(const VectorXd& r, VectorXd& z) const override { z = llt_.solve(r); }
  Eigen::Index size() const override { return n_; }

 private:
  Eigen::Index n_;
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::AMDOrdering<int>> llt_;
};

/// CG preconditioned by threshold incomplete Cholesky.
class PcgInnerSolver final : public InnerSolver {
 public:
  template <class SparseMatrix>
  PcgInnerSolver(const SparseMatrix& a, double droptol, double tol, int maxit = 1000)
      : a_(a), ic_(incomplete_factorization(a_, droptol)), tol_(tol), maxit_(maxit) {}

  void solve(const VectorXd& r, VectorXd& z) const override {
    z = VectorXd::Zero(r.size());
    KrylovOptions opt;
    opt.tol = tol_;
    opt.maxit = maxit_;
    opt.record_true_residual = false;
    const SolveReport rep = pcg(MatrixOperator<Eigen::SparseMatrix<double>>(a_), ic_, r, z, opt);
    iterations_ += rep.iterations;
    if (!rep.converged)
      throw InnerSolveFailure(rep.iterations, "inner PCG did not converge in " +
                                                  std::to_string(rep.iterations) + " iterations");
  }
  Eigen::Index size() const override { return a_.rows(); }
  const IncompleteCholesky& factor() const noexcept { return ic_; }

 private:
  Eigen::SparseMatrix<double> a_;
  IncompleteCholesky ic_;
  double tol_;
  int maxit_;
};

struct InnerSolveSpec {
  enum class Kind { Direct, Pcg } kind = Kind::Direct;
  double droptol = 1e-3;
  double tol = 1e-10;
  int maxit = 1000;
};

/// Parses "direct" or "pcg:droptol,tol".
inline InnerSolveSpec parse_inner_spec(const std::string& s) {
  InnerSolveSpec spec;
  if (s == "direct") return spec;
  if (s.rfind("pcg", 0) == 0) {
    spec.kind = InnerSolveSpec::Kind::Pcg;
    if (s.size() > 3) {
      if (s[3] != ':') throw InvalidArgument("inner solver must be 'direct' or 'pcg:droptol,tol'");
      const std::string rest = s.substr(4);
      const auto comma = rest.find(',');
      try {
        spec.droptol = std::stod(rest.substr(0, comma));
        if (comma != std::string::npos) spec.tol = std::stod(rest.substr(comma + 1));
      } catch (const std::exception&) {
        throw InvalidArgument("cannot parse inner solver spec '" + s + "'");
      }
    }
    if (spec.droptol < 0.0 || !(spec.tol > 0.0)) throw InvalidArgument("invalid pcg inner solver parameters");
    return spec;
  }
  throw InvalidArgument("inner solver must be 'direct' or 'pcg:droptol,tol'");
}

template <class SparseMatrix>
std::shared_ptr<InnerSolver> make_inner_solver(const SparseMatrix& a, const InnerSolveSpec& spec) {
  if (spec.kind == InnerSolveSpec::Kind::Direct) return std::make_shared<DirectInnerSolver>(a);
  return std::make_shared<PcgInnerSolver>(a, spec.droptol, spec.tol, spec.maxit);
}

}  // namespace wgstokes
