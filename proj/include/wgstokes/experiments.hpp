#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "wgstokes/assembly.hpp"
#include "wgstokes/errors.hpp"
#include "wgstokes/inner_solver.hpp"
#include "wgstokes/krylov.hpp"
#include "wgstokes/manufactured.hpp"
#include "wgstokes/mesh.hpp"
#include "wgstokes/preconditioner.hpp"
#include "wgstokes/spectral.hpp"
#include "wgstokes/system.hpp"

namespace wgstokes {

enum class SolverKind { Minres, Gmres };

inline std::string to_string(SolverKind s) { return s == SolverKind::Minres ? "minres" : "gmres"; }
inline SolverKind parse_solver(const std::string& s) {
  if (s == "minres") return SolverKind::Minres;
  if (s == "gmres") return SolverKind::Gmres;
  throw InvalidArgument("solver must be 'minres' or 'gmres'");
}

/// Largest structured 3D level run without `allow_large`.
inline constexpr int kMaxDefault3dLevel = 8;

struct ExperimentConfig {
  int dim = 2;
  std::vector<int> levels{8, 16, 32, 64};
  std::vector<double> mu_list{1.0, 1e-4};
  std::vector<D11Mode> d11_modes{D11Mode::One, D11Mode::CellMeasure};
  std::vector<std::string> preconds{"pd"};
  SolverKind solver = SolverKind::Minres;
  double tol = 0.0;  // 0: 1e-9 in 2D, 1e-8 in 3D
  int restart = 30;
  int maxit = 1000;
  std::string inner = "direct";
  std::string out_dir = ".";
  bool allow_large = false;
  bool allow_unit_cluster = false;

  double effective_tol() const { return tol > 0.0 ? tol : (dim == 3 ? 1e-8 : 1e-9); }

  void validate() const {
    if (dim != 2 && dim != 3) throw InvalidArgument("dimension must be 2 or 3");
    if (levels.empty()) throw InvalidArgument("no mesh levels given");
    for (int n : levels) {
      if (n < 1) throw InvalidArgument("mesh levels must be positive");
      if (dim == 3 && n > kMaxDefault3dLevel && !allow_large)
        throw InvalidArgument("3D levels above " + std::to_string(kMaxDefault3dLevel) + " need --large");
    }
    for (double mu : mu_list)
      if (!(mu > 0.0)) throw InvalidArgument("viscosity values must be positive");
    if (tol < 0.0) throw InvalidArgument("tolerance must be positive");
    if (restart < 1) throw InvalidArgument("restart must be >= 1");
    if (maxit < 1) throw InvalidArgument("maxit must be >= 1");
    for (const auto& p : preconds) parse_precond(p);
    parse_inner_spec(inner);
  }
};

inline std::string join_levels(const std::vector<int>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

inline std::string format_number(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

/// Flat key=value text accepted by the command line's --config option.
inline void write_config(std::ostream& os, const ExperimentConfig& c) {
  os << "dim=" << c.dim << "\n"
     << "levels=" << join_levels(c.levels) << "\n"
     << "mu=";
  for (std::size_t i = 0; i < c.mu_list.size(); ++i) os << (i ? "," : "") << format_number(c.mu_list[i]);
  os << "\nd11=";
  for (std::size_t i = 0; i < c.d11_modes.size(); ++i) os << (i ? "," : "") << to_string(c.d11_modes[i]);
  os << "\nprecond=";
  for (std::size_t i = 0; i < c.preconds.size(); ++i) os << (i ? "," : "") << c.preconds[i];
  os << "\nsolver=" << to_string(c.solver) << "\n"
     << "tol=" << format_number(c.effective_tol()) << "\n"
     << "restart=" << c.restart << "\n"
     << "maxit=" << c.maxit << "\n"
     << "inner=" << c.inner << "\n"
     << "out=" << c.out_dir << "\n";
}

/// Mesh, discrete space and assembled blocks for the manufactured case.
struct Problem {
  int level = 0;
  double mu = 1.0;
  Mesh mesh;
  WgSpace space;
  SaddleBlocks blocks;
};

inline Problem build_problem(const ManufacturedCase& mc, int n, double mu, const AssemblyOptions& opt = {}) {
  Problem pr{n, mu, generate_structured_mesh(mc.dim, n), {}, {}};
  auto [sp, blk] = assemble(pr.mesh, mu, mc.body_force(mu), mc.boundary(), opt);
  pr.space = std::move(sp);
  pr.blocks = std::move(blk);
  return pr;
}

struct SolveSettings {
  SolverKind solver = SolverKind::Minres;
  PrecondChoice precond;
  InnerSolveSpec inner;
  double tol = 1e-9;
  int restart = 30;
  int maxit = 1000;
  /// Unset: right preconditioning for upper triangular variants, left otherwise.
  std::optional<PreconditionSide> side;
};

inline PreconditionSide effective_side(const SolveSettings& s) {
  if (s.side) return *s.side;
  return !s.precond.none && s.precond.kind == BlockKind::Upper ? PreconditionSide::Right : PreconditionSide::Left;
}

struct SolveResult {
  SolveReport report;
  VectorXd u;  // velocity (unscaled)
  VectorXd p;
  double unregularized_residual = 0.0;
};

/// Solves the rescaled system from a zero initial guess.  The inner solver is
/// shared so repeated solves reuse one factorization.
inline SolveResult solve_regularized(const RegularizedSystem& sys, const SolveSettings& s,
                                     std::shared_ptr<const InnerSolver> inner = nullptr) {
  const VectorXd b = sys.rhs();
  VectorXd x = VectorXd::Zero(sys.size());
  SolveResult out;
  if (!s.precond.none && !inner) inner = make_inner_solver(sys.blocks.A, s.inner);
  if (inner) inner->reset_iterations();

  if (s.solver == SolverKind::Minres) {
    KrylovOptions opt;
    opt.tol = s.tol;
    opt.maxit = s.maxit;
    if (s.precond.none) {
      out.report = minres(sys, IdentityOperator(sys.size()), b, x, opt);
    } else {
      if (s.precond.kind != BlockKind::Diagonal || s.precond.sign != 1)
        throw InvalidArgument("MINRES needs a symmetric positive definite preconditioner (pd)");
      out.report = minres(sys, make_preconditioner(sys, BlockKind::Diagonal, 1, inner), b, x, opt);
    }
  } else {
    GmresOptions opt;
    opt.tol = s.tol;
    opt.maxit = s.maxit;
    opt.restart = s.restart;
    opt.side = effective_side(s);
    if (s.precond.none)
      out.report = gmres(sys, IdentityOperator(sys.size()), b, x, opt);
    else
      out.report = gmres(sys, make_preconditioner(sys, s.precond.kind, s.precond.sign, inner), b, x, opt);
  }
  if (inner) out.report.inner_iterations_total = inner->iterations();
  std::tie(out.u, out.p) = sys.unscale(x);
  out.unregularized_residual = unregularized_residual(sys, out.u, out.p);
  return out;
}

// ---------------------------------------------------------------------------
// Convergence study

struct ConvergenceRow {
  int level = 0;
  double h = 0.0;
  ErrorNorms err;
  // observed orders against the previous row (NaN on the first)
  double order_p = std::nan(""), order_grad = std::nan(""), order_u0 = std::nan(""), order_proj = std::nan("");
  int iterations = 0;
  bool converged = false;
};

inline double observed_order(double e_prev, double e_cur, double h_prev, double h_cur) {
  return std::log(e_prev / e_cur) / std::log(h_prev / h_cur);
}

/// Error norms and observed orders of the manufactured case over the
/// configured levels at one viscosity.  The solve uses MINRES + P_d at the
/// configured tolerance; a non-converged solve throws SolverBreakdown.
inline std::vector<ConvergenceRow> run_convergence(const ExperimentConfig& cfg, double mu,
                                                   D11Mode mode = D11Mode::One) {
  cfg.validate();
  const ManufacturedCase mc = stokes_case(cfg.dim);
  SolveSettings s;
  s.inner = parse_inner_spec(cfg.inner);
  s.tol = cfg.effective_tol();
  s.maxit = cfg.maxit;
  std::vector<ConvergenceRow> rows;
  for (int n : cfg.levels) {
    Problem pr = build_problem(mc, n, mu);
    const RegularizedSystem sys = regularize_and_scale(pr.blocks, mu, mode);
    const SolveResult res = solve_regularized(sys, s);
    if (!res.report.converged)
      throw SolverBreakdown(res.report.iterations, "level " + std::to_string(n) + ": solver did not converge in " +
                                                       std::to_string(res.report.iterations) + " iterations");
    ConvergenceRow row;
    row.level = n;
    row.h = 1.0 / n;
    row.err = compute_errors(pr.mesh, pr.space, res.u, res.p, mc.exact);
    row.iterations = res.report.iterations;
    row.converged = true;
    if (!rows.empty()) {
      const ConvergenceRow& q = rows.back();
      row.order_p = observed_order(q.err.err_p, row.err.err_p, q.h, row.h);
      row.order_grad = observed_order(q.err.err_grad, row.err.err_grad, q.h, row.h);
      row.order_u0 = observed_order(q.err.err_u0, row.err.err_u0, q.h, row.h);
      row.order_proj = observed_order(q.err.err_proj, row.err.err_proj, q.h, row.h);
    }
    rows.push_back(row);
  }
  return rows;
}

inline void write_convergence_csv(std::ostream& os, const std::vector<ConvergenceRow>& rows) {
  os << "level,h,err_p,order_p,err_grad,order_grad,err_u0,order_u0,err_proj,order_proj\n";
  os << std::setprecision(10);
  auto order = [&](double v) -> std::ostream& { return std::isnan(v) ? (os << "") : (os << v); };
  for (const auto& r : rows) {
    os << r.level << ',' << r.h << ',' << r.err.err_p << ',';
    order(r.order_p) << ',' << r.err.err_grad << ',';
    order(r.order_grad) << ',' << r.err.err_u0 << ',';
    order(r.order_u0) << ',' << r.err.err_proj << ',';
    order(r.order_proj) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Iteration counts

struct IterationRow {
  D11Mode d11 = D11Mode::One;
  double mu = 1.0;
  int level = 0;
  int n_elements = 0;
  Eigen::Index n_unknowns = 0;
  int iterations = 0;
  bool converged = false;
  double final_true_residual = 0.0;
};

struct IterationTable {
  SolverKind solver = SolverKind::Minres;
  std::string precond;
  std::vector<IterationRow> rows;

  std::string file_name(int dim) const {
    std::string p = precond;
    for (char& c : p) {
      if (c == '-') c = 'm';
      if (c == '+') c = 'p';
    }
    return "iterations_" + std::to_string(dim) + "d_" + to_string(solver) + "_" + p + ".csv";
  }
};

inline void write_iterations_csv(std::ostream& os, const IterationTable& t) {
  os << "d11,mu,level,n_elements,n_unknowns,iters,converged,final_true_residual\n";
  for (const auto& r : t.rows)
    os << to_string(r.d11) << ',' << format_number(r.mu) << ',' << r.level << ',' << r.n_elements << ','
       << r.n_unknowns << ',' << r.iterations << ',' << (r.converged ? 1 : 0) << ',' << std::setprecision(6)
       << std::scientific << r.final_true_residual << std::defaultfloat << '\n';
}

/// One table per configured preconditioner, rows ordered d11 x mu x level.
/// Breakdowns are recorded as non-converged rows rather than aborting.
inline std::vector<IterationTable> run_iterations(const ExperimentConfig& cfg) {
  cfg.validate();
  const ManufacturedCase mc = stokes_case(cfg.dim);
  const InnerSolveSpec inner_spec = parse_inner_spec(cfg.inner);
  std::vector<IterationTable> tables;
  for (const auto& name : cfg.preconds) tables.push_back({cfg.solver, name, {}});

  for (D11Mode mode : cfg.d11_modes)
    for (double mu : cfg.mu_list)
      for (int n : cfg.levels) {
        Problem pr = build_problem(mc, n, mu);
        const RegularizedSystem sys = regularize_and_scale(pr.blocks, mu, mode);
        std::shared_ptr<const InnerSolver> inner = make_inner_solver(sys.blocks.A, inner_spec);
        for (std::size_t t = 0; t < cfg.preconds.size(); ++t) {
          SolveSettings s;
          s.solver = cfg.solver;
          s.precond = parse_precond(cfg.preconds[t]);
          s.inner = inner_spec;
          s.tol = cfg.effective_tol();
          s.restart = cfg.restart;
          s.maxit = cfg.maxit;
          IterationRow row{mode, mu, n, pr.mesh.num_elements(), sys.size(), 0, false, 0.0};
          try {
            const SolveResult res = solve_regularized(sys, s, s.precond.none ? nullptr : inner);
            row.iterations = res.report.iterations;
            row.converged = res.report.converged;
            row.final_true_residual = res.report.final_true_residual;
          } catch (const SolverBreakdown& e) {
            row.iterations = e.iteration();
            row.final_true_residual = std::nan("");
          } catch (const NotPositiveDefinite&) {
            row.final_true_residual = std::nan("");
          }
          tables[t].rows.push_back(row);
        }
      }
  return tables;
}

// ---------------------------------------------------------------------------
// Spectral study

struct BoundRun {
  std::string kind;
  bool regime_ok = false;
  BoundCheck check;
  int iterations = 0;
};

struct SpectrumCase {
  int level = 0;
  double mu = 0.0;
  D11Mode d11 = D11Mode::One;
  InfSupReport infsup;
  SpectralReport diag;
  SpectralReport schur;
  std::vector<BoundRun> bounds;

  bool ok() const {
    bool good = diag.ok() && schur.ok();
    for (const auto& b : bounds) good = good && (!b.regime_ok || b.check.ok());
    return good;
  }
};

/// Lambda_1(mu) of Mp^{-1} S against mu for one level and d11 mode: least
/// squares slope through the origin versus d11/|Omega|.
struct SlopeFit {
  int level = 0;
  D11Mode d11 = D11Mode::One;
  double slope = 0.0;
  double predicted = 0.0;
  double relative_error() const { return std::abs(slope - predicted) / predicted; }
};

inline SlopeFit fit_lambda1_slope(const std::vector<double>& mus, const std::vector<double>& lambdas, double d11,
                                  double omega) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < mus.size(); ++i) {
    num += mus[i] * lambdas[i];
    den += mus[i] * mus[i];
  }
  SlopeFit f;
  f.slope = num / den;
  f.predicted = d11 / omega;
  return f;
}

/// Largest ratio mu d11/|K_1| / beta^2 for which residual bounds are checked.
inline constexpr double kBoundRegimeRatio = 0.01;

inline SpectrumCase analyze_spectrum(const Problem& pr, const MatrixXd& g, const InfSupReport& infsup,
                                     double mu, D11Mode mode, bool unit_cluster, double tol) {
  SpectrumCase sc;
  sc.level = pr.level;
  sc.mu = mu;
  sc.d11 = mode;
  sc.infsup = infsup;
  const RegularizedSystem sys = regularize_and_scale(pr.blocks, mu, mode);
  SpectrumCheckOptions opt;
  opt.allow_unit_cluster = unit_cluster;
  sc.diag = eig_diag_preconditioned(sys, infsup.beta, opt);
  sc.schur = eig_schur(sys, g, infsup.beta, opt);

  const BoundParams bp = stokes_bound_params(sys, infsup.beta);
  const bool regime = bp.scales.eps() < kBoundRegimeRatio * infsup.beta * infsup.beta;
  auto inner = std::make_shared<DirectInnerSolver>(sys.blocks.A);
  SolveSettings s;
  s.tol = tol;
  s.maxit = 1000;
  s.precond = parse_precond("pd");
  const SolveResult mr = solve_regularized(sys, s, inner);
  sc.bounds.push_back({"minres_diagonal", regime, check_minres_history(mr.report.residual_history, bp),
                       mr.report.iterations});
  s.solver = SolverKind::Gmres;
  s.precond = parse_precond("pl-");
  s.restart = 1000;
  const SolveResult gr = solve_regularized(sys, s, inner);
  sc.bounds.push_back({"gmres_triangular", regime,
                       check_gmres_history(gr.report.residual_history, BoundKind::GmresTriangular, bp, 3),
                       gr.report.iterations});
  return sc;
}

/// Spectral reports for every (level, mu, d11) cell.
inline std::vector<SpectrumCase> run_spectrum(const ExperimentConfig& cfg) {
  cfg.validate();
  const ManufacturedCase mc = stokes_case(cfg.dim);
  std::vector<SpectrumCase> out;
  for (int n : cfg.levels) {
    std::optional<MatrixXd> g;
    std::optional<InfSupReport> infsup;
    for (double mu : cfg.mu_list) {
      const Problem pr = build_problem(mc, n, mu);
      if (!g) {
        DirectInnerSolver inner(pr.blocks.A);
        g = dense_schur_product(pr.blocks, inner);
        infsup = infsup_from_schur_product(*g, pr.blocks.Mp);
      }
      for (D11Mode mode : cfg.d11_modes)
        out.push_back(analyze_spectrum(pr, *g, *infsup, mu, mode, cfg.allow_unit_cluster, cfg.effective_tol()));
    }
  }
  return out;
}

inline std::vector<SlopeFit> lambda1_slopes(const std::vector<SpectrumCase>& cases) {
  std::vector<SlopeFit> fits;
  for (const auto& c : cases) {
    auto it = std::find_if(fits.begin(), fits.end(),
                           [&](const SlopeFit& f) { return f.level == c.level && f.d11 == c.d11; });
    if (it != fits.end()) continue;
    std::vector<double> mus, lams;
    for (const auto& o : cases)
      if (o.level == c.level && o.d11 == c.d11) {
        mus.push_back(o.mu);
        lams.push_back(o.schur.lambda1_mu);
      }
    if (mus.size() < 2) continue;
    SlopeFit f = fit_lambda1_slope(mus, lams, c.schur.scales.d11, c.schur.scales.omega);
    f.level = c.level;
    f.d11 = c.d11;
    fits.push_back(f);
  }
  return fits;
}

inline std::string spectrum_tag(int dim, const SpectrumCase& c) {
  std::ostringstream os;
  os << dim << "d_n" << c.level << "_mu" << c.mu << "_" << to_string(c.d11);
  return os.str();
}

inline void write_spectrum_summary(std::ostream& os, const SpectrumCase& c) {
  os << "level: " << c.level << "  mu: " << c.mu << "  d11: " << to_string(c.d11) << "\n"
     << "beta: " << c.infsup.beta << "  gamma_max: " << c.infsup.gamma_max
     << "  ||H v1||: " << c.infsup.null_residual << "\n\n";
  write_summary(os, c.diag);
  os << "\n";
  write_summary(os, c.schur);
  os << "\n";
  for (const auto& b : c.bounds) {
    os << b.kind << ": iterations " << b.iterations << ", steps checked " << b.check.checked
       << ", worst measured/bound " << b.check.worst_ratio;
    if (!b.regime_ok)
      os << " (mu d11/|K1| >= " << kBoundRegimeRatio << " beta^2: bound not claimed)";
    else
      os << (b.check.ok() ? " PASS" : " FAIL at step " + std::to_string(b.check.first_violation));
    os << "\n";
  }
}

/// Writes eigenvalue CSVs and summaries; returns false on any bound violation.
inline bool write_spectrum_reports(const std::filesystem::path& dir, int dim, const std::vector<SpectrumCase>& cases) {
  std::filesystem::create_directories(dir);
  bool ok = true;
  for (const auto& c : cases) {
    const std::string tag = spectrum_tag(dim, c);
    std::ofstream(dir / ("eig_diag_" + tag + ".csv")) << [&] {
      std::ostringstream s;
      write_eigenvalues_csv(s, c.diag);
      return s.str();
    }();
    std::ofstream(dir / ("eig_schur_" + tag + ".csv")) << [&] {
      std::ostringstream s;
      write_eigenvalues_csv(s, c.schur);
      return s.str();
    }();
    std::ofstream sum(dir / ("summary_" + tag + ".txt"));
    write_spectrum_summary(sum, c);
    ok = ok && c.ok();
  }
  const auto fits = lambda1_slopes(cases);
  if (!fits.empty()) {
    std::ofstream f(dir / ("lambda1_slope_" + std::to_string(dim) + "d.csv"));
    f << "level,d11,slope,predicted,relative_error\n" << std::setprecision(10);
    for (const auto& s : fits)
      f << s.level << ',' << to_string(s.d11) << ',' << s.slope << ',' << s.predicted << ',' << s.relative_error()
        << '\n';
  }
  return ok;
}

}  // namespace wgstokes
