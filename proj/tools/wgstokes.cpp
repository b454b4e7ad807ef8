// Batch driver for the weak Galerkin Stokes solver.
//
//   wgstokes solve       one manufactured-solution solve, residual history CSV
//   wgstokes convergence error norms and observed orders per level
//   wgstokes iterations  iteration-count tables per preconditioner
//   wgstokes spectrum    eigenvalue CSVs and bound-check summaries
//
// Exit codes: 0 success, 1 usage error, 2 bound violation, 3 solver failure.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include "wgstokes/experiments.hpp"

namespace fs = std::filesystem;
using namespace wgstokes;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitBound = 2;
constexpr int kExitSolver = 3;

struct Cli {
  int dim = 2;
  std::vector<int> levels;
  std::vector<double> mu{1.0, 1e-4};
  std::vector<std::string> d11{"one", "cell"};
  std::vector<std::string> precond;
  std::string solver = "minres";
  double tol = 0.0;
  int restart = 30;
  int maxit = 1000;
  std::string inner = "direct";
  std::string out = ".";
  bool large = false;
  bool unit_cluster = false;
};

ExperimentConfig to_config(const Cli& c, std::vector<int> default_levels, std::vector<std::string> default_precond) {
  ExperimentConfig cfg;
  cfg.dim = c.dim;
  cfg.levels = c.levels.empty() ? std::move(default_levels) : c.levels;
  cfg.mu_list = c.mu;
  cfg.d11_modes.clear();
  for (const auto& s : c.d11) cfg.d11_modes.push_back(parse_d11_mode(s));
  cfg.preconds = c.precond.empty() ? std::move(default_precond) : c.precond;
  cfg.solver = parse_solver(c.solver);
  cfg.tol = c.tol;
  cfg.restart = c.restart;
  cfg.maxit = c.maxit;
  cfg.inner = c.inner;
  cfg.out_dir = c.out;
  cfg.allow_large = c.large;
  cfg.allow_unit_cluster = c.unit_cluster;
  cfg.validate();
  return cfg;
}

std::string mu_tag(double mu) {
  std::ostringstream os;
  os << mu;
  return os.str();
}

void save_config(const ExperimentConfig& cfg, const std::string& name) {
  fs::create_directories(cfg.out_dir);
  std::ofstream os(fs::path(cfg.out_dir) / name);
  write_config(os, cfg);
}

int cmd_solve(const Cli& c) {
  const ExperimentConfig cfg = to_config(c, {c.dim == 2 ? 16 : 4}, {c.solver == "gmres" ? "pl-" : "pd"});
  const ManufacturedCase mc = stokes_case(cfg.dim);
  const int n = cfg.levels.front();
  const double mu = cfg.mu_list.front();
  const Problem pr = build_problem(mc, n, mu);
  const RegularizedSystem sys = regularize_and_scale(pr.blocks, mu, cfg.d11_modes.front());

  SolveSettings s;
  s.solver = cfg.solver;
  s.precond = parse_precond(cfg.preconds.front());
  s.inner = parse_inner_spec(cfg.inner);
  s.tol = cfg.effective_tol();
  s.restart = cfg.restart;
  s.maxit = cfg.maxit;
  const SolveResult res = solve_regularized(sys, s);
  const ErrorNorms e = compute_errors(pr.mesh, pr.space, res.u, res.p, mc.exact);

  fs::create_directories(cfg.out_dir);
  std::ofstream hist(fs::path(cfg.out_dir) / "residual_history.csv");
  write_residual_csv(hist, res.report);
  save_config(cfg, "solve.cfg");

  std::cout << std::setprecision(6) << "elements " << pr.mesh.num_elements() << ", unknowns " << sys.size() << "\n"
            << to_string(s.solver) << " + " << to_string(s.precond) << ": " << res.report.iterations
            << " iterations, " << (res.report.converged ? "converged" : "NOT converged")
            << ", true residual " << res.report.final_true_residual << ", unregularized residual "
            << res.unregularized_residual << "\n"
            << "inner iterations " << res.report.inner_iterations_total << ", wall time " << res.report.wall_time
            << " s\n"
            << "||p-p_h|| " << e.err_p << "  ||grad u - grad_w u_h|| " << e.err_grad << "  ||u-u_h0|| " << e.err_u0
            << "  ||Qu-u_h0|| " << e.err_proj << "\n";
  return res.report.converged ? 0 : kExitSolver;
}

int cmd_convergence(const Cli& c) {
  const ExperimentConfig cfg =
      to_config(c, c.dim == 2 ? std::vector<int>{8, 16, 32} : std::vector<int>{2, 4, 8}, {"pd"});
  fs::create_directories(cfg.out_dir);
  save_config(cfg, "convergence.cfg");
  for (double mu : cfg.mu_list) {
    const auto rows = run_convergence(cfg, mu, cfg.d11_modes.front());
    const std::string name = "convergence_" + std::to_string(cfg.dim) + "d_mu" + mu_tag(mu) + ".csv";
    std::ofstream os(fs::path(cfg.out_dir) / name);
    write_convergence_csv(os, rows);
    std::cout << "mu = " << mu << " -> " << name << "\n";
    write_convergence_csv(std::cout, rows);
  }
  return 0;
}

int cmd_iterations(const Cli& c) {
  const ExperimentConfig cfg =
      to_config(c, c.dim == 2 ? std::vector<int>{8, 16, 32, 64} : std::vector<int>{2, 4, 8},
                {c.solver == "gmres" ? "pl-" : "pd"});
  fs::create_directories(cfg.out_dir);
  save_config(cfg, "iterations.cfg");
  bool all_converged = true;
  for (const auto& t : run_iterations(cfg)) {
    const std::string name = t.file_name(cfg.dim);
    std::ofstream os(fs::path(cfg.out_dir) / name);
    write_iterations_csv(os, t);
    std::cout << to_string(t.solver) << " + " << t.precond << " -> " << name << "\n";
    write_iterations_csv(std::cout, t);
    for (const auto& r : t.rows) all_converged = all_converged && r.converged;
  }
  return all_converged ? 0 : kExitSolver;
}

int cmd_spectrum(const Cli& c) {
  const ExperimentConfig cfg = to_config(c, {4}, {"pd"});
  if (cfg.levels.size() > 0)
    for (int n : cfg.levels)
      if ((cfg.dim == 2 && n > 16) || (cfg.dim == 3 && n > 8))
        throw InvalidArgument("spectrum runs use dense eigensolvers; choose coarse levels");
  save_config(cfg, "spectrum.cfg");
  const auto cases = run_spectrum(cfg);
  const bool ok = write_spectrum_reports(cfg.out_dir, cfg.dim, cases);
  for (const auto& sc : cases) {
    std::cout << "n=" << sc.level << " mu=" << sc.mu << " d11=" << to_string(sc.d11) << ": beta "
              << sc.infsup.beta << ", P_d spectrum " << (sc.diag.ok() ? "ok" : "VIOLATED") << " ("
              << sc.diag.violations.size() << " outside, " << sc.diag.unit_cluster << " at 1)"
              << ", Schur spectrum " << (sc.schur.ok() ? "ok" : "VIOLATED");
    for (const auto& b : sc.bounds)
      std::cout << ", " << b.kind << " " << (!b.regime_ok ? "n/a" : (b.check.ok() ? "ok" : "VIOLATED"));
    std::cout << "\n";
  }
  for (const auto& f : lambda1_slopes(cases))
    std::cout << "n=" << f.level << " d11=" << to_string(f.d11) << ": lambda1 slope " << f.slope << " vs "
              << f.predicted << " (" << 100.0 * f.relative_error() << "% off)\n";
  return ok ? 0 : kExitBound;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weak Galerkin Stokes solver with block Schur-complement preconditioning"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Flat key=value file with any of the long options");
  Cli c;
  app.add_option("--dim", c.dim, "Spatial dimension")->check(CLI::IsMember({2, 3}));
  app.add_option("--levels", c.levels, "Mesh levels n (cells per side), comma separated")->delimiter(',');
  app.add_option("--mu", c.mu, "Viscosities, comma separated")->delimiter(',');
  app.add_option("--d11", c.d11, "Pinning weight: one and/or cell (=|K1|)")->delimiter(',');
  app.add_option("--precond", c.precond, "pd, pl-, pl+, pu-, pu+ or none; comma separated")->delimiter(',');
  app.add_option("--solver", c.solver, "minres or gmres")->check(CLI::IsMember({"minres", "gmres"}));
  app.add_option("--tol", c.tol, "Relative residual tolerance (default 1e-9 in 2D, 1e-8 in 3D)");
  app.add_option("--restart", c.restart, "GMRES restart length");
  app.add_option("--maxit", c.maxit, "Iteration limit");
  app.add_option("--inner", c.inner, "Velocity solve: direct or pcg:droptol,tol");
  app.add_option("--out", c.out, "Output directory");
  app.add_flag("--large", c.large, "Allow 3D levels above 8");
  app.add_flag("--allow-unit-cluster", c.unit_cluster,
               "Accept the eigenvalue 1 of the P_d-preconditioned operator in spectrum checks");

  auto* solve = app.add_subcommand("solve", "Solve one manufactured-solution problem (first level, mu, d11)");
  auto* conv = app.add_subcommand("convergence", "Error norms and observed orders");
  auto* iter = app.add_subcommand("iterations", "Iteration counts over d11 x mu x level");
  auto* spec = app.add_subcommand("spectrum", "Spectra and bound checks on coarse meshes");
  for (auto* s : {solve, conv, iter, spec}) s->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*solve) return cmd_solve(c);
    if (*conv) return cmd_convergence(c);
    if (*iter) return cmd_iterations(c);
    if (*spec) return cmd_spectrum(c);
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const SolverBreakdown& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kExitSolver;
  } catch (const InnerSolveFailure& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kExitSolver;
  } catch (const NotPositiveDefinite& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kExitSolver;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolver;
  }
  return 0;
}
