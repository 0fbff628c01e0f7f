// Batch driver: one experiment per invocation, artifacts under --out.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fictsolve/error.hpp"
#include "fictsolve/experiments.hpp"
#include "fictsolve/parallel.hpp"

using namespace fictsolve;

int main(int argc, char** argv) {
  CLI::App app{"fictsolve: fictitious-domain saddle-point experiments"};
  app.set_version_flag("--version", "fictsolve 0.1.0");

  std::string experiment, config_file, problem, level_list, interface, precond, w_policy, q_policy, inner_pc, layout, out;
  int level = 0, facets = -1, restart = 0, max_iters = 0, threads = 0;
  double gamma = 0, delta = 0, tol = -1, inner_tol = 0;
  std::vector<double> gammas;

  app.add_option("experiment,--experiment", experiment,
                 "poisson-solve | stokes-solve | spectrum | bounds | inexact-bounds | convergence | "
                 "sparsity-report | mesh-independence");
  app.add_option("--config", config_file, "JSON config file; flags override its values");
  app.add_option("--problem", problem, "poisson | stokes");
  app.add_option("--level", level, "single background level");
  app.add_option("--levels", level_list, "level range 3..7 or list 3,4,5");
  app.add_option("--facets", facets, "immersed facets (0: scaled with the level)");
  app.add_option("--interface", interface, "circle | flower | square | flower-verbatim");
  app.add_option("--layout", layout, "closed | split-seam multiplier numbering");
  app.add_option("--gamma", gamma, "augmentation parameter gamma");
  app.add_option("--delta", delta, "augmentation parameter delta (Stokes)");
  app.add_option("--gammas", gammas, "sweep of gamma = delta values (spectrum, bounds)");
  app.add_option("--precond", precond, "al | al-diag | bfbt | none");
  app.add_option("--w-policy", w_policy, "exact | diag");
  app.add_option("--q-policy", q_policy, "exact | lumped | diag");
  app.add_option("--inner-pc", inner_pc, "ic0 | sgs | gmg");
  app.add_option("--tol", tol, "absolute outer tolerance");
  app.add_option("--inner-tol", inner_tol, "relative inner CG tolerance");
  app.add_option("--restart", restart, "FGMRES restart length");
  app.add_option("--max-iters", max_iters, "outer iteration cap");
  app.add_option("--threads", threads, "worker threads (default: FICTSOLVE_THREADS or 1)");
  app.add_option("--out", out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    ExperimentConfig cfg;
    if (!config_file.empty()) {
      std::ifstream is(config_file);
      if (!is) throw ConfigError("cannot open config file " + config_file);
      nlohmann::json j;
      try {
        is >> j;
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config file is not valid JSON: ") + e.what());
      }
      cfg = ExperimentConfig::from_json(j);
    }
    if (!experiment.empty()) cfg.experiment = parse_experiment(experiment);
    else if (config_file.empty()) throw ConfigError("no experiment given");
    if (!problem.empty()) cfg.problem = parse_problem(problem);
    if (!level_list.empty() && level > 0) throw ConfigError("--level and --levels are exclusive");
    if (!level_list.empty()) cfg.levels = parse_levels(level_list);
    if (level > 0) cfg.levels = {level};
    if (facets >= 0) cfg.facets = facets;
    if (!interface.empty()) cfg.interface = parse_interface_kind(interface);
    if (!layout.empty()) cfg.layout = parse_layout(layout);
    if (app.count("--gamma")) cfg.gamma = gamma;
    if (app.count("--delta")) cfg.delta = delta;
    else if (app.count("--gamma")) cfg.delta = gamma;
    if (!gammas.empty()) cfg.gammas = gammas;
    if (!precond.empty()) cfg.precond = parse_precond(precond);
    if (!w_policy.empty()) cfg.w_policy = parse_w_policy(w_policy);
    if (!q_policy.empty()) cfg.q_policy = parse_q_policy(q_policy);
    if (!inner_pc.empty()) cfg.inner_pc = parse_inner_pc(inner_pc);
    if (tol >= 0) cfg.tol = tol;
    if (app.count("--inner-tol")) cfg.inner_tol = inner_tol;
    if (app.count("--restart")) cfg.restart = restart;
    if (app.count("--max-iters")) cfg.max_iters = max_iters;
    if (app.count("--threads")) cfg.threads = threads;
    else if (config_file.empty()) cfg.threads = threads_from_env(1);
    if (!out.empty()) cfg.out = out;

    const int status = run_experiment(cfg, std::cout);
    if (status == kExitNonConvergence) std::cerr << "error: solver did not converge\n";
    if (status == kExitBoundViolation) std::cerr << "error: a certified bound is violated\n";
    std::cout << "artifacts written to " << cfg.out << '\n';
    return status;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DimensionError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
