#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fictsolve/precond.hpp"
#include "fictsolve/problem.hpp"
#include "fictsolve/spectrum.hpp"

namespace fictsolve {

enum class ExperimentKind {
  poisson_solve,
  stokes_solve,
  spectrum,
  bounds,
  inexact_bounds,
  convergence,
  sparsity_report,
  mesh_independence
};

ExperimentKind parse_experiment(const std::string& s);
std::string to_string(ExperimentKind k);
SystemKind parse_problem(const std::string& s);
std::string to_string(SystemKind k);
CurveLayout parse_layout(const std::string& s);
std::string to_string(CurveLayout l);

/// "3..7" or "3,4,5"
std::vector<int> parse_levels(const std::string& s);

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNonConvergence = 3;
inline constexpr int kExitBoundViolation = 4;

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::poisson_solve;
  std::optional<SystemKind> problem;  // default implied by the experiment
  InterfaceKind interface = InterfaceKind::circle;
  int facets = 0;                   // 0: level-scaled default
  CurveLayout layout = CurveLayout::closed;
  std::vector<int> levels;          // empty: experiment default
  std::vector<double> gammas;       // spectrum/bounds sweeps (gamma = delta); empty: {gamma}
  double gamma = 10.0;
  double delta = 10.0;
  PrecondKind precond = PrecondKind::al;
  WPolicy w_policy = WPolicy::exact;
  QPolicy q_policy = QPolicy::exact;
  std::optional<InnerPreconditioner> inner_pc;  // default: gmg for Poisson, ic0 for Stokes
  double tol = 0.0;                 // 0: 1e-10 Poisson, 1e-8 Stokes
  double inner_tol = 1e-2;
  int restart = 30;
  int max_iters = 1000;
  int threads = 1;
  std::string out = "fictsolve-out";

  /// Throws ConfigError for inconsistent combinations.
  void validate() const;
  SystemKind effective_problem() const;
  std::vector<int> effective_levels() const;
  std::vector<double> effective_gammas() const;
  double effective_tol() const;
  InnerPreconditioner effective_inner_pc() const;

  nlohmann::json to_json() const;
  /// Keys as in to_json; missing keys keep their defaults, unknown keys are rejected.
  static ExperimentConfig from_json(const nlohmann::json& j);
};

/// Facet count paired with a background level. Poisson: 16 * 2^(L-4) for circle and
/// flower, 12 * 2^(L-4) for the square (shortest segment >= h_Omega); Stokes: 2^(L+2) + 1.
int default_facets(SystemKind problem, InterfaceKind kind, int level);
/// Poisson curves live around (0.5, 0.5); the Stokes circle is centred at (0.45, 0.45).
InterfaceSpec default_interface(SystemKind problem, InterfaceKind kind, int facets);

PoissonProblem make_poisson(const ExperimentConfig& cfg, int level, BoundaryTreatment boundary);
StokesProblem make_stokes(const ExperimentConfig& cfg, int level, BoundaryTreatment boundary);

/// A_gamma system of a Poisson problem (gamma = 0: the original system).
BlockSystem poisson_system(const PoissonProblem& p, double gamma, WPolicy w);
/// graddiv: (1,1) block A + gamma*graddiv + delta C^T W^{-1} C; explicit_bqb: A + gamma B^T M_p^{-1} B + ...
BlockSystem stokes_system(const StokesProblem& p, double gamma, double delta, WPolicy w, StokesAugmentation form);
/// Stokes data for the restricted pencils only (no augmented block is formed).
BlockSystem stokes_pencil_system(const StokesProblem& p, double gamma, double delta);

/// Preconditioner settings of cfg for the given level (multigrid transfers included when needed).
ALConfig al_config(const ExperimentConfig& cfg, int level, bool eliminated);

struct SolveOutcome {
  SolveReport report;
  Vector x;             // solution of the block system
  std::size_t dofs = 0;
  double h = 0.0;
};

/// FGMRES (or MINRES for al-diag) on the eliminated system at one level.
SolveOutcome solve_level(const ExperimentConfig& cfg, int level);

struct IterationRow {
  int level = 0;
  std::size_t dofs = 0;
  double h = 0.0;
  int outer_iters = 0;
  double avg_inner_iters = 0.0;
  bool converged = false;
  double final_residual = 0.0;
  double wall_time = 0.0;
};

/// One row per level; non-converged rows are flagged, not fatal.
std::vector<IterationRow> iteration_study(const ExperimentConfig& cfg);
/// Least-squares slope of log(outer iterations) against log(h).
double iteration_slope(const std::vector<IterationRow>& rows);

struct ConvergenceRow {
  int level = 0;
  double h = 0.0;
  std::size_t dofs = 0;
  double l2 = 0.0;
  double h1 = 0.0;
  double rate_l2 = 0.0;  // 0 on the first row
  double rate_h1 = 0.0;
  int outer_iters = 0;
  bool converged = false;
};

/// u = sin(2 pi x) sin(2 pi y), f = 8 pi^2 u, g = u on the circle |x - (0.4, 0.4)| = 0.2
/// with 2^L facets.
std::vector<ConvergenceRow> convergence_study(const std::vector<int>& levels, const ExperimentConfig& cfg);

struct SparsityCounts {
  std::size_t n = 0, m = 0, l = 0;
  std::size_t nnz_a_gd = 0;     // A + graddiv
  std::size_t nnz_a_btb = 0;    // A + B^T B
  std::size_t nnz_a_gd_ctc = 0; // A + graddiv + C^T C
};

SparsityCounts sparsity_counts(int level, int facets, CurveLayout layout);

struct SpectrumCase {
  double gamma = 0.0;
  std::size_t dimension = 0;
  std::size_t velocity_dofs = 0;
  SpectrumReport preconditioned;
  SpectrumReport unpreconditioned;  // the (augmented) system matrix itself
};

/// Constrained-boundary system at cfg.levels[0], exact policies, one case per gamma.
std::vector<SpectrumCase> spectrum_study(const ExperimentConfig& cfg, bool with_unpreconditioned = true);

struct BoundCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

struct BoundsCase {
  double gamma = 0.0;
  SpectrumReport spectrum;
  RestrictedBounds restricted;
  MeshBounds estimates;
  std::vector<BoundCheck> checks;
};

/// Certificates on the spectrum config: min(eta, eps, theta) <= lambda_min_pos,
/// lambda_max <= 1, multiplicity of 1 >= n, f-values <= restricted minima.
std::vector<BoundsCase> bounds_study(const ExperimentConfig& cfg, double slack = 1e-8);

struct MeshIndependenceRow {
  int level = 0;
  int facets = 0;
  std::size_t dimension = 0;
  double lambda_min_pos = 0.0;
  std::string method;  // "dense" spectrum or restricted "pencil"
};

std::vector<MeshIndependenceRow> mesh_independence_study(const ExperimentConfig& cfg);

nlohmann::json to_json(const SolveReport& r);
nlohmann::json to_json(const SpectrumReport& r, bool with_eigenvalues = true);
void write_spectrum_csv(const std::string& path, const std::vector<Complex>& eigenvalues);

/// Runs one experiment, writes config.json, results.csv, summary.json (and spectra) into
/// cfg.out. Returns kExitOk, kExitNonConvergence or kExitBoundViolation; throws on bad config.
int run_experiment(const ExperimentConfig& cfg, std::ostream& log);

}  // namespace fictsolve
