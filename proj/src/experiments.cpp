#include "fictsolve/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "fictsolve/error.hpp"
#include "fictsolve/multigrid.hpp"
#include "fictsolve/parallel.hpp"

namespace fictsolve {

namespace {

using json = nlohmann::json;

bool needs_stokes(ExperimentKind k) {
  return k == ExperimentKind::stokes_solve || k == ExperimentKind::inexact_bounds ||
         k == ExperimentKind::sparsity_report;
}

bool needs_poisson(ExperimentKind k) {
  return k == ExperimentKind::poisson_solve || k == ExperimentKind::convergence;
}

std::vector<int> range(int lo, int hi) {
  std::vector<int> v;
  for (int l = lo; l <= hi; ++l) v.push_back(l);
  return v;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

ExperimentKind parse_experiment(const std::string& s) {
  if (s == "poisson-solve") return ExperimentKind::poisson_solve;
  if (s == "stokes-solve") return ExperimentKind::stokes_solve;
  if (s == "spectrum") return ExperimentKind::spectrum;
  if (s == "bounds") return ExperimentKind::bounds;
  if (s == "inexact-bounds") return ExperimentKind::inexact_bounds;
  if (s == "convergence") return ExperimentKind::convergence;
  if (s == "sparsity-report") return ExperimentKind::sparsity_report;
  if (s == "mesh-independence") return ExperimentKind::mesh_independence;
  throw ConfigError("unknown experiment '" + s + "'");
}

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::poisson_solve: return "poisson-solve";
    case ExperimentKind::stokes_solve: return "stokes-solve";
    case ExperimentKind::spectrum: return "spectrum";
    case ExperimentKind::bounds: return "bounds";
    case ExperimentKind::inexact_bounds: return "inexact-bounds";
    case ExperimentKind::convergence: return "convergence";
    case ExperimentKind::sparsity_report: return "sparsity-report";
    case ExperimentKind::mesh_independence: return "mesh-independence";
  }
  return "?";
}

SystemKind parse_problem(const std::string& s) {
  if (s == "poisson") return SystemKind::poisson;
  if (s == "stokes") return SystemKind::stokes;
  throw ConfigError("unknown problem '" + s + "'");
}

std::string to_string(SystemKind k) { return k == SystemKind::poisson ? "poisson" : "stokes"; }

CurveLayout parse_layout(const std::string& s) {
  if (s == "closed") return CurveLayout::closed;
  if (s == "split-seam") return CurveLayout::split_seam;
  throw ConfigError("unknown curve layout '" + s + "'");
}

std::string to_string(CurveLayout l) { return l == CurveLayout::closed ? "closed" : "split-seam"; }

std::vector<int> parse_levels(const std::string& s) {
  auto to_int = [&](const std::string& t) {
    std::size_t pos = 0;
    int v = 0;
    try {
      v = std::stoi(t, &pos);
    } catch (const std::exception&) {
      throw ConfigError("bad level list '" + s + "'");
    }
    if (pos != t.size()) throw ConfigError("bad level list '" + s + "'");
    return v;
  };
  std::vector<int> out;
  if (const auto dots = s.find(".."); dots != std::string::npos) {
    const int lo = to_int(s.substr(0, dots));
    const int hi = to_int(s.substr(dots + 2));
    if (hi < lo) throw ConfigError("empty level range '" + s + "'");
    return range(lo, hi);
  }
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_int(item));
  if (out.empty()) throw ConfigError("empty level list");
  return out;
}

SystemKind ExperimentConfig::effective_problem() const {
  if (problem) return *problem;
  return needs_stokes(experiment) ? SystemKind::stokes : SystemKind::poisson;
}

std::vector<int> ExperimentConfig::effective_levels() const {
  if (!levels.empty()) return levels;
  const bool stokes = effective_problem() == SystemKind::stokes;
  switch (experiment) {
    case ExperimentKind::poisson_solve: return range(4, 7);
    case ExperimentKind::stokes_solve: return range(2, 4);
    case ExperimentKind::spectrum:
    case ExperimentKind::bounds: return {stokes ? 3 : 4};
    case ExperimentKind::inexact_bounds:
    case ExperimentKind::sparsity_report: return {3};
    case ExperimentKind::convergence: return range(3, 7);
    case ExperimentKind::mesh_independence: return stokes ? range(2, 4) : range(3, 6);
  }
  return {4};
}

std::vector<double> ExperimentConfig::effective_gammas() const {
  return gammas.empty() ? std::vector<double>{gamma} : gammas;
}

double ExperimentConfig::effective_tol() const {
  if (tol > 0.0) return tol;
  return effective_problem() == SystemKind::poisson ? 1e-10 : 1e-8;
}

InnerPreconditioner ExperimentConfig::effective_inner_pc() const {
  if (inner_pc) return *inner_pc;
  return effective_problem() == SystemKind::poisson ? InnerPreconditioner::gmg : InnerPreconditioner::ic0;
}

void ExperimentConfig::validate() const {
  const SystemKind p = effective_problem();
  if (problem && needs_stokes(experiment) && *problem != SystemKind::stokes)
    throw ConfigError(to_string(experiment) + " is a Stokes experiment");
  if (problem && needs_poisson(experiment) && *problem != SystemKind::poisson)
    throw ConfigError(to_string(experiment) + " is a Poisson experiment");
  for (int l : effective_levels())
    if (l < 1 || l > kMaxLevel) throw ConfigError("level " + std::to_string(l) + " out of range");
  if (facets != 0 && facets < 3) throw ConfigError("an interface needs at least 3 facets");
  if (p == SystemKind::stokes && precond == PrecondKind::bfbt)
    throw ConfigError("the BFBt preconditioner is defined for the Poisson system only");
  if (p == SystemKind::stokes && effective_inner_pc() == InnerPreconditioner::gmg)
    throw ConfigError("the multigrid inner preconditioner is available for the Q1 Poisson block only");
  for (double g : effective_gammas())
    if (!(g > 0.0)) throw ConfigError("gamma must be positive");
  if (!(gamma > 0.0) || !(delta > 0.0)) throw ConfigError("gamma and delta must be positive");
  if (restart < 1 || max_iters < 1) throw ConfigError("restart and max_iters must be positive");
  if (tol < 0.0) throw ConfigError("tolerance must be non-negative");
  if (!(inner_tol > 0.0 && inner_tol < 1.0)) throw ConfigError("inner tolerance must lie in (0, 1)");
  if (threads < 1) throw ConfigError("thread count must be positive");
  const bool certificate = experiment == ExperimentKind::bounds || experiment == ExperimentKind::mesh_independence;
  if (certificate && w_policy != WPolicy::exact) throw ConfigError("bound certificates need the exact W policy");
  if (certificate && precond != PrecondKind::al) throw ConfigError("bound certificates are stated for the AL preconditioner");
  const bool spectral = certificate || experiment == ExperimentKind::spectrum;
  if (spectral && q_policy == QPolicy::lumped)
    throw ConfigError("spectra need a fixed (exact or diag) Q policy, not the inner-iterative lumped one");
  if (experiment == ExperimentKind::convergence && precond == PrecondKind::none)
    throw ConfigError("the convergence study needs a preconditioner");
  if (out.empty()) throw ConfigError("output directory must be set");
}

json ExperimentConfig::to_json() const {
  json j;
  j["experiment"] = to_string(experiment);
  j["problem"] = to_string(effective_problem());
  j["interface"] = to_string(interface);
  j["facets"] = facets;
  j["layout"] = to_string(layout);
  j["levels"] = effective_levels();
  j["gammas"] = effective_gammas();
  j["gamma"] = gamma;
  j["delta"] = delta;
  j["precond"] = to_string(precond);
  j["w_policy"] = to_string(w_policy);
  j["q_policy"] = to_string(q_policy);
  j["inner_pc"] = to_string(effective_inner_pc());
  j["tol"] = effective_tol();
  j["inner_tol"] = inner_tol;
  j["restart"] = restart;
  j["max_iters"] = max_iters;
  j["threads"] = threads;
  j["out"] = out;
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "experiment") c.experiment = parse_experiment(v.get<std::string>());
      else if (key == "problem") c.problem = parse_problem(v.get<std::string>());
      else if (key == "interface") c.interface = parse_interface_kind(v.get<std::string>());
      else if (key == "facets") c.facets = v.get<int>();
      else if (key == "layout") c.layout = parse_layout(v.get<std::string>());
      else if (key == "levels") c.levels = v.is_string() ? parse_levels(v.get<std::string>()) : v.get<std::vector<int>>();
      else if (key == "level") c.levels = {v.get<int>()};
      else if (key == "gammas") c.gammas = v.get<std::vector<double>>();
      else if (key == "gamma") c.gamma = v.get<double>();
      else if (key == "delta") c.delta = v.get<double>();
      else if (key == "precond") c.precond = parse_precond(v.get<std::string>());
      else if (key == "w_policy") c.w_policy = parse_w_policy(v.get<std::string>());
      else if (key == "q_policy") c.q_policy = parse_q_policy(v.get<std::string>());
      else if (key == "inner_pc") c.inner_pc = parse_inner_pc(v.get<std::string>());
      else if (key == "tol") c.tol = v.get<double>();
      else if (key == "inner_tol") c.inner_tol = v.get<double>();
      else if (key == "restart") c.restart = v.get<int>();
      else if (key == "max_iters") c.max_iters = v.get<int>();
      else if (key == "threads") c.threads = v.get<int>();
      else if (key == "out") c.out = v.get<std::string>();
      else throw ConfigError("unknown config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  return c;
}

int default_facets(SystemKind problem, InterfaceKind kind, int level) {
  if (problem == SystemKind::stokes) return (1 << (level + 2)) + 1;
  const int base = kind == InterfaceKind::square ? 12 : 16;
  const int n = level >= 4 ? base << (level - 4) : base >> (4 - level);
  return std::max(n, 4);
}

InterfaceSpec default_interface(SystemKind problem, InterfaceKind kind, int facets) {
  switch (kind) {
    case InterfaceKind::circle:
      return problem == SystemKind::stokes ? InterfaceSpec::circle({0.45, 0.45}, 0.21, facets)
                                           : InterfaceSpec::circle({0.5, 0.5}, 0.21, facets);
    case InterfaceKind::flower: return InterfaceSpec::flower(0.2, 0.04, {0.5, 0.5}, 10.0, facets);
    case InterfaceKind::flower_verbatim: {
      InterfaceSpec s = InterfaceSpec::flower(0.2, 0.04, {0.5, 0.5}, 10.0, facets);
      s.kind = InterfaceKind::flower_verbatim;
      return s;
    }
    case InterfaceKind::square: return InterfaceSpec::square(0.25, 0.5, facets);
  }
  throw ConfigError("unknown interface kind");
}

namespace {

int facets_for(const ExperimentConfig& cfg, int level) {
  return cfg.facets > 0 ? cfg.facets : default_facets(cfg.effective_problem(), cfg.interface, level);
}

}  // namespace

PoissonProblem make_poisson(const ExperimentConfig& cfg, int level, BoundaryTreatment boundary) {
  PoissonSetup s;
  s.level = level;
  s.interface = default_interface(SystemKind::poisson, cfg.interface, facets_for(cfg, level));
  s.layout = cfg.layout;
  s.boundary = boundary;
  return build_poisson(s);
}

StokesProblem make_stokes(const ExperimentConfig& cfg, int level, BoundaryTreatment boundary) {
  StokesSetup s;
  s.level = level;
  s.interface = default_interface(SystemKind::stokes, cfg.interface, facets_for(cfg, level));
  s.layout = cfg.layout;
  s.boundary = boundary;
  return build_stokes(s);
}

BlockSystem poisson_system(const PoissonProblem& p, double gamma, WPolicy w) {
  return build_augmented_poisson(p.a, p.c, p.m_lambda, p.f, p.g, w, gamma);
}

BlockSystem stokes_system(const StokesProblem& p, double gamma, double delta, WPolicy w, StokesAugmentation form) {
  if (form == StokesAugmentation::graddiv) {
    const CsrMatrix a_gd = sparse_add(p.a, p.graddiv, 1.0, gamma);
    return build_augmented_stokes(a_gd, p.b, p.c, p.m_p, p.m_lambda, p.f, p.g, w, gamma, delta, form);
  }
  return build_augmented_stokes(p.a, p.b, p.c, p.m_p, p.m_lambda, p.f, p.g, w, gamma, delta, form);
}

BlockSystem stokes_pencil_system(const StokesProblem& p, double gamma, double delta) {
  BlockSystem s;
  s.kind = SystemKind::stokes;
  s.a = p.a;
  s.b = p.b;
  s.c = p.c;
  s.m_p = p.m_p;
  s.m_lambda = p.m_lambda;
  s.f = p.f;
  s.g = p.g;
  s.gamma = gamma;
  s.delta = delta;
  s.w_policy = WPolicy::exact;
  s.augmentation = StokesAugmentation::explicit_bqb;
  return s;
}

ALConfig al_config(const ExperimentConfig& cfg, int level, bool eliminated) {
  ALConfig a;
  a.gamma = cfg.gamma;
  a.delta = cfg.delta;
  a.w_policy = cfg.w_policy;
  a.q_policy = cfg.q_policy;
  a.a_policy = APolicy::inner_cg;
  a.inner_pc = cfg.effective_inner_pc();
  a.inner_tol = cfg.inner_tol;
  if (a.inner_pc == InnerPreconditioner::gmg) {
    if (cfg.effective_problem() != SystemKind::poisson)
      throw ConfigError("the multigrid inner preconditioner is available for the Q1 Poisson block only");
    a.prolongations =
        std::make_shared<const std::vector<CsrMatrix>>(q1_prolongations(level, std::min(2, level), eliminated));
  }
  return a;
}

SolveOutcome solve_level(const ExperimentConfig& cfg, int level) {
  SolverConfig sc;
  sc.method = cfg.precond == PrecondKind::al_diag ? KrylovMethod::minres : KrylovMethod::fgmres;
  sc.abs_tol = cfg.effective_tol();
  sc.restart = cfg.restart;
  sc.max_iters = cfg.max_iters;
  const ALConfig acfg = al_config(cfg, level, true);
  SolveOutcome out;
  auto run = [&](const BlockSystem& sys, bool augmented) {
    auto p = make_preconditioner(sys, cfg.precond, acfg);
    SaddleOperator op(sys, augmented);
    const Vector b = sys.rhs(augmented);
    out.x.assign(sys.size(), 0.0);
    out.report = solve(op, b, out.x, p.get(), sc);
    out.dofs = sys.size();
  };
  if (cfg.effective_problem() == SystemKind::poisson) {
    const PoissonProblem p = make_poisson(cfg, level, BoundaryTreatment::eliminate);
    out.h = p.mesh->h();
    const bool al = cfg.precond == PrecondKind::al || cfg.precond == PrecondKind::al_diag;
    const BlockSystem sys = poisson_system(p, al ? cfg.gamma : 0.0, cfg.w_policy);
    run(sys, al);
  } else {
    const StokesProblem p = make_stokes(cfg, level, BoundaryTreatment::eliminate);
    out.h = p.mesh->h();
    const BlockSystem sys = stokes_system(p, cfg.gamma, cfg.delta, cfg.w_policy, StokesAugmentation::graddiv);
    run(sys, true);
  }
  return out;
}

std::vector<IterationRow> iteration_study(const ExperimentConfig& cfg) {
  std::vector<IterationRow> rows;
  for (int level : cfg.effective_levels()) {
    const auto t0 = std::chrono::steady_clock::now();
    const SolveOutcome s = solve_level(cfg, level);
    IterationRow r;
    r.level = level;
    r.dofs = s.dofs;
    r.h = s.h;
    r.outer_iters = s.report.outer_iterations;
    r.avg_inner_iters = s.report.average_inner();
    r.converged = s.report.converged;
    r.final_residual = s.report.final_residual;
    r.wall_time = seconds_since(t0);
    rows.push_back(r);
  }
  return rows;
}

double iteration_slope(const std::vector<IterationRow>& rows) {
  if (rows.size() < 2) throw UsageError("a slope needs at least two rows");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& r : rows) {
    if (r.outer_iters < 1 || !(r.h > 0.0)) throw UsageError("slope needs positive iteration counts and mesh sizes");
    const double x = std::log(r.h), y = std::log(static_cast<double>(r.outer_iters));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(rows.size());
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::vector<ConvergenceRow> convergence_study(const std::vector<int>& levels, const ExperimentConfig& cfg) {
  constexpr double pi = std::numbers::pi;
  const ScalarFunction u = [](const Point& x) { return std::sin(2 * pi * x[0]) * std::sin(2 * pi * x[1]); };
  const auto grad = [](const Point& x) {
    return std::array<double, 2>{2 * pi * std::cos(2 * pi * x[0]) * std::sin(2 * pi * x[1]),
                                 2 * pi * std::sin(2 * pi * x[0]) * std::cos(2 * pi * x[1])};
  };
  std::vector<ConvergenceRow> rows;
  for (int level : levels) {
    PoissonSetup s;
    s.level = level;
    s.interface = InterfaceSpec::circle({0.4, 0.4}, 0.2, 1 << level);
    s.layout = cfg.layout;
    s.f = [&u](const Point& x) { return 8 * pi * pi * u(x); };
    s.g = u;
    const PoissonProblem p = build_poisson(s);
    const BlockSystem sys = poisson_system(p, cfg.gamma, cfg.w_policy);
    ExperimentConfig pc = cfg;
    pc.problem = SystemKind::poisson;
    auto prec = make_preconditioner(sys, cfg.precond == PrecondKind::bfbt ? PrecondKind::al : cfg.precond,
                                    al_config(pc, level, true));
    SolverConfig sc;
    sc.method = cfg.precond == PrecondKind::al_diag ? KrylovMethod::minres : KrylovMethod::fgmres;
    sc.abs_tol = std::min(pc.effective_tol(), 1e-10);
    sc.restart = cfg.restart;
    sc.max_iters = cfg.max_iters;
    SaddleOperator op(sys);
    const Vector b = sys.rhs();
    Vector x(sys.size(), 0.0);
    const SolveReport rep = solve(op, b, x, prec.get(), sc);
    const Vector uh = p.map.prolong(std::span<const double>(x.data(), sys.n()));
    const ErrorNorms e = compute_errors(p.velocity, uh, u, grad);
    ConvergenceRow r;
    r.level = level;
    r.h = p.mesh->h();
    r.dofs = sys.size();
    r.l2 = e.l2;
    r.h1 = e.h1_semi;
    r.outer_iters = rep.outer_iterations;
    r.converged = rep.converged;
    if (!rows.empty()) {
      const auto& q = rows.back();
      const double dh = std::log(q.h / r.h);
      r.rate_l2 = std::log(q.l2 / r.l2) / dh;
      r.rate_h1 = std::log(q.h1 / r.h1) / dh;
    }
    rows.push_back(r);
  }
  return rows;
}

SparsityCounts sparsity_counts(int level, int facets, CurveLayout layout) {
  StokesSetup s;
  s.level = level;
  s.interface = default_interface(SystemKind::stokes, InterfaceKind::circle, facets);
  s.layout = layout;
  s.boundary = BoundaryTreatment::constrain;
  const StokesProblem p = build_stokes(s);
  SparsityCounts c;
  c.n = p.a.rows();
  c.m = p.b.rows();
  c.l = p.c.rows();
  const CsrMatrix a_gd = sparse_add(p.a, p.graddiv);
  c.nnz_a_gd = a_gd.nnz();
  c.nnz_a_btb = sparse_add(p.a, sparse_multiply(p.b.transpose(), p.b)).nnz();
  c.nnz_a_gd_ctc = sparse_add(a_gd, sparse_multiply(p.c.transpose(), p.c)).nnz();
  return c;
}

namespace {

ALConfig exact_al(const ExperimentConfig& cfg, double gamma) {
  ALConfig a;
  a.gamma = gamma;
  a.delta = gamma;
  a.w_policy = cfg.w_policy;
  a.q_policy = cfg.q_policy;
  a.a_policy = APolicy::exact;
  return a;
}

}  // namespace

std::vector<SpectrumCase> spectrum_study(const ExperimentConfig& cfg, bool with_unpreconditioned) {
  const int level = cfg.effective_levels().front();
  std::vector<SpectrumCase> out;
  const bool poisson = cfg.effective_problem() == SystemKind::poisson;
  std::optional<PoissonProblem> pp;
  std::optional<StokesProblem> sp;
  if (poisson)
    pp = make_poisson(cfg, level, BoundaryTreatment::constrain);
  else
    sp = make_stokes(cfg, level, BoundaryTreatment::constrain);
  for (double g : cfg.effective_gammas()) {
    const bool al = cfg.precond == PrecondKind::al || cfg.precond == PrecondKind::al_diag;
    const BlockSystem sys = poisson ? poisson_system(*pp, al ? g : 0.0, cfg.w_policy)
                                    : stokes_system(*sp, g, g, cfg.w_policy, StokesAugmentation::explicit_bqb);
    SpectrumCase c;
    c.gamma = g;
    c.dimension = sys.size();
    c.velocity_dofs = sys.n();
    if (cfg.precond == PrecondKind::none) {
      c.preconditioned = system_spectrum(sys, true);
    } else {
      auto p = make_preconditioner(sys, cfg.precond, exact_al(cfg, g));
      c.preconditioned = preconditioned_spectrum(sys, *p);
    }
    if (with_unpreconditioned) c.unpreconditioned = system_spectrum(sys, true);
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<BoundsCase> bounds_study(const ExperimentConfig& cfg, double slack) {
  const int level = cfg.effective_levels().front();
  const bool poisson = cfg.effective_problem() == SystemKind::poisson;
  std::optional<PoissonProblem> pp;
  std::optional<StokesProblem> sp;
  if (poisson)
    pp = make_poisson(cfg, level, BoundaryTreatment::constrain);
  else
    sp = make_stokes(cfg, level, BoundaryTreatment::constrain);
  const ImmersedMesh& curve = poisson ? *pp->curve : *sp->curve;
  std::vector<BoundsCase> out;
  for (double g : cfg.effective_gammas()) {
    const BlockSystem sys = poisson ? poisson_system(*pp, g, WPolicy::exact)
                                    : stokes_system(*sp, g, g, WPolicy::exact, StokesAugmentation::explicit_bqb);
    BoundsCase c;
    c.gamma = g;
    ExperimentConfig ec = cfg;
    ec.w_policy = WPolicy::exact;
    ec.q_policy = QPolicy::exact;
    ALPreconditioner p(sys, exact_al(ec, g));
    c.spectrum = preconditioned_spectrum(sys, p);
    c.restricted = restricted_bounds(sys);
    c.estimates = mesh_lower_bounds(sys, curve.h_gamma());
    auto check = [&](const std::string& name, double lhs, double rhs) {
      c.checks.push_back({name, lhs, rhs, lhs <= rhs + slack});
    };
    check("min(eta,eps,theta) <= lambda_min_pos", c.restricted.lower_bound, c.spectrum.lambda_min_pos);
    check("max Re(lambda) <= 1", c.spectrum.max_real, 1.0);
    check("max |Im(lambda)| <= 0", c.spectrum.max_abs_imag, 0.0);
    check("n <= multiplicity of 1", static_cast<double>(sys.n()),
          static_cast<double>(c.spectrum.count_near_one(1e-6)));
    if (c.estimates.f_eta && c.restricted.eta) check("f(gamma beta1^2) <= eta", *c.estimates.f_eta, *c.restricted.eta);
    if (c.estimates.f_eps && c.restricted.eps) check("f(delta beta2bar^2) <= eps", *c.estimates.f_eps, *c.restricted.eps);
    if (c.estimates.f_theta && c.restricted.theta)
      check("f(min(gamma,delta) beta3bar^2) <= theta", *c.estimates.f_theta, *c.restricted.theta);
    auto& b = c.spectrum.bounds;
    if (c.restricted.eta) b["eta"] = *c.restricted.eta;
    if (c.restricted.eps) b["eps"] = *c.restricted.eps;
    if (c.restricted.theta) b["theta"] = *c.restricted.theta;
    b["lower_bound"] = c.restricted.lower_bound;
    if (c.estimates.beta1_sq) b["beta1_sq"] = *c.estimates.beta1_sq;
    if (c.estimates.sigma1) b["sigma1"] = *c.estimates.sigma1;
    if (c.estimates.sigma1_bc) b["sigma1_bc"] = *c.estimates.sigma1_bc;
    if (c.estimates.beta2bar_sq) b["beta2bar_sq"] = *c.estimates.beta2bar_sq;
    if (c.estimates.beta3bar_sq) b["beta3bar_sq"] = *c.estimates.beta3bar_sq;
    if (c.estimates.f_eta) b["f_eta"] = *c.estimates.f_eta;
    if (c.estimates.f_eps) b["f_eps"] = *c.estimates.f_eps;
    if (c.estimates.f_theta) b["f_theta"] = *c.estimates.f_theta;
    b["c"] = c.estimates.c;
    b["C"] = c.estimates.C;
    out.push_back(std::move(c));
  }
  if (!out.empty() && curve.is_closed()) {
    const MassEquivalence a = mass_equivalence(curve);
    auto& c = out.front();
    c.checks.push_back({"c/C^2 <= pencil ratio min", a.envelope_lo, a.ratio_min, a.envelope_lo <= a.ratio_min + slack});
    c.checks.push_back({"pencil ratio max <= C/c^2", a.ratio_max, a.envelope_hi, a.ratio_max <= a.envelope_hi + slack});
    c.spectrum.bounds["mass_ratio_min"] = a.ratio_min;
    c.spectrum.bounds["mass_ratio_max"] = a.ratio_max;
  }
  return out;
}

std::vector<MeshIndependenceRow> mesh_independence_study(const ExperimentConfig& cfg) {
  std::vector<MeshIndependenceRow> rows;
  const bool poisson = cfg.effective_problem() == SystemKind::poisson;
  const double g = cfg.gamma;
  for (int level : cfg.effective_levels()) {
    MeshIndependenceRow r;
    r.level = level;
    r.facets = facets_for(cfg, level);
    if (poisson) {
      const PoissonProblem p = make_poisson(cfg, level, BoundaryTreatment::constrain);
      const BlockSystem sys = poisson_system(p, g, WPolicy::exact);
      r.dimension = sys.size();
      if (r.dimension <= kDenseEigGuard) {
        ALPreconditioner pc(sys, exact_al(cfg, g));
        r.lambda_min_pos = preconditioned_spectrum(sys, pc).lambda_min_pos;
        r.method = "dense";
      } else {
        r.lambda_min_pos = restricted_bounds(sys).eps.value();
        r.method = "pencil";
      }
    } else {
      const StokesProblem p = make_stokes(cfg, level, BoundaryTreatment::constrain);
      r.dimension = p.a.rows() + p.b.rows() + p.c.rows();
      if (r.dimension <= kDenseEigGuard) {
        const BlockSystem sys = stokes_system(p, g, cfg.delta, WPolicy::exact, StokesAugmentation::explicit_bqb);
        ALConfig a = exact_al(cfg, g);
        a.delta = cfg.delta;
        ALPreconditioner pc(sys, a);
        r.lambda_min_pos = preconditioned_spectrum(sys, pc).lambda_min_pos;
        r.method = "dense";
      } else {
        r.lambda_min_pos = restricted_bounds(stokes_pencil_system(p, g, cfg.delta)).theta.value();
        r.method = "pencil";
      }
    }
    rows.push_back(r);
  }
  return rows;
}

json to_json(const SolveReport& r) {
  json j;
  j["outer_iterations"] = r.outer_iterations;
  j["inner_iterations_per_outer"] = r.inner_iterations_per_outer;
  j["inner_iterations_by_block"] = r.inner_iterations_by_block;
  j["average_inner"] = r.average_inner();
  j["residual_history"] = r.residual_history;
  j["cycle_starts"] = r.cycle_starts;
  j["converged"] = r.converged;
  j["final_residual"] = r.final_residual;
  j["wall_time"] = r.wall_time;
  return j;
}

json to_json(const SpectrumReport& r, bool with_eigenvalues) {
  json j;
  j["n_at_one"] = r.n_at_one;
  j["n_zero"] = r.n_zero;
  j["lambda_min_pos"] = r.lambda_min_pos;
  j["max_abs_imag"] = r.max_abs_imag;
  j["max_real"] = r.max_real;
  j["bounds"] = r.bounds;
  j["size"] = r.eigenvalues.size();
  if (with_eigenvalues) {
    json ev = json::array();
    for (const auto& z : r.eigenvalues) ev.push_back({z.real(), z.imag()});
    j["eigenvalues"] = std::move(ev);
  }
  return j;
}

void write_spectrum_csv(const std::string& path, const std::vector<Complex>& eigenvalues) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path);
  os << "re,im\n" << std::setprecision(17);
  for (const auto& z : eigenvalues) os << z.real() << ',' << z.imag() << '\n';
}

namespace {

std::string tag_number(double g) {
  std::ostringstream s;
  s << g;
  return s.str();
}

void write_json(const std::filesystem::path& p, const json& j) {
  std::ofstream os(p);
  if (!os) throw Error("cannot write " + p.string());
  os << j.dump(2) << '\n';
}

std::ofstream open_csv(const std::filesystem::path& p) {
  std::ofstream os(p);
  if (!os) throw Error("cannot write " + p.string());
  os << std::setprecision(12);
  return os;
}

}  // namespace

int run_experiment(const ExperimentConfig& cfg, std::ostream& log) {
  cfg.validate();
  set_num_threads(cfg.threads);
  namespace fs = std::filesystem;
  const fs::path dir(cfg.out);
  fs::create_directories(dir);
  write_json(dir / "config.json", cfg.to_json());
  json summary;
  summary["config"] = cfg.to_json();
  int status = kExitOk;
  auto csv = open_csv(dir / "results.csv");
  const auto t0 = std::chrono::steady_clock::now();

  switch (cfg.experiment) {
    case ExperimentKind::poisson_solve:
    case ExperimentKind::stokes_solve: {
      csv << "level,dofs,outer_iters,avg_inner_iters,converged,final_residual\n";
      json runs = json::array();
      std::vector<IterationRow> rows;
      for (int level : cfg.effective_levels()) {
        const auto t1 = std::chrono::steady_clock::now();
        const SolveOutcome s = solve_level(cfg, level);
        IterationRow r{level, s.dofs, s.h, s.report.outer_iterations, s.report.average_inner(),
                       s.report.converged, s.report.final_residual, seconds_since(t1)};
        rows.push_back(r);
        csv << r.level << ',' << r.dofs << ',' << r.outer_iters << ',' << r.avg_inner_iters << ','
            << (r.converged ? 1 : 0) << ',' << r.final_residual << '\n';
        log << "level " << level << ": " << r.dofs << " dofs, " << r.outer_iters << " outer iterations, "
            << r.avg_inner_iters << " inner per outer" << (r.converged ? "" : " (NOT converged)") << '\n';
        json j = to_json(s.report);
        j["level"] = level;
        j["dofs"] = s.dofs;
        j["h"] = s.h;
        runs.push_back(std::move(j));
        if (!r.converged) status = kExitNonConvergence;
      }
      summary["runs"] = runs;
      if (rows.size() >= 2) summary["iteration_slope_vs_h"] = iteration_slope(rows);
      break;
    }
    case ExperimentKind::spectrum: {
      csv << "gamma,dimension,lambda_min_pos,max_real,max_abs_imag,n_zero,n_at_one\n";
      json cases = json::array();
      const std::string prob = to_string(cfg.effective_problem());
      for (const auto& c : spectrum_study(cfg)) {
        const auto& r = c.preconditioned;
        csv << c.gamma << ',' << c.dimension << ',' << r.lambda_min_pos << ',' << r.max_real << ','
            << r.max_abs_imag << ',' << r.n_zero << ',' << r.n_at_one << '\n';
        const std::string tag = prob + "_gamma" + tag_number(c.gamma);
        write_spectrum_csv((dir / ("spectrum_" + tag + "_prec.csv")).string(), r.eigenvalues);
        write_spectrum_csv((dir / ("spectrum_" + tag + "_system.csv")).string(), c.unpreconditioned.eigenvalues);
        log << "gamma " << c.gamma << ": dim " << c.dimension << ", lambda_min_pos " << r.lambda_min_pos
            << ", max Re " << r.max_real << ", max |Im| " << r.max_abs_imag << ", zeros " << r.n_zero << '\n';
        json j;
        j["gamma"] = c.gamma;
        j["dimension"] = c.dimension;
        j["velocity_dofs"] = c.velocity_dofs;
        j["preconditioned"] = to_json(r, false);
        j["system"] = to_json(c.unpreconditioned, false);
        cases.push_back(std::move(j));
      }
      summary["cases"] = cases;
      break;
    }
    case ExperimentKind::bounds: {
      csv << "gamma,check,lhs,rhs,holds\n";
      json cases = json::array();
      for (const auto& c : bounds_study(cfg)) {
        json checks = json::array();
        for (const auto& k : c.checks) {
          csv << c.gamma << ",\"" << k.name << "\"," << k.lhs << ',' << k.rhs << ',' << (k.holds ? 1 : 0) << '\n';
          log << "gamma " << c.gamma << ": " << k.name << "  [" << k.lhs << " vs " << k.rhs << "] "
              << (k.holds ? "holds" : "VIOLATED") << '\n';
          checks.push_back({{"name", k.name}, {"lhs", k.lhs}, {"rhs", k.rhs}, {"holds", k.holds}});
          if (!k.holds) status = kExitBoundViolation;
        }
        json j;
        j["gamma"] = c.gamma;
        j["spectrum"] = to_json(c.spectrum, false);
        j["checks"] = checks;
        cases.push_back(std::move(j));
      }
      summary["cases"] = cases;
      break;
    }
    case ExperimentKind::inexact_bounds: {
      const StokesProblem p = make_stokes(cfg, cfg.effective_levels().front(), BoundaryTreatment::constrain);
      const BlockSystem sys = stokes_system(p, cfg.gamma, cfg.delta, WPolicy::exact, StokesAugmentation::graddiv);
      const InexactBounds r = inexact_bounds(sys, cfg.gamma, cfg.delta);
      csv << "quantity,value\n";
      json j;
      for (const auto& [k, v] : r.spectrum.bounds) {
        csv << k << ',' << v << '\n';
        j[k] = v;
      }
      csv << "complex_outside," << r.complex_outside << "\nreal_outside," << r.real_outside << '\n';
      json intervals = json::array();
      for (const auto& [lo, hi] : r.intervals) intervals.push_back({lo, hi});
      j["intervals"] = intervals;
      j["complex_outside"] = r.complex_outside;
      j["real_outside"] = r.real_outside;
      j["worst_circle_excess"] = r.worst_circle_excess;
      j["worst_interval_excess"] = r.worst_interval_excess;
      j["spectrum"] = to_json(r.spectrum, false);
      summary["inexact"] = j;
      write_spectrum_csv((dir / ("spectrum_stokes_inexact_gamma" + tag_number(cfg.gamma) + ".csv")).string(),
                         r.spectrum.eigenvalues);
      log << "circle radius " << r.circle_radius.value_or(0.0) << ", real range [" << r.real_lower << ", "
          << r.real_upper << "], outside: " << r.complex_outside << " complex, " << r.real_outside << " real\n";
      if (r.complex_outside > 0 || r.real_outside > 0) status = kExitBoundViolation;
      break;
    }
    case ExperimentKind::convergence: {
      csv << "level,h,dofs,l2,h1,rate_l2,rate_h1,outer_iters,converged\n";
      json rows = json::array();
      for (const auto& r : convergence_study(cfg.effective_levels(), cfg)) {
        csv << r.level << ',' << r.h << ',' << r.dofs << ',' << r.l2 << ',' << r.h1 << ',' << r.rate_l2 << ','
            << r.rate_h1 << ',' << r.outer_iters << ',' << (r.converged ? 1 : 0) << '\n';
        log << "level " << r.level << ": L2 " << r.l2 << " (rate " << r.rate_l2 << "), H1 " << r.h1 << " (rate "
            << r.rate_h1 << ")\n";
        rows.push_back({{"level", r.level}, {"h", r.h}, {"dofs", r.dofs}, {"l2", r.l2}, {"h1", r.h1},
                        {"rate_l2", r.rate_l2}, {"rate_h1", r.rate_h1}, {"outer_iters", r.outer_iters},
                        {"converged", r.converged}});
        if (!r.converged) status = kExitNonConvergence;
      }
      summary["rows"] = rows;
      break;
    }
    case ExperimentKind::sparsity_report: {
      const int level = cfg.effective_levels().front();
      const int facets = facets_for(cfg, level);
      const SparsityCounts c = sparsity_counts(level, facets, cfg.layout);
      csv << "matrix,rows,nnz\n"
          << "A_GD," << c.n << ',' << c.nnz_a_gd << '\n'
          << "A+BtB," << c.n << ',' << c.nnz_a_btb << '\n'
          << "A_GD+CtC," << c.n << ',' << c.nnz_a_gd_ctc << '\n';
      log << "n = " << c.n << ", m = " << c.m << ", l = " << c.l << "; nnz A_GD " << c.nnz_a_gd << ", A+BtB "
          << c.nnz_a_btb << ", A_GD+CtC " << c.nnz_a_gd_ctc << '\n';
      summary["n"] = c.n;
      summary["m"] = c.m;
      summary["l"] = c.l;
      summary["nnz"] = {{"A_GD", c.nnz_a_gd}, {"A+BtB", c.nnz_a_btb}, {"A_GD+CtC", c.nnz_a_gd_ctc}};
      break;
    }
    case ExperimentKind::mesh_independence: {
      csv << "level,facets,dimension,lambda_min_pos,method\n";
      json rows = json::array();
      double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
      for (const auto& r : mesh_independence_study(cfg)) {
        csv << r.level << ',' << r.facets << ',' << r.dimension << ',' << r.lambda_min_pos << ',' << r.method << '\n';
        log << "level " << r.level << " (" << r.facets << " facets, dim " << r.dimension << "): lambda_min_pos "
            << r.lambda_min_pos << " [" << r.method << "]\n";
        rows.push_back({{"level", r.level}, {"facets", r.facets}, {"dimension", r.dimension},
                        {"lambda_min_pos", r.lambda_min_pos}, {"method", r.method}});
        lo = std::min(lo, r.lambda_min_pos);
        hi = std::max(hi, r.lambda_min_pos);
      }
      summary["rows"] = rows;
      summary["min_over_max"] = lo / hi;
      log << "min/max over levels: " << lo / hi << '\n';
      if (!(lo / hi > 0.5)) status = kExitBoundViolation;
      break;
    }
  }
  summary["exit_status"] = status;
  summary["wall_time"] = seconds_since(t0);
  write_json(dir / "summary.json", summary);
  return status;
}

}  // namespace fictsolve
