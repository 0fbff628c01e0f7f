// Experiment configuration parsing and validation.
#include <doctest.h>

#include "fictsolve/error.hpp"
#include "fictsolve/experiments.hpp"

using namespace fictsolve;

TEST_CASE("parse_levels accepts ranges and lists") {
  CHECK(parse_levels("3..7") == std::vector<int>{3, 4, 5, 6, 7});
  CHECK(parse_levels("3,5") == std::vector<int>{3, 5});
  CHECK(parse_levels("4") == std::vector<int>{4});
  CHECK_THROWS_AS(parse_levels("7..3"), ConfigError);
  CHECK_THROWS_AS(parse_levels("x"), ConfigError);
}

TEST_CASE("experiment names round trip") {
  for (const char* n : {"poisson-solve", "stokes-solve", "spectrum", "bounds", "inexact-bounds", "convergence",
                        "sparsity-report", "mesh-independence"})
    CHECK(to_string(parse_experiment(n)) == n);
  CHECK_THROWS_AS(parse_experiment("nope"), ConfigError);
}

TEST_CASE("BFBt is rejected for Stokes") {
  ExperimentConfig c;
  c.experiment = ExperimentKind::stokes_solve;
  c.precond = PrecondKind::bfbt;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("bounds require the exact W policy") {
  ExperimentConfig c;
  c.experiment = ExperimentKind::bounds;
  c.w_policy = WPolicy::diag;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("config JSON round trip and unknown keys") {
  ExperimentConfig c;
  c.experiment = ExperimentKind::spectrum;
  c.problem = SystemKind::stokes;
  c.levels = {3};
  c.gammas = {10, 100};
  const ExperimentConfig r = ExperimentConfig::from_json(c.to_json());
  CHECK(r.to_json() == c.to_json());
  nlohmann::json j = c.to_json();
  j["bogus"] = 1;
  CHECK_THROWS_AS(ExperimentConfig::from_json(j), ConfigError);
}

TEST_CASE("default facet rules") {
  CHECK(default_facets(SystemKind::stokes, InterfaceKind::circle, 3) == 33);
  CHECK(default_facets(SystemKind::poisson, InterfaceKind::circle, 4) == 16);
  CHECK(default_facets(SystemKind::poisson, InterfaceKind::square, 5) == 24);
}
