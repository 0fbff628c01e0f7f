#pragma once

#include <memory>

#include "fictsolve/coupling.hpp"
#include "fictsolve/fem.hpp"

namespace fictsolve {

/// eliminate: symmetric removal of boundary dofs (solver experiments).
/// constrain: keep the dimension, boundary rows/cols of A reduced to a diagonal
/// and removed from B, C (spectrum and sparsity experiments).
enum class BoundaryTreatment { eliminate, constrain };

struct PoissonSetup {
  int level = 4;
  InterfaceSpec interface = InterfaceSpec::circle({0.5, 0.5}, 0.21, 16);
  CurveLayout layout = CurveLayout::closed;
  int coupling_points = 4;
  ScalarFunction f = [](const Point&) { return 1.0; };
  ScalarFunction g = [](const Point&) { return 1.0; };
  BoundaryTreatment boundary = BoundaryTreatment::eliminate;
};

struct PoissonProblem {
  std::shared_ptr<const BackgroundMesh> mesh;
  std::shared_ptr<const ImmersedMesh> curve;
  FeSpace velocity;    // Q1 background space (full, before boundary treatment)
  FeSpace multiplier;  // immersed space
  CsrMatrix a;         // after boundary treatment
  CsrMatrix c;
  CsrMatrix m_lambda;
  Vector f;
  Vector g;
  DofReduction map;    // identity for the constrained treatment
};

PoissonProblem build_poisson(const PoissonSetup& setup);

struct StokesSetup {
  int level = 3;
  InterfaceSpec interface = InterfaceSpec::circle({0.45, 0.45}, 0.21, 33);
  CurveLayout layout = CurveLayout::closed;
  int coupling_points = 4;
  VectorFunction f = [](const Point&) { return std::array<double, 2>{1.0, 0.0}; };
  VectorFunction g = [](const Point&) { return std::array<double, 2>{-0.5, 0.5}; };
  BoundaryTreatment boundary = BoundaryTreatment::constrain;
};

struct StokesProblem {
  std::shared_ptr<const BackgroundMesh> mesh;
  std::shared_ptr<const ImmersedMesh> curve;
  FeSpace velocity;   // Q2 vector
  FeSpace pressure;   // Q1
  FeSpace multiplier; // Q1 vector on the curve
  CsrMatrix a;        // vector Laplacian after boundary treatment
  CsrMatrix graddiv;  // (div, div) with unit weight, same treatment
  CsrMatrix b;
  CsrMatrix c;
  CsrMatrix m_p;
  CsrMatrix m_lambda;
  Vector f;
  Vector g;
  DofReduction map;
};

StokesProblem build_stokes(const StokesSetup& setup);

}  // namespace fictsolve
