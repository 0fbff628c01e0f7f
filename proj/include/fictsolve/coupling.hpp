#pragma once

#include <functional>

#include "fictsolve/fem.hpp"

namespace fictsolve {

struct CouplingConfig {
  const FeSpace* background = nullptr;
  const FeSpace* immersed = nullptr;
  int quadrature_points = 4;  // Gauss points per immersed segment, no splitting at cell crossings
};

/// C_{alpha i} = <phi_i, psi_alpha>_Gamma, l x n. Vector spaces couple component-wise.
/// Throws GeometryError when a quadrature point falls outside the unit square.
CsrMatrix assemble_coupling(const CouplingConfig& cfg);

/// g_alpha = int_Gamma g psi_alpha.
Vector assemble_coupling_rhs(const ScalarFunction& g, const FeSpace& immersed, int quadrature_points = 4);
Vector assemble_coupling_rhs(const VectorFunction& g, const FeSpace& immersed, int quadrature_points = 4);

/// int_Gamma g.n over a closed counterclockwise polyline (outward normal).
double check_compatibility(const VectorFunction& g, const ImmersedMesh& mesh, int quadrature_points = 4);

/// h_Omega / h_Gamma; the coupling is expected to be stable when this is small.
double mesh_ratio(const BackgroundMesh& background, const ImmersedMesh& curve);

}  // namespace fictsolve
