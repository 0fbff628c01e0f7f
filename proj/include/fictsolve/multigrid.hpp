#pragma once

#include <span>
#include <vector>

#include "fictsolve/factor.hpp"
#include "fictsolve/sparse.hpp"

namespace fictsolve {

/// Bilinear interpolation from a k x k node lattice to (2k-1) x (2k-1), x fastest.
CsrMatrix lattice_prolongation(std::size_t coarse_nodes_per_side);

/// Prolongations for the Q1 space on the uniform mesh, finest first: entry i maps
/// level (level-i-1) to level (level-i), down to `coarsest`. With eliminate_boundary
/// the lattice boundary nodes are dropped on every level (matching symmetric elimination).
std::vector<CsrMatrix> q1_prolongations(int level, int coarsest, bool eliminate_boundary);

/// Symmetric V-cycle with Galerkin coarse operators P^T A P, Gauss-Seidel
/// smoothing (forward before, backward after) and a dense LU on the coarsest level.
class Multigrid {
 public:
  Multigrid(const CsrMatrix& a, const std::vector<CsrMatrix>& prolongations, int sweeps = 1);

  std::size_t size() const { return ops_.front().rows(); }
  std::size_t levels() const { return ops_.size(); }
  // z = V(r), started from zero
  void vcycle(std::span<const double> r, std::span<double> z) const;

 private:
  void cycle(std::size_t k, std::span<const double> r, std::span<double> z) const;
  void sweep(std::size_t k, std::span<const double> r, std::span<double> z, bool forward) const;

  std::vector<CsrMatrix> ops_;
  std::vector<CsrMatrix> p_, pt_;
  std::vector<Vector> diag_;
  DenseLu coarse_;
  int sweeps_;
};

}  // namespace fictsolve
