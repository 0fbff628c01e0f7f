#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include "fictsolve/mesh.hpp"
#include "fictsolve/sparse.hpp"

namespace fictsolve {

/// Tensor-product Gauss-Legendre rule on the reference square [0,1]^2.
struct QuadratureRule {
  std::vector<std::array<double, 2>> points;
  std::vector<double> weights;
  int degree = 0;  // exact for polynomials of this degree in each variable
};

/// 1D Gauss-Legendre rule on [0,1] with n points (1 <= n <= 6).
void gauss_legendre_01(int n, std::vector<double>& points, std::vector<double>& weights);
QuadratureRule gauss_tensor(int n_per_dim);

enum class ElementKind { q1_scalar, q2_vector, q1_curve_scalar, q1_curve_vector };

/// Immersed dof layout: closed (one dof per vertex) or split at vertex 0 (n+1 dofs,
/// the seam vertex duplicated as happens when an interval is mapped onto a closed curve).
enum class CurveLayout { closed, split_seam };

class FeSpace {
 public:
  static FeSpace q1(std::shared_ptr<const BackgroundMesh> mesh);
  static FeSpace q2_vector(std::shared_ptr<const BackgroundMesh> mesh);
  static FeSpace curve_scalar(std::shared_ptr<const ImmersedMesh> mesh, CurveLayout layout = CurveLayout::closed);
  static FeSpace curve_vector(std::shared_ptr<const ImmersedMesh> mesh, CurveLayout layout = CurveLayout::closed);

  ElementKind kind() const { return kind_; }
  bool is_background() const { return kind_ == ElementKind::q1_scalar || kind_ == ElementKind::q2_vector; }
  int components() const { return components_; }
  int degree() const { return degree_; }
  std::size_t dof_count() const { return scalar_dofs_ * components_; }
  std::size_t scalar_dofs() const { return scalar_dofs_; }

  const BackgroundMesh& mesh() const;
  const std::shared_ptr<const BackgroundMesh>& mesh_ptr() const { return mesh_; }
  const ImmersedMesh& curve() const;
  const std::shared_ptr<const ImmersedMesh>& curve_ptr() const { return curve_; }
  CurveLayout layout() const { return layout_; }

  // background spaces: nodes per side = degree * 2^L + 1
  int nodes_per_side() const { return nodes_per_side_; }
  // scalar node indices of cell (i,j), lexicographic with x fastest, (degree+1)^2 entries
  void cell_nodes(int i, int j, std::vector<std::size_t>& out) const;
  Point node_point(std::size_t scalar_node) const;
  // true for dofs on the boundary of the unit square (background spaces only)
  std::vector<char> boundary_mask() const;

  // curve spaces: the two scalar dofs of segment s
  std::array<std::size_t, 2> segment_dofs(std::size_t s) const;

 private:
  ElementKind kind_ = ElementKind::q1_scalar;
  std::shared_ptr<const BackgroundMesh> mesh_;
  std::shared_ptr<const ImmersedMesh> curve_;
  CurveLayout layout_ = CurveLayout::closed;
  int components_ = 1;
  int degree_ = 1;
  int nodes_per_side_ = 0;
  std::size_t scalar_dofs_ = 0;
};

/// Values and reference gradients of the (degree+1)^2 tensor Lagrange basis at (xi, eta).
void lagrange_basis(int degree, double xi, double eta, std::vector<double>& values,
                    std::vector<std::array<double, 2>>* grads = nullptr);

using ScalarFunction = std::function<double(const Point&)>;
using VectorFunction = std::function<std::array<double, 2>(const Point&)>;

CsrMatrix assemble_stiffness(const FeSpace& space);
CsrMatrix assemble_divergence(const FeSpace& velocity, const FeSpace& pressure);
CsrMatrix assemble_mass(const FeSpace& space);
/// gamma * (div phi_i, div phi_j), full component coupling. gamma = 0 keeps the pattern.
CsrMatrix assemble_graddiv(const FeSpace& space, double gamma);
Vector assemble_load(const FeSpace& space, const ScalarFunction& f);
Vector assemble_load(const FeSpace& space, const VectorFunction& f);

/// Nodal interpolant on a background space.
Vector interpolate(const FeSpace& space, const ScalarFunction& f);
Vector interpolate(const FeSpace& space, const VectorFunction& f);

struct ErrorNorms {
  double l2 = 0.0;
  double h1_semi = 0.0;
};

/// L2 and H1-seminorm errors with a 5x5 Gauss rule per cell (scalar Q1 space).
ErrorNorms compute_errors(const FeSpace& space, std::span<const double> u_h, const ScalarFunction& u_exact,
                          const std::function<std::array<double, 2>(const Point&)>& grad_exact);

/// Free dofs after removing the masked ones.
struct DofReduction {
  std::size_t full_size = 0;
  std::vector<std::size_t> free;  // reduced index -> full index

  std::size_t reduced_size() const { return free.size(); }
  Vector restrict_vector(std::span<const double> full) const;
  Vector prolong(std::span<const double> reduced) const;  // masked entries set to 0
};

DofReduction make_reduction(const std::vector<char>& mask);

struct DirichletResult {
  CsrMatrix a;                      // rows and columns removed
  std::vector<CsrMatrix> couplings; // columns removed
  Vector f;
  DofReduction map;
};

/// Homogeneous Dirichlet by symmetric elimination of the masked dofs of A, of the
/// columns of every coupling block (B, C) and of the load vector.
DirichletResult apply_dirichlet(const CsrMatrix& a, const std::vector<CsrMatrix>& couplings,
                                std::span<const double> f, const std::vector<char>& mask);

/// Keeps the dimension: masked rows/columns of A are reduced to diag_value on the
/// diagonal (dropped from the pattern otherwise).
CsrMatrix constrain_in_place(const CsrMatrix& a, const std::vector<char>& mask, double diag_value);
/// Drops the masked columns from the pattern of a coupling block.
CsrMatrix constrain_columns(const CsrMatrix& b, const std::vector<char>& mask);

}  // namespace fictsolve
