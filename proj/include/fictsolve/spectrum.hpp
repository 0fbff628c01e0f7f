#pragma once

#include <complex>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fictsolve/mesh.hpp"
#include "fictsolve/precond.hpp"

namespace fictsolve {

using DenseMatrix = Eigen::MatrixXd;
using Complex = std::complex<double>;

inline constexpr std::size_t kDenseEigGuard = 2000;
inline constexpr double kZeroThreshold = 1e-10;
inline constexpr double kOneThreshold = 1e-8;

/// Balancing, Householder reduction to Hessenberg form and Francis double-shift QR.
/// Eigenvalues sorted by real part (then imaginary part).
std::vector<Complex> dense_eigenvalues(const DenseMatrix& m);

/// Eigenvalues of the pencil (M, N), N SPD, via Cholesky reduction; ascending.
std::vector<double> sym_generalized_eigs(const DenseMatrix& m, const DenseMatrix& n);

DenseMatrix to_dense_matrix(const CsrMatrix& m);

struct SpectrumReport {
  std::vector<Complex> eigenvalues;
  int n_at_one = 0;          // |lambda - 1| < 1e-8
  int n_zero = 0;            // |lambda| < 1e-10
  double lambda_min_pos = 0; // smallest real part above 1e-10
  double max_abs_imag = 0;
  double max_real = 0;
  std::map<std::string, double> bounds;

  int count_near_one(double tol) const;
};

SpectrumReport make_report(std::vector<Complex> eigenvalues);

/// P^{-1} A by applying the preconditioner to each column of the system operator.
DenseMatrix preconditioned_matrix(const BlockSystem& sys, Preconditioner& p, bool augmented = true);
SpectrumReport preconditioned_spectrum(const BlockSystem& sys, Preconditioner& p, bool augmented = true);
/// Spectrum of the unpreconditioned saddle matrix.
SpectrumReport system_spectrum(const BlockSystem& sys, bool augmented = false);

/// Smallest positive eigenvalue of (K^T X K, N + c K^T X K) restricted to the
/// A-orthogonal complement of ker K (basis from column-pivoted QR of A^{-1} K^T).
/// Returns nothing when the complement is empty.
std::optional<double> restricted_min_eig(const DenseMatrix& a, const DenseMatrix& k, const DenseMatrix& x,
                                         double weight, double denom_weight);

struct RestrictedBounds {
  std::optional<double> eta, eps, theta;
  double lower_bound = 0.0;  // min of the present quantities
};

/// Requires the explicit augmentation (Stokes) and exact W = M_lambda^2, Q = M_p.
RestrictedBounds restricted_bounds(const BlockSystem& sys);

struct MeshBounds {
  double c = 0, C = 0;               // extremal eigenvalues of M_lambda / h_Gamma
  double h_gamma = 0;
  std::optional<double> beta1_sq;    // (B^T M_p^{-1} B, A) on the complement of ker B
  std::optional<double> sigma1;      // (C^T (h M_lambda)^{-1} C, A) on the complement of ker C
  std::optional<double> sigma1_bc;   // combined pencil on the complement of ker B cap ker C
  std::optional<double> beta2bar_sq, beta3bar_sq;
  std::optional<double> f_eta, f_eps, f_theta;
};

MeshBounds mesh_lower_bounds(const BlockSystem& sys, double h_gamma);

inline double f_map(double t) { return t / (1.0 + t); }

struct InexactBounds {
  double gamma_min_a = 0, gamma_max_a = 0;
  double gamma_min_s = 0, gamma_max_s = 0;
  double gamma_min_x = 0, gamma_max_x = 0;
  std::optional<double> circle_radius;
  // [lo, hi] for: the A case, the S case, the X case, the combined case
  std::vector<std::pair<double, double>> intervals;
  double real_lower = 0, real_upper = 0;
  SpectrumReport spectrum;
  int complex_outside = 0;   // non-real eigenvalues outside the circle
  int real_outside = 0;      // real nonzero eigenvalues outside [real_lower, real_upper]
  double worst_circle_excess = 0;
  double worst_interval_excess = 0;
};

/// Stokes system sys with (1,1) block Abar = sys.a_aug; Ahat = IC(0)(Abar),
/// Shat = diag(M_p)/gamma, Xhat = diag(M_lambda)^2/delta.
InexactBounds inexact_bounds(const BlockSystem& sys, double gamma, double delta, double slack = 1e-8);

struct MassEquivalence {
  double ratio_min = 0, ratio_max = 0;
  double c = 0, C = 0;
  double h = 0;
  double envelope_lo = 0, envelope_hi = 0;  // c/C^2, C/c^2
};

MassEquivalence mass_equivalence(const ImmersedMesh& mesh);

}  // namespace fictsolve
