#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "fictsolve/sparse.hpp"

namespace fictsolve {

inline constexpr std::size_t kDenseFactorGuard = 20000;

/// Zero-fill incomplete Cholesky M ~ L L^T on the pattern of lower(M).
/// On a non-positive pivot the diagonal is multiplied by (1 + 10^-k), k = 3,2,1,0.
class IncompleteCholesky {
 public:
  explicit IncompleteCholesky(const CsrMatrix& m);

  std::size_t size() const { return l_.rows(); }
  // z = (L L^T)^{-1} r
  void solve(std::span<const double> r, std::span<double> z) const;
  const CsrMatrix& factor() const { return l_; }
  // multiplier applied to the diagonal (1 when no shift was needed)
  double shift() const { return shift_; }

 private:
  bool try_factor(const CsrMatrix& lower, double diag_scale);

  CsrMatrix l_;  // lower triangular, diagonal stored last in each row
  double shift_ = 1.0;
};

CsrMatrix ichol0(const CsrMatrix& m);

/// Symmetric Gauss-Seidel sweep (D+L) D^{-1} (D+U) as an SPD preconditioner.
class SymmetricGaussSeidel {
 public:
  explicit SymmetricGaussSeidel(const CsrMatrix& m);
  void solve(std::span<const double> r, std::span<double> z) const;

 private:
  const CsrMatrix* m_;
  Vector diag_;
};

/// LU with partial pivoting for small dense blocks (dimension <= 20000).
class DenseLu {
 public:
  DenseLu() = default;
  // row-major n x n
  DenseLu(const std::vector<double>& a, std::size_t n);
  explicit DenseLu(const CsrMatrix& m);
  std::size_t size() const { return n_; }
  void solve(std::span<const double> b, std::span<double> x) const;
  Vector solve(std::span<const double> b) const;

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
  std::size_t n_ = 0;
};

Vector dense_factor_solve(const std::vector<double>& a, std::size_t n, std::span<const double> rhs);

/// Sparse Cholesky (exact) for SPD matrices.
class SparseCholesky {
 public:
  SparseCholesky() = default;
  explicit SparseCholesky(const CsrMatrix& m);
  std::size_t size() const { return n_; }
  void solve(std::span<const double> b, std::span<double> x) const;

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
  std::size_t n_ = 0;
};

}  // namespace fictsolve
