#include "fictsolve/factor.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "fictsolve/error.hpp"

namespace fictsolve {

namespace {

CsrMatrix lower_part(const CsrMatrix& m) {
  std::vector<std::size_t> rp{0}, ci;
  std::vector<double> v;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    bool has_diag = false;
    for (std::size_t k = m.row_ptr()[i]; k < m.row_ptr()[i + 1]; ++k) {
      const std::size_t j = m.col_idx()[k];
      if (j > i) break;
      if (j == i) has_diag = true;
      ci.push_back(j);
      v.push_back(m.values()[k]);
    }
    if (!has_diag) throw FactorizationError("incomplete Cholesky: missing diagonal entry");
    rp.push_back(ci.size());
  }
  return CsrMatrix(m.rows(), m.cols(), std::move(rp), std::move(ci), std::move(v));
}

Eigen::SparseMatrix<double> to_eigen(const CsrMatrix& m) {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(m.nnz());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t k = m.row_ptr()[i]; k < m.row_ptr()[i + 1]; ++k)
      t.emplace_back(static_cast<int>(i), static_cast<int>(m.col_idx()[k]), m.values()[k]);
  Eigen::SparseMatrix<double> s(static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols()));
  s.setFromTriplets(t.begin(), t.end());
  return s;
}

}  // namespace

IncompleteCholesky::IncompleteCholesky(const CsrMatrix& m) {
  if (m.rows() != m.cols()) throw DimensionError("incomplete Cholesky needs a square matrix");
  const CsrMatrix lower = lower_part(m);
  if (try_factor(lower, 1.0)) return;
  for (int k = 3; k >= 0; --k) {
    const double s = 1.0 + std::pow(10.0, -k);
    if (try_factor(lower, s)) {
      shift_ = s;
      return;
    }
  }
  throw FactorizationError("incomplete Cholesky broke down after all diagonal shifts");
}

bool IncompleteCholesky::try_factor(const CsrMatrix& lower, double diag_scale) {
  const std::size_t n = lower.rows();
  const auto& rp = lower.row_ptr();
  const auto& ci = lower.col_idx();
  std::vector<double> v = lower.values();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t di = rp[i + 1] - 1;  // diagonal is the last entry of the row
    v[di] *= diag_scale;
    for (std::size_t p = rp[i]; p < di; ++p) {
      const std::size_t k = ci[p];
      // sparse dot of row i (cols < k) and row k (cols < k)
      double s = v[p];
      std::size_t a = rp[i], b = rp[k];
      const std::size_t bend = rp[k + 1] - 1;
      while (a < p && b < bend) {
        if (ci[a] < ci[b]) {
          ++a;
        } else if (ci[b] < ci[a]) {
          ++b;
        } else {
          s -= v[a++] * v[b++];
        }
      }
      v[p] = s / v[bend];
    }
    double d = v[di];
    for (std::size_t p = rp[i]; p < di; ++p) d -= v[p] * v[p];
    if (!(d > 0.0) || !std::isfinite(d)) return false;
    v[di] = std::sqrt(d);
  }
  l_ = CsrMatrix(n, n, rp, ci, std::move(v));
  return true;
}

void IncompleteCholesky::solve(std::span<const double> r, std::span<double> z) const {
  const std::size_t n = l_.rows();
  if (r.size() != n || z.size() != n) throw DimensionError("incomplete Cholesky solve dimension mismatch");
  const auto& rp = l_.row_ptr();
  const auto& ci = l_.col_idx();
  const auto& v = l_.values();
  for (std::size_t i = 0; i < n; ++i) {
    double s = r[i];
    const std::size_t di = rp[i + 1] - 1;
    for (std::size_t p = rp[i]; p < di; ++p) s -= v[p] * z[ci[p]];
    z[i] = s / v[di];
  }
  for (std::size_t i = n; i-- > 0;) {
    const std::size_t di = rp[i + 1] - 1;
    z[i] /= v[di];
    const double zi = z[i];
    for (std::size_t p = rp[i]; p < di; ++p) z[ci[p]] -= v[p] * zi;
  }
}

CsrMatrix ichol0(const CsrMatrix& m) { return IncompleteCholesky(m).factor(); }

SymmetricGaussSeidel::SymmetricGaussSeidel(const CsrMatrix& m) : m_(&m), diag_(m.diagonal_values()) {
  for (double d : diag_)
    if (!(d > 0.0)) throw FactorizationError("Gauss-Seidel needs a positive diagonal");
}

void SymmetricGaussSeidel::solve(std::span<const double> r, std::span<double> z) const {
  const auto& rp = m_->row_ptr();
  const auto& ci = m_->col_idx();
  const auto& v = m_->values();
  const std::size_t n = m_->rows();
  // forward: (D+L) y = r
  for (std::size_t i = 0; i < n; ++i) {
    double s = r[i];
    for (std::size_t p = rp[i]; p < rp[i + 1] && ci[p] < i; ++p) s -= v[p] * z[ci[p]];
    z[i] = s / diag_[i];
  }
  // backward: (D+U) z = D y
  for (std::size_t i = n; i-- > 0;) {
    double s = 0.0;
    for (std::size_t p = rp[i]; p < rp[i + 1]; ++p)
      if (ci[p] > i) s += v[p] * z[ci[p]];
    z[i] -= s / diag_[i];
  }
}

struct DenseLu::Impl {
  Eigen::PartialPivLU<Eigen::MatrixXd> lu;
};

DenseLu::DenseLu(const std::vector<double>& a, std::size_t n) : n_(n) {
  if (n > kDenseFactorGuard) throw DimensionError("dense factorization guard exceeded");
  if (a.size() != n * n) throw DimensionError("dense LU: matrix must be n x n");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = a[i * n + j];
  auto impl = std::make_shared<Impl>();
  impl->lu.compute(m);
  const Eigen::MatrixXd& f = impl->lu.matrixLU();
  double umax = 0.0, umin = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < f.rows(); ++i) {
    umax = std::max(umax, std::abs(f(i, i)));
    umin = std::min(umin, std::abs(f(i, i)));
  }
  if (n > 0 && !(umin > std::numeric_limits<double>::epsilon() * static_cast<double>(n) * umax))
    throw SingularMatrixError("matrix is singular to working precision");
  impl_ = std::move(impl);
}

DenseLu::DenseLu(const CsrMatrix& m) : DenseLu(to_dense(m), m.rows()) {
  if (m.rows() != m.cols()) throw DimensionError("dense LU needs a square matrix");
}

void DenseLu::solve(std::span<const double> b, std::span<double> x) const {
  if (b.size() != n_ || x.size() != n_) throw DimensionError("dense LU solve dimension mismatch");
  Eigen::Map<const Eigen::VectorXd> bm(b.data(), static_cast<Eigen::Index>(n_));
  Eigen::Map<Eigen::VectorXd> xm(x.data(), static_cast<Eigen::Index>(n_));
  xm = impl_->lu.solve(bm);
}

Vector DenseLu::solve(std::span<const double> b) const {
  Vector x(n_);
  solve(b, x);
  return x;
}

Vector dense_factor_solve(const std::vector<double>& a, std::size_t n, std::span<const double> rhs) {
  return DenseLu(a, n).solve(rhs);
}

struct SparseCholesky::Impl {
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt;
};

SparseCholesky::SparseCholesky(const CsrMatrix& m) : n_(m.rows()) {
  if (m.rows() != m.cols()) throw DimensionError("sparse Cholesky needs a square matrix");
  auto impl = std::make_shared<Impl>();
  impl->llt.compute(to_eigen(m));
  if (impl->llt.info() != Eigen::Success) throw FactorizationError("sparse Cholesky failed: matrix not SPD");
  impl_ = std::move(impl);
}

void SparseCholesky::solve(std::span<const double> b, std::span<double> x) const {
  if (b.size() != n_ || x.size() != n_) throw DimensionError("sparse Cholesky solve dimension mismatch");
  Eigen::Map<const Eigen::VectorXd> bm(b.data(), static_cast<Eigen::Index>(n_));
  Eigen::Map<Eigen::VectorXd> xm(x.data(), static_cast<Eigen::Index>(n_));
  xm = impl_->llt.solve(bm);
}

}  // namespace fictsolve
