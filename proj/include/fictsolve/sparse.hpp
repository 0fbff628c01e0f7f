#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace fictsolve {

using Vector = std::vector<double>;

/// Compressed-row sparse matrix. Column indices strictly increase within a row.
/// Stored entries are structural: explicit zeros produced by assembly are kept.
class CsrMatrix {
 public:
  CsrMatrix() = default;
  CsrMatrix(std::size_t rows, std::size_t cols);  // empty pattern
  CsrMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_ptr,
            std::vector<std::size_t> col_idx, std::vector<double> values);

  static CsrMatrix identity(std::size_t n);
  static CsrMatrix diagonal(std::span<const double> d);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return col_idx_.size(); }

  const std::vector<std::size_t>& row_ptr() const { return row_ptr_; }
  const std::vector<std::size_t>& col_idx() const { return col_idx_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  // value at (i, j), 0 when not stored
  double at(std::size_t i, std::size_t j) const;
  bool has_entry(std::size_t i, std::size_t j) const;

  // y = M x
  void multiply(std::span<const double> x, std::span<double> y) const;
  // y = M^T x
  void multiply_transpose(std::span<const double> x, std::span<double> y) const;
  Vector operator*(std::span<const double> x) const;

  CsrMatrix transpose() const;
  Vector diagonal_values() const;
  Vector row_sums() const;
  double max_abs() const;
  CsrMatrix scaled(double s) const;
  // keeps the rows/columns whose flag is set, renumbered consecutively
  CsrMatrix submatrix(const std::vector<std::size_t>& row_map, const std::vector<std::size_t>& col_map) const;

  bool same_pattern(const CsrMatrix& other) const;

 private:
  void validate() const;

  std::size_t rows_ = 0, cols_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::size_t> col_idx_;
  std::vector<double> values_;
};

/// Accumulates (i, j, v) contributions; duplicates are summed on build().
class TripletBuilder {
 public:
  TripletBuilder(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {}
  void add(std::size_t i, std::size_t j, double v);
  void reserve(std::size_t n) { entries_.reserve(n); }
  CsrMatrix build() const;

 private:
  struct Entry {
    std::size_t i, j;
    double v;
  };
  std::size_t rows_, cols_;
  std::vector<Entry> entries_;
};

/// Strictly positive diagonal weight.
class DiagonalMatrix {
 public:
  DiagonalMatrix() = default;
  explicit DiagonalMatrix(Vector entries);
  std::size_t size() const { return d_.size(); }
  const Vector& entries() const { return d_; }
  double operator[](std::size_t i) const { return d_[i]; }

 private:
  Vector d_;
};

Vector spmv(const CsrMatrix& m, std::span<const double> x);

/// alpha*M1 + beta*M2 over the union pattern (no dropping of zeros).
CsrMatrix sparse_add(const CsrMatrix& m1, const CsrMatrix& m2, double alpha = 1.0, double beta = 1.0);

/// C^T diag(d)^{-1} C, built symmetrically: entry (i,j) and (j,i) use the same sums.
CsrMatrix triple_product_diag(const CsrMatrix& c, const DiagonalMatrix& d);

/// C^T X C with a dense symmetric l-by-l middle factor X (row-major, l*l entries).
/// Entries are exactly symmetric.
CsrMatrix triple_product_dense(const CsrMatrix& c, const std::vector<double>& x);

/// General sparse product A*B.
CsrMatrix sparse_multiply(const CsrMatrix& a, const CsrMatrix& b);

/// Dense row-major copy.
std::vector<double> to_dense(const CsrMatrix& m);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
// y += a x
void axpy(double a, std::span<const double> x, std::span<double> y);

void write_matrix_market(std::ostream& os, const CsrMatrix& m);
void write_matrix_market(const std::string& path, const CsrMatrix& m);
CsrMatrix read_matrix_market(std::istream& is);
CsrMatrix read_matrix_market(const std::string& path);

}  // namespace fictsolve
