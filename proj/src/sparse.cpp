#include "fictsolve/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include <Eigen/Dense>

#include "fictsolve/error.hpp"
#include "fictsolve/parallel.hpp"

namespace fictsolve {

CsrMatrix::CsrMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), row_ptr_(rows + 1, 0) {}

CsrMatrix::CsrMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_ptr,
                     std::vector<std::size_t> col_idx, std::vector<double> values)
    : rows_(rows),
      cols_(cols),
      row_ptr_(std::move(row_ptr)),
      col_idx_(std::move(col_idx)),
      values_(std::move(values)) {
  validate();
}

void CsrMatrix::validate() const {
  if (row_ptr_.size() != rows_ + 1 || row_ptr_.front() != 0 || row_ptr_.back() != col_idx_.size() ||
      values_.size() != col_idx_.size())
    throw DimensionError("inconsistent CSR arrays");
  for (std::size_t i = 0; i < rows_; ++i) {
    if (row_ptr_[i] > row_ptr_[i + 1]) throw DimensionError("row offsets must be non-decreasing");
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      if (col_idx_[k] >= cols_) throw DimensionError("column index out of range");
      if (k > row_ptr_[i] && col_idx_[k] <= col_idx_[k - 1])
        throw DimensionError("column indices must strictly increase within a row");
    }
  }
}

CsrMatrix CsrMatrix::identity(std::size_t n) {
  std::vector<double> d(n, 1.0);
  return diagonal(d);
}

CsrMatrix CsrMatrix::diagonal(std::span<const double> d) {
  const std::size_t n = d.size();
  std::vector<std::size_t> rp(n + 1), ci(n);
  std::iota(rp.begin(), rp.end(), std::size_t{0});
  std::iota(ci.begin(), ci.end(), std::size_t{0});
  return CsrMatrix(n, n, std::move(rp), std::move(ci), std::vector<double>(d.begin(), d.end()));
}

double CsrMatrix::at(std::size_t i, std::size_t j) const {
  const auto b = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i]);
  const auto e = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i + 1]);
  const auto it = std::lower_bound(b, e, j);
  if (it == e || *it != j) return 0.0;
  return values_[static_cast<std::size_t>(it - col_idx_.begin())];
}

bool CsrMatrix::has_entry(std::size_t i, std::size_t j) const {
  const auto b = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i]);
  const auto e = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i + 1]);
  return std::binary_search(b, e, j);
}

void CsrMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  if (x.size() != cols_ || y.size() != rows_) throw DimensionError("spmv dimension mismatch");
  parallel_for(rows_, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      double s = 0.0;
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) s += values_[k] * x[col_idx_[k]];
      y[i] = s;
    }
  });
}

void CsrMatrix::multiply_transpose(std::span<const double> x, std::span<double> y) const {
  if (x.size() != rows_ || y.size() != cols_) throw DimensionError("spmv^T dimension mismatch");
  std::fill(y.begin(), y.end(), 0.0);
  for (std::size_t i = 0; i < rows_; ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) y[col_idx_[k]] += values_[k] * xi;
  }
}

Vector CsrMatrix::operator*(std::span<const double> x) const {
  Vector y(rows_);
  multiply(x, y);
  return y;
}

CsrMatrix CsrMatrix::transpose() const {
  std::vector<std::size_t> rp(cols_ + 1, 0);
  for (auto c : col_idx_) ++rp[c + 1];
  for (std::size_t j = 0; j < cols_; ++j) rp[j + 1] += rp[j];
  std::vector<std::size_t> ci(nnz()), pos(rp.begin(), rp.end() - 1);
  std::vector<double> v(nnz());
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      const std::size_t p = pos[col_idx_[k]]++;
      ci[p] = i;
      v[p] = values_[k];
    }
  return CsrMatrix(cols_, rows_, std::move(rp), std::move(ci), std::move(v));
}

Vector CsrMatrix::diagonal_values() const {
  Vector d(std::min(rows_, cols_), 0.0);
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = at(i, i);
  return d;
}

Vector CsrMatrix::row_sums() const {
  Vector s(rows_, 0.0);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) s[i] += values_[k];
  return s;
}

double CsrMatrix::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

CsrMatrix CsrMatrix::scaled(double s) const {
  CsrMatrix r = *this;
  for (double& v : r.values_) v *= s;
  return r;
}

CsrMatrix CsrMatrix::submatrix(const std::vector<std::size_t>& row_map,
                               const std::vector<std::size_t>& col_map) const {
  // row_map / col_map: new index -> old index (strictly increasing)
  constexpr auto none = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> col_new(cols_, none);
  for (std::size_t k = 0; k < col_map.size(); ++k) col_new[col_map[k]] = k;
  std::vector<std::size_t> rp{0}, ci;
  std::vector<double> v;
  for (std::size_t r : row_map) {
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      const std::size_t c = col_new[col_idx_[k]];
      if (c == none) continue;
      ci.push_back(c);
      v.push_back(values_[k]);
    }
    rp.push_back(ci.size());
  }
  return CsrMatrix(row_map.size(), col_map.size(), std::move(rp), std::move(ci), std::move(v));
}

bool CsrMatrix::same_pattern(const CsrMatrix& o) const {
  return rows_ == o.rows_ && cols_ == o.cols_ && row_ptr_ == o.row_ptr_ && col_idx_ == o.col_idx_;
}

void TripletBuilder::add(std::size_t i, std::size_t j, double v) {
  if (i >= rows_ || j >= cols_) throw DimensionError("triplet index out of range");
  entries_.push_back({i, j, v});
}

CsrMatrix TripletBuilder::build() const {
  // stable sort keeps insertion order among duplicates, so sums are reproducible
  std::vector<std::size_t> order(entries_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ea = entries_[a];
    const auto& eb = entries_[b];
    return ea.i != eb.i ? ea.i < eb.i : ea.j < eb.j;
  });
  std::vector<std::size_t> rp(rows_ + 1, 0), ci;
  std::vector<double> v;
  ci.reserve(entries_.size());
  v.reserve(entries_.size());
  std::size_t last_i = std::numeric_limits<std::size_t>::max(), last_j = last_i;
  for (std::size_t k : order) {
    const auto& e = entries_[k];
    if (e.i == last_i && e.j == last_j) {
      v.back() += e.v;
      continue;
    }
    ci.push_back(e.j);
    v.push_back(e.v);
    ++rp[e.i + 1];
    last_i = e.i;
    last_j = e.j;
  }
  for (std::size_t i = 0; i < rows_; ++i) rp[i + 1] += rp[i];
  return CsrMatrix(rows_, cols_, std::move(rp), std::move(ci), std::move(v));
}

DiagonalMatrix::DiagonalMatrix(Vector entries) : d_(std::move(entries)) {
  for (double x : d_)
    if (!(x > 0.0)) throw SingularMatrixError("diagonal weight must be strictly positive");
}

Vector spmv(const CsrMatrix& m, std::span<const double> x) { return m * x; }

CsrMatrix sparse_add(const CsrMatrix& m1, const CsrMatrix& m2, double alpha, double beta) {
  if (m1.rows() != m2.rows() || m1.cols() != m2.cols()) throw DimensionError("sparse_add dimension mismatch");
  const auto& r1 = m1.row_ptr();
  const auto& c1 = m1.col_idx();
  const auto& v1 = m1.values();
  const auto& r2 = m2.row_ptr();
  const auto& c2 = m2.col_idx();
  const auto& v2 = m2.values();
  std::vector<std::size_t> rp{0}, ci;
  std::vector<double> v;
  ci.reserve(m1.nnz() + m2.nnz());
  v.reserve(m1.nnz() + m2.nnz());
  for (std::size_t i = 0; i < m1.rows(); ++i) {
    std::size_t a = r1[i], b = r2[i];
    while (a < r1[i + 1] || b < r2[i + 1]) {
      if (b == r2[i + 1] || (a < r1[i + 1] && c1[a] < c2[b])) {
        ci.push_back(c1[a]);
        v.push_back(alpha * v1[a++]);
      } else if (a == r1[i + 1] || c2[b] < c1[a]) {
        ci.push_back(c2[b]);
        v.push_back(beta * v2[b++]);
      } else {
        ci.push_back(c1[a]);
        v.push_back(alpha * v1[a++] + beta * v2[b++]);
      }
    }
    rp.push_back(ci.size());
  }
  return CsrMatrix(m1.rows(), m1.cols(), std::move(rp), std::move(ci), std::move(v));
}

CsrMatrix triple_product_diag(const CsrMatrix& c, const DiagonalMatrix& d) {
  if (d.size() != c.rows()) throw DimensionError("triple_product_diag: weight size must equal rows of C");
  const std::size_t n = c.cols();
  TripletBuilder tb(n, n);
  const auto& rp = c.row_ptr();
  const auto& ci = c.col_idx();
  const auto& cv = c.values();
  for (std::size_t a = 0; a < c.rows(); ++a)
    for (std::size_t p = rp[a]; p < rp[a + 1]; ++p)
      for (std::size_t q = rp[a]; q < rp[a + 1]; ++q) tb.add(ci[p], ci[q], (cv[p] * cv[q]) / d[a]);
  return tb.build();
}

CsrMatrix triple_product_dense(const CsrMatrix& c, const std::vector<double>& x) {
  const std::size_t l = c.rows(), n = c.cols();
  if (x.size() != l * l) throw DimensionError("triple_product_dense: middle factor must be l x l");
  std::vector<std::size_t> support;
  {
    std::vector<char> used(n, 0);
    for (auto j : c.col_idx()) used[j] = 1;
    for (std::size_t j = 0; j < n; ++j)
      if (used[j]) support.push_back(j);
  }
  const std::size_t k = support.size();
  std::vector<std::size_t> local(n, 0);
  for (std::size_t s = 0; s < k; ++s) local[support[s]] = s;
  Eigen::MatrixXd ck = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k));
  for (std::size_t a = 0; a < l; ++a)
    for (std::size_t p = c.row_ptr()[a]; p < c.row_ptr()[a + 1]; ++p)
      ck(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(local[c.col_idx()[p]])) = c.values()[p];
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> xm(
      x.data(), static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(l));
  const Eigen::MatrixXd g = ck.transpose() * (xm * ck);
  std::vector<std::size_t> rp(n + 1, 0), ci;
  std::vector<double> v;
  ci.reserve(k * k);
  v.reserve(k * k);
  for (std::size_t i = 0; i < n; ++i) {
    rp[i + 1] = rp[i];
    if (k == 0 || support[local[i]] != i) continue;
    const auto li = static_cast<Eigen::Index>(local[i]);
    for (std::size_t s = 0; s < k; ++s) {
      const auto ls = static_cast<Eigen::Index>(s);
      ci.push_back(support[s]);
      v.push_back(0.5 * (g(li, ls) + g(ls, li)));
    }
    rp[i + 1] += k;
  }
  return CsrMatrix(n, n, std::move(rp), std::move(ci), std::move(v));
}

CsrMatrix sparse_multiply(const CsrMatrix& a, const CsrMatrix& b) {
  if (a.cols() != b.rows()) throw DimensionError("sparse_multiply dimension mismatch");
  const std::size_t n = b.cols();
  std::vector<std::size_t> rp{0}, ci;
  std::vector<double> v;
  std::vector<double> acc(n, 0.0);
  std::vector<char> used(n, 0);
  std::vector<std::size_t> cols;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    cols.clear();
    for (std::size_t p = a.row_ptr()[i]; p < a.row_ptr()[i + 1]; ++p) {
      const std::size_t k = a.col_idx()[p];
      const double av = a.values()[p];
      for (std::size_t q = b.row_ptr()[k]; q < b.row_ptr()[k + 1]; ++q) {
        const std::size_t j = b.col_idx()[q];
        if (!used[j]) {
          used[j] = 1;
          cols.push_back(j);
        }
        acc[j] += av * b.values()[q];
      }
    }
    std::sort(cols.begin(), cols.end());
    for (std::size_t j : cols) {
      ci.push_back(j);
      v.push_back(acc[j]);
      acc[j] = 0.0;
      used[j] = 0;
    }
    rp.push_back(ci.size());
  }
  return CsrMatrix(a.rows(), n, std::move(rp), std::move(ci), std::move(v));
}

std::vector<double> to_dense(const CsrMatrix& m) {
  std::vector<double> d(m.rows() * m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t k = m.row_ptr()[i]; k < m.row_ptr()[i + 1]; ++k)
      d[i * m.cols() + m.col_idx()[k]] = m.values()[k];
  return d;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("dot dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void axpy(double a, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw DimensionError("axpy dimension mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

void write_matrix_market(std::ostream& os, const CsrMatrix& m) {
  os << "%%MatrixMarket matrix coordinate real general\n";
  os << m.rows() << ' ' << m.cols() << ' ' << m.nnz() << '\n';
  os << std::setprecision(17);
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t k = m.row_ptr()[i]; k < m.row_ptr()[i + 1]; ++k)
      os << i + 1 << ' ' << m.col_idx()[k] + 1 << ' ' << m.values()[k] << '\n';
}

void write_matrix_market(const std::string& path, const CsrMatrix& m) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot open " + path + " for writing");
  write_matrix_market(f, m);
}

CsrMatrix read_matrix_market(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("empty MatrixMarket stream");
  std::istringstream hdr(line);
  std::string banner, object, format, field, symmetry;
  hdr >> banner >> object >> format >> field >> symmetry;
  auto lower = [](std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
  };
  if (banner != "%%MatrixMarket" || lower(object) != "matrix" || lower(format) != "coordinate")
    throw ConfigError("unsupported MatrixMarket header: " + line);
  field = lower(field);
  symmetry = lower(symmetry);
  if (field != "real" && field != "integer" && field != "pattern") throw ConfigError("unsupported field " + field);
  if (symmetry != "general" && symmetry != "symmetric") throw ConfigError("unsupported symmetry " + symmetry);
  while (std::getline(is, line))
    if (!line.empty() && line[0] != '%') break;
  std::size_t rows = 0, cols = 0, nnz = 0;
  std::istringstream(line) >> rows >> cols >> nnz;
  TripletBuilder tb(rows, cols);
  for (std::size_t k = 0; k < nnz; ++k) {
    std::size_t i = 0, j = 0;
    double v = 1.0;
    if (!(is >> i >> j)) throw ConfigError("truncated MatrixMarket data");
    if (field != "pattern") is >> v;
    if (i == 0 || j == 0) throw ConfigError("MatrixMarket indices are 1-based");
    tb.add(i - 1, j - 1, v);
    if (symmetry == "symmetric" && i != j) tb.add(j - 1, i - 1, v);
  }
  return tb.build();
}

CsrMatrix read_matrix_market(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open " + path);
  return read_matrix_market(f);
}

}  // namespace fictsolve
