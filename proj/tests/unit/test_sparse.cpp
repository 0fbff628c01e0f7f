// CSR storage, products and MatrixMarket IO.
#include <doctest.h>

#include <sstream>

#include "fictsolve/sparse.hpp"

using namespace fictsolve;

namespace {
CsrMatrix small() {
  TripletBuilder t(3, 3);
  t.add(0, 0, 4);
  t.add(0, 1, -1);
  t.add(1, 0, -1);
  t.add(1, 1, 4);
  t.add(1, 2, -1);
  t.add(2, 1, -1);
  t.add(2, 2, 4);
  t.add(2, 2, 0.5);  // duplicates are summed
  return t.build();
}
}  // namespace

TEST_CASE("triplet assembly sums duplicates") {
  const CsrMatrix m = small();
  CHECK(m.nnz() == 7);
  CHECK(m.at(2, 2) == doctest::Approx(4.5));
  CHECK(m.at(0, 2) == 0.0);
  CHECK_FALSE(m.has_entry(0, 2));
}

TEST_CASE("spmv and transpose product agree for a symmetric matrix") {
  const CsrMatrix m = small();
  const Vector x{1, 2, 3};
  const Vector y = spmv(m, x);
  Vector yt(3);
  m.multiply_transpose(x, yt);
  CHECK(y[0] == doctest::Approx(2));
  CHECK(y[2] == doctest::Approx(11.5));
  for (int i = 0; i < 3; ++i) CHECK(y[i] == doctest::Approx(yt[i]));
}

TEST_CASE("sparse_add keeps the union pattern including cancellations") {
  const CsrMatrix m = small();
  const CsrMatrix z = sparse_add(m, m, 1.0, -1.0);
  CHECK(z.nnz() == m.nnz());
  CHECK(z.max_abs() == 0.0);
}

TEST_CASE("sparse_multiply matches dense product") {
  const CsrMatrix m = small();
  const CsrMatrix p = sparse_multiply(m, m.transpose());
  const auto d = to_dense(m);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      double s = 0;
      for (std::size_t k = 0; k < 3; ++k) s += d[i * 3 + k] * d[j * 3 + k];
      CHECK(p.at(i, j) == doctest::Approx(s));
    }
}

TEST_CASE("triple products are exactly symmetric") {
  TripletBuilder t(2, 3);
  t.add(0, 0, 0.3);
  t.add(0, 1, 0.7);
  t.add(1, 1, 0.1);
  t.add(1, 2, 0.9);
  const CsrMatrix c = t.build();
  const CsrMatrix d = triple_product_diag(c, DiagonalMatrix({2.0, 3.0}));
  const CsrMatrix x = triple_product_dense(c, {2.0, 0.5, 0.5, 3.0});
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(d.at(i, j) == d.at(j, i));
      CHECK(x.at(i, j) == x.at(j, i));
    }
  CHECK(d.at(1, 1) == doctest::Approx(0.49 / 2 + 0.01 / 3));
}

TEST_CASE("MatrixMarket round trip preserves pattern and values") {
  const CsrMatrix m = small();
  std::stringstream ss;
  write_matrix_market(ss, m);
  const CsrMatrix r = read_matrix_market(ss);
  CHECK(r.same_pattern(m));
  for (std::size_t k = 0; k < m.nnz(); ++k) CHECK(r.values()[k] == m.values()[k]);
}
