// Factorizations, smoothers, multigrid and Krylov solvers on a Q1 Laplacian.
#include <doctest.h>

#include <cmath>
#include <memory>

#include "fictsolve/factor.hpp"
#include "fictsolve/fem.hpp"
#include "fictsolve/krylov.hpp"
#include "fictsolve/multigrid.hpp"

using namespace fictsolve;

namespace {

// interior Q1 Laplacian at the given level
CsrMatrix laplacian(int level) {
  const FeSpace v = FeSpace::q1(std::make_shared<BackgroundMesh>(level));
  const CsrMatrix a = assemble_stiffness(v);
  const Vector f(a.rows(), 1.0);
  return apply_dirichlet(a, {}, f, v.boundary_mask()).a;
}

Vector ones_rhs(const CsrMatrix& a) {
  Vector b(a.rows());
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = 1.0 + 0.1 * static_cast<double>(i % 7);
  return b;
}

double residual(const CsrMatrix& a, std::span<const double> x, std::span<const double> b) {
  Vector r = spmv(a, x);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
  return norm2(r);
}

class IcPc final : public Preconditioner {
 public:
  explicit IcPc(const CsrMatrix& a) : ic_(a), n_(a.rows()) {}
  std::size_t size() const override { return n_; }
  void apply(std::span<const double> r, std::span<double> z) override { ic_.solve(r, z); }

 private:
  IncompleteCholesky ic_;
  std::size_t n_;
};

}  // namespace

TEST_CASE("IC(0) keeps the lower pattern and is exact on a tridiagonal matrix") {
  TripletBuilder t(4, 4);
  for (std::size_t i = 0; i < 4; ++i) {
    t.add(i, i, 2.0);
    if (i > 0) t.add(i, i - 1, -1.0);
    if (i + 1 < 4) t.add(i, i + 1, -1.0);
  }
  const CsrMatrix a = t.build();
  const IncompleteCholesky ic(a);
  CHECK(ic.shift() == 1.0);
  CHECK(ic.factor().nnz() == 7);
  const Vector b{1, 0, 0, 1};
  Vector x(4);
  ic.solve(b, x);
  CHECK(residual(a, x, b) < 1e-12);
}

TEST_CASE("sparse Cholesky and dense LU solve the Laplacian") {
  const CsrMatrix a = laplacian(3);
  const Vector b = ones_rhs(a);
  Vector x(a.rows());
  SparseCholesky(a).solve(b, x);
  CHECK(residual(a, x, b) < 1e-10);
  const Vector y = DenseLu(a).solve(b);
  CHECK(residual(a, y, b) < 1e-10);
}

TEST_CASE("CG search directions are A-orthogonal") {
  const CsrMatrix a = laplacian(3);
  const Vector b = ones_rhs(a);
  std::vector<Vector> dirs;
  Vector x(a.rows(), 0.0);
  SolverConfig cfg;
  cfg.abs_tol = 1e-12;
  const MatrixOperator op(a);
  const SolveReport r = cg(op, b, x, nullptr, cfg, [&](int, std::span<const double> p) { dirs.emplace_back(p.begin(), p.end()); });
  CHECK(r.converged);
  REQUIRE(dirs.size() >= 3);
  for (std::size_t i = 0; i + 1 < std::min<std::size_t>(dirs.size(), 6); ++i) {
    const Vector ap = spmv(a, dirs[i + 1]);
    const double scale = norm2(dirs[i]) * norm2(ap);
    CHECK(std::abs(dot(dirs[i], ap)) < 1e-8 * scale);
  }
}

TEST_CASE("preconditioned CG needs fewer iterations with IC(0)") {
  const CsrMatrix a = laplacian(5);
  const Vector b = ones_rhs(a);
  SolverConfig cfg;
  cfg.abs_tol = 1e-10;
  const MatrixOperator op(a);
  Vector x0(a.rows()), x1(a.rows());
  const SolveReport plain = cg(op, b, x0, nullptr, cfg);
  IcPc pc(a);
  const SolveReport pre = cg(op, b, x1, &pc, cfg);
  CHECK(plain.converged);
  CHECK(pre.converged);
  CHECK(pre.outer_iterations < plain.outer_iterations);
}

TEST_CASE("FGMRES residuals are monotone within each restart cycle") {
  const CsrMatrix a = laplacian(4);
  const Vector b = ones_rhs(a);
  SolverConfig cfg;
  cfg.restart = 10;
  cfg.abs_tol = 1e-10;
  Vector x(a.rows());
  const SolveReport r = fgmres(MatrixOperator(a), b, x, nullptr, cfg);
  CHECK(r.converged);
  CHECK(residual(a, x, b) < 1e-9);
  std::vector<std::size_t> starts = r.cycle_starts;
  starts.push_back(r.residual_history.size());
  for (std::size_t c = 0; c + 1 < starts.size(); ++c)
    for (std::size_t k = starts[c] + 1; k < starts[c + 1]; ++k)
      CHECK(r.residual_history[k] <= r.residual_history[k - 1] * (1 + 1e-12));
}

TEST_CASE("MINRES solves a symmetric indefinite system") {
  // [A I; I 0] with A the Laplacian: symmetric, indefinite, nonsingular
  const CsrMatrix a = laplacian(3);
  const std::size_t n = a.rows();
  TripletBuilder t(2 * n, 2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = a.row_ptr()[i]; k < a.row_ptr()[i + 1]; ++k) t.add(i, a.col_idx()[k], a.values()[k]);
    t.add(i, n + i, 1.0);
    t.add(n + i, i, 1.0);
  }
  const CsrMatrix k = t.build();
  const Vector b = ones_rhs(k);
  Vector x(2 * n);
  SolverConfig cfg;
  cfg.abs_tol = 1e-9;
  const SolveReport r = minres(MatrixOperator(k), b, x, nullptr, cfg);
  CHECK(r.converged);
  CHECK(residual(k, x, b) < 1e-8);
}

TEST_CASE("lattice prolongation reproduces bilinear functions") {
  const CsrMatrix p = lattice_prolongation(3);
  CHECK(p.rows() == 25);
  CHECK(p.cols() == 9);
  Vector coarse(9);
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 3; ++i) coarse[j * 3 + i] = 1.0 + 2.0 * i + 3.0 * j;
  const Vector fine = spmv(p, coarse);
  for (int j = 0; j < 5; ++j)
    for (int i = 0; i < 5; ++i) CHECK(fine[j * 5 + i] == doctest::Approx(1.0 + i + 1.5 * j));
}

TEST_CASE("multigrid V-cycle contracts with a level-independent rate") {
  for (int level : {4, 6}) {
    const CsrMatrix a = laplacian(level);
    const Multigrid mg(a, q1_prolongations(level, 2, true));
    CHECK(mg.levels() == static_cast<std::size_t>(level - 1));
    const Vector b = ones_rhs(a);
    Vector x(a.rows(), 0.0), z(a.rows());
    const double r0 = residual(a, x, b);
    for (int it = 0; it < 5; ++it) {
      Vector r = spmv(a, x);
      for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
      mg.vcycle(r, z);
      axpy(1.0, z, x);
    }
    CHECK(residual(a, x, b) < 1e-3 * r0);
  }
}
