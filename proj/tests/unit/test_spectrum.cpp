// Eigensolvers, restricted pencils and augmented Poisson spectra.
#include <doctest.h>

#include <algorithm>
#include <random>

#include "fictsolve/experiments.hpp"
#include "fictsolve/spectrum.hpp"

using namespace fictsolve;

namespace {
DenseMatrix random_matrix(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  DenseMatrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = u(rng);
  return m;
}
}  // namespace

TEST_CASE("QR eigenvalues match Eigen on a nonsymmetric matrix") {
  const DenseMatrix m = random_matrix(40, 7);
  std::vector<Complex> ours = dense_eigenvalues(m);
  Eigen::EigenSolver<DenseMatrix> es(m, false);
  std::vector<Complex> ref(es.eigenvalues().data(), es.eigenvalues().data() + 40);
  const auto key = [](const Complex& a, const Complex& b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  };
  std::sort(ours.begin(), ours.end(), key);
  std::sort(ref.begin(), ref.end(), key);
  for (int i = 0; i < 40; ++i) CHECK(std::abs(ours[i] - ref[i]) < 1e-8);
}

TEST_CASE("nonsymmetric and generalized symmetric solvers agree on an SPD matrix") {
  const DenseMatrix r = random_matrix(30, 11);
  const DenseMatrix s = r * r.transpose() + DenseMatrix::Identity(30, 30);
  const std::vector<Complex> a = dense_eigenvalues(s);
  const std::vector<double> b = sym_generalized_eigs(s, DenseMatrix::Identity(30, 30));
  for (int i = 0; i < 30; ++i) {
    CHECK(std::abs(a[i].imag()) < 1e-9);
    CHECK(a[i].real() == doctest::Approx(b[i]).epsilon(1e-9));
  }
}

TEST_CASE("restricted pencil minimum is invariant under permutation") {
  const DenseMatrix r = random_matrix(12, 3);
  const DenseMatrix a = r * r.transpose() + 12 * DenseMatrix::Identity(12, 12);
  const DenseMatrix k = random_matrix(12, 5).topRows(4);
  const DenseMatrix x = DenseMatrix::Identity(4, 4);
  const auto v = restricted_min_eig(a, k, x, 10.0, 1.0);
  Eigen::PermutationMatrix<Eigen::Dynamic> p(12);
  for (int i = 0; i < 12; ++i) p.indices()[i] = (i * 5) % 12;
  const DenseMatrix ap = p * a * p.transpose();
  const DenseMatrix kp = k * p.transpose();
  const auto w = restricted_min_eig(ap, kp, x, 10.0, 1.0);
  REQUIRE(v);
  REQUIRE(w);
  CHECK(*v == doctest::Approx(*w).epsilon(1e-10));
  CHECK(*v > 0.0);
  CHECK(*v < 1.0);
}

TEST_CASE("augmented Poisson spectrum is real, bounded by one and improves with gamma") {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::spectrum;
  cfg.problem = SystemKind::poisson;
  cfg.levels = {3};
  cfg.facets = 8;
  cfg.gammas = {1, 100};
  const auto cases = spectrum_study(cfg, false);
  REQUIRE(cases.size() == 2);
  for (const auto& c : cases) {
    CHECK(c.preconditioned.max_abs_imag < 1e-8);
    CHECK(c.preconditioned.max_real <= 1 + 1e-8);
    CHECK(c.preconditioned.n_zero == 0);
  }
  CHECK(cases[1].preconditioned.lambda_min_pos > cases[0].preconditioned.lambda_min_pos);
}

TEST_CASE("multiplier mass equivalence ratios stay in [1, 3]") {
  const MassEquivalence a = mass_equivalence(build_interface(InterfaceSpec::circle({0.5, 0.5}, 0.21, 16)));
  CHECK(a.ratio_min == doctest::Approx(1.0));
  CHECK(a.ratio_max == doctest::Approx(3.0));
}
