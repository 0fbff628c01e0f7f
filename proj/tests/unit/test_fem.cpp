// Finite element matrices, coupling and problem assembly.
#include <doctest.h>

#include <cmath>
#include <memory>
#include <numbers>

#include <Eigen/Dense>

#include "fictsolve/coupling.hpp"
#include "fictsolve/experiments.hpp"
#include "fictsolve/fem.hpp"

using namespace fictsolve;

TEST_CASE("Q1 mass matrix integrates one to the unit area") {
  const FeSpace v = FeSpace::q1(std::make_shared<BackgroundMesh>(3));
  const CsrMatrix m = assemble_mass(v);
  double total = 0;
  for (double s : m.row_sums()) total += s;
  CHECK(total == doctest::Approx(1.0));
}

TEST_CASE("stiffness matrix annihilates constants") {
  const FeSpace v = FeSpace::q1(std::make_shared<BackgroundMesh>(3));
  const CsrMatrix a = assemble_stiffness(v);
  for (double s : a.row_sums()) CHECK(std::abs(s) < 1e-12);
}

TEST_CASE("curve mass matrix on a uniform circle is circulant") {
  auto curve = std::make_shared<ImmersedMesh>(build_interface(InterfaceSpec::circle({0.5, 0.5}, 0.21, 16)));
  const FeSpace s = FeSpace::curve_scalar(curve);
  const CsrMatrix m = assemble_mass(s);
  const double h = curve->h_gamma();
  for (std::size_t i = 0; i < 16; ++i) {
    CHECK(m.at(i, i) == doctest::Approx(2 * h / 3));
    CHECK(m.at(i, (i + 1) % 16) == doctest::Approx(h / 6));
  }
}

TEST_CASE("coupling rows integrate the background partition of unity") {
  auto mesh = std::make_shared<BackgroundMesh>(4);
  auto curve = std::make_shared<ImmersedMesh>(build_interface(InterfaceSpec::circle({0.5, 0.5}, 0.21, 16)));
  const FeSpace v = FeSpace::q1(mesh);
  const FeSpace s = FeSpace::curve_scalar(curve);
  const CsrMatrix c = assemble_coupling({&v, &s, 4});
  CHECK(c.rows() == 16);
  CHECK(c.cols() == 289);
  // sum_i C_{alpha i} = int psi_alpha = h_Gamma for a uniform polyline
  for (double r : c.row_sums()) CHECK(r == doctest::Approx(curve->h_gamma()));
}

TEST_CASE("compatibility of a constant boundary velocity vanishes") {
  const ImmersedMesh curve = build_interface(InterfaceSpec::circle({0.45, 0.45}, 0.21, 33));
  const double flux = check_compatibility([](const Point&) { return std::array<double, 2>{-0.5, 0.5}; }, curve);
  CHECK(std::abs(flux) < 1e-12);
}

TEST_CASE("constrained Stokes blocks have the expected dimensions and B rank") {
  ExperimentConfig cfg;
  cfg.problem = SystemKind::stokes;
  cfg.facets = 33;
  const StokesProblem p = make_stokes(cfg, 3, BoundaryTreatment::constrain);
  CHECK(p.a.rows() == 578);
  CHECK(p.b.rows() == 81);
  CHECK(p.c.rows() == 66);
  Eigen::MatrixXd b(81, 578);
  const auto d = to_dense(p.b);
  for (int i = 0; i < 81; ++i)
    for (int j = 0; j < 578; ++j) b(i, j) = d[static_cast<std::size_t>(i) * 578 + j];
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(b);
  qr.setThreshold(1e-10);
  CHECK(qr.rank() == 80);  // constants are in the kernel of B^T
}

TEST_CASE("grad-div augmented Stokes block has the reference pattern size") {
  const SparsityCounts s = sparsity_counts(3, 33, CurveLayout::closed);
  CHECK(s.n == 578);
  CHECK(s.nnz_a_gd == 12228);
}

TEST_CASE("split-seam layout adds one multiplier node") {
  auto curve = std::make_shared<ImmersedMesh>(build_interface(InterfaceSpec::circle({0.5, 0.5}, 0.21, 16)));
  CHECK(FeSpace::curve_scalar(curve, CurveLayout::split_seam).dof_count() == 17);
  CHECK(FeSpace::curve_vector(curve, CurveLayout::closed).dof_count() == 32);
}
