#include "fictsolve/problem.hpp"

#include <numeric>

namespace fictsolve {

namespace {

double mean_diagonal(const CsrMatrix& a, const std::vector<char>& mask) {
  const Vector d = a.diagonal_values();
  double s = 0.0;
  std::size_t k = 0;
  for (std::size_t i = 0; i < d.size(); ++i)
    if (!mask[i]) {
      s += d[i];
      ++k;
    }
  return k > 0 ? s / static_cast<double>(k) : 1.0;
}

DofReduction identity_map(std::size_t n) {
  DofReduction r;
  r.full_size = n;
  r.free.resize(n);
  std::iota(r.free.begin(), r.free.end(), std::size_t{0});
  return r;
}

}  // namespace

PoissonProblem build_poisson(const PoissonSetup& s) {
  PoissonProblem p;
  p.mesh = std::make_shared<const BackgroundMesh>(s.level);
  p.curve = std::make_shared<const ImmersedMesh>(build_interface(s.interface));
  p.velocity = FeSpace::q1(p.mesh);
  p.multiplier = FeSpace::curve_scalar(p.curve, s.layout);
  const CsrMatrix a = assemble_stiffness(p.velocity);
  const CsrMatrix c = assemble_coupling({&p.velocity, &p.multiplier, s.coupling_points});
  const Vector f = assemble_load(p.velocity, s.f);
  p.m_lambda = assemble_mass(p.multiplier);
  p.g = assemble_coupling_rhs(s.g, p.multiplier, s.coupling_points);
  const auto mask = p.velocity.boundary_mask();
  if (s.boundary == BoundaryTreatment::eliminate) {
    auto r = apply_dirichlet(a, {c}, f, mask);
    p.a = std::move(r.a);
    p.c = std::move(r.couplings[0]);
    p.f = std::move(r.f);
    p.map = std::move(r.map);
  } else {
    p.a = constrain_in_place(a, mask, mean_diagonal(a, mask));
    p.c = constrain_columns(c, mask);
    p.f = f;
    for (std::size_t i = 0; i < mask.size(); ++i)
      if (mask[i]) p.f[i] = 0.0;
    p.map = identity_map(a.rows());
  }
  return p;
}

StokesProblem build_stokes(const StokesSetup& s) {
  StokesProblem p;
  p.mesh = std::make_shared<const BackgroundMesh>(s.level);
  p.curve = std::make_shared<const ImmersedMesh>(build_interface(s.interface));
  p.velocity = FeSpace::q2_vector(p.mesh);
  p.pressure = FeSpace::q1(p.mesh);
  p.multiplier = FeSpace::curve_vector(p.curve, s.layout);
  const CsrMatrix a = assemble_stiffness(p.velocity);
  const CsrMatrix gd = assemble_graddiv(p.velocity, 1.0);
  const CsrMatrix b = assemble_divergence(p.velocity, p.pressure);
  const CsrMatrix c = assemble_coupling({&p.velocity, &p.multiplier, s.coupling_points});
  const Vector f = assemble_load(p.velocity, s.f);
  p.m_p = assemble_mass(p.pressure);
  p.m_lambda = assemble_mass(p.multiplier);
  p.g = assemble_coupling_rhs(s.g, p.multiplier, s.coupling_points);
  const auto mask = p.velocity.boundary_mask();
  if (s.boundary == BoundaryTreatment::eliminate) {
    auto r = apply_dirichlet(a, {b, c}, f, mask);
    p.a = std::move(r.a);
    p.b = std::move(r.couplings[0]);
    p.c = std::move(r.couplings[1]);
    p.f = std::move(r.f);
    p.graddiv = gd.submatrix(r.map.free, r.map.free);
    p.map = std::move(r.map);
  } else {
    p.a = constrain_in_place(a, mask, mean_diagonal(a, mask));
    p.graddiv = constrain_in_place(gd, mask, 0.0);
    p.b = constrain_columns(b, mask);
    p.c = constrain_columns(c, mask);
    p.f = f;
    for (std::size_t i = 0; i < mask.size(); ++i)
      if (mask[i]) p.f[i] = 0.0;
    p.map = identity_map(a.rows());
  }
  return p;
}

}  // namespace fictsolve
