#include "fictsolve/coupling.hpp"

#include <atomic>
#include <cmath>
#include <iostream>

#include "fictsolve/error.hpp"

namespace fictsolve {

namespace {

Point segment_point(const ImmersedMesh& m, std::size_t s, double t) {
  const Point& a = m.vertices()[m.segments()[s][0]];
  const Point& b = m.vertices()[m.segments()[s][1]];
  return {a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])};
}

template <class Eval>
Vector coupling_rhs_impl(const FeSpace& immersed, int nq, int components, Eval&& eval) {
  if (immersed.is_background()) throw UsageError("coupling rhs needs an immersed space");
  if (immersed.components() != components) throw UsageError("coupling rhs component mismatch");
  if (nq < 1) throw ConfigError("need at least one quadrature point per segment");
  std::vector<double> qp, qw;
  gauss_legendre_01(nq, qp, qw);
  const auto& curve = immersed.curve();
  Vector g(immersed.dof_count(), 0.0);
  for (std::size_t s = 0; s < curve.segment_count(); ++s) {
    const double L = curve.segment_length(s);
    const auto d = immersed.segment_dofs(s);
    for (int q = 0; q < nq; ++q) {
      const std::array<double, 2> v = eval(segment_point(curve, s, qp[q]));
      const double w = qw[q] * L;
      for (int c = 0; c < components; ++c) {
        g[c * immersed.scalar_dofs() + d[0]] += w * v[c] * (1.0 - qp[q]);
        g[c * immersed.scalar_dofs() + d[1]] += w * v[c] * qp[q];
      }
    }
  }
  return g;
}

}  // namespace

double mesh_ratio(const BackgroundMesh& background, const ImmersedMesh& curve) {
  return background.h() / curve.h_gamma();
}

CsrMatrix assemble_coupling(const CouplingConfig& cfg) {
  if (cfg.background == nullptr || cfg.immersed == nullptr) throw UsageError("coupling spaces not set");
  const FeSpace& bg = *cfg.background;
  const FeSpace& im = *cfg.immersed;
  if (!bg.is_background() || im.is_background()) throw UsageError("coupling needs a background and an immersed space");
  if (bg.components() != im.components()) throw UsageError("coupling spaces have different component counts");
  if (cfg.quadrature_points < 2) throw ConfigError("coupling needs at least 2 quadrature points per segment");
  const auto& mesh = bg.mesh();
  const auto& curve = im.curve();
  static std::atomic<bool> warned{false};
  if (mesh_ratio(mesh, curve) > 1.0 && !warned.exchange(true))
    std::clog << "warning: h_Omega/h_Gamma = " << mesh_ratio(mesh, curve)
              << " > 1; the multiplier space may not be inf-sup stable (reported once)\n";
  std::vector<double> qp, qw;
  gauss_legendre_01(cfg.quadrature_points, qp, qw);
  TripletBuilder tb(im.dof_count(), bg.dof_count());
  std::vector<std::size_t> nodes;
  std::vector<double> phi;
  for (std::size_t s = 0; s < curve.segment_count(); ++s) {
    const double L = curve.segment_length(s);
    const auto d = im.segment_dofs(s);
    for (int q = 0; q < cfg.quadrature_points; ++q) {
      const Point p = segment_point(curve, s, qp[q]);
      CellLocation loc;
      try {
        loc = locate_point(mesh, p);
      } catch (const DomainError&) {
        throw GeometryError("immersed quadrature point outside the background domain");
      }
      bg.cell_nodes(loc.i, loc.j, nodes);
      lagrange_basis(bg.degree(), loc.xi, loc.eta, phi);
      const double w = qw[q] * L;
      const double psi[2] = {1.0 - qp[q], qp[q]};
      for (int c = 0; c < bg.components(); ++c)
        for (int e = 0; e < 2; ++e)
          for (std::size_t a = 0; a < nodes.size(); ++a)
            tb.add(c * im.scalar_dofs() + d[e], c * bg.scalar_dofs() + nodes[a], w * psi[e] * phi[a]);
    }
  }
  return tb.build();
}

Vector assemble_coupling_rhs(const ScalarFunction& g, const FeSpace& immersed, int nq) {
  return coupling_rhs_impl(immersed, nq, 1, [&](const Point& p) { return std::array<double, 2>{g(p), 0.0}; });
}

Vector assemble_coupling_rhs(const VectorFunction& g, const FeSpace& immersed, int nq) {
  return coupling_rhs_impl(immersed, nq, 2, g);
}

double check_compatibility(const VectorFunction& g, const ImmersedMesh& mesh, int nq) {
  if (!mesh.is_closed()) throw UsageError("compatibility check needs a closed polyline");
  std::vector<double> qp, qw;
  gauss_legendre_01(nq, qp, qw);
  double flux = 0.0;
  for (std::size_t s = 0; s < mesh.segment_count(); ++s) {
    const Point& a = mesh.vertices()[mesh.segments()[s][0]];
    const Point& b = mesh.vertices()[mesh.segments()[s][1]];
    // (dy, -dx) is the outward normal times the segment length for counterclockwise order
    const double nx = b[1] - a[1], ny = -(b[0] - a[0]);
    for (int q = 0; q < nq; ++q) {
      const auto v = g(segment_point(mesh, s, qp[q]));
      flux += qw[q] * (v[0] * nx + v[1] * ny);
    }
  }
  return flux;
}

}  // namespace fictsolve
