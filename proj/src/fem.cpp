#include "fictsolve/fem.hpp"

#include <cmath>
#include <numbers>

#include "fictsolve/error.hpp"

namespace fictsolve {

void gauss_legendre_01(int n, std::vector<double>& points, std::vector<double>& weights) {
  if (n < 1 || n > 16) throw ConfigError("Gauss rule needs 1..16 points");
  points.assign(n, 0.0);
  weights.assign(n, 0.0);
  // Newton iteration on P_n from the Chebyshev-like initial guess
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double pn = n == 1 ? x : p1;
      const double pnm1 = n == 1 ? 1.0 : p0;
      dp = n * (x * pn - pnm1) / (x * x - 1.0);
      const double dx = pn / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // recompute derivative at the converged root
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n == 1 ? 1.0 : n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    points[n - 1 - i] = 0.5 * (x + 1.0);
    weights[n - 1 - i] = 0.5 * w;
  }
}

QuadratureRule gauss_tensor(int n) {
  std::vector<double> p, w;
  gauss_legendre_01(n, p, w);
  QuadratureRule q;
  q.degree = 2 * n - 1;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      q.points.push_back({p[i], p[j]});
      q.weights.push_back(w[i] * w[j]);
    }
  return q;
}

FeSpace FeSpace::q1(std::shared_ptr<const BackgroundMesh> mesh) {
  FeSpace s;
  s.kind_ = ElementKind::q1_scalar;
  s.degree_ = 1;
  s.components_ = 1;
  s.nodes_per_side_ = mesh->cells_per_side() + 1;
  s.scalar_dofs_ = static_cast<std::size_t>(s.nodes_per_side_) * s.nodes_per_side_;
  s.mesh_ = std::move(mesh);
  return s;
}

FeSpace FeSpace::q2_vector(std::shared_ptr<const BackgroundMesh> mesh) {
  FeSpace s;
  s.kind_ = ElementKind::q2_vector;
  s.degree_ = 2;
  s.components_ = 2;
  s.nodes_per_side_ = 2 * mesh->cells_per_side() + 1;
  s.scalar_dofs_ = static_cast<std::size_t>(s.nodes_per_side_) * s.nodes_per_side_;
  s.mesh_ = std::move(mesh);
  return s;
}

FeSpace FeSpace::curve_scalar(std::shared_ptr<const ImmersedMesh> mesh, CurveLayout layout) {
  FeSpace s;
  s.kind_ = ElementKind::q1_curve_scalar;
  s.layout_ = layout;
  s.scalar_dofs_ = mesh->vertex_count() + (layout == CurveLayout::split_seam ? 1 : 0);
  s.curve_ = std::move(mesh);
  return s;
}

FeSpace FeSpace::curve_vector(std::shared_ptr<const ImmersedMesh> mesh, CurveLayout layout) {
  FeSpace s = curve_scalar(std::move(mesh), layout);
  s.kind_ = ElementKind::q1_curve_vector;
  s.components_ = 2;
  return s;
}

const BackgroundMesh& FeSpace::mesh() const {
  if (!mesh_) throw UsageError("curve space has no background mesh");
  return *mesh_;
}

const ImmersedMesh& FeSpace::curve() const {
  if (!curve_) throw UsageError("background space has no curve mesh");
  return *curve_;
}

void FeSpace::cell_nodes(int i, int j, std::vector<std::size_t>& out) const {
  const int p = degree_;
  out.resize(static_cast<std::size_t>((p + 1) * (p + 1)));
  for (int lb = 0; lb <= p; ++lb)
    for (int la = 0; la <= p; ++la)
      out[static_cast<std::size_t>(lb * (p + 1) + la)] =
          static_cast<std::size_t>(p * j + lb) * nodes_per_side_ + static_cast<std::size_t>(p * i + la);
}

Point FeSpace::node_point(std::size_t node) const {
  const std::size_t N = static_cast<std::size_t>(nodes_per_side_);
  const double dh = 1.0 / (N - 1);
  return {static_cast<double>(node % N) * dh, static_cast<double>(node / N) * dh};
}

std::vector<char> FeSpace::boundary_mask() const {
  if (!is_background()) throw UsageError("boundary mask is defined for background spaces only");
  const std::size_t N = static_cast<std::size_t>(nodes_per_side_);
  std::vector<char> m(dof_count(), 0);
  for (int c = 0; c < components_; ++c)
    for (std::size_t b = 0; b < N; ++b)
      for (std::size_t a = 0; a < N; ++a)
        if (a == 0 || b == 0 || a == N - 1 || b == N - 1) m[c * scalar_dofs_ + b * N + a] = 1;
  return m;
}

std::array<std::size_t, 2> FeSpace::segment_dofs(std::size_t s) const {
  const auto& seg = curve().segments()[s];
  std::array<std::size_t, 2> d{static_cast<std::size_t>(seg[0]), static_cast<std::size_t>(seg[1])};
  // split seam: the segment closing onto vertex 0 ends on the extra dof
  if (layout_ == CurveLayout::split_seam && d[1] == 0 && d[0] != 0) d[1] = curve().vertex_count();
  return d;
}

namespace {

void lagrange_1d(int degree, double t, double* v, double* d) {
  if (degree == 1) {
    v[0] = 1.0 - t;
    v[1] = t;
    d[0] = -1.0;
    d[1] = 1.0;
  } else {
    v[0] = 2.0 * (t - 0.5) * (t - 1.0);
    v[1] = -4.0 * t * (t - 1.0);
    v[2] = 2.0 * t * (t - 0.5);
    d[0] = 4.0 * t - 3.0;
    d[1] = -8.0 * t + 4.0;
    d[2] = 4.0 * t - 1.0;
  }
}

// Reference-cell data shared by all (uniform) cells.
struct RefElement {
  int degree;
  std::size_t nloc;
  QuadratureRule q;
  std::vector<std::vector<double>> val;                  // [qp][a]
  std::vector<std::vector<std::array<double, 2>>> grad;  // [qp][a]

  RefElement(int deg, int nq) : degree(deg), nloc(static_cast<std::size_t>((deg + 1) * (deg + 1))), q(gauss_tensor(nq)) {
    val.resize(q.points.size());
    grad.resize(q.points.size());
    for (std::size_t k = 0; k < q.points.size(); ++k)
      lagrange_basis(deg, q.points[k][0], q.points[k][1], val[k], &grad[k]);
  }
};

void require_background(const FeSpace& s, const char* what) {
  if (!s.is_background()) throw UsageError(std::string(what) + " requires a background space");
}

}  // namespace

void lagrange_basis(int degree, double xi, double eta, std::vector<double>& values,
                    std::vector<std::array<double, 2>>* grads) {
  if (degree != 1 && degree != 2) throw UsageError("only degree 1 and 2 elements are supported");
  double vx[3], dx[3], vy[3], dy[3];
  lagrange_1d(degree, xi, vx, dx);
  lagrange_1d(degree, eta, vy, dy);
  const int p = degree + 1;
  values.resize(static_cast<std::size_t>(p * p));
  if (grads) grads->resize(values.size());
  for (int b = 0; b < p; ++b)
    for (int a = 0; a < p; ++a) {
      const auto k = static_cast<std::size_t>(b * p + a);
      values[k] = vx[a] * vy[b];
      if (grads) (*grads)[k] = {dx[a] * vy[b], vx[a] * dy[b]};
    }
}

CsrMatrix assemble_stiffness(const FeSpace& space) {
  require_background(space, "stiffness assembly");
  const RefElement ref(space.degree(), space.degree() + 1);
  const std::size_t nl = ref.nloc;
  // reference stiffness is h-independent in 2D
  std::vector<double> ke(nl * nl, 0.0);
  for (std::size_t k = 0; k < ref.q.points.size(); ++k)
    for (std::size_t a = 0; a < nl; ++a)
      for (std::size_t b = 0; b < nl; ++b)
        ke[a * nl + b] += ref.q.weights[k] *
                          (ref.grad[k][a][0] * ref.grad[k][b][0] + ref.grad[k][a][1] * ref.grad[k][b][1]);
  const int n = space.mesh().cells_per_side();
  const std::size_t nd = space.dof_count();
  TripletBuilder tb(nd, nd);
  tb.reserve(space.mesh().cell_count() * nl * nl * space.components());
  std::vector<std::size_t> nodes;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      space.cell_nodes(i, j, nodes);
      for (int c = 0; c < space.components(); ++c) {
        const std::size_t off = c * space.scalar_dofs();
        for (std::size_t a = 0; a < nl; ++a)
          for (std::size_t b = 0; b < nl; ++b) tb.add(off + nodes[a], off + nodes[b], ke[a * nl + b]);
      }
    }
  return tb.build();
}

CsrMatrix assemble_divergence(const FeSpace& velocity, const FeSpace& pressure) {
  if (velocity.kind() != ElementKind::q2_vector || pressure.kind() != ElementKind::q1_scalar)
    throw UsageError("divergence needs a Q2 vector velocity and a Q1 pressure space");
  if (velocity.mesh().level() != pressure.mesh().level())
    throw UsageError("velocity and pressure spaces live on different meshes");
  const RefElement rv(2, 3);
  const double h = velocity.mesh().h();
  std::vector<double> pv;
  // be[c][k][a] = -(d phi_a / dx_c, psi_k) on the reference cell, scaled by h
  const std::size_t nv = rv.nloc, np = 4;
  std::vector<double> be(2 * np * nv, 0.0);
  for (std::size_t q = 0; q < rv.q.points.size(); ++q) {
    lagrange_basis(1, rv.q.points[q][0], rv.q.points[q][1], pv);
    for (int c = 0; c < 2; ++c)
      for (std::size_t k = 0; k < np; ++k)
        for (std::size_t a = 0; a < nv; ++a)
          be[(c * np + k) * nv + a] -= rv.q.weights[q] * rv.grad[q][a][c] * pv[k] * h;
  }
  const int n = velocity.mesh().cells_per_side();
  TripletBuilder tb(pressure.dof_count(), velocity.dof_count());
  std::vector<std::size_t> vn, pn;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      velocity.cell_nodes(i, j, vn);
      pressure.cell_nodes(i, j, pn);
      for (std::size_t k = 0; k < np; ++k)
        for (int c = 0; c < 2; ++c)
          for (std::size_t a = 0; a < nv; ++a)
            tb.add(pn[k], c * velocity.scalar_dofs() + vn[a], be[(c * np + k) * nv + a]);
    }
  return tb.build();
}

CsrMatrix assemble_mass(const FeSpace& space) {
  const std::size_t nd = space.dof_count();
  TripletBuilder tb(nd, nd);
  if (space.is_background()) {
    const RefElement ref(space.degree(), space.degree() + 1);
    const std::size_t nl = ref.nloc;
    const double h2 = space.mesh().h() * space.mesh().h();
    std::vector<double> me(nl * nl, 0.0);
    for (std::size_t k = 0; k < ref.q.points.size(); ++k)
      for (std::size_t a = 0; a < nl; ++a)
        for (std::size_t b = 0; b < nl; ++b) me[a * nl + b] += ref.q.weights[k] * ref.val[k][a] * ref.val[k][b] * h2;
    const int n = space.mesh().cells_per_side();
    std::vector<std::size_t> nodes;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        space.cell_nodes(i, j, nodes);
        for (int c = 0; c < space.components(); ++c) {
          const std::size_t off = c * space.scalar_dofs();
          for (std::size_t a = 0; a < nl; ++a)
            for (std::size_t b = 0; b < nl; ++b) tb.add(off + nodes[a], off + nodes[b], me[a * nl + b]);
        }
      }
    return tb.build();
  }
  // P1 hats on segments: exact element mass L/6 [[2,1],[1,2]]
  const auto& curve = space.curve();
  for (std::size_t s = 0; s < curve.segment_count(); ++s) {
    const double L = curve.segment_length(s);
    const auto d = space.segment_dofs(s);
    for (int c = 0; c < space.components(); ++c) {
      const std::size_t off = c * space.scalar_dofs();
      tb.add(off + d[0], off + d[0], L / 3.0);
      tb.add(off + d[0], off + d[1], L / 6.0);
      tb.add(off + d[1], off + d[0], L / 6.0);
      tb.add(off + d[1], off + d[1], L / 3.0);
    }
  }
  return tb.build();
}

CsrMatrix assemble_graddiv(const FeSpace& space, double gamma) {
  if (space.kind() != ElementKind::q2_vector) throw UsageError("grad-div needs a Q2 vector space");
  if (gamma < 0.0 || !std::isfinite(gamma)) throw ConfigError("grad-div parameter must be non-negative");
  const RefElement ref(2, 3);
  const std::size_t nl = ref.nloc;
  // ge[c][d][a][b] = (d_c phi_a, d_d phi_b), h-independent in 2D
  std::vector<double> ge(4 * nl * nl, 0.0);
  for (std::size_t q = 0; q < ref.q.points.size(); ++q)
    for (int c = 0; c < 2; ++c)
      for (int d = 0; d < 2; ++d)
        for (std::size_t a = 0; a < nl; ++a)
          for (std::size_t b = 0; b < nl; ++b)
            ge[((c * 2 + d) * nl + a) * nl + b] += ref.q.weights[q] * ref.grad[q][a][c] * ref.grad[q][b][d];
  const int n = space.mesh().cells_per_side();
  const std::size_t nd = space.dof_count();
  TripletBuilder tb(nd, nd);
  std::vector<std::size_t> nodes;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      space.cell_nodes(i, j, nodes);
      for (int c = 0; c < 2; ++c)
        for (int d = 0; d < 2; ++d)
          for (std::size_t a = 0; a < nl; ++a)
            for (std::size_t b = 0; b < nl; ++b)
              tb.add(c * space.scalar_dofs() + nodes[a], d * space.scalar_dofs() + nodes[b],
                     gamma * ge[((c * 2 + d) * nl + a) * nl + b]);
    }
  return tb.build();
}

namespace {

template <class Eval>
Vector load_impl(const FeSpace& space, Eval&& eval) {
  require_background(space, "load assembly");
  const RefElement ref(space.degree(), space.degree() + 1);
  const double h = space.mesh().h();
  const int n = space.mesh().cells_per_side();
  Vector f(space.dof_count(), 0.0);
  std::vector<std::size_t> nodes;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      space.cell_nodes(i, j, nodes);
      for (std::size_t q = 0; q < ref.q.points.size(); ++q) {
        const Point p{(i + ref.q.points[q][0]) * h, (j + ref.q.points[q][1]) * h};
        const std::array<double, 2> v = eval(p);
        const double w = ref.q.weights[q] * h * h;
        for (int c = 0; c < space.components(); ++c)
          for (std::size_t a = 0; a < ref.nloc; ++a) f[c * space.scalar_dofs() + nodes[a]] += w * v[c] * ref.val[q][a];
      }
    }
  return f;
}

}  // namespace

Vector assemble_load(const FeSpace& space, const ScalarFunction& f) {
  if (space.components() != 1) throw UsageError("scalar load on a vector space");
  return load_impl(space, [&](const Point& p) { return std::array<double, 2>{f(p), 0.0}; });
}

Vector assemble_load(const FeSpace& space, const VectorFunction& f) {
  if (space.components() != 2) throw UsageError("vector load on a scalar space");
  return load_impl(space, f);
}

Vector interpolate(const FeSpace& space, const ScalarFunction& f) {
  require_background(space, "interpolation");
  if (space.components() != 1) throw UsageError("scalar interpolation on a vector space");
  Vector v(space.dof_count());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = f(space.node_point(k));
  return v;
}

Vector interpolate(const FeSpace& space, const VectorFunction& f) {
  require_background(space, "interpolation");
  if (space.components() != 2) throw UsageError("vector interpolation on a scalar space");
  Vector v(space.dof_count());
  for (std::size_t k = 0; k < space.scalar_dofs(); ++k) {
    const auto val = f(space.node_point(k));
    v[k] = val[0];
    v[space.scalar_dofs() + k] = val[1];
  }
  return v;
}

ErrorNorms compute_errors(const FeSpace& space, std::span<const double> u_h, const ScalarFunction& u_exact,
                          const std::function<std::array<double, 2>(const Point&)>& grad_exact) {
  require_background(space, "error computation");
  if (space.components() != 1) throw UsageError("error norms are computed for scalar spaces");
  if (u_h.size() != space.dof_count()) throw DimensionError("coefficient vector size mismatch");
  const RefElement ref(space.degree(), 5);
  const double h = space.mesh().h();
  const int n = space.mesh().cells_per_side();
  double e0 = 0.0, e1 = 0.0;
  std::vector<std::size_t> nodes;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      space.cell_nodes(i, j, nodes);
      for (std::size_t q = 0; q < ref.q.points.size(); ++q) {
        const Point p{(i + ref.q.points[q][0]) * h, (j + ref.q.points[q][1]) * h};
        double uh = 0.0, gx = 0.0, gy = 0.0;
        for (std::size_t a = 0; a < ref.nloc; ++a) {
          const double c = u_h[nodes[a]];
          uh += c * ref.val[q][a];
          gx += c * ref.grad[q][a][0] / h;
          gy += c * ref.grad[q][a][1] / h;
        }
        const auto g = grad_exact(p);
        const double w = ref.q.weights[q] * h * h;
        const double du = u_exact(p) - uh;
        e0 += w * du * du;
        e1 += w * ((g[0] - gx) * (g[0] - gx) + (g[1] - gy) * (g[1] - gy));
      }
    }
  return {std::sqrt(e0), std::sqrt(e1)};
}

Vector DofReduction::restrict_vector(std::span<const double> full) const {
  if (full.size() != full_size) throw DimensionError("restrict: size mismatch");
  Vector r(free.size());
  for (std::size_t k = 0; k < free.size(); ++k) r[k] = full[free[k]];
  return r;
}

Vector DofReduction::prolong(std::span<const double> reduced) const {
  if (reduced.size() != free.size()) throw DimensionError("prolong: size mismatch");
  Vector f(full_size, 0.0);
  for (std::size_t k = 0; k < free.size(); ++k) f[free[k]] = reduced[k];
  return f;
}

DofReduction make_reduction(const std::vector<char>& mask) {
  DofReduction r;
  r.full_size = mask.size();
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (!mask[i]) r.free.push_back(i);
  return r;
}

DirichletResult apply_dirichlet(const CsrMatrix& a, const std::vector<CsrMatrix>& couplings,
                                std::span<const double> f, const std::vector<char>& mask) {
  if (a.rows() != mask.size() || f.size() != mask.size()) throw DimensionError("Dirichlet mask size mismatch");
  DirichletResult r;
  r.map = make_reduction(mask);
  r.a = a.submatrix(r.map.free, r.map.free);
  for (const auto& c : couplings) {
    if (c.cols() != mask.size()) throw DimensionError("coupling block column count mismatch");
    std::vector<std::size_t> rows(c.rows());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    r.couplings.push_back(c.submatrix(rows, r.map.free));
  }
  r.f = r.map.restrict_vector(f);
  return r;
}

CsrMatrix constrain_in_place(const CsrMatrix& a, const std::vector<char>& mask, double diag_value) {
  if (a.rows() != mask.size() || a.cols() != mask.size()) throw DimensionError("constraint mask size mismatch");
  std::vector<std::size_t> rp{0}, ci;
  std::vector<double> v;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    if (mask[i]) {
      ci.push_back(i);
      v.push_back(diag_value);
    } else {
      for (std::size_t k = a.row_ptr()[i]; k < a.row_ptr()[i + 1]; ++k) {
        if (mask[a.col_idx()[k]]) continue;
        ci.push_back(a.col_idx()[k]);
        v.push_back(a.values()[k]);
      }
    }
    rp.push_back(ci.size());
  }
  return CsrMatrix(a.rows(), a.cols(), std::move(rp), std::move(ci), std::move(v));
}

CsrMatrix constrain_columns(const CsrMatrix& b, const std::vector<char>& mask) {
  if (b.cols() != mask.size()) throw DimensionError("constraint mask size mismatch");
  std::vector<std::size_t> rp{0}, ci;
  std::vector<double> v;
  for (std::size_t i = 0; i < b.rows(); ++i) {
    for (std::size_t k = b.row_ptr()[i]; k < b.row_ptr()[i + 1]; ++k) {
      if (mask[b.col_idx()[k]]) continue;
      ci.push_back(b.col_idx()[k]);
      v.push_back(b.values()[k]);
    }
    rp.push_back(ci.size());
  }
  return CsrMatrix(b.rows(), b.cols(), std::move(rp), std::move(ci), std::move(v));
}

}  // namespace fictsolve
