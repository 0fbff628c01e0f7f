#include "fictsolve/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fictsolve/error.hpp"
#include "fictsolve/factor.hpp"
#include "fictsolve/fem.hpp"

namespace fictsolve {

std::vector<double> sym_generalized_eigs(const DenseMatrix& m, const DenseMatrix& n) {
  if (m.rows() != m.cols() || n.rows() != n.cols() || m.rows() != n.rows())
    throw DimensionError("pencil matrices must be square and of equal size");
  if (m.rows() == 0) return {};
  const DenseMatrix ns = 0.5 * (n + n.transpose());
  Eigen::LLT<DenseMatrix> llt(ns);
  if (llt.info() != Eigen::Success) throw FactorizationError("pencil matrix N is not SPD");
  // L^{-1} M L^{-T}
  DenseMatrix t = llt.matrixL().solve(0.5 * (m + m.transpose()));
  DenseMatrix s = llt.matrixL().solve(t.transpose());
  s = 0.5 * (s + s.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(s, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw ConvergenceError("symmetric eigensolver failed");
  std::vector<double> ev(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  std::sort(ev.begin(), ev.end());
  return ev;
}

DenseMatrix to_dense_matrix(const CsrMatrix& m) {
  DenseMatrix d = DenseMatrix::Zero(static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t k = m.row_ptr()[i]; k < m.row_ptr()[i + 1]; ++k)
      d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(m.col_idx()[k])) = m.values()[k];
  return d;
}

int SpectrumReport::count_near_one(double tol) const {
  return static_cast<int>(std::count_if(eigenvalues.begin(), eigenvalues.end(),
                                        [tol](const Complex& z) { return std::abs(z - 1.0) < tol; }));
}

SpectrumReport make_report(std::vector<Complex> ev) {
  SpectrumReport r;
  std::sort(ev.begin(), ev.end(), [](const Complex& u, const Complex& v) {
    return u.real() != v.real() ? u.real() < v.real() : u.imag() < v.imag();
  });
  r.eigenvalues = std::move(ev);
  r.lambda_min_pos = std::numeric_limits<double>::infinity();
  r.max_real = -std::numeric_limits<double>::infinity();
  for (const auto& z : r.eigenvalues) {
    if (std::abs(z - 1.0) < kOneThreshold) ++r.n_at_one;
    if (std::abs(z) < kZeroThreshold) ++r.n_zero;
    if (z.real() > kZeroThreshold) r.lambda_min_pos = std::min(r.lambda_min_pos, z.real());
    r.max_abs_imag = std::max(r.max_abs_imag, std::abs(z.imag()));
    r.max_real = std::max(r.max_real, z.real());
  }
  return r;
}

DenseMatrix preconditioned_matrix(const BlockSystem& sys, Preconditioner& p, bool augmented) {
  const std::size_t N = sys.size();
  if (N > kDenseEigGuard) throw DimensionError("preconditioned spectrum: dimension exceeds the dense guard");
  DenseMatrix out(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
  Vector e(N, 0.0), col(N), z(N);
  for (std::size_t j = 0; j < N; ++j) {
    e[j] = 1.0;
    sys.apply(e, col, augmented);
    e[j] = 0.0;
    p.apply(col, z);
    for (std::size_t i = 0; i < N; ++i) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = z[i];
  }
  return out;
}

SpectrumReport preconditioned_spectrum(const BlockSystem& sys, Preconditioner& p, bool augmented) {
  return make_report(dense_eigenvalues(preconditioned_matrix(sys, p, augmented)));
}

SpectrumReport system_spectrum(const BlockSystem& sys, bool augmented) {
  const std::size_t N = sys.size();
  if (N > kDenseEigGuard) throw DimensionError("system spectrum: dimension exceeds the dense guard");
  const std::vector<double> d = sys.dense(augmented);
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(
      d.data(), static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
  return make_report(dense_eigenvalues(DenseMatrix(m)));
}

std::optional<double> restricted_min_eig(const DenseMatrix& a, const DenseMatrix& k, const DenseMatrix& x,
                                         double weight, double denom_weight) {
  Eigen::LLT<DenseMatrix> llt(a);
  if (llt.info() != Eigen::Success) throw FactorizationError("A is not SPD");
  // the A-orthogonal complement of ker K is range(A^{-1} K^T)
  const DenseMatrix y = llt.solve(k.transpose());
  Eigen::ColPivHouseholderQR<DenseMatrix> qr(y);
  const double rmax = y.cols() > 0 ? std::abs(qr.matrixQR()(0, 0)) : 0.0;
  qr.setThreshold(1e-10 * rmax / std::max(rmax, std::numeric_limits<double>::min()));
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < std::min(y.rows(), y.cols()); ++i)
    if (std::abs(qr.matrixQR()(i, i)) > 1e-10 * rmax) ++rank;
  if (rank == 0) return std::nullopt;
  const DenseMatrix v = qr.householderQ() * DenseMatrix::Identity(y.rows(), rank);
  const DenseMatrix kv = k * v;
  const DenseMatrix mk = kv.transpose() * x * kv;
  const DenseMatrix nr = v.transpose() * a * v + denom_weight * mk;
  const auto ev = sym_generalized_eigs(weight * mk, nr);
  const double top = std::max(std::abs(ev.front()), std::abs(ev.back()));
  for (double e : ev)
    if (e > kZeroThreshold * std::max(1.0, top)) return e;
  return std::nullopt;
}

namespace {

DenseMatrix inverse_sym(const CsrMatrix& m) {
  const DenseMatrix d = to_dense_matrix(m);
  Eigen::LLT<DenseMatrix> llt(d);
  if (llt.info() != Eigen::Success) throw FactorizationError("mass matrix is not SPD");
  DenseMatrix inv = llt.solve(DenseMatrix::Identity(d.rows(), d.cols()));
  return 0.5 * (inv + inv.transpose());
}

DenseMatrix stack(const DenseMatrix& top, const DenseMatrix& bottom) {
  DenseMatrix s(top.rows() + bottom.rows(), top.cols());
  s << top, bottom;
  return s;
}

DenseMatrix block_diag(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix d = DenseMatrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  d.topLeftCorner(a.rows(), a.cols()) = a;
  d.bottomRightCorner(b.rows(), b.cols()) = b;
  return d;
}

}  // namespace

RestrictedBounds restricted_bounds(const BlockSystem& sys) {
  if (sys.w_policy != WPolicy::exact) throw ConfigError("restricted-pencil quantities need the exact W policy");
  const DenseMatrix a = to_dense_matrix(sys.a);
  const DenseMatrix c = to_dense_matrix(sys.c);
  const DenseMatrix minv = inverse_sym(sys.m_lambda);
  const DenseMatrix winv = minv * minv;
  RestrictedBounds t;
  if (sys.kind == SystemKind::poisson) {
    t.eps = restricted_min_eig(a, c, winv, sys.gamma, sys.gamma);
  } else {
    if (sys.augmentation != StokesAugmentation::explicit_bqb)
      throw ConfigError("restricted-pencil quantities need the explicit B^T Q^{-1} B augmentation");
    const DenseMatrix b = to_dense_matrix(sys.b);
    const DenseMatrix qinv = inverse_sym(sys.m_p);
    t.eta = restricted_min_eig(a, b, qinv, sys.gamma, sys.gamma);
    t.eps = restricted_min_eig(a, c, winv, sys.delta, sys.delta);
    t.theta = restricted_min_eig(a, stack(b, c), block_diag(sys.gamma * qinv, sys.delta * winv), 1.0, 1.0);
  }
  t.lower_bound = std::numeric_limits<double>::infinity();
  for (const auto& q : {t.eta, t.eps, t.theta})
    if (q) t.lower_bound = std::min(t.lower_bound, *q);
  return t;
}

MeshBounds mesh_lower_bounds(const BlockSystem& sys, double h_gamma) {
  if (!(h_gamma > 0.0)) throw ConfigError("h_Gamma must be positive");
  const DenseMatrix a = to_dense_matrix(sys.a);
  const DenseMatrix c = to_dense_matrix(sys.c);
  const DenseMatrix ml = to_dense_matrix(sys.m_lambda);
  MeshBounds t;
  t.h_gamma = h_gamma;
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(ml, Eigen::EigenvaluesOnly);
  t.c = es.eigenvalues().minCoeff() / h_gamma;
  t.C = es.eigenvalues().maxCoeff() / h_gamma;
  const DenseMatrix hm_inv = inverse_sym(sys.m_lambda) / h_gamma;
  const double equiv = t.c / (t.C * t.C);
  t.sigma1 = restricted_min_eig(a, c, hm_inv, 1.0, 0.0);
  if (t.sigma1) t.beta2bar_sq = equiv * *t.sigma1;
  if (sys.kind == SystemKind::poisson) {
    if (t.beta2bar_sq) t.f_eps = f_map(sys.gamma * *t.beta2bar_sq);
    return t;
  }
  const DenseMatrix b = to_dense_matrix(sys.b);
  const DenseMatrix qinv = inverse_sym(sys.m_p);
  t.beta1_sq = restricted_min_eig(a, b, qinv, 1.0, 0.0);
  t.sigma1_bc = restricted_min_eig(a, stack(b, c), block_diag(qinv, hm_inv), 1.0, 0.0);
  if (t.sigma1_bc) t.beta3bar_sq = std::min(1.0, equiv) * *t.sigma1_bc;
  if (t.beta1_sq) t.f_eta = f_map(sys.gamma * *t.beta1_sq);
  if (t.beta2bar_sq) t.f_eps = f_map(sys.delta * *t.beta2bar_sq);
  if (t.beta3bar_sq) t.f_theta = f_map(std::min(sys.gamma, sys.delta) * *t.beta3bar_sq);
  return t;
}

InexactBounds inexact_bounds(const BlockSystem& sys, double gamma, double delta, double slack) {
  if (sys.kind != SystemKind::stokes) throw UsageError("inexact bounds are computed for the Stokes system");
  if (!(gamma > 0.0) || !(delta > 0.0)) throw ConfigError("gamma and delta must be positive");
  InexactBounds r;
  const DenseMatrix abar = to_dense_matrix(sys.a_aug);
  const IncompleteCholesky ic(sys.a_aug);
  const DenseMatrix l = to_dense_matrix(ic.factor());
  const DenseMatrix ahat = l * l.transpose();
  {
    const auto ev = sym_generalized_eigs(abar, ahat);
    r.gamma_min_a = ev.front();
    r.gamma_max_a = ev.back();
  }
  auto positive_range = [](const std::vector<double>& ev) {
    const double top = ev.back();
    double lo = top;
    for (double e : ev)
      if (e > kZeroThreshold * std::max(1.0, top)) {
        lo = e;
        break;
      }
    return std::pair<double, double>{lo, top};
  };
  const auto tri = l.triangularView<Eigen::Lower>();
  {
    const DenseMatrix y = tri.solve(to_dense_matrix(sys.b).transpose());
    const DenseMatrix st = y.transpose() * y;
    DenseMatrix sh = DenseMatrix::Zero(st.rows(), st.cols());
    const Vector d = sys.m_p.diagonal_values();
    for (Eigen::Index i = 0; i < sh.rows(); ++i) sh(i, i) = d[static_cast<std::size_t>(i)] / gamma;
    std::tie(r.gamma_min_s, r.gamma_max_s) = positive_range(sym_generalized_eigs(st, sh));
  }
  {
    const DenseMatrix y = tri.solve(to_dense_matrix(sys.c).transpose());
    const DenseMatrix xt = y.transpose() * y;
    DenseMatrix xh = DenseMatrix::Zero(xt.rows(), xt.cols());
    const Vector d = sys.m_lambda.diagonal_values();
    for (Eigen::Index i = 0; i < xh.rows(); ++i) xh(i, i) = d[static_cast<std::size_t>(i)] * d[static_cast<std::size_t>(i)] / delta;
    std::tie(r.gamma_min_x, r.gamma_max_x) = positive_range(sym_generalized_eigs(xt, xh));
  }
  if (r.gamma_min_a <= 1.0) r.circle_radius = std::sqrt(1.0 - r.gamma_min_a);
  const double amax = r.gamma_max_a;
  r.intervals = {
      {r.gamma_min_a, r.gamma_max_a},
      {r.gamma_min_s / (amax + r.gamma_max_s), amax + r.gamma_max_s},
      {r.gamma_min_x / (amax + r.gamma_max_x), amax + r.gamma_max_x},
      {(r.gamma_min_s + r.gamma_min_x) / (amax + r.gamma_max_s + r.gamma_max_x), amax + r.gamma_max_s + r.gamma_max_x},
  };
  r.real_lower = std::numeric_limits<double>::infinity();
  r.real_upper = -std::numeric_limits<double>::infinity();
  for (const auto& [lo, hi] : r.intervals) {
    r.real_lower = std::min(r.real_lower, lo);
    r.real_upper = std::max(r.real_upper, hi);
  }
  ALConfig cfg;
  cfg.gamma = gamma;
  cfg.delta = delta;
  cfg.w_policy = WPolicy::diag;
  cfg.q_policy = QPolicy::diag;
  cfg.a_policy = APolicy::ic0_apply;
  ALPreconditioner p(sys, cfg);
  r.spectrum = preconditioned_spectrum(sys, p);
  const double radius = r.circle_radius.value_or(0.0);
  for (const auto& z : r.spectrum.eigenvalues) {
    if (std::abs(z) < kZeroThreshold) continue;
    if (std::abs(z.imag()) > kOneThreshold) {
      const double excess = std::abs(z - 1.0) - radius;
      r.worst_circle_excess = std::max(r.worst_circle_excess, excess);
      if (!r.circle_radius || excess > slack) ++r.complex_outside;
    } else {
      const double excess = std::max(r.real_lower - z.real(), z.real() - r.real_upper);
      r.worst_interval_excess = std::max(r.worst_interval_excess, excess);
      if (excess > slack) ++r.real_outside;
    }
  }
  auto& b = r.spectrum.bounds;
  b["gamma_minA"] = r.gamma_min_a;
  b["gamma_maxA"] = r.gamma_max_a;
  b["gamma_minS"] = r.gamma_min_s;
  b["gamma_maxS"] = r.gamma_max_s;
  b["gamma_minX"] = r.gamma_min_x;
  b["gamma_maxX"] = r.gamma_max_x;
  if (r.circle_radius) b["circle_radius"] = *r.circle_radius;
  b["real_lower"] = r.real_lower;
  b["real_upper"] = r.real_upper;
  return r;
}

MassEquivalence mass_equivalence(const ImmersedMesh& mesh) {
  if (mesh.segment_count() < 3 || !mesh.is_closed()) throw UsageError("mass equivalence check needs a closed curve");
  auto curve = std::make_shared<const ImmersedMesh>(mesh);
  const FeSpace space = FeSpace::curve_scalar(curve);
  const DenseMatrix m = to_dense_matrix(assemble_mass(space));
  MassEquivalence r;
  r.h = mesh.h_gamma();
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(m, Eigen::EigenvaluesOnly);
  r.c = es.eigenvalues().minCoeff() / r.h;
  r.C = es.eigenvalues().maxCoeff() / r.h;
  Eigen::LLT<DenseMatrix> llt(m);
  DenseMatrix minv = llt.solve(DenseMatrix::Identity(m.rows(), m.cols()));
  minv = 0.5 * (minv + minv.transpose()).eval();
  const auto ev = sym_generalized_eigs(minv * minv, minv / r.h);
  r.ratio_min = ev.front();
  r.ratio_max = ev.back();
  r.envelope_lo = r.c / (r.C * r.C);
  r.envelope_hi = r.C / (r.c * r.c);
  return r;
}

}  // namespace fictsolve
