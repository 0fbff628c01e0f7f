#include "fictsolve/precond.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "fictsolve/error.hpp"

namespace fictsolve {

namespace {

std::vector<double> dense_inverse(const CsrMatrix& m) {
  const auto n = static_cast<Eigen::Index>(m.rows());
  if (m.rows() > kDenseFactorGuard) throw DimensionError("dense inverse guard exceeded");
  const std::vector<double> d = to_dense(m);
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> mm(d.data(), n, n);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(mm);
  const Eigen::MatrixXd inv = lu.inverse();
  std::vector<double> out(static_cast<std::size_t>(n * n));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) out[static_cast<std::size_t>(i * n + j)] = 0.5 * (inv(i, j) + inv(j, i));
  return out;
}

std::vector<double> square_dense(const std::vector<double>& x, std::size_t n) {
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> xm(
      x.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  const Eigen::MatrixXd s = xm * xm;
  std::vector<double> out(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      out[i * n + j] = 0.5 * (s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) +
                              s(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)));
  return out;
}

Vector squared_diagonal(const CsrMatrix& m) {
  Vector d = m.diagonal_values();
  for (double& x : d) {
    if (!(x > 0.0)) throw SingularMatrixError("mass matrix has a non-positive diagonal");
    x *= x;
  }
  return d;
}

}  // namespace

Vector BlockSystem::rhs(bool augmented) const {
  Vector r(size(), 0.0);
  const Vector& fu = augmented ? f_aug : f;
  std::copy(fu.begin(), fu.end(), r.begin());
  std::copy(g.begin(), g.end(), r.begin() + static_cast<std::ptrdiff_t>(n() + m()));
  return r;
}

void BlockSystem::apply(std::span<const double> x, std::span<double> y, bool augmented) const {
  if (x.size() != size() || y.size() != size()) throw DimensionError("block system apply: size mismatch");
  const std::size_t nn = n(), mm = m(), ll = l();
  auto xu = x.subspan(0, nn), xp = x.subspan(nn, mm), xl = x.subspan(nn + mm, ll);
  auto yu = y.subspan(0, nn), yp = y.subspan(nn, mm), yl = y.subspan(nn + mm, ll);
  (augmented ? a_aug : a).multiply(xu, yu);
  Vector t(nn);
  if (mm > 0) {
    b.multiply_transpose(xp, t);
    axpy(1.0, t, yu);
    b.multiply(xu, yp);
  }
  c.multiply_transpose(xl, t);
  axpy(1.0, t, yu);
  c.multiply(xu, yl);
}

std::vector<double> BlockSystem::dense(bool augmented) const {
  const std::size_t N = size(), nn = n(), mm = m();
  std::vector<double> d(N * N, 0.0);
  const CsrMatrix& a11 = augmented ? a_aug : a;
  auto put = [&](const CsrMatrix& blk, std::size_t r0, std::size_t c0, bool transpose) {
    for (std::size_t i = 0; i < blk.rows(); ++i)
      for (std::size_t k = blk.row_ptr()[i]; k < blk.row_ptr()[i + 1]; ++k) {
        const std::size_t j = blk.col_idx()[k];
        if (transpose)
          d[(r0 + j) * N + c0 + i] = blk.values()[k];
        else
          d[(r0 + i) * N + c0 + j] = blk.values()[k];
      }
  };
  put(a11, 0, 0, false);
  if (mm > 0) {
    put(b, nn, 0, false);
    put(b, 0, nn, true);
  }
  put(c, nn + mm, 0, false);
  put(c, 0, nn + mm, true);
  return d;
}

CsrMatrix augmentation_term(const CsrMatrix& c, const CsrMatrix& m_lambda, WPolicy w) {
  if (w == WPolicy::diag) return triple_product_diag(c, DiagonalMatrix(squared_diagonal(m_lambda)));
  return triple_product_dense(c, square_dense(dense_inverse(m_lambda), m_lambda.rows()));
}

Vector apply_w_inverse(const CsrMatrix& m_lambda, WPolicy w, std::span<const double> v) {
  if (w == WPolicy::diag) {
    const Vector d = squared_diagonal(m_lambda);
    Vector r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) r[i] = v[i] / d[i];
    return r;
  }
  const DenseLu lu(m_lambda);
  return lu.solve(lu.solve(v));
}

BlockSystem build_augmented_poisson(const CsrMatrix& a, const CsrMatrix& c, const CsrMatrix& m_lambda,
                                    const Vector& f, const Vector& g, WPolicy w, double gamma) {
  if (gamma < 0.0) throw ConfigError("gamma must be non-negative");
  if (c.cols() != a.rows() || m_lambda.rows() != c.rows() || f.size() != a.rows() || g.size() != c.rows())
    throw DimensionError("Poisson blocks have inconsistent sizes");
  BlockSystem s;
  s.kind = SystemKind::poisson;
  s.a = a;
  s.c = c;
  s.m_lambda = m_lambda;
  s.f = f;
  s.g = g;
  s.gamma = gamma;
  s.w_policy = w;
  if (gamma == 0.0) {
    s.a_aug = a;
    s.f_aug = f;
    return s;
  }
  s.a_aug = sparse_add(a, augmentation_term(c, m_lambda, w), 1.0, gamma);
  const Vector wg = apply_w_inverse(m_lambda, w, g);
  s.f_aug = f;
  Vector t(a.rows());
  c.multiply_transpose(wg, t);
  axpy(gamma, t, s.f_aug);
  return s;
}

BlockSystem build_augmented_stokes(const CsrMatrix& a, const CsrMatrix& b, const CsrMatrix& c,
                                   const CsrMatrix& m_p, const CsrMatrix& m_lambda, const Vector& f,
                                   const Vector& g, WPolicy w, double gamma, double delta,
                                   StokesAugmentation form) {
  if (gamma < 0.0 || delta < 0.0) throw ConfigError("gamma and delta must be non-negative");
  if (b.cols() != a.rows() || c.cols() != a.rows() || m_p.rows() != b.rows() || m_lambda.rows() != c.rows() ||
      f.size() != a.rows() || g.size() != c.rows())
    throw DimensionError("Stokes blocks have inconsistent sizes");
  BlockSystem s;
  s.kind = SystemKind::stokes;
  s.a = a;
  s.b = b;
  s.c = c;
  s.m_p = m_p;
  s.m_lambda = m_lambda;
  s.f = f;
  s.g = g;
  s.gamma = gamma;
  s.delta = delta;
  s.w_policy = w;
  s.augmentation = form;
  s.a_aug = a;
  if (form == StokesAugmentation::explicit_bqb && gamma > 0.0)
    s.a_aug = sparse_add(s.a_aug, triple_product_dense(b, dense_inverse(m_p)), 1.0, gamma);
  s.f_aug = f;
  if (delta > 0.0) {
    s.a_aug = sparse_add(s.a_aug, augmentation_term(c, m_lambda, w), 1.0, delta);
    const Vector wg = apply_w_inverse(m_lambda, w, g);
    Vector t(a.rows());
    c.multiply_transpose(wg, t);
    axpy(delta, t, s.f_aug);
  }
  return s;
}

ABlockSolver::ABlockSolver(const CsrMatrix& a, const ALConfig& cfg) : a_(a), cfg_(cfg) {
  switch (cfg.a_policy) {
    case APolicy::exact: chol_ = std::make_shared<SparseCholesky>(a); break;
    case APolicy::ic0_apply: ic_ = std::make_shared<IncompleteCholesky>(a); break;
    case APolicy::inner_cg:
      if (cfg.inner_pc == InnerPreconditioner::ic0) {
        ic_ = std::make_shared<IncompleteCholesky>(a);
      } else if (cfg.inner_pc == InnerPreconditioner::sgs) {
        sgs_ = std::make_shared<SymmetricGaussSeidel>(a);
      } else {
        if (!cfg.prolongations) throw ConfigError("multigrid inner preconditioner needs prolongations");
        mg_ = std::make_shared<Multigrid>(a, *cfg.prolongations);
      }
      break;
  }
}

int ABlockSolver::solve(std::span<const double> r, std::span<double> z) const {
  if (cfg_.a_policy == APolicy::exact) {
    chol_->solve(r, z);
    return 0;
  }
  if (cfg_.a_policy == APolicy::ic0_apply) {
    ic_->solve(r, z);
    return 1;
  }
  MatrixOperator op(a_);
  FunctionPreconditioner pc(a_.rows(), [this](std::span<const double> x, std::span<double> y) {
    if (ic_)
      ic_->solve(x, y);
    else if (mg_)
      mg_->vcycle(x, y);
    else
      sgs_->solve(x, y);
  });
  SolverConfig sc;
  sc.method = KrylovMethod::cg;
  sc.abs_tol = 0.0;
  sc.rel_tol = cfg_.inner_tol;
  sc.max_iters = cfg_.inner_max_iters;
  const SolveReport rep = cg(op, r, z, &pc, sc);
  return rep.outer_iterations;
}

ALPreconditioner::ALPreconditioner(const BlockSystem& sys, const ALConfig& cfg)
    : sys_(sys), cfg_(cfg), ablock_(sys.a_aug, cfg) {
  const double scale = sys.kind == SystemKind::poisson ? cfg.gamma : cfg.delta;
  if (!(cfg.gamma > 0.0) || !(scale > 0.0)) throw ConfigError("AL preconditioner needs gamma, delta > 0");
  if (cfg.w_policy == WPolicy::exact)
    m_lambda_lu_ = DenseLu(sys.m_lambda);
  else
    m_lambda_diag_ = squared_diagonal(sys.m_lambda);
  if (sys.kind == SystemKind::stokes) {
    m_p_diag_ = sys.m_p.diagonal_values();
    switch (cfg.q_policy) {
      case QPolicy::exact: m_p_chol_ = std::make_shared<SparseCholesky>(sys.m_p); break;
      case QPolicy::lumped: m_p_lumped_ = sys.m_p.row_sums(); break;
      case QPolicy::diag: break;
    }
  }
  work_.resize(sys.n());
}

int ALPreconditioner::solve_q(std::span<const double> r, std::span<double> z) const {
  switch (cfg_.q_policy) {
    case QPolicy::exact: m_p_chol_->solve(r, z); return 0;
    case QPolicy::diag:
      for (std::size_t i = 0; i < r.size(); ++i) z[i] = r[i] / m_p_diag_[i];
      return 0;
    case QPolicy::lumped: {
      MatrixOperator op(sys_.m_p);
      FunctionPreconditioner pc(r.size(), [this](std::span<const double> x, std::span<double> y) {
        for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] / m_p_lumped_[i];
      });
      SolverConfig sc;
      sc.method = KrylovMethod::cg;
      sc.abs_tol = 0.0;
      sc.rel_tol = cfg_.inner_tol;
      sc.max_iters = cfg_.inner_max_iters;
      return cg(op, r, z, &pc, sc).outer_iterations;
    }
  }
  return 0;
}

void ALPreconditioner::solve_w(std::span<const double> r, std::span<double> z) const {
  if (cfg_.w_policy == WPolicy::diag) {
    for (std::size_t i = 0; i < r.size(); ++i) z[i] = r[i] / m_lambda_diag_[i];
    return;
  }
  Vector t(r.size());
  m_lambda_lu_.solve(r, t);
  m_lambda_lu_.solve(t, z);
}

void ALPreconditioner::apply(std::span<const double> r, std::span<double> z) {
  const std::size_t n = sys_.n(), m = sys_.m(), l = sys_.l();
  auto ru = r.subspan(0, n), rp = r.subspan(n, m), rl = r.subspan(n + m, l);
  auto zu = z.subspan(0, n), zp = z.subspan(n, m), zl = z.subspan(n + m, l);
  last_.clear();
  Vector t(n);
  for (std::size_t i = 0; i < n; ++i) work_[i] = ru[i];
  int q_iters = 0;
  if (m > 0) {
    q_iters = solve_q(rp, zp);
    for (std::size_t i = 0; i < m; ++i) zp[i] *= -cfg_.gamma;
    sys_.b.multiply_transpose(zp, t);
    axpy(-1.0, t, work_);
  }
  solve_w(rl, zl);
  const double s = sys_.kind == SystemKind::poisson ? cfg_.gamma : cfg_.delta;
  for (std::size_t i = 0; i < l; ++i) zl[i] *= -s;
  sys_.c.multiply_transpose(zl, t);
  axpy(-1.0, t, work_);
  last_.push_back(ablock_.solve(work_, zu));
  if (m > 0 && cfg_.q_policy == QPolicy::lumped) last_.push_back(q_iters);
}

ALDiagPreconditioner::ALDiagPreconditioner(const BlockSystem& sys, const ALConfig& cfg) : inner_(sys, cfg) {}

void ALDiagPreconditioner::apply(std::span<const double> r, std::span<double> z) {
  const auto& sys = inner_.sys_;
  const auto& cfg = inner_.cfg_;
  const std::size_t n = sys.n(), m = sys.m(), l = sys.l();
  inner_.last_.clear();
  inner_.last_.push_back(inner_.ablock_.solve(r.subspan(0, n), z.subspan(0, n)));
  if (m > 0) {
    const int q = inner_.solve_q(r.subspan(n, m), z.subspan(n, m));
    for (std::size_t i = n; i < n + m; ++i) z[i] *= cfg.gamma;
    if (cfg.q_policy == QPolicy::lumped) inner_.last_.push_back(q);
  }
  inner_.solve_w(r.subspan(n + m, l), z.subspan(n + m, l));
  const double s = sys.kind == SystemKind::poisson ? cfg.gamma : cfg.delta;
  for (std::size_t i = n + m; i < n + m + l; ++i) z[i] *= s;
}

BfbtPreconditioner::BfbtPreconditioner(const BlockSystem& sys, const ALConfig& cfg)
    : sys_(sys), ablock_(sys.a_aug, cfg) {
  if (sys.kind != SystemKind::poisson) throw ConfigError("BFBt is implemented for the Poisson system only");
  const CsrMatrix cct = sparse_multiply(sys.c, sys.c.transpose());
  try {
    cct_ = DenseLu(cct);
  } catch (const SingularMatrixError&) {
    throw SingularMatrixError("BFBt: C C^T is singular");
  }
}

void BfbtPreconditioner::apply(std::span<const double> r, std::span<double> z) {
  const std::size_t n = sys_.n(), l = sys_.l();
  auto ru = r.subspan(0, n), rl = r.subspan(n, l);
  auto zu = z.subspan(0, n), zl = z.subspan(n, l);
  // z_l = -S^{-1} r_l
  Vector t1 = cct_.solve(rl), u(n), au(n), t2(l);
  sys_.c.multiply_transpose(t1, u);
  sys_.a.multiply(u, au);
  sys_.c.multiply(au, t2);
  cct_.solve(t2, zl);
  for (std::size_t i = 0; i < l; ++i) zl[i] = -zl[i];
  Vector w(ru.begin(), ru.end());
  sys_.c.multiply_transpose(zl, u);
  axpy(-1.0, u, w);
  last_.assign(1, ablock_.solve(w, zu));
}

std::unique_ptr<Preconditioner> make_preconditioner(const BlockSystem& sys, PrecondKind kind, const ALConfig& cfg) {
  switch (kind) {
    case PrecondKind::al: return std::make_unique<ALPreconditioner>(sys, cfg);
    case PrecondKind::al_diag: return std::make_unique<ALDiagPreconditioner>(sys, cfg);
    case PrecondKind::bfbt: return std::make_unique<BfbtPreconditioner>(sys, cfg);
    case PrecondKind::none: return std::make_unique<IdentityPreconditioner>(sys.size());
  }
  throw ConfigError("unknown preconditioner");
}

namespace {
Vector one_shot(Preconditioner& p, std::span<const double> r) {
  if (r.size() != p.size()) throw DimensionError("residual size mismatch");
  Vector z(r.size());
  p.apply(r, z);
  return z;
}
}  // namespace

Vector al_apply_poisson(const BlockSystem& sys, const ALConfig& cfg, std::span<const double> r) {
  if (sys.kind != SystemKind::poisson) throw UsageError("al_apply_poisson needs a Poisson system");
  ALPreconditioner p(sys, cfg);
  return one_shot(p, r);
}

Vector al_apply_stokes(const BlockSystem& sys, const ALConfig& cfg, std::span<const double> r) {
  if (sys.kind != SystemKind::stokes) throw UsageError("al_apply_stokes needs a Stokes system");
  ALPreconditioner p(sys, cfg);
  return one_shot(p, r);
}

Vector al_apply_diag_spd(const BlockSystem& sys, const ALConfig& cfg, std::span<const double> r) {
  ALDiagPreconditioner p(sys, cfg);
  return one_shot(p, r);
}

Vector bfbt_apply(const BlockSystem& sys, const ALConfig& cfg, std::span<const double> r) {
  BfbtPreconditioner p(sys, cfg);
  return one_shot(p, r);
}

WPolicy parse_w_policy(const std::string& s) {
  if (s == "exact") return WPolicy::exact;
  if (s == "diag") return WPolicy::diag;
  throw ConfigError("unknown W policy '" + s + "'");
}

QPolicy parse_q_policy(const std::string& s) {
  if (s == "exact") return QPolicy::exact;
  if (s == "lumped") return QPolicy::lumped;
  if (s == "diag") return QPolicy::diag;
  throw ConfigError("unknown Q policy '" + s + "'");
}

PrecondKind parse_precond(const std::string& s) {
  if (s == "al") return PrecondKind::al;
  if (s == "al-diag") return PrecondKind::al_diag;
  if (s == "bfbt") return PrecondKind::bfbt;
  if (s == "none") return PrecondKind::none;
  throw ConfigError("unknown preconditioner '" + s + "'");
}

InnerPreconditioner parse_inner_pc(const std::string& s) {
  if (s == "ic0") return InnerPreconditioner::ic0;
  if (s == "sgs") return InnerPreconditioner::sgs;
  if (s == "gmg") return InnerPreconditioner::gmg;
  throw ConfigError("unknown inner preconditioner '" + s + "'");
}

std::string to_string(WPolicy p) { return p == WPolicy::exact ? "exact" : "diag"; }

std::string to_string(QPolicy p) {
  switch (p) {
    case QPolicy::exact: return "exact";
    case QPolicy::lumped: return "lumped";
    case QPolicy::diag: return "diag";
  }
  return "?";
}

std::string to_string(PrecondKind p) {
  switch (p) {
    case PrecondKind::al: return "al";
    case PrecondKind::al_diag: return "al-diag";
    case PrecondKind::bfbt: return "bfbt";
    case PrecondKind::none: return "none";
  }
  return "?";
}

std::string to_string(InnerPreconditioner p) {
  switch (p) {
    case InnerPreconditioner::ic0: return "ic0";
    case InnerPreconditioner::sgs: return "sgs";
    case InnerPreconditioner::gmg: return "gmg";
  }
  return "?";
}

}  // namespace fictsolve
