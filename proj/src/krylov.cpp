#include "fictsolve/krylov.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "fictsolve/error.hpp"

namespace fictsolve {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void check_sizes(const LinearOperator& a, std::span<const double> b, std::span<double> x, Preconditioner* p) {
  if (b.size() != a.size() || x.size() != a.size()) throw DimensionError("solver dimension mismatch");
  if (p != nullptr && p->size() != a.size()) throw DimensionError("preconditioner dimension mismatch");
}

void precondition(Preconditioner* p, std::span<const double> r, std::span<double> z, SolveReport& rep) {
  if (p == nullptr) {
    std::copy(r.begin(), r.end(), z.begin());
    return;
  }
  p->apply(r, z);
  auto inner = p->last_inner_iterations();
  if (!inner.empty()) {
    rep.inner_iterations_per_outer.push_back(inner.front());
    rep.inner_iterations_by_block.push_back(std::move(inner));
  }
}

double true_residual(const LinearOperator& a, std::span<const double> b, std::span<const double> x, Vector& r) {
  r.resize(b.size());
  a.apply(x, r);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
  return norm2(r);
}

double threshold(const SolverConfig& cfg, double bnorm) {
  if (!(cfg.abs_tol > 0.0) && !(cfg.rel_tol > 0.0)) throw ConfigError("solver tolerance must be positive");
  return std::max(cfg.abs_tol, cfg.rel_tol * bnorm);
}

}  // namespace

void IdentityPreconditioner::apply(std::span<const double> r, std::span<double> z) {
  std::copy(r.begin(), r.end(), z.begin());
}

double SolveReport::average_inner() const {
  if (inner_iterations_per_outer.empty()) return 0.0;
  return std::accumulate(inner_iterations_per_outer.begin(), inner_iterations_per_outer.end(), 0.0) /
         static_cast<double>(inner_iterations_per_outer.size());
}

SolveReport cg(const LinearOperator& a, std::span<const double> b, std::span<double> x, Preconditioner* p,
               const SolverConfig& cfg, const CgObserver& observer) {
  check_sizes(a, b, x, p);
  const auto t0 = Clock::now();
  SolveReport rep;
  const std::size_t n = b.size();
  std::fill(x.begin(), x.end(), 0.0);
  Vector r(b.begin(), b.end()), z(n), q(n), d(n);
  double res = norm2(r);
  const double tol = threshold(cfg, res);
  rep.residual_history.push_back(res);
  if (res <= tol) {
    rep.converged = true;
    rep.final_residual = res;
    rep.wall_time = seconds_since(t0);
    return rep;
  }
  precondition(p, r, z, rep);
  d = z;
  double rz = dot(r, z);
  for (int it = 1; it <= cfg.max_iters; ++it) {
    if (observer) observer(it, d);
    a.apply(d, q);
    const double dq = dot(d, q);
    if (!(dq > 0.0)) break;  // operator not positive on the Krylov space
    const double alpha = rz / dq;
    axpy(alpha, d, x);
    axpy(-alpha, q, r);
    res = norm2(r);
    rep.outer_iterations = it;
    if (res <= tol) {
      const double rt = true_residual(a, b, x, r);
      res = rt;
      if (rt <= tol) {
        rep.residual_history.push_back(rt);
        rep.converged = true;
        break;
      }
    }
    rep.residual_history.push_back(res);
    precondition(p, r, z, rep);
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) d[i] = z[i] + beta * d[i];
  }
  if (!rep.converged) res = true_residual(a, b, x, r);
  rep.final_residual = res;
  rep.wall_time = seconds_since(t0);
  return rep;
}

SolveReport minres(const LinearOperator& a, std::span<const double> b, std::span<double> x, Preconditioner* p,
                   const SolverConfig& cfg) {
  check_sizes(a, b, x, p);
  const auto t0 = Clock::now();
  SolveReport rep;
  const std::size_t n = b.size();
  std::fill(x.begin(), x.end(), 0.0);
  Vector rt;
  double res = norm2(b);
  const double tol = threshold(cfg, res);
  rep.residual_history.push_back(res);
  if (res <= tol) {
    rep.converged = true;
    rep.final_residual = res;
    rep.wall_time = seconds_since(t0);
    return rep;
  }
  // preconditioned Lanczos with Givens QR (unnormalised v, M^{-1}-normalised z)
  Vector v_old(n, 0.0), v(b.begin(), b.end()), v_new(n), z(n), z_new(n), az(n);
  Vector w_old(n, 0.0), w(n, 0.0), w_new(n);
  precondition(p, v, z, rep);
  double g = dot(z, v);
  if (!(g > 0.0)) throw ConfigError("MINRES preconditioner is not positive definite");
  double gamma = std::sqrt(g), gamma_old = 1.0;
  double eta = gamma, s_old = 0.0, s = 0.0, c_old = 1.0, c = 1.0;
  for (int it = 1; it <= cfg.max_iters; ++it) {
    for (double& zi : z) zi /= gamma;
    a.apply(z, az);
    const double delta = dot(az, z);
    for (std::size_t i = 0; i < n; ++i) v_new[i] = az[i] - (delta / gamma) * v[i] - (gamma / gamma_old) * v_old[i];
    precondition(p, v_new, z_new, rep);
    const double gn2 = dot(z_new, v_new);
    if (gn2 < 0.0) throw ConfigError("MINRES preconditioner is not positive definite");
    const double gamma_new = std::sqrt(std::max(gn2, 0.0));
    const double a0 = c * delta - c_old * s * gamma;
    const double a1 = std::hypot(a0, gamma_new);
    const double a2 = s * delta + c_old * c * gamma;
    const double a3 = s_old * gamma;
    const double c_new = a0 / a1, s_new = gamma_new / a1;
    for (std::size_t i = 0; i < n; ++i) w_new[i] = (z[i] - a3 * w_old[i] - a2 * w[i]) / a1;
    axpy(c_new * eta, w_new, x);
    eta = -s_new * eta;
    rep.outer_iterations = it;
    res = true_residual(a, b, x, rt);
    rep.residual_history.push_back(res);
    if (res <= tol) {
      rep.converged = true;
      break;
    }
    if (gamma_new <= 1e-14 * rep.residual_history.front()) break;  // Krylov space exhausted
    std::swap(v_old, v);
    std::swap(v, v_new);
    std::swap(z, z_new);
    std::swap(w_old, w);
    std::swap(w, w_new);
    gamma_old = gamma;
    gamma = gamma_new;
    c_old = c;
    c = c_new;
    s_old = s;
    s = s_new;
  }
  rep.final_residual = res;
  rep.wall_time = seconds_since(t0);
  return rep;
}

SolveReport fgmres(const LinearOperator& a, std::span<const double> b, std::span<double> x, Preconditioner* p,
                   const SolverConfig& cfg) {
  check_sizes(a, b, x, p);
  if (cfg.restart < 1) throw ConfigError("restart length must be at least 1");
  const auto t0 = Clock::now();
  SolveReport rep;
  const std::size_t n = b.size();
  const int m = cfg.restart;
  std::fill(x.begin(), x.end(), 0.0);
  Vector r(b.begin(), b.end());
  double beta = norm2(r);
  const double res0 = beta;
  const double tol = threshold(cfg, beta);
  rep.cycle_starts.push_back(0);
  rep.residual_history.push_back(beta);
  if (beta <= tol) {
    rep.converged = true;
    rep.final_residual = beta;
    rep.wall_time = seconds_since(t0);
    return rep;
  }
  std::vector<Vector> V(m + 1, Vector(n)), Z(m, Vector(n));
  std::vector<double> H((m + 1) * m), cs(m), sn(m), gvec(m + 1), y(m);
  auto h = [&](int i, int j) -> double& { return H[static_cast<std::size_t>(i) * m + j]; };
  Vector w(n);
  int total = 0;
  while (total < cfg.max_iters) {
    for (std::size_t i = 0; i < n; ++i) V[0][i] = r[i] / beta;
    std::fill(gvec.begin(), gvec.end(), 0.0);
    gvec[0] = beta;
    int k = 0;
    bool stop_cycle = false;
    for (int j = 0; j < m && total < cfg.max_iters; ++j) {
      precondition(p, V[j], Z[j], rep);
      a.apply(Z[j], w);
      const double wnorm0 = norm2(w);
      for (int i = 0; i <= j; ++i) {
        h(i, j) = dot(w, V[i]);
        axpy(-h(i, j), V[i], w);
      }
      // second pass only if orthogonality was lost
      double wn = norm2(w);
      double loss = 0.0;
      std::vector<double> corr(j + 1);
      for (int i = 0; i <= j; ++i) {
        corr[i] = dot(w, V[i]);
        loss = std::max(loss, std::abs(corr[i]) / std::max(wn, 1e-300));
      }
      if (loss > 1e-8) {
        for (int i = 0; i <= j; ++i) {
          h(i, j) += corr[i];
          axpy(-corr[i], V[i], w);
        }
        wn = norm2(w);
      }
      (void)wnorm0;
      const double hnext = wn;
      for (int i = 0; i < j; ++i) {
        const double t = cs[i] * h(i, j) + sn[i] * h(i + 1, j);
        h(i + 1, j) = -sn[i] * h(i, j) + cs[i] * h(i + 1, j);
        h(i, j) = t;
      }
      const double den = std::hypot(h(j, j), hnext);
      cs[j] = den > 0.0 ? h(j, j) / den : 1.0;
      sn[j] = den > 0.0 ? hnext / den : 0.0;
      h(j, j) = den;
      gvec[j + 1] = -sn[j] * gvec[j];
      gvec[j] = cs[j] * gvec[j];
      ++total;
      k = j + 1;
      rep.residual_history.push_back(std::abs(gvec[j + 1]));
      if (hnext <= 1e-14 * res0) {
        stop_cycle = true;  // lucky breakdown
        break;
      }
      for (std::size_t i = 0; i < n; ++i) V[j + 1][i] = w[i] / hnext;
      if (std::abs(gvec[j + 1]) <= tol) break;
    }
    // back substitution and update with the flexible basis Z
    for (int i = k - 1; i >= 0; --i) {
      double s = gvec[i];
      for (int l = i + 1; l < k; ++l) s -= h(i, l) * y[l];
      y[i] = h(i, i) != 0.0 ? s / h(i, i) : 0.0;
    }
    for (int i = 0; i < k; ++i) axpy(y[i], Z[i], x);
    beta = true_residual(a, b, x, r);
    rep.outer_iterations = total;
    rep.cycle_starts.push_back(rep.residual_history.size());
    rep.residual_history.push_back(beta);
    if (beta <= tol) {
      rep.converged = true;
      break;
    }
    if (stop_cycle && k == 0) break;
  }
  rep.cycle_starts.pop_back();  // the final true residual closes the last cycle
  rep.final_residual = beta;
  rep.wall_time = seconds_since(t0);
  return rep;
}

SolveReport solve(const LinearOperator& a, std::span<const double> b, std::span<double> x, Preconditioner* p,
                  const SolverConfig& cfg) {
  switch (cfg.method) {
    case KrylovMethod::cg: return cg(a, b, x, p, cfg);
    case KrylovMethod::minres: return minres(a, b, x, p, cfg);
    case KrylovMethod::fgmres: return fgmres(a, b, x, p, cfg);
  }
  throw ConfigError("unknown Krylov method");
}

KrylovMethod parse_method(const std::string& s) {
  if (s == "cg") return KrylovMethod::cg;
  if (s == "minres") return KrylovMethod::minres;
  if (s == "fgmres") return KrylovMethod::fgmres;
  throw ConfigError("unknown solver '" + s + "'");
}

std::string to_string(KrylovMethod m) {
  switch (m) {
    case KrylovMethod::cg: return "cg";
    case KrylovMethod::minres: return "minres";
    case KrylovMethod::fgmres: return "fgmres";
  }
  return "?";
}

}  // namespace fictsolve
