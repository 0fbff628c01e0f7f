#include "fictsolve/multigrid.hpp"

#include "fictsolve/error.hpp"

namespace fictsolve {

CsrMatrix lattice_prolongation(std::size_t k) {
  if (k < 2) throw ConfigError("coarse lattice needs at least 2 nodes per side");
  const std::size_t nf = 2 * k - 1;
  TripletBuilder t(nf * nf, k * k);
  t.reserve(nf * nf * 4);
  // 1D weights: even fine index sits on a coarse node, odd is the midpoint
  auto stencil = [](std::size_t i, std::size_t* idx, double* w) {
    if (i % 2 == 0) {
      idx[0] = i / 2;
      w[0] = 1.0;
      return 1;
    }
    idx[0] = i / 2;
    idx[1] = i / 2 + 1;
    w[0] = w[1] = 0.5;
    return 2;
  };
  for (std::size_t j = 0; j < nf; ++j) {
    std::size_t jy[2];
    double wy[2];
    const int ny = stencil(j, jy, wy);
    for (std::size_t i = 0; i < nf; ++i) {
      std::size_t ix[2];
      double wx[2];
      const int nx = stencil(i, ix, wx);
      for (int b = 0; b < ny; ++b)
        for (int a = 0; a < nx; ++a) t.add(j * nf + i, jy[b] * k + ix[a], wy[b] * wx[a]);
    }
  }
  return t.build();
}

namespace {

std::vector<std::size_t> interior(std::size_t n) {
  std::vector<std::size_t> idx;
  for (std::size_t j = 1; j + 1 < n; ++j)
    for (std::size_t i = 1; i + 1 < n; ++i) idx.push_back(j * n + i);
  return idx;
}

std::vector<std::size_t> all(std::size_t n) {
  std::vector<std::size_t> idx(n * n);
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return idx;
}

}  // namespace

std::vector<CsrMatrix> q1_prolongations(int level, int coarsest, bool eliminate_boundary) {
  if (coarsest < 1 || coarsest > level) throw ConfigError("multigrid levels out of range");
  std::vector<CsrMatrix> out;
  for (int l = level; l > coarsest; --l) {
    const std::size_t kc = (std::size_t{1} << (l - 1)) + 1;
    const std::size_t kf = 2 * kc - 1;
    const CsrMatrix p = lattice_prolongation(kc);
    out.push_back(eliminate_boundary ? p.submatrix(interior(kf), interior(kc)) : p.submatrix(all(kf), all(kc)));
  }
  return out;
}

Multigrid::Multigrid(const CsrMatrix& a, const std::vector<CsrMatrix>& prolongations, int sweeps)
    : sweeps_(sweeps) {
  if (sweeps < 1) throw ConfigError("multigrid needs at least one smoothing sweep");
  ops_.push_back(a);
  for (const auto& p : prolongations) {
    if (p.rows() != ops_.back().rows()) throw DimensionError("prolongation does not match the level operator");
    const CsrMatrix pt = p.transpose();
    ops_.push_back(sparse_multiply(pt, sparse_multiply(ops_.back(), p)));
    p_.push_back(p);
    pt_.push_back(pt);
  }
  for (const auto& m : ops_) {
    diag_.push_back(m.diagonal_values());
    for (double d : diag_.back())
      if (!(d > 0.0)) throw FactorizationError("multigrid level operator has a non-positive diagonal");
  }
  coarse_ = DenseLu(ops_.back());
}

void Multigrid::sweep(std::size_t k, std::span<const double> r, std::span<double> z, bool forward) const {
  const CsrMatrix& m = ops_[k];
  const auto& rp = m.row_ptr();
  const auto& ci = m.col_idx();
  const auto& v = m.values();
  const std::size_t n = m.rows();
  auto relax = [&](std::size_t i) {
    double s = r[i];
    for (std::size_t q = rp[i]; q < rp[i + 1]; ++q)
      if (ci[q] != i) s -= v[q] * z[ci[q]];
    z[i] = s / diag_[k][i];
  };
  if (forward)
    for (std::size_t i = 0; i < n; ++i) relax(i);
  else
    for (std::size_t i = n; i-- > 0;) relax(i);
}

void Multigrid::cycle(std::size_t k, std::span<const double> r, std::span<double> z) const {
  if (k + 1 == ops_.size()) {
    coarse_.solve(r, z);
    return;
  }
  std::fill(z.begin(), z.end(), 0.0);
  for (int s = 0; s < sweeps_; ++s) sweep(k, r, z, true);
  Vector res(r.begin(), r.end());
  Vector az = ops_[k] * std::span<const double>(z.data(), z.size());
  for (std::size_t i = 0; i < res.size(); ++i) res[i] -= az[i];
  const Vector rc = pt_[k] * std::span<const double>(res);
  Vector ec(rc.size());
  cycle(k + 1, rc, ec);
  const Vector ef = p_[k] * std::span<const double>(ec);
  for (std::size_t i = 0; i < ef.size(); ++i) z[i] += ef[i];
  for (int s = 0; s < sweeps_; ++s) sweep(k, r, z, false);
}

void Multigrid::vcycle(std::span<const double> r, std::span<double> z) const {
  if (r.size() != size() || z.size() != size()) throw DimensionError("multigrid vector size mismatch");
  cycle(0, r, z);
}

}  // namespace fictsolve
