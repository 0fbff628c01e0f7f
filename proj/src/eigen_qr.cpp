// Nonsymmetric dense eigenvalues: balancing, Householder Hessenberg reduction and
// the Francis double-shift QR iteration (eigenvalues only).
#include <algorithm>
#include <cmath>
#include <limits>

#include "fictsolve/error.hpp"
#include "fictsolve/spectrum.hpp"

namespace fictsolve {

namespace {

void balance(DenseMatrix& a) {
  const double radix = 2.0, sqrdx = radix * radix;
  const Eigen::Index n = a.rows();
  bool done = false;
  while (!done) {
    done = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      double r = 0.0, c = 0.0;
      for (Eigen::Index j = 0; j < n; ++j)
        if (j != i) {
          c += std::abs(a(j, i));
          r += std::abs(a(i, j));
        }
      if (c == 0.0 || r == 0.0) continue;
      double g = r / radix, f = 1.0;
      const double s = c + r;
      while (c < g) {
        f *= radix;
        c *= sqrdx;
      }
      g = r * radix;
      while (c > g) {
        f /= radix;
        c /= sqrdx;
      }
      if ((c + r) / f < 0.95 * s) {
        done = false;
        a.row(i) /= f;
        a.col(i) *= f;
      }
    }
  }
}

void hessenberg(DenseMatrix& a) {
  const Eigen::Index n = a.rows();
  Eigen::VectorXd v;
  for (Eigen::Index k = 0; k + 2 < n; ++k) {
    const Eigen::Index len = n - k - 1;
    v = a.col(k).tail(len);
    const double xnorm = v.norm();
    if (xnorm == 0.0) continue;
    const double alpha = v(0) >= 0.0 ? -xnorm : xnorm;
    v(0) -= alpha;
    const double vnorm = v.norm();
    if (vnorm == 0.0) continue;
    v /= vnorm;
    // rows k+1.. : A <- (I - 2 v v^T) A
    Eigen::RowVectorXd w = v.transpose() * a.bottomRows(len);
    a.bottomRows(len).noalias() -= 2.0 * v * w;
    // columns k+1.. : A <- A (I - 2 v v^T)
    Eigen::VectorXd u = a.rightCols(len) * v;
    a.rightCols(len).noalias() -= 2.0 * u * v.transpose();
    a(k + 1, k) = alpha;
    a.col(k).tail(len - 1).setZero();
  }
}

double sign(double a, double b) { return b >= 0.0 ? std::abs(a) : -std::abs(a); }

std::vector<Complex> hqr(DenseMatrix& a) {
  const int n = static_cast<int>(a.rows());
  std::vector<Complex> wri(static_cast<std::size_t>(n));
  const double eps = std::numeric_limits<double>::epsilon();
  const int max_its = 60;
  double anorm = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = std::max(i - 1, 0); j < n; ++j) anorm += std::abs(a(i, j));
  int nn = n - 1;
  double t = 0.0;
  double p = 0, q = 0, r = 0, s = 0, w = 0, x = 0, y = 0, z = 0;
  while (nn >= 0) {
    int its = 0, l = 0;
    do {
      for (l = nn; l > 0; --l) {
        s = std::abs(a(l - 1, l - 1)) + std::abs(a(l, l));
        if (s == 0.0) s = anorm;
        if (std::abs(a(l, l - 1)) <= eps * s) {
          a(l, l - 1) = 0.0;
          break;
        }
      }
      x = a(nn, nn);
      if (l == nn) {
        wri[static_cast<std::size_t>(nn--)] = x + t;
      } else {
        y = a(nn - 1, nn - 1);
        w = a(nn, nn - 1) * a(nn - 1, nn);
        if (l == nn - 1) {
          p = 0.5 * (y - x);
          q = p * p + w;
          z = std::sqrt(std::abs(q));
          x += t;
          if (q >= 0.0) {
            z = p + sign(z, p);
            wri[static_cast<std::size_t>(nn - 1)] = wri[static_cast<std::size_t>(nn)] = x + z;
            if (z != 0.0) wri[static_cast<std::size_t>(nn)] = x - w / z;
          } else {
            wri[static_cast<std::size_t>(nn)] = Complex(x + p, -z);
            wri[static_cast<std::size_t>(nn - 1)] = std::conj(wri[static_cast<std::size_t>(nn)]);
          }
          nn -= 2;
        } else {
          if (its == max_its) throw ConvergenceError("QR iteration did not converge");
          if (its > 0 && its % 10 == 0) {
            // exceptional shift
            t += x;
            for (int i = 0; i <= nn; ++i) a(i, i) -= x;
            s = std::abs(a(nn, nn - 1)) + std::abs(a(nn - 1, nn - 2));
            y = x = 0.75 * s;
            w = -0.4375 * s * s;
          }
          ++its;
          int m = nn - 2;
          for (; m >= l; --m) {
            z = a(m, m);
            r = x - z;
            s = y - z;
            p = (r * s - w) / a(m + 1, m) + a(m, m + 1);
            q = a(m + 1, m + 1) - z - r - s;
            r = a(m + 2, m + 1);
            s = std::abs(p) + std::abs(q) + std::abs(r);
            p /= s;
            q /= s;
            r /= s;
            if (m == l) break;
            const double u = std::abs(a(m, m - 1)) * (std::abs(q) + std::abs(r));
            const double v = std::abs(p) * (std::abs(a(m - 1, m - 1)) + std::abs(z) + std::abs(a(m + 1, m + 1)));
            if (u <= eps * v) break;
          }
          for (int i = m; i < nn - 1; ++i) {
            a(i + 2, i) = 0.0;
            if (i != m) a(i + 2, i - 1) = 0.0;
          }
          for (int k = m; k < nn; ++k) {
            if (k != m) {
              p = a(k, k - 1);
              q = a(k + 1, k - 1);
              r = 0.0;
              if (k + 1 != nn) r = a(k + 2, k - 1);
              if ((x = std::abs(p) + std::abs(q) + std::abs(r)) != 0.0) {
                p /= x;
                q /= x;
                r /= x;
              }
            }
            if ((s = sign(std::sqrt(p * p + q * q + r * r), p)) != 0.0) {
              if (k == m) {
                if (l != m) a(k, k - 1) = -a(k, k - 1);
              } else {
                a(k, k - 1) = -s * x;
              }
              p += s;
              x = p / s;
              y = q / s;
              z = r / s;
              q /= p;
              r /= p;
              for (int j = k; j <= nn; ++j) {
                p = a(k, j) + q * a(k + 1, j);
                if (k + 1 != nn) {
                  p += r * a(k + 2, j);
                  a(k + 2, j) -= p * z;
                }
                a(k + 1, j) -= p * y;
                a(k, j) -= p * x;
              }
              const int mmin = nn < k + 3 ? nn : k + 3;
              for (int i = l; i <= mmin; ++i) {
                p = x * a(i, k) + y * a(i, k + 1);
                if (k + 1 != nn) {
                  p += z * a(i, k + 2);
                  a(i, k + 2) -= p * r;
                }
                a(i, k + 1) -= p * q;
                a(i, k) -= p;
              }
            }
          }
        }
      }
    } while (l < nn - 1);
  }
  return wri;
}

}  // namespace

std::vector<Complex> dense_eigenvalues(const DenseMatrix& m) {
  if (m.rows() != m.cols()) throw DimensionError("eigenvalues need a square matrix");
  if (static_cast<std::size_t>(m.rows()) > kDenseEigGuard) throw DimensionError("dense eigenvalue guard exceeded");
  if (!m.allFinite()) throw DomainError("matrix has non-finite entries");
  DenseMatrix a = m;
  if (a.rows() == 0) return {};
  balance(a);
  hessenberg(a);
  std::vector<Complex> ev = hqr(a);
  std::sort(ev.begin(), ev.end(), [](const Complex& u, const Complex& v) {
    return u.real() != v.real() ? u.real() < v.real() : u.imag() < v.imag();
  });
  return ev;
}

}  // namespace fictsolve
