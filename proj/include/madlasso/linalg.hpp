#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "madlasso/errors.hpp"
#include "madlasso/matrix.hpp"

namespace madlasso {

struct Spectrum {
  std::vector<std::complex<double>> eigenvalues;
  double spectral_radius = 0.0;
  bool converged = false;
};

namespace detail {

// Cholesky factor L (lower) of a symmetric matrix, in place on a copy.
// Pivot threshold is relative to the largest diagonal entry of the input.
// Throws the supplied exception type on pivot failure.
template <class FailError>
inline DenseMatrix cholesky(const DenseMatrix& g, double rel_pivot_tol,
                            const char* context) {
  const std::size_t n = g.rows();
  if (g.cols() != n) throw std::invalid_argument("cholesky: matrix not square");
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, g(i, i));
  const double floor = rel_pivot_tol * std::max(max_diag, 0.0);

  DenseMatrix l(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = g(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      if (i == j) {
        if (!(s > floor))
          throw FailError(std::string(context) + ": pivot " + std::to_string(s) +
                          " at index " + std::to_string(i));
        l(i, i) = std::sqrt(s);
      } else {
        l(i, j) = s / l(j, j);
      }
    }
  }
  return l;
}

inline Vec cholesky_solve(const DenseMatrix& l, const Vec& rhs) {
  const std::size_t n = l.rows();
  Vec w(rhs);
  for (std::size_t i = 0; i < n; ++i) {
    double s = w[i];
    for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * w[k];
    w[i] = s / l(i, i);
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double s = w[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * w[k];
    w[ii] = s / l(ii, ii);
  }
  return w;
}

// Diagonal similarity scaling (powers of 2) to even out row/column norms.
inline void balance(DenseMatrix& h) {
  const std::size_t n = h.rows();
  const double radix = 2.0, sq = radix * radix;
  bool done = false;
  while (!done) {
    done = true;
    for (std::size_t i = 0; i < n; ++i) {
      double r = 0.0, c = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        c += std::abs(h(j, i));
        r += std::abs(h(i, j));
      }
      if (c == 0.0 || r == 0.0) continue;
      double g = r / radix, f = 1.0, s = c + r;
      while (c < g) {
        f *= radix;
        c *= sq;
      }
      g = r * radix;
      while (c > g) {
        f /= radix;
        c /= sq;
      }
      if ((c + r) / f < 0.95 * s) {
        done = false;
        const double ginv = 1.0 / f;
        for (std::size_t j = 0; j < n; ++j) h(i, j) *= ginv;
        for (std::size_t j = 0; j < n; ++j) h(j, i) *= f;
      }
    }
  }
}

// Householder reduction to upper Hessenberg form (eigenvalues only, no Q).
inline void hessenberg(DenseMatrix& a) {
  const std::size_t n = a.rows();
  if (n < 3) return;
  for (std::size_t m = 1; m + 1 < n; ++m) {
    double x = 0.0;
    std::size_t i_piv = m;
    for (std::size_t j = m; j < n; ++j) {
      if (std::abs(a(j, m - 1)) > std::abs(x)) {
        x = a(j, m - 1);
        i_piv = j;
      }
    }
    if (i_piv != m) {
      for (std::size_t j = m - 1; j < n; ++j) std::swap(a(i_piv, j), a(m, j));
      for (std::size_t j = 0; j < n; ++j) std::swap(a(j, i_piv), a(j, m));
    }
    if (x != 0.0) {
      for (std::size_t i = m + 1; i < n; ++i) {
        double y = a(i, m - 1);
        if (y != 0.0) {
          y /= x;
          a(i, m - 1) = y;
          for (std::size_t j = m; j < n; ++j) a(i, j) -= y * a(m, j);
          for (std::size_t j = 0; j < n; ++j) a(j, m) += y * a(j, i);
        }
      }
    }
  }
  // zero out the stored multipliers below the subdiagonal
  for (std::size_t i = 2; i < n; ++i)
    for (std::size_t j = 0; j + 2 <= i; ++j) a(i, j) = 0.0;
}

// Francis double-shift QR on an upper Hessenberg matrix. Classic hqr scheme
// with exceptional shifts every 10 sweeps; fails a single eigenvalue after
// max_sweeps sweeps.
inline std::vector<std::complex<double>> hqr(DenseMatrix& h, int max_sweeps) {
  const std::size_t n = h.rows();
  std::vector<std::complex<double>> eig;
  eig.reserve(n);

  double anorm = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = (i == 0 ? 0 : i - 1); j < n; ++j) anorm += std::abs(h(i, j));
  if (anorm == 0.0) {
    eig.assign(n, {0.0, 0.0});
    return eig;
  }
  const double eps = std::numeric_limits<double>::epsilon();

  long nn = static_cast<long>(n) - 1;
  double t = 0.0;
  while (nn >= 0) {
    int its = 0;
    long l;
    do {
      for (l = nn; l >= 1; --l) {
        double s = std::abs(h(l - 1, l - 1)) + std::abs(h(l, l));
        if (s == 0.0) s = anorm;
        if (std::abs(h(l, l - 1)) <= eps * s) {
          h(l, l - 1) = 0.0;
          break;
        }
      }
      double x = h(nn, nn);
      if (l == nn) {  // one real root
        eig.emplace_back(x + t, 0.0);
        --nn;
      } else {
        double y = h(nn - 1, nn - 1);
        double w = h(nn, nn - 1) * h(nn - 1, nn);
        if (l == nn - 1) {  // 2x2 block: real pair or conjugate pair
          double p = 0.5 * (y - x);
          double q = p * p + w;
          double z = std::sqrt(std::abs(q));
          x += t;
          if (q >= 0.0) {
            z = p + (p >= 0.0 ? z : -z);
            eig.emplace_back(x + z, 0.0);
            eig.emplace_back(z != 0.0 ? x - w / z : x + z, 0.0);
          } else {
            eig.emplace_back(x + p, z);
            eig.emplace_back(x + p, -z);
          }
          nn -= 2;
        } else {
          if (its >= max_sweeps)
            throw NonConvergence("eigenvalues_dense: QR sweep limit reached");
          if (its != 0 && its % 10 == 0) {  // exceptional shift
            t += x;
            for (long i = 0; i <= nn; ++i) h(i, i) -= x;
            double s = std::abs(h(nn, nn - 1)) + std::abs(h(nn - 1, nn - 2));
            y = x = 0.75 * s;
            w = -0.4375 * s * s;
          }
          ++its;
          long m;
          double p = 0.0, q = 0.0, r = 0.0, z = 0.0;
          for (m = nn - 2; m >= l; --m) {
            z = h(m, m);
            double rr = x - z;
            double ss = y - z;
            p = (rr * ss - w) / h(m + 1, m) + h(m, m + 1);
            q = h(m + 1, m + 1) - z - rr - ss;
            r = h(m + 2, m + 1);
            double scale = std::abs(p) + std::abs(q) + std::abs(r);
            p /= scale;
            q /= scale;
            r /= scale;
            if (m == l) break;
            double u = std::abs(h(m, m - 1)) * (std::abs(q) + std::abs(r));
            double v = std::abs(p) * (std::abs(h(m - 1, m - 1)) + std::abs(z) +
                                      std::abs(h(m + 1, m + 1)));
            if (u <= eps * v) break;
          }
          for (long i = m + 2; i <= nn; ++i) {
            h(i, i - 2) = 0.0;
            if (i > m + 2) h(i, i - 3) = 0.0;
          }
          for (long k = m; k <= nn - 1; ++k) {
            if (k != m) {
              p = h(k, k - 1);
              q = h(k + 1, k - 1);
              r = (k != nn - 1) ? h(k + 2, k - 1) : 0.0;
              x = std::abs(p) + std::abs(q) + std::abs(r);
              if (x != 0.0) {
                p /= x;
                q /= x;
                r /= x;
              }
            }
            double s = std::sqrt(p * p + q * q + r * r);
            if (p < 0.0) s = -s;
            if (s != 0.0) {
              if (k == m) {
                if (l != m) h(k, k - 1) = -h(k, k - 1);
              } else {
                h(k, k - 1) = -s * x;
              }
              p += s;
              x = p / s;
              double yy = q / s;
              z = r / s;
              q /= p;
              r /= p;
              for (long j = k; j <= nn; ++j) {  // row modification
                double pp = h(k, j) + q * h(k + 1, j);
                if (k != nn - 1) {
                  pp += r * h(k + 2, j);
                  h(k + 2, j) -= pp * z;
                }
                h(k + 1, j) -= pp * yy;
                h(k, j) -= pp * x;
              }
              const long mmin = (nn < k + 3) ? nn : k + 3;
              for (long i = l; i <= mmin; ++i) {  // column modification
                double pp = x * h(i, k) + yy * h(i, k + 1);
                if (k != nn - 1) {
                  pp += z * h(i, k + 2);
                  h(i, k + 2) -= pp * r;
                }
                h(i, k + 1) -= pp * q;
                h(i, k) -= pp;
              }
            }
          }
        }
      }
    } while (l < nn - 1);
  }
  return eig;
}

}  // namespace detail

// Largest singular value of A by power iteration on A^T A. The start vector
// is the normalized all-ones vector so repeated calls are deterministic; a
// single perturbed restart covers starts that land in the null space.
inline double operator_norm(const DenseMatrix& a, double tol = 1e-12,
                            std::size_t max_iter = 20000) {
  if (!(tol > 0.0)) throw std::invalid_argument("operator_norm: tol must be positive");
  const std::size_t n = a.cols();
  Vec v(n, 1.0 / std::sqrt(static_cast<double>(n)));

  double est = 0.0;
  bool restarted = false;
  std::size_t stable = 0;
  for (std::size_t it = 0; it < max_iter; ++it) {
    Vec w = a.tmul(a.mul(v));
    const double wn = norm2(w);
    if (wn == 0.0) {
      if (restarted) return 0.0;  // A^T A v = 0 twice: zero operator
      restarted = true;
      for (std::size_t i = 0; i < n; ++i)
        v[i] = 1.0 + 0.5 * std::sin(static_cast<double>(i + 1));
      const double vn = norm2(v);
      for (double& x : v) x /= vn;
      continue;
    }
    // Rayleigh quotient of A^T A at unit v is dot(v, w).
    const double sigma = std::sqrt(std::max(dot(v, w), 0.0));
    for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / wn;
    if (sigma > 0.0 && std::abs(sigma - est) <= tol * sigma) {
      if (++stable >= 2) return sigma;
    } else {
      stable = 0;
    }
    est = sigma;
  }
  throw NonConvergence("operator_norm: power iteration did not converge");
}

// Eigenvalues of a square real matrix via balancing, Hessenberg reduction and
// Francis double-shift QR. Desk-scale solver, dimension capped at 512.
inline Spectrum eigenvalues_dense(const DenseMatrix& b, double tol = 1e-12) {
  (void)tol;  // deflation always uses machine epsilon, which dominates any tol >= eps
  const std::size_t n = b.rows();
  if (b.cols() != n) throw std::invalid_argument("eigenvalues_dense: matrix not square");
  if (n > 512) throw std::invalid_argument("eigenvalues_dense: dimension above 512");
  DenseMatrix h = b;
  detail::balance(h);
  detail::hessenberg(h);
  Spectrum s;
  s.eigenvalues = detail::hqr(h, 100);
  for (const auto& ev : s.eigenvalues)
    s.spectral_radius = std::max(s.spectral_radius, std::abs(ev));
  s.converged = true;
  return s;
}

// Determinant ratio det(C + u v^T) / det(C) = 1 + v^T C^{-1} u for symmetric
// positive definite C. The sign is the caller's necessary-condition test.
inline double rank1_pd_necessary(const DenseMatrix& c, const Vec& u, const Vec& v) {
  if (c.rows() != c.cols() || u.size() != c.rows() || v.size() != c.rows())
    throw std::invalid_argument("rank1_pd_necessary: size mismatch");
  const DenseMatrix l = detail::cholesky<NotPositiveDefinite>(c, 0.0, "rank1_pd_necessary");
  const Vec w = detail::cholesky_solve(l, u);
  return 1.0 + dot(v, w);
}

// Solve (A_I^T A_I) w = rhs by Cholesky with one step of iterative refinement.
inline Vec solve_gram(const DenseMatrix& a_i, const Vec& rhs) {
  if (rhs.size() != a_i.cols()) throw std::invalid_argument("solve_gram: size mismatch");
  const DenseMatrix g = gram(a_i);
  const DenseMatrix l = detail::cholesky<SingularGram>(g, 1e-12, "solve_gram");
  Vec w = detail::cholesky_solve(l, rhs);
  Vec r(rhs);
  for (std::size_t i = 0; i < g.rows(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < g.cols(); ++j) acc += g(i, j) * w[j];
    r[i] -= acc;
  }
  const Vec dw = detail::cholesky_solve(l, r);
  for (std::size_t i = 0; i < w.size(); ++i) w[i] += dw[i];
  return w;
}

}  // namespace madlasso
