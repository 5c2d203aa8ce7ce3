#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "madlasso/matrix.hpp"

namespace madlasso {

// Phi^{-1}(3/4); median(|w|)/this estimates sigma for Gaussian w.
inline constexpr double kInvPhi34 = 0.6744897501960817;

// Median of |z| with the even-length convention: the order statistic at
// 1-based position floor(N/2)+1. `index` is the smallest 0-based coordinate
// attaining that magnitude.
struct MedianInfo {
  double value = 0.0;
  std::size_t index = 0;
};

struct ThresholdResult {
  Vec output;
  double threshold = 0.0;
  std::vector<std::size_t> support;
  std::vector<int> signs;
  MedianInfo median;
  int median_sign = 0;  // sign of z at the median index
  double gamma = 0.0;   // MAD multiplier used; 0 for the K-sparse rule
};

inline Vec soft(const Vec& z, double t) {
  Vec out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double m = std::abs(z[i]) - t;
    out[i] = m > 0.0 ? sgn(z[i]) * m : 0.0;
  }
  return out;
}

inline MedianInfo median_abs(const Vec& z) {
  if (z.empty()) throw std::invalid_argument("median_abs: empty vector");
  Vec mags(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) mags[i] = std::abs(z[i]);
  Vec sorted = mags;
  std::sort(sorted.begin(), sorted.end());
  MedianInfo info;
  info.value = sorted[z.size() / 2];  // 1-based position floor(N/2)+1
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (mags[i] == info.value) {
      info.index = i;
      break;
    }
  }
  return info;
}

inline ThresholdResult mad_threshold(const Vec& z, double gamma) {
  if (!(gamma > 1.0)) throw std::invalid_argument("mad_threshold: gamma must exceed 1");
  ThresholdResult r;
  r.gamma = gamma;
  r.median = median_abs(z);
  r.median_sign = sgn(z[r.median.index]);
  r.threshold = gamma * r.median.value;
  r.output = soft(z, r.threshold);
  for (std::size_t i = 0; i < r.output.size(); ++i) {
    if (r.output[i] != 0.0) {
      r.support.push_back(i);
      r.signs.push_back(sgn(r.output[i]));
    }
  }
  return r;
}

// The N x N matrix D^2 - gamma * sign(z_j) * d * e_j^T with d = sign(T(z)),
// D = diag(d) and j the median index; applied to z it reproduces T(z).
inline DenseMatrix mad_matrix_form(const Vec& z, double gamma) {
  const ThresholdResult t = mad_threshold(z, gamma);
  const std::size_t n = z.size();
  DenseMatrix m(n, n, 0.0);
  for (std::size_t k = 0; k < t.support.size(); ++k) m(t.support[k], t.support[k]) = 1.0;
  if (t.median_sign != 0) {
    for (std::size_t k = 0; k < t.support.size(); ++k)
      m(t.support[k], t.median.index) -= gamma * t.median_sign * t.signs[k];
  }
  return m;
}

inline double estimate_sigma(const Vec& w) {
  return median_abs(w).value / kInvPhi34;
}

// Baseline rule: soft-threshold at the (K+1)-th largest magnitude.
inline ThresholdResult ksparse_threshold(const Vec& z, std::size_t k) {
  if (k < 1 || k >= z.size())
    throw std::invalid_argument("ksparse_threshold: require 1 <= K < N");
  Vec mags(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) mags[i] = std::abs(z[i]);
  Vec sorted = mags;
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  ThresholdResult r;
  r.threshold = sorted[k];
  r.median.value = r.threshold;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (mags[i] == r.threshold) {
      r.median.index = i;
      break;
    }
  }
  r.median_sign = sgn(z[r.median.index]);
  r.output = soft(z, r.threshold);
  for (std::size_t i = 0; i < r.output.size(); ++i) {
    if (r.output[i] != 0.0) {
      r.support.push_back(i);
      r.signs.push_back(sgn(r.output[i]));
    }
  }
  return r;
}

struct FixedPointReport {
  double lambda_star = 0.0;
  double max_on_support_violation = 0.0;
  double max_off_support_violation = 0.0;
  bool passes = false;
};

// Diagnostic for the fixed-point condition
//   -A^T(Ax - y) in gamma * median(|-A^T(Ax - y)|) * subgradient(||x||_1),
// checked coordinate-wise at tolerance tol.
inline FixedPointReport check_fixed_point(const DenseMatrix& a, const Vec& y,
                                          const Vec& x, double gamma, double tol) {
  const Vec g = a.tmul(y - a.mul(x));  // -A^T(Ax - y)
  FixedPointReport rep;
  rep.lambda_star = gamma * median_abs(g).value;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] != 0.0) {
      rep.max_on_support_violation = std::max(
          rep.max_on_support_violation, std::abs(g[i] - rep.lambda_star * sgn(x[i])));
    } else {
      rep.max_off_support_violation = std::max(
          rep.max_off_support_violation, std::abs(g[i]) - rep.lambda_star);
    }
  }
  rep.max_off_support_violation = std::max(rep.max_off_support_violation, 0.0);
  rep.passes = rep.max_on_support_violation <= tol &&
               rep.max_off_support_violation <= tol;
  return rep;
}

}  // namespace madlasso
