#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include "madlasso/candidate.hpp"
#include "madlasso/errors.hpp"
#include "madlasso/linalg.hpp"
#include "madlasso/matrix.hpp"
#include "madlasso/stability.hpp"
#include "madlasso/thresholding.hpp"

namespace madlasso {

// One lambda-interval [lambda_lo, lambda_hi) of the LASSO path on which the
// equicorrelation set, its signs and the median index are all constant.
// x̄_I(lambda) = p - lambda * q on the support, zero elsewhere, and
// median(|-A^T(A x̄ - y)|) = |a*lambda + b|.
struct PathSegment {
  double lambda_hi = 0.0;
  double lambda_lo = 0.0;
  std::vector<std::size_t> equicorrelation;
  std::vector<int> signs;
  Vec p, q;
  std::size_t median_index = 0;
  double a = 0.0;
  double b = 0.0;
};

// Full solution vector at lambda from a segment's affine coefficients.
inline Vec segment_solution(const PathSegment& seg, double lambda, std::size_t n) {
  Vec x(n, 0.0);
  for (std::size_t k = 0; k < seg.equicorrelation.size(); ++k)
    x[seg.equicorrelation[k]] = seg.p[k] - lambda * seg.q[k];
  return x;
}

// Median coefficients (a, b) of Lemma-2 form for a segment with known
// equicorrelation set, signs and median index:
//   a = A_j^T A_I (A_I^T A_I)^{-1} s,
//   b = A_j^T (I - A_I (A_I^T A_I)^{-1} A_I^T) y.
inline std::pair<double, double> segment_median_coeffs(const DenseMatrix& a,
                                                       const Vec& y,
                                                       const PathSegment& seg) {
  const Vec aj = a.column(seg.median_index);
  if (seg.equicorrelation.empty()) return {0.0, dot(aj, y)};
  const DenseMatrix a_i = a.columns(seg.equicorrelation);
  Vec s(seg.signs.size());
  for (std::size_t k = 0; k < s.size(); ++k) s[k] = seg.signs[k];
  const Vec u = solve_gram(a_i, s);
  const Vec w = solve_gram(a_i, a_i.tmul(y));
  const double coeff_a = dot(aj, a_i.mul(u));
  const double coeff_b = dot(aj, y - a_i.mul(w));
  return {coeff_a, coeff_b};
}

namespace detail {

struct AffineCorrelations {
  Vec alpha;  // c_i(lambda) = beta_i + alpha_i * lambda
  Vec beta;
};

inline AffineCorrelations correlation_coeffs(const DenseMatrix& a, const Vec& y,
                                             const std::vector<std::size_t>& active,
                                             const Vec& p, const Vec& q) {
  AffineCorrelations c;
  const std::size_t n = a.cols();
  c.alpha.assign(n, 0.0);
  c.beta.assign(n, 0.0);
  if (active.empty()) {
    c.beta = a.tmul(y);
    return c;
  }
  const DenseMatrix a_i = a.columns(active);
  const Vec aq = a_i.mul(q);
  const Vec r0 = y - a_i.mul(p);
  c.alpha = a.tmul(aq);
  c.beta = a.tmul(r0);
  return c;
}

inline std::size_t median_index_at(const AffineCorrelations& c, double lambda) {
  Vec vals(c.alpha.size());
  for (std::size_t i = 0; i < vals.size(); ++i)
    vals[i] = c.beta[i] + c.alpha[i] * lambda;
  return median_abs(vals).index;
}

// Lambdas inside (lo, hi) where two correlation magnitudes |c_i|, |c_k|
// cross. The median index is constant between consecutive crossings.
inline std::vector<double> magnitude_crossings(const AffineCorrelations& c,
                                               double lo, double hi) {
  std::vector<double> out;
  const std::size_t n = c.alpha.size();
  auto push_if_inside = [&](double num, double den) {
    if (den == 0.0) return;
    const double lam = num / den;
    if (lam > lo && lam < hi) out.push_back(lam);
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = i + 1; k < n; ++k) {
      push_if_inside(c.beta[k] - c.beta[i], c.alpha[i] - c.alpha[k]);
      push_if_inside(-(c.beta[i] + c.beta[k]), c.alpha[i] + c.alpha[k]);
    }
  }
  std::sort(out.begin(), out.end(), std::greater<double>());
  const double merge_tol = 1e-13 * std::max(1.0, hi);
  std::vector<double> dedup;
  for (double v : out)
    if (dedup.empty() || dedup.back() - v > merge_tol) dedup.push_back(v);
  return dedup;
}

// Split a homotopy interval [lo, hi) with fixed equicorrelation data into
// segments of constant median index.
inline void emit_median_segments(const DenseMatrix& a, const Vec& y,
                                 const std::vector<std::size_t>& active,
                                 const std::vector<int>& signs, const Vec& p,
                                 const Vec& q, double lo, double hi,
                                 std::vector<PathSegment>& out) {
  const AffineCorrelations c = correlation_coeffs(a, y, active, p, q);
  std::vector<double> cuts = magnitude_crossings(c, lo, hi);
  cuts.push_back(lo);

  double upper = hi;
  std::size_t prev_j = std::numeric_limits<std::size_t>::max();
  for (double cut : cuts) {
    const double mid = 0.5 * (cut + upper);
    const std::size_t j = median_index_at(c, mid);
    if (j == prev_j && !out.empty()) {
      out.back().lambda_lo = cut;  // merge: same median index continues
    } else {
      PathSegment seg;
      seg.lambda_hi = upper;
      seg.lambda_lo = cut;
      seg.equicorrelation = active;
      seg.signs = signs;
      seg.p = p;
      seg.q = q;
      seg.median_index = j;
      seg.a = c.alpha[j];
      seg.b = c.beta[j];
      out.push_back(std::move(seg));
      prev_j = j;
    }
    upper = cut;
  }
}

}  // namespace detail

// Homotopy (LARS-style) LASSO path in decreasing lambda, split both at
// support-change knots and at median-index changes, from ||A^T y||_inf down
// to max(lambda_min, 1e-8 ||A^T y||_inf). Traversal stops early if the
// active set would reach ceil(N/2), where gamma > 1 fixed points cannot
// live. The leading segment [lambda_max, inf) carries the null solution.
inline std::vector<PathSegment> lasso_path(const DenseMatrix& a, const Vec& y,
                                           double lambda_min = 0.0) {
  if (y.size() != a.rows()) throw std::invalid_argument("lasso_path: y size mismatch");
  const std::size_t n = a.cols();
  std::vector<PathSegment> segments;

  const Vec aty = a.tmul(y);
  const double lambda_max = norm_inf(aty);

  // null segment: x̄ = 0 for lambda >= lambda_max
  {
    PathSegment seg;
    seg.lambda_hi = std::numeric_limits<double>::infinity();
    seg.lambda_lo = lambda_max;
    const MedianInfo med = median_abs(aty);
    seg.median_index = med.index;
    seg.a = 0.0;
    seg.b = aty[med.index];
    segments.push_back(std::move(seg));
  }
  if (lambda_max == 0.0) return segments;

  const double lambda_floor = std::max(lambda_min, 1e-8 * lambda_max);
  const double knot_tol = 1e-12 * std::max(1.0, lambda_max);
  // Stop before the support exceeds ceil(N/2): beyond it the median index
  // sits on the support and gamma(lambda) degenerates to 1.
  const std::size_t support_cap = (n + 1) / 2;

  std::vector<std::size_t> active;
  std::vector<int> signs;
  {
    // first entering coordinate(s) at lambda_max
    std::size_t first = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (std::abs(aty[i]) > best) {
        best = std::abs(aty[i]);
        first = i;
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (i != first && std::abs(std::abs(aty[i]) - lambda_max) <= knot_tol)
        throw DegeneratePath("lasso_path: tied entry at lambda_max", lambda_max);
    }
    active.push_back(first);
    signs.push_back(sgn(aty[first]));
  }

  double lambda_top = lambda_max;
  const std::size_t max_knots = 200 * n + 1000;
  std::size_t knot_count = 0;
  for (;; ++knot_count) {
    if (knot_count >= max_knots)
      throw NonConvergence("lasso_path: knot budget exhausted");
    if (lambda_top <= lambda_floor) break;

    const DenseMatrix a_i = a.columns(active);
    Vec s(signs.size());
    for (std::size_t k = 0; k < s.size(); ++k) s[k] = signs[k];
    const Vec p = solve_gram(a_i, a_i.tmul(y));
    const Vec q = solve_gram(a_i, s);
    const detail::AffineCorrelations c = detail::correlation_coeffs(a, y, active, p, q);

    struct Event {
      double lambda;
      bool entering;
      std::size_t coord;
      int sign;
    };
    std::vector<Event> events;
    std::vector<char> is_active(n, 0);
    for (std::size_t idx : active) is_active[idx] = 1;
    for (std::size_t i = 0; i < n; ++i) {
      if (is_active[i]) continue;
      if (c.alpha[i] != 1.0) {
        const double lam = c.beta[i] / (1.0 - c.alpha[i]);
        if (lam > 0.0 && lam < lambda_top - knot_tol)
          events.push_back({lam, true, i, +1});
      }
      if (c.alpha[i] != -1.0) {
        const double lam = -c.beta[i] / (1.0 + c.alpha[i]);
        if (lam > 0.0 && lam < lambda_top - knot_tol)
          events.push_back({lam, true, i, -1});
      }
    }
    for (std::size_t k = 0; k < active.size(); ++k) {
      if (q[k] == 0.0) continue;
      const double lam = p[k] / q[k];
      if (lam > 0.0 && lam < lambda_top - knot_tol)
        events.push_back({lam, false, active[k], 0});
    }

    double lambda_next = lambda_floor;
    const Event* next_event = nullptr;
    for (const Event& e : events) {
      if (e.lambda > lambda_next) {
        lambda_next = e.lambda;
        next_event = &e;
      }
    }
    if (next_event) {
      for (const Event& e : events) {
        if (&e != next_event && std::abs(e.lambda - next_event->lambda) <= knot_tol &&
            e.lambda > lambda_floor)
          throw DegeneratePath("lasso_path: coinciding knot candidates", e.lambda);
      }
    }

    detail::emit_median_segments(a, y, active, signs, p, q, lambda_next, lambda_top,
                                 segments);

    if (!next_event || lambda_next <= lambda_floor) break;
    if (next_event->entering) {
      if (active.size() + 1 > support_cap) break;
      active.push_back(next_event->coord);
      signs.push_back(next_event->sign);
    } else {
      for (std::size_t k = 0; k < active.size(); ++k) {
        if (active[k] == next_event->coord) {
          active.erase(active.begin() + static_cast<long>(k));
          signs.erase(signs.begin() + static_cast<long>(k));
          break;
        }
      }
    }
    lambda_top = lambda_next;
  }
  return segments;
}

// gamma(lambda) = lambda / |a*lambda + b| from the containing segment.
inline double gamma_of_lambda(const std::vector<PathSegment>& segments,
                              double lambda) {
  for (const PathSegment& seg : segments) {
    if (lambda >= seg.lambda_lo && lambda < seg.lambda_hi) {
      const double med = std::abs(seg.a * lambda + seg.b);
      if (med <= 1e-14)
        throw ZeroMedian("gamma_of_lambda: median vanishes at this lambda");
      return lambda / med;
    }
  }
  throw OutOfRange("gamma_of_lambda: lambda outside the covered path range");
}

// All fixed-point candidates for a given gamma > 1: per-segment roots of
// lambda (1 - gamma sigma a) = gamma sigma b, reconstructed and classified
// at the given step size. Roots landing on a knot belong to the segment
// above it.
inline std::vector<FixedPointCandidate> candidates_for_gamma(
    const DenseMatrix& a, const Vec& y, const std::vector<PathSegment>& segments,
    double gamma, double mu) {
  if (!(gamma > 1.0))
    throw std::invalid_argument("candidates_for_gamma: gamma must exceed 1");
  std::vector<FixedPointCandidate> out;
  for (std::size_t id = 0; id < segments.size(); ++id) {
    const PathSegment& seg = segments[id];
    const bool unbounded = std::isinf(seg.lambda_hi);
    const double probe = unbounded ? seg.lambda_lo + 1.0
                                   : 0.5 * (seg.lambda_lo + seg.lambda_hi);
    const int sigma = sgn(seg.a * probe + seg.b);
    if (sigma == 0) continue;
    const double denom = 1.0 - gamma * sigma * seg.a;
    if (std::abs(denom) <= 1e-15) continue;
    const double lambda_star = gamma * sigma * seg.b / denom;
    if (!(lambda_star > 0.0) || !std::isfinite(lambda_star)) continue;
    const double tol = 1e-12 * (unbounded ? std::max(1.0, seg.lambda_lo)
                                          : seg.lambda_hi);
    if (lambda_star < seg.lambda_lo - tol) continue;
    if (!unbounded && lambda_star >= seg.lambda_hi - tol) continue;

    FixedPointCandidate cand;
    cand.lambda_star = lambda_star;
    cand.x_star = segment_solution(seg, lambda_star, a.cols());
    cand.gamma = gamma;
    cand.segment_id = static_cast<int>(id);
    cand.median_index = seg.median_index;
    cand.a = seg.a;
    cand.b = seg.b;

    const FixedPointReport fp = check_fixed_point(
        a, y, cand.x_star, gamma, 1e-8 * std::max(1.0, lambda_star));
    if (!fp.passes) continue;

    cand.report = classify(a, y, cand, mu);
    cand.gamma_slope_positive = cand.report.necessary_ok;
    cand.jacobian_radius = cand.report.jacobian_radius;
    cand.verdict = verdict_from(cand.report);
    out.push_back(std::move(cand));
  }
  return out;
}

}  // namespace madlasso
