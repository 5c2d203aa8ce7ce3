#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "madlasso/linalg.hpp"
#include "madlasso/matrix.hpp"
#include "madlasso/solvers.hpp"
#include "madlasso/thresholding.hpp"

namespace madlasso {

// Flag matrix B^k = (I - mu A^T A)(D^2 - gamma sign(z_j) d e_j^T) built from
// the MAD-thresholding state at z^k. Columns outside support(T(z)) and the
// median index are zero.
inline DenseMatrix build_Bk(const DenseMatrix& a, double mu,
                            const ThresholdResult& thresh) {
  const std::size_t n = a.cols();
  // right factor: D^2 - gamma sign(z_j) d e_j^T
  DenseMatrix right(n, n, 0.0);
  for (std::size_t k = 0; k < thresh.support.size(); ++k)
    right(thresh.support[k], thresh.support[k]) = 1.0;
  if (thresh.median_sign != 0) {
    for (std::size_t k = 0; k < thresh.support.size(); ++k)
      right(thresh.support[k], thresh.median.index) -=
          thresh.gamma * thresh.median_sign * thresh.signs[k];
  }
  // left factor applied column-by-column; only the nonzero columns matter
  const DenseMatrix g = gram(a);
  DenseMatrix b(n, n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    bool nonzero = false;
    for (std::size_t i = 0; i < n; ++i)
      if (right(i, j) != 0.0) {
        nonzero = true;
        break;
      }
    if (!nonzero) continue;
    for (std::size_t i = 0; i < n; ++i) {
      double acc = right(i, j);
      double gi = 0.0;
      for (std::size_t k = 0; k < n; ++k) gi += g(i, k) * right(k, j);
      b(i, j) = acc - mu * gi;
    }
  }
  return b;
}

struct RecurrenceStep {
  std::size_t k = 0;
  std::vector<std::size_t> support;
  std::size_t median_index = 0;
  int median_sign = 0;
  double spectral_radius = 0.0;  // of B^k reduced to support ∪ {median index}
  int segment_id = 0;
  double z_residual = 0.0;       // replay error vs the direct iteration
  double step_residual = 0.0;    // ||x^{k+1} - x^k||_inf
};

struct RecurrenceLog {
  std::vector<RecurrenceStep> steps;
  Vec x_final;
  SolveStatus status = SolveStatus::MaxIter;
};

namespace detail {

inline double reduced_radius(const DenseMatrix& b,
                             const std::vector<std::size_t>& support,
                             std::size_t median_index) {
  std::vector<std::size_t> idx = support;
  if (std::find(idx.begin(), idx.end(), median_index) == idx.end())
    idx.push_back(median_index);
  if (idx.empty()) return 0.0;
  DenseMatrix sub(idx.size(), idx.size(), 0.0);
  for (std::size_t r = 0; r < idx.size(); ++r)
    for (std::size_t c = 0; c < idx.size(); ++c) sub(r, c) = b(idx[r], idx[c]);
  return eigenvalues_dense(sub).spectral_radius;
}

}  // namespace detail

// Run the MAD iteration for up to n_iter steps, replaying every update
// through the matrix recurrence z^{k+1} = B^k z^k + mu A^T y and logging the
// replay residual, the reduced spectral radius and the (support, median,
// sign) segment id. B^k is recomputed only when the segment changes.
inline RecurrenceLog run_recurrence(const DenseMatrix& a, const Vec& y,
                                    const SolverConfig& cfg, std::size_t n_iter,
                                    const Vec& x0 = {}) {
  if (cfg.rule.kind != ThresholdRule::Kind::Mad)
    throw std::invalid_argument("run_recurrence: MAD rule required");
  const double mu = resolve_mu(a, cfg);
  const Vec mu_aty = mu * a.tmul(y);

  RecurrenceLog log;
  Vec x = x0.empty() ? Vec(a.cols(), 0.0) : x0;
  if (x.size() != a.cols()) throw std::invalid_argument("run_recurrence: x0 size");

  auto z_of = [&](const Vec& xv) {
    const Vec g = a.tmul(y - a.mul(xv));
    Vec z(xv);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += mu * g[i];
    return z;
  };

  Vec z = z_of(x);
  int segment_id = 0;
  std::vector<std::size_t> prev_support;
  std::size_t prev_j = static_cast<std::size_t>(-1);
  int prev_sign = 2;
  DenseMatrix bk;
  double radius = 0.0;
  bool have_bk = false;

  for (std::size_t k = 0; k < n_iter; ++k) {
    const ThresholdResult t = mad_threshold(z, cfg.gamma);

    const bool segment_changed = !have_bk || t.support != prev_support ||
                                 t.median.index != prev_j ||
                                 t.median_sign != prev_sign;
    if (segment_changed) {
      if (have_bk) ++segment_id;
      bk = build_Bk(a, mu, t);
      radius = detail::reduced_radius(bk, t.support, t.median.index);
      prev_support = t.support;
      prev_j = t.median.index;
      prev_sign = t.median_sign;
      have_bk = true;
    }

    // direct update
    const Vec x_next = t.output;
    const Vec z_next = z_of(x_next);

    // replay through the recurrence
    Vec z_replay = bk.mul(z);
    for (std::size_t i = 0; i < z_replay.size(); ++i) z_replay[i] += mu_aty[i];

    RecurrenceStep step;
    step.k = k;
    step.support = t.support;
    step.median_index = t.median.index;
    step.median_sign = t.median_sign;
    step.spectral_radius = radius;
    step.segment_id = segment_id;
    step.z_residual =
        max_abs_diff(z_replay, z_next) / std::max(1.0, norm_inf(z_next));
    step.step_residual = max_abs_diff(x_next, x);
    log.steps.push_back(std::move(step));

    const double stepr = log.steps.back().step_residual;
    x = x_next;
    z = z_next;

    if (norm_inf(x) > cfg.divergence_bound) {
      log.status = SolveStatus::Diverged;
      break;
    }
    // tol == 0 disables early stopping so fixed-point runs stay observable
    if (cfg.tol > 0.0 && stepr <= cfg.tol * std::max(1.0, norm_inf(x))) {
      log.status = SolveStatus::Converged;
      break;
    }
  }
  log.x_final = x;
  return log;
}

struct SegmentRate {
  int segment_id = 0;
  std::size_t start_k = 0;
  std::size_t end_k = 0;
  double radius = 0.0;
  double fitted_rate = 0.0;
  bool at_fixed_point = false;
};

// Per-segment linear rate from the least-squares slope of log step-residuals.
// The first 3 iterations of a segment are transient and skipped; residuals at
// the floating-point floor flag the segment as already at the fixed point.
inline std::vector<SegmentRate> detect_piecewise(const RecurrenceLog& log) {
  std::vector<SegmentRate> out;
  if (log.steps.size() < 2) return out;
  const double floor = 1e-15 * std::max(1.0, norm_inf(log.x_final));

  std::size_t i = 0;
  while (i < log.steps.size()) {
    std::size_t jx = i;
    while (jx + 1 < log.steps.size() &&
           log.steps[jx + 1].segment_id == log.steps[i].segment_id)
      ++jx;
    const std::size_t len = jx - i + 1;
    if (len >= 10) {
      SegmentRate sr;
      sr.segment_id = log.steps[i].segment_id;
      sr.start_k = log.steps[i].k;
      sr.end_k = log.steps[jx].k;
      sr.radius = log.steps[i].spectral_radius;

      double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
      std::size_t count = 0;
      for (std::size_t t = i + 3; t <= jx; ++t) {
        const double r = log.steps[t].step_residual;
        if (r <= floor) continue;
        const double xk = static_cast<double>(log.steps[t].k);
        const double yk = std::log(r);
        sx += xk;
        sy += yk;
        sxx += xk * xk;
        sxy += xk * yk;
        ++count;
      }
      if (count >= 5) {
        const double n = static_cast<double>(count);
        const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        sr.fitted_rate = std::exp(slope);
      } else {
        sr.fitted_rate = 0.0;
        sr.at_fixed_point = true;
      }
      out.push_back(sr);
    }
    i = jx + 1;
  }
  return out;
}

}  // namespace madlasso
