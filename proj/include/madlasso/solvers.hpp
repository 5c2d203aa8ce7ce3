#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "madlasso/linalg.hpp"
#include "madlasso/matrix.hpp"
#include "madlasso/thresholding.hpp"

namespace madlasso {

struct ThresholdRule {
  enum class Kind { Mad, KSparse, Fixed };
  Kind kind = Kind::Mad;
  std::size_t k = 0;      // K-sparse level
  double lambda = 0.0;    // fixed regularization parameter

  static ThresholdRule mad() { return {Kind::Mad, 0, 0.0}; }
  static ThresholdRule ksparse(std::size_t k) { return {Kind::KSparse, k, 0.0}; }
  static ThresholdRule fixed(double lambda) { return {Kind::Fixed, 0, lambda}; }
};

struct SolverConfig {
  double gamma = 1.2 * 1.4826;     // MAD multiplier, must exceed 1 for the MAD rule
  double mu = 0.0;                 // step size; 0 resolves to 1/||A||_2^2
  std::size_t max_iter = 100000;
  double tol = 1e-10;              // step-residual stopping tolerance
  double divergence_bound = 1e12;  // iterate sup-norm bound declaring divergence
  ThresholdRule rule = ThresholdRule::mad();
  bool trace = false;
};

enum class SolveStatus { Converged, MaxIter, Diverged };

struct TraceRecord {
  std::size_t k = 0;
  Vec x;                      // iterate x^k
  double threshold = 0.0;     // threshold applied when producing x^{k+1}
  std::vector<std::size_t> support;  // support of x^{k+1}
  std::size_t median_index = 0;
  double step_residual = 0.0;
  double fixed_point_residual = 0.0;  // violation of the fixed-point condition at x^k
};

struct IterateTrace {
  std::vector<TraceRecord> records;
};

struct SolveOutcome {
  Vec x_star;
  SolveStatus status = SolveStatus::MaxIter;
  std::size_t iterations = 0;
  double lambda_star = 0.0;  // final effective threshold (gamma * median(|g|))
  double mu_used = 0.0;
  std::optional<IterateTrace> trace;
};

// Resolve the step size against A: default 1/||A||^2, hard cap 1.99/||A||^2.
inline double resolve_mu(const DenseMatrix& a, const SolverConfig& cfg) {
  const double nrm = operator_norm(a);
  if (nrm == 0.0) throw std::invalid_argument("resolve_mu: zero matrix");
  const double nsq = nrm * nrm;
  if (cfg.mu == 0.0) return 1.0 / nsq;
  if (!(cfg.mu > 0.0)) throw std::invalid_argument("resolve_mu: mu must be positive");
  return std::min(cfg.mu, 1.99 / nsq);
}

namespace detail {

// Shared proximal-gradient loop. The threshold at each step comes from the
// configured rule applied to z = x - mu A^T(Ax - y). The step-residual stop
// is re-validated against the relevant optimality condition before a
// Converged status is returned; if validation fails the loop tightens the
// step tolerance and keeps going.
inline SolveOutcome iterate(const DenseMatrix& a, const Vec& y,
                            const SolverConfig& cfg, const Vec& x0) {
  if (y.size() != a.rows()) throw std::invalid_argument("solver: y size mismatch");
  if (x0.size() != a.cols()) throw std::invalid_argument("solver: x0 size mismatch");
  if (cfg.rule.kind == ThresholdRule::Kind::Mad && !(cfg.gamma > 1.0))
    throw std::invalid_argument("solver: MAD rule requires gamma > 1");

  const double mu = resolve_mu(a, cfg);
  const bool adaptive = cfg.rule.kind != ThresholdRule::Kind::Fixed;

  SolveOutcome out;
  out.mu_used = mu;
  if (cfg.trace) out.trace.emplace();

  Vec x = x0;
  double eff_tol = cfg.tol;
  const double check_tol = 10.0 * cfg.tol;

  auto kkt_violation = [&](const Vec& g, const Vec& xv, double lambda) {
    double on = 0.0, off = 0.0;
    for (std::size_t i = 0; i < xv.size(); ++i) {
      if (xv[i] != 0.0)
        on = std::max(on, std::abs(g[i] - lambda * sgn(xv[i])));
      else
        off = std::max(off, std::abs(g[i]) - lambda);
    }
    return std::max(on, std::max(off, 0.0));
  };

  for (std::size_t k = 0; k < cfg.max_iter; ++k) {
    const Vec g = a.tmul(y - a.mul(x));  // -A^T(Ax - y)
    Vec z(x);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += mu * g[i];

    double threshold = 0.0;
    std::size_t median_index = 0;
    Vec x_next;
    switch (cfg.rule.kind) {
      case ThresholdRule::Kind::Mad: {
        ThresholdResult t = mad_threshold(z, cfg.gamma);
        threshold = t.threshold;
        median_index = t.median.index;
        x_next = std::move(t.output);
        break;
      }
      case ThresholdRule::Kind::KSparse: {
        ThresholdResult t = ksparse_threshold(z, cfg.rule.k);
        threshold = t.threshold;
        median_index = t.median.index;
        x_next = std::move(t.output);
        break;
      }
      case ThresholdRule::Kind::Fixed:
        threshold = mu * cfg.rule.lambda;
        x_next = soft(z, threshold);
        break;
    }

    double step = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
      step = std::max(step, std::abs(x_next[i] - x[i]));

    if (out.trace) {
      TraceRecord rec;
      rec.k = k;
      rec.x = x;
      rec.threshold = threshold;
      for (std::size_t i = 0; i < x_next.size(); ++i)
        if (x_next[i] != 0.0) rec.support.push_back(i);
      rec.median_index = median_index;
      rec.step_residual = step;
      const double lam_here = cfg.rule.kind == ThresholdRule::Kind::Fixed
                                  ? cfg.rule.lambda
                                  : cfg.gamma * median_abs(g).value;
      rec.fixed_point_residual = kkt_violation(g, x, lam_here);
      out.trace->records.push_back(std::move(rec));
    }

    out.iterations = k + 1;
    x = std::move(x_next);

    if (adaptive && norm_inf(x) > cfg.divergence_bound) {
      out.status = SolveStatus::Diverged;
      break;
    }

    if (step <= eff_tol * std::max(1.0, norm_inf(x))) {
      const Vec gn = a.tmul(y - a.mul(x));
      double lambda_final = 0.0;
      double violation = 0.0;
      switch (cfg.rule.kind) {
        case ThresholdRule::Kind::Fixed:
          lambda_final = cfg.rule.lambda;
          violation = kkt_violation(gn, x, lambda_final);
          break;
        case ThresholdRule::Kind::Mad:
          lambda_final = cfg.gamma * median_abs(gn).value;
          violation = kkt_violation(gn, x, lambda_final);
          break;
        case ThresholdRule::Kind::KSparse:
          lambda_final = mu > 0.0 ? threshold / mu : threshold;
          violation = 0.0;  // no subgradient certificate for the K-sparse rule
          break;
      }
      if (violation <= check_tol) {
        out.status = SolveStatus::Converged;
        out.x_star = x;
        out.lambda_star = lambda_final;
        return out;
      }
      eff_tol = std::max(eff_tol / 10.0, 1e-16);
    }
  }

  out.x_star = x;
  if (out.status != SolveStatus::Diverged) out.status = SolveStatus::MaxIter;
  const Vec gn = a.tmul(y - a.mul(x));
  switch (cfg.rule.kind) {
    case ThresholdRule::Kind::Fixed:
      out.lambda_star = cfg.rule.lambda;
      break;
    case ThresholdRule::Kind::Mad:
      out.lambda_star = cfg.gamma * median_abs(gn).value;
      break;
    case ThresholdRule::Kind::KSparse: {
      Vec z(x);
      for (std::size_t i = 0; i < z.size(); ++i) z[i] += mu * gn[i];
      out.lambda_star = ksparse_threshold(z, cfg.rule.k).threshold / mu;
      break;
    }
  }
  return out;
}

}  // namespace detail

// Classical ISTA at a fixed regularization parameter lambda.
inline SolveOutcome ista_fixed(const DenseMatrix& a, const Vec& y, double lambda,
                               SolverConfig cfg = {}) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("ista_fixed: lambda must be >= 0");
  cfg.rule = ThresholdRule::fixed(lambda);
  return detail::iterate(a, y, cfg, Vec(a.cols(), 0.0));
}

// Adaptive ISTA with the configured thresholding rule (MAD or K-sparse),
// started from zero.
inline SolveOutcome adaptive_ista(const DenseMatrix& a, const Vec& y,
                                  const SolverConfig& cfg = {}) {
  if (cfg.rule.kind == ThresholdRule::Kind::Fixed)
    throw std::invalid_argument("adaptive_ista: use ista_fixed for the fixed rule");
  return detail::iterate(a, y, cfg, Vec(a.cols(), 0.0));
}

// Adaptive ISTA from a caller-supplied initial iterate.
inline SolveOutcome warm_start(const DenseMatrix& a, const Vec& y,
                               const SolverConfig& cfg, const Vec& x0) {
  if (cfg.rule.kind == ThresholdRule::Kind::Fixed)
    throw std::invalid_argument("warm_start: use ista_fixed for the fixed rule");
  return detail::iterate(a, y, cfg, x0);
}

}  // namespace madlasso
