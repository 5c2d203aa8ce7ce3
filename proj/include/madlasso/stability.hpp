#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "madlasso/candidate.hpp"
#include "madlasso/errors.hpp"
#include "madlasso/linalg.hpp"
#include "madlasso/matrix.hpp"

namespace madlasso {

// Jacobian of the on-support update map at a fixed point:
//   J = I - mu A_I^T A_I + gamma mu sign(-A_j^T(Ax* - y)) s (A_j^T A_I),
// with s = sign(x*_I) and j the median index. The support, median index and
// signs are held fixed, matching the local analysis regime.
inline DenseMatrix jacobian_at(const DenseMatrix& a, const Vec& y, const Vec& x_star,
                               double gamma, double mu, std::size_t j) {
  std::vector<std::size_t> support;
  for (std::size_t i = 0; i < x_star.size(); ++i)
    if (x_star[i] != 0.0) support.push_back(i);
  if (support.empty()) throw EmptySupport("jacobian_at: fixed point has empty support");

  const DenseMatrix a_i = a.columns(support);
  const DenseMatrix g = gram(a_i);
  detail::cholesky<SingularGram>(g, 1e-12, "jacobian_at");  // full-column-rank check

  const Vec residual_dir = a.column(j);
  const Vec r = y - a.mul(x_star);
  const double cj = dot(residual_dir, r);  // -A_j^T(Ax* - y)
  const int sigma = sgn(cj);

  const std::size_t m = support.size();
  DenseMatrix jac(m, m, 0.0);
  Vec aj_ai(m);  // row A_j^T A_I
  for (std::size_t c = 0; c < m; ++c) aj_ai[c] = dot(residual_dir, a_i.column(c));
  for (std::size_t rI = 0; rI < m; ++rI) {
    const int s_r = sgn(x_star[support[rI]]);
    for (std::size_t c = 0; c < m; ++c) {
      double v = (rI == c ? 1.0 : 0.0) - mu * g(rI, c);
      v += gamma * mu * sigma * s_r * aj_ai[c];
      jac(rI, c) = v;
    }
  }
  return jac;
}

struct MuBound {
  double value = 0.0;
  bool used_fallback = false;
};

// Step-size bound 2 min(1, 1 + a lambda/b) / ||A_I||^2; falls back to
// 2/||A||^2 when b ~ 0 or the expression is non-positive.
inline MuBound mu_bound(const FixedPointCandidate& cand, const DenseMatrix& a) {
  MuBound out;
  std::vector<std::size_t> support;
  for (std::size_t i = 0; i < cand.x_star.size(); ++i)
    if (cand.x_star[i] != 0.0) support.push_back(i);
  if (support.empty()) throw EmptySupport("mu_bound: empty support");
  const double norm_ai = operator_norm(a.columns(support));

  const double scale = std::abs(cand.a * cand.lambda_star) + std::abs(cand.b);
  if (std::abs(cand.b) <= 1e-14 * std::max(1.0, scale)) {
    out.value = 2.0 / (operator_norm(a) * operator_norm(a));
    out.used_fallback = true;
    return out;
  }
  const double expr = std::min(1.0, 1.0 + cand.a * cand.lambda_star / cand.b);
  if (!(expr > 0.0)) {
    out.value = 2.0 / (operator_norm(a) * operator_norm(a));
    out.used_fallback = true;
    return out;
  }
  out.value = 2.0 * expr / (norm_ai * norm_ai);
  return out;
}

// Classify a candidate fixed point at step size mu: the paper's necessary
// condition from the segment algebra, the rank-1 determinant formulation of
// the same quantity, and the authoritative spectral verdict.
inline StabilityReport classify(const DenseMatrix& a, const Vec& y,
                                const FixedPointCandidate& cand, double mu) {
  StabilityReport rep;
  rep.mu_used = mu;

  const double denom = cand.a * cand.lambda_star + cand.b;
  rep.necessary_value = cand.b / denom;
  rep.necessary_ok = rep.necessary_value > 0.0;

  std::vector<std::size_t> support;
  std::vector<int> s;
  for (std::size_t i = 0; i < cand.x_star.size(); ++i) {
    if (cand.x_star[i] != 0.0) {
      support.push_back(i);
      s.push_back(sgn(cand.x_star[i]));
    }
  }
  if (support.empty()) {
    // the zero fixed point: one update re-thresholds any small perturbation
    // back to zero, so the local map is identically zero
    rep.jacobian_radius = 0.0;
    rep.rank1_value = rep.necessary_value;
    const double nrm = operator_norm(a);
    rep.mu_bound = 2.0 / (nrm * nrm);
    rep.mu_bound_fallback = true;
    rep.notes.push_back("empty_support");
    return rep;
  }

  const DenseMatrix a_i = a.columns(support);
  const DenseMatrix g = gram(a_i);
  const Vec aj = a.column(cand.median_index);
  const Vec r = y - a.mul(cand.x_star);
  const int sigma = sgn(dot(aj, r));

  // Lemma-3 route: C = A_I^T A_I, u = -gamma sigma s, v = A_I^T A_j
  Vec u(support.size()), v(support.size());
  for (std::size_t c = 0; c < support.size(); ++c) {
    u[c] = -cand.gamma * sigma * s[c];
    v[c] = dot(aj, a_i.column(c));
  }
  rep.rank1_value = rank1_pd_necessary(g, u, v);
  if ((rep.rank1_value > 1e-12 && rep.necessary_value < -1e-12) ||
      (rep.rank1_value < -1e-12 && rep.necessary_value > 1e-12))
    rep.notes.push_back("necessary_condition_formulations_disagree");

  const DenseMatrix jac = jacobian_at(a, y, cand.x_star, cand.gamma, mu,
                                      cand.median_index);
  rep.eigenvalues = eigenvalues_dense(jac);
  rep.jacobian_radius = rep.eigenvalues.spectral_radius;

  if (std::abs(rep.jacobian_radius - 1.0) <= 1e-9)
    rep.notes.push_back("marginal_spectral_radius");
  if (!rep.necessary_ok && rep.jacobian_radius < 1.0 - 1e-9)
    rep.notes.push_back("necessary_failed_but_radius_below_one");

  if (rep.necessary_ok && rep.jacobian_radius >= 1.0 - 1e-9) {
    // Fig.-5-style diagnostics: eigenvalues of the mu-free matrix
    // A_I^T A_I - gamma sigma s A_j^T A_I.
    DenseMatrix m(support.size(), support.size(), 0.0);
    for (std::size_t rI = 0; rI < support.size(); ++rI)
      for (std::size_t c = 0; c < support.size(); ++c)
        m(rI, c) = g(rI, c) - cand.gamma * sigma * s[rI] * v[c];
    const Spectrum sm = eigenvalues_dense(m);
    for (const auto& ev : sm.eigenvalues) {
      if (ev.imag() != 0.0 && ev.real() < 0.0) {
        rep.notes.push_back("complex_pair_negative_real_part");
        break;
      }
    }
  }

  const MuBound mb = mu_bound(cand, a);
  rep.mu_bound = mb.value;
  rep.mu_bound_fallback = mb.used_fallback;
  return rep;
}

// Verdict from a report: the spectral test is authoritative; the necessary
// condition labels the failure mode.
inline Verdict verdict_from(const StabilityReport& rep) {
  if (!rep.necessary_ok) return Verdict::UnstableNecessaryFailed;
  if (rep.jacobian_radius < 1.0 - 1e-9) return Verdict::Stable;
  return Verdict::UnstableSpectral;
}

}  // namespace madlasso
