#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "madlasso/linalg.hpp"
#include "madlasso/matrix.hpp"

namespace madlasso {

enum class Verdict { Stable, UnstableNecessaryFailed, UnstableSpectral };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Stable: return "stable";
    case Verdict::UnstableNecessaryFailed: return "unstable_necessary_failed";
    case Verdict::UnstableSpectral: return "unstable_spectral";
  }
  return "?";
}

struct StabilityReport {
  bool necessary_ok = false;      // b/(a*lambda* + b) > 0
  double necessary_value = 0.0;   // b/(a*lambda* + b)
  double rank1_value = 0.0;       // 1 + v^T C^{-1} u, the same quantity via Lemma-3 algebra
  double jacobian_radius = 0.0;
  double mu_used = 0.0;
  double mu_bound = 0.0;          // step-size bound 2*min(1, 1 + a*lambda/b)/||A_I||^2
  bool mu_bound_fallback = false; // bound fell back to 2/||A||^2
  Spectrum eigenvalues;           // spectrum of the Jacobian at the candidate
  std::vector<std::string> notes;
};

// A fixed-point candidate: a LASSO-path point whose gamma(lambda) value hits
// the requested gamma, with the segment algebra it came from and its
// stability classification.
struct FixedPointCandidate {
  double lambda_star = 0.0;
  Vec x_star;
  double gamma = 0.0;
  int segment_id = -1;
  bool gamma_slope_positive = false;
  double jacobian_radius = 0.0;
  Verdict verdict = Verdict::UnstableSpectral;
  // segment data the classification relies on
  std::size_t median_index = 0;
  double a = 0.0;
  double b = 0.0;
  StabilityReport report;
};

}  // namespace madlasso
