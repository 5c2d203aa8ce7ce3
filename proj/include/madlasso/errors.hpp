#pragma once

#include <stdexcept>
#include <string>

namespace madlasso {

// Iterative method failed to reach its tolerance within the iteration budget.
struct NonConvergence : std::runtime_error {
  explicit NonConvergence(const std::string& what) : std::runtime_error(what) {}
};

// Cholesky factorization hit a non-positive pivot.
struct NotPositiveDefinite : std::runtime_error {
  explicit NotPositiveDefinite(const std::string& what) : std::runtime_error(what) {}
};

// Gram matrix A_I^T A_I numerically singular (pivot below threshold).
struct SingularGram : std::runtime_error {
  explicit SingularGram(const std::string& what) : std::runtime_error(what) {}
};

// Two homotopy knot candidates coincide; the one-at-a-time assumption fails.
struct DegeneratePath : std::runtime_error {
  DegeneratePath(const std::string& what, double knot_lambda)
      : std::runtime_error(what), knot(knot_lambda) {}
  double knot;
};

// Query lambda outside the covered path range.
struct OutOfRange : std::out_of_range {
  explicit OutOfRange(const std::string& what) : std::out_of_range(what) {}
};

// |a*lambda + b| vanished where a positive median was required.
struct ZeroMedian : std::runtime_error {
  explicit ZeroMedian(const std::string& what) : std::runtime_error(what) {}
};

// Problem generator specification is inconsistent.
struct InvalidSpec : std::invalid_argument {
  explicit InvalidSpec(const std::string& what) : std::invalid_argument(what) {}
};

// Jacobian requested at a point with empty support.
struct EmptySupport : std::runtime_error {
  explicit EmptySupport(const std::string& what) : std::runtime_error(what) {}
};

// CSV / config input could not be parsed; carries file and row for diagnostics.
struct MalformedInput : std::runtime_error {
  MalformedInput(const std::string& file_, long row_, const std::string& what)
      : std::runtime_error(file_ + ":" + std::to_string(row_) + ": " + what),
        file(file_),
        row(row_) {}
  std::string file;
  long row;
};

}  // namespace madlasso
