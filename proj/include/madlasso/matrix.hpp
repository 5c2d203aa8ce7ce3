#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <vector>

namespace madlasso {

using Vec = std::vector<double>;

// Dense row-major matrix of doubles. Entries are validated finite on
// construction from data; element writes through operator() are unchecked.
class DenseMatrix {
 public:
  DenseMatrix() : rows_(0), cols_(0) {}

  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {
    if (rows == 0 || cols == 0)
      throw std::invalid_argument("DenseMatrix: dimensions must be positive");
    if (!std::isfinite(fill))
      throw std::invalid_argument("DenseMatrix: non-finite fill value");
  }

  DenseMatrix(std::size_t rows, std::size_t cols, Vec entries)
      : rows_(rows), cols_(cols), data_(std::move(entries)) {
    if (rows == 0 || cols == 0)
      throw std::invalid_argument("DenseMatrix: dimensions must be positive");
    if (data_.size() != rows * cols)
      throw std::invalid_argument("DenseMatrix: entry count does not match shape");
    for (double v : data_)
      if (!std::isfinite(v))
        throw std::invalid_argument("DenseMatrix: non-finite entry");
  }

  DenseMatrix(std::initializer_list<std::initializer_list<double>> rows)
      : rows_(rows.size()), cols_(rows.begin()->size()) {
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_)
        throw std::invalid_argument("DenseMatrix: ragged initializer");
      for (double v : r) {
        if (!std::isfinite(v))
          throw std::invalid_argument("DenseMatrix: non-finite entry");
        data_.push_back(v);
      }
    }
  }

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  const Vec& data() const { return data_; }
  Vec& data() { return data_; }

  // y = A x
  Vec mul(const Vec& x) const {
    if (x.size() != cols_) throw std::invalid_argument("mul: size mismatch");
    Vec y(rows_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
      const double* row = &data_[i * cols_];
      double acc = 0.0;
      for (std::size_t j = 0; j < cols_; ++j) acc += row[j] * x[j];
      y[i] = acc;
    }
    return y;
  }

  // y = A^T x
  Vec tmul(const Vec& x) const {
    if (x.size() != rows_) throw std::invalid_argument("tmul: size mismatch");
    Vec y(cols_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
      const double* row = &data_[i * cols_];
      const double xi = x[i];
      for (std::size_t j = 0; j < cols_; ++j) y[j] += row[j] * xi;
    }
    return y;
  }

  DenseMatrix transpose() const {
    DenseMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  // Columns selected by index, in the given order.
  DenseMatrix columns(const std::vector<std::size_t>& idx) const {
    if (idx.empty()) throw std::invalid_argument("columns: empty index set");
    DenseMatrix s(rows_, idx.size());
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t k = 0; k < idx.size(); ++k) s(i, k) = (*this)(i, idx[k]);
    return s;
  }

  Vec column(std::size_t j) const {
    Vec c(rows_);
    for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
    return c;
  }

 private:
  std::size_t rows_, cols_;
  Vec data_;
};

inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: size mismatch");
  DenseMatrix c(a.rows(), b.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

// G = A^T A
inline DenseMatrix gram(const DenseMatrix& a) {
  DenseMatrix g(a.cols(), a.cols(), 0.0);
  for (std::size_t k = 0; k < a.rows(); ++k)
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a(k, i);
      if (aki == 0.0) continue;
      for (std::size_t j = 0; j < a.cols(); ++j) g(i, j) += aki * a(k, j);
    }
  return g;
}

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

inline double norm_inf(const Vec& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

inline Vec operator+(Vec a, const Vec& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  return a;
}

inline Vec operator-(Vec a, const Vec& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] -= b[i];
  return a;
}

inline Vec operator*(double c, Vec a) {
  for (double& v : a) v *= c;
  return a;
}

inline double max_abs_diff(const Vec& a, const Vec& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline int sgn(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace madlasso
