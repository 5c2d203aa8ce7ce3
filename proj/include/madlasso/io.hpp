#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "madlasso/errors.hpp"
#include "madlasso/matrix.hpp"

namespace madlasso {

// Doubles are written with 17 significant digits so write-then-read is exact.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace detail {

inline std::vector<Vec> read_csv_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MalformedInput(path, 0, "cannot open file");
  std::vector<Vec> rows;
  std::string line;
  long row_no = 0;
  while (std::getline(in, line)) {
    ++row_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    Vec row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      std::size_t pos = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &pos);
      } catch (const std::exception&) {
        throw MalformedInput(path, row_no, "not a number: '" + cell + "'");
      }
      while (pos < cell.size() && std::isspace(static_cast<unsigned char>(cell[pos])))
        ++pos;
      if (pos != cell.size())
        throw MalformedInput(path, row_no, "trailing garbage: '" + cell + "'");
      row.push_back(v);
    }
    if (row.empty()) throw MalformedInput(path, row_no, "empty row");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw MalformedInput(path, 0, "no data rows");
  return rows;
}

}  // namespace detail

// Matrix CSV: one row per matrix row, comma-separated, no header.
inline DenseMatrix read_matrix_csv(const std::string& path) {
  const std::vector<Vec> rows = detail::read_csv_rows(path);
  const std::size_t cols = rows.front().size();
  Vec entries;
  entries.reserve(rows.size() * cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols)
      throw MalformedInput(path, static_cast<long>(i + 1), "ragged row");
    entries.insert(entries.end(), rows[i].begin(), rows[i].end());
  }
  try {
    return DenseMatrix(rows.size(), cols, std::move(entries));
  } catch (const std::invalid_argument& e) {
    throw MalformedInput(path, 0, e.what());
  }
}

// Vector CSV: either a single column or a single row.
inline Vec read_vector_csv(const std::string& path) {
  const std::vector<Vec> rows = detail::read_csv_rows(path);
  if (rows.size() == 1) return rows.front();
  Vec v;
  v.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != 1)
      throw MalformedInput(path, static_cast<long>(i + 1),
                           "expected one value per row in a vector file");
    v.push_back(rows[i][0]);
  }
  return v;
}

inline void write_matrix_csv(const std::string& path, const DenseMatrix& m) {
  std::ofstream out(path);
  if (!out) throw MalformedInput(path, 0, "cannot open file for writing");
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

inline void write_vector_csv(const std::string& path, const Vec& v) {
  std::ofstream out(path);
  if (!out) throw MalformedInput(path, 0, "cannot open file for writing");
  for (double x : v) out << format_double(x) << '\n';
}

// FNV-1a content hash used in run manifests.
inline std::string fnv1a_file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MalformedInput(path, 0, "cannot open file for hashing");
  std::uint64_t h = 1469598103934665603ULL;
  char c;
  while (in.get(c)) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace madlasso
