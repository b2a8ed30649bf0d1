/*
 * Copyright 2026 The odsel Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

// Plain CSV matrices: '.' decimals, one row per line, optional header row.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <Eigen/Dense>

#include "odsel/errors.hpp"

namespace odsel {

struct CsvMatrix {
  std::optional<std::vector<std::string>> header;
  Eigen::MatrixXd values;
};

/// Shortest-safe text for a double: 17 significant digits.
inline std::string format_double(double x) {
  char buf[32];
  const int len = std::snprintf(buf, sizeof buf, "%.17g", x);
  return std::string(buf, static_cast<std::size_t>(len));
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::optional<double> parse_double(std::string_view tok) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size() || tok.empty()) return std::nullopt;
  return v;
}

}  // namespace detail

/// Parses a rectangular CSV. The first line is a header if its first token is
/// not numeric. Blank lines and lines starting with '#' are skipped.
inline CsvMatrix read_csv(std::istream& in, const std::string& source = "<stream>") {
  CsvMatrix out;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view body = detail::trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto toks = detail::split_commas(body);
    if (first) {
      first = false;
      if (!detail::parse_double(toks.front())) {
        out.header.emplace(toks.begin(), toks.end());
        continue;
      }
    }
    std::vector<double> row;
    row.reserve(toks.size());
    for (const auto tok : toks) {
      const auto v = detail::parse_double(tok);
      if (!v || !std::isfinite(*v)) {
        throw InvalidArgument(source + ":" + std::to_string(lineno) + ": not a finite number: '" +
                              std::string(tok) + "'");
      }
      row.push_back(*v);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw InvalidArgument(source + ":" + std::to_string(lineno) + ": expected " +
                            std::to_string(rows.front().size()) + " columns, got " +
                            std::to_string(row.size()));
    }
    if (out.header && out.header->size() != row.size()) {
      throw InvalidArgument(source + ":" + std::to_string(lineno) + ": row width differs from header");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InvalidArgument(source + ": no data rows");
  const auto r = static_cast<Eigen::Index>(rows.size());
  const auto c = static_cast<Eigen::Index>(rows.front().size());
  out.values.resize(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) out.values(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return out;
}

inline CsvMatrix read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open '" + path + "'");
  return read_csv(in, path);
}

/// Reads a vector stored either as one column or as one row.
inline Eigen::VectorXd read_vector_file(const std::string& path) {
  const CsvMatrix m = read_csv_file(path);
  if (m.values.cols() == 1) return m.values.col(0);
  if (m.values.rows() == 1) return m.values.row(0).transpose();
  throw InvalidArgument(path + ": expected a single row or column");
}

inline void write_csv(std::ostream& out, const Eigen::MatrixXd& m,
                      const std::vector<std::string>& header = {}) {
  for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
  if (!header.empty()) out << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_double(m(i, j));
    out << '\n';
  }
}

inline void write_csv_file(const std::string& path, const Eigen::MatrixXd& m,
                           const std::vector<std::string>& header = {}) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write '" + path + "'");
  write_csv(out, m, header);
  if (!out) throw InvalidArgument("write failed for '" + path + "'");
}

}  // namespace odsel
