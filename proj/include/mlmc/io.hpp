#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace mlmc {

// Shortest decimal spelling that round-trips the double exactly.
inline std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0.0 ? "inf" : "-inf";
  char buffer[40];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

// CSV cell for a statistic that may be a divergence marker: non-finite
// values print as the literal "DIV".
inline std::string csv_statistic(double value) {
  return std::isfinite(value) ? format_double(value) : std::string("DIV");
}

// JSON value for a possibly non-finite double (JSON has no inf/nan; encode
// them as strings so reports stay machine-readable).
inline nlohmann::ordered_json json_double(double value) {
  if (std::isfinite(value)) return value;
  return format_double(value);
}

// Write text with LF line endings regardless of platform.
inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("failed writing: " + path);
}

// Minimal CSV assembly: header plus rows of preformatted cells.
inline std::string csv_document(const std::vector<std::string>& header,
                                const std::vector<std::vector<std::string>>& rows) {
  std::string text;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i > 0) text += ',';
    text += header[i];
  }
  text += '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i > 0) text += ',';
      text += row[i];
    }
    text += '\n';
  }
  return text;
}

// Split one CSV line on commas (no quoting needed for our numeric tables).
inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  for (const char c : line) {
    if (c == ',') {
      cells.push_back(cell);
      cell.clear();
    } else {
      cell += c;
    }
  }
  cells.push_back(cell);
  return cells;
}

}  // namespace mlmc
