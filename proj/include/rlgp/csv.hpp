// Minimal CSV handling: header + numeric body, locale-independent in both
// directions. Writers go through a temp file and a rename so a crashed run
// never leaves a partially written output visible.

#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "rlgp/errors.hpp"

namespace rlgp::csv {

inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string::size_type start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Strict finite-double parse; rejects NaN/inf spellings and trailing garbage.
inline double parse_double(std::string_view field, long row, long column) {
  const std::string_view s = trim(field);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ParseError("cell is not a number: '" + std::string(s) + "'", row, column);
  if (!std::isfinite(value))
    throw ParseError("cell is not finite: '" + std::string(s) + "'", row, column);
  return value;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

// Reads a whole CSV stream. Every body row must have exactly as many cells
// as the header. Row numbers in errors are 1-based over the body.
inline Table read_table(std::istream& in) {
  Table table;
  std::string line;
  if (!std::getline(in, line)) throw ParseError("missing header row");
  for (auto& field : split_line(line)) table.header.emplace_back(trim(field));
  long row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto fields = split_line(line);
    if (fields.size() != table.header.size())
      throw ParseError("expected " + std::to_string(table.header.size()) + " cells, found " +
                           std::to_string(fields.size()),
                       row);
    std::vector<double> values;
    values.reserve(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c)
      values.push_back(parse_double(fields[c], row, static_cast<long>(c) + 1));
    table.rows.push_back(std::move(values));
  }
  return table;
}

// 17 significant digits, shortest-spelling general format: lossless
// round-trips, independent of the global locale.
inline std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value,
                                       std::chars_format::general, 17);
  (void)ec;
  return std::string(buf, ptr);
}

// Writes content to path atomically (temp file in the same directory, then
// rename). Throws std::runtime_error on I/O failure.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  const fs::path tmp = dir / (path.filename().string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw std::runtime_error("rename failed for " + path.string() + ": " + ec.message());
  }
}

}  // namespace rlgp::csv
