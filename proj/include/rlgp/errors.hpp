#pragma once

#include <stdexcept>
#include <string>

namespace rlgp {

// Malformed tabular input; carries a 1-based row and column when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string message, long row = -1, long column = -1)
      : std::runtime_error(locate(message, row, column)),
        row_(row),
        column_(column) {}

  long row() const { return row_; }
  long column() const { return column_; }

 private:
  static std::string locate(const std::string& message, long row, long column) {
    std::string out = message;
    if (row >= 0) out += " (row " + std::to_string(row);
    if (row >= 0 && column >= 0) out += ", column " + std::to_string(column);
    if (row >= 0) out += ")";
    return out;
  }

  long row_;
  long column_;
};

// Linear-algebra failure (factorization breakdown, non-SPD covariance, ...).
class NumericalError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace rlgp
