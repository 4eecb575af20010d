#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "idivnmf/core.hpp"
#include "idivnmf/solver.hpp"

namespace idivnmf::cli {

/// Malformed CSV text; line is 1-based.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Negative, NaN or infinite entry; row/col are 1-based.
class ValidationError : public Error {
 public:
  ValidationError(std::size_t row, std::size_t col, const std::string& what);
  std::size_t row() const { return row_; }
  std::size_t col() const { return col_; }

 private:
  std::size_t row_;
  std::size_t col_;
};

enum ExitCode : int {
  kConverged = 0,
  kMaxIters = 2,
  kUnderflow = 3,
  kInputError = 4,
  kIdentityViolation = 5,
};

/// One matrix row per line, comma-separated decimals, no header, blank lines
/// ignored.
NonnegMatrix parse_matrix(std::string_view text);
NonnegMatrix ingest_matrix(const std::filesystem::path& path);

/// Shortest decimal form that reads back to the same double (at most 17
/// significant digits), in the dialect parse_matrix accepts.
std::string format_matrix(const NonnegMatrix& m);
std::string format_double(double x);

/// Writes to a sibling temporary and renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// One JSON object per trace record, newline-terminated.
std::string trace_line(const IterationRecord& rec);

/// Entry point of the command-line tool. Output streams are injectable for tests.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace idivnmf::cli
