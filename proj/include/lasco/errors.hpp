#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace lasco {

/// Surface syntax error in predicate or policy text. Line and column are 1-based.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& what)
      : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// Type error raised while folding a predicate (e.g. `<` over strings,
/// division by zero). Carries the printed offending subexpression.
class FoldError : public std::runtime_error {
 public:
  FoldError(const std::string& what, std::string subexpr)
      : std::runtime_error(what + " in `" + subexpr + "`"), subexpr_(std::move(subexpr)) {}

  const std::string& subexpr() const { return subexpr_; }

 private:
  std::string subexpr_;
};

/// Malformed trace record or a record that breaks the system-graph invariants.
class IngestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Policy set definition problems outside the grammar (duplicate ids, bad endpoints).
class PolicyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// More matches than the configured cap for a single policy.
class MatchCapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bounded universe larger than its enumeration ceiling.
class CeilingExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lasco
