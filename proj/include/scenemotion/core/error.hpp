#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace scenemotion {

/// Broad failure class. The CLI maps each kind onto a process exit code.
enum class ErrorKind {
  kInvalidArgument,
  kDimension,
  kConfig,
  kScene,
  kPlanning,
  kTraining,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Malformed scene file. `line()` is 1-based; 0 when not tied to a line.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(ErrorKind::kScene, "line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Goal not reachable from start on the walkable map.
class NoPathError : public Error {
 public:
  explicit NoPathError(const std::string& what) : Error(ErrorKind::kPlanning, "no path: " + what) {}
};

inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
    case ErrorKind::kInvalidArgument:
    case ErrorKind::kDimension:
      return 2;
    case ErrorKind::kScene:
      return 3;
    case ErrorKind::kPlanning:
      return 4;
    case ErrorKind::kTraining:
      return 5;
  }
  return 1;
}

}  // namespace scenemotion
