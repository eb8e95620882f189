#pragma once

#include <stdexcept>
#include <string>

namespace dkf {

/// Failure category; doubles as the CLI exit status.
enum class ErrorCategory : int {
  kUsage = 2,
  kValidation = 3,
  kNumerical = 4,
  kIo = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

/// Operand shapes disagree.
class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what)
      : Error(ErrorCategory::kValidation, what) {}
};

/// Input violates a documented precondition (domain, graph assumptions).
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what)
      : Error(ErrorCategory::kValidation, what) {}
};

/// Configuration file could not be parsed or is inconsistent.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& field, int line, const std::string& what)
      : Error(ErrorCategory::kValidation, format(field, line, what)),
        field_(field),
        line_(line) {}

  const std::string& field() const noexcept { return field_; }
  int line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& field, int line,
                            const std::string& what) {
    std::string out = "config";
    if (line > 0) out += ":" + std::to_string(line);
    if (!field.empty()) out += " [" + field + "]";
    return out + ": " + what;
  }

  std::string field_;
  int line_;
};

/// A covariance lost positive definiteness or a factorization failed.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what)
      : Error(ErrorCategory::kNumerical, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCategory::kIo, what) {}
};

}  // namespace dkf
