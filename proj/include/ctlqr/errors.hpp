#pragma once

#include <stdexcept>
#include <string>

namespace ctlqr {

/// Least-squares input cannot identify the requested parameters
/// (too few transitions, or a Gram matrix with no usable directions).
class DegenerateDataError : public std::runtime_error {
 public:
  explicit DegenerateDataError(const std::string& what) : std::runtime_error(what) {}
};

/// The discrete estimate lies outside the ball where the matrix-log
/// series inverts the exponential map.
class RecoveryDomainError : public std::domain_error {
 public:
  explicit RecoveryDomainError(const std::string& what) : std::domain_error(what) {}
};

/// A stability precondition (negative spectral abscissa) does not hold.
class StabilityError : public std::runtime_error {
 public:
  explicit StabilityError(const std::string& what) : std::runtime_error(what) {}
};

/// An iterative numeric routine failed to reach its tolerance.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// Configuration file rejected; `path` points at the offending field.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& path, const std::string& what)
      : std::runtime_error(path + ": " + what), field_path_(path) {}
  const std::string& field_path() const { return field_path_; }

 private:
  std::string field_path_;
};

}  // namespace ctlqr
