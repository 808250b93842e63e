#pragma once

#include <stdexcept>
#include <string>

namespace overlap_lab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two eigenvalues (diagonal entries of T) closer than the division guard.
class DegenerateEigenvalueError : public Error {
 public:
  using Error::Error;
};

/// Two candidates equidistant from a probe within the tie tolerance.
class TieError : public Error {
 public:
  using Error::Error;
};

/// MALA acceptance collapsed during burn-in.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration; `field()` is the dotted path of the offending field.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace overlap_lab
