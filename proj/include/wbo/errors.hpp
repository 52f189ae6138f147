#pragma once

#include <stdexcept>
#include <string>

namespace wbo {

/// Target lies outside the region where the requested quantity is defined:
/// energy per nat below the wideband minimum, a log-MGF argument outside the
/// moment generating function's domain, or an unattainable constraint.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed input: bad model parameters, non-PSD matrices, empty grids.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The operation exists but is not available for this model kind.
class Unsupported : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Descriptor parse failure; `what()` carries the offending field path.
class ParseError : public InvalidArgument {
 public:
  ParseError(const std::string& path, const std::string& message)
      : InvalidArgument(path + ": " + message), path_(path) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

inline constexpr const char* kBelowMinimumEnergy =
    "below minimum energy per nat: exponent undefined (outage probability -> 1)";

}  // namespace wbo
