#pragma once

#include <stdexcept>
#include <string>

namespace agit {

// Shape or axis mismatch; the message names the offending axis.
struct DimensionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Violated precondition (empty batch, parameter out of range, inconsistent flags).
struct ContractError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// File system or codec failure; the message carries the path.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
  IoError(const std::string& what, const std::string& path)
      : std::runtime_error(what + ": " + path), path_(path) {}

  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

// Non-finite value encountered; the message names the offending term.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace agit
