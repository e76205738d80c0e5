// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace mrs {

/// Malformed argument to a kernel (non-finite entries, wrong shape, ...).
class input_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Inconsistent or infeasible SystemConfig / Scenario.
class config_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Requested dimensions exceed what the library is willing to allocate.
class size_error : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// A numerical routine failed to reach its tolerance. Carries the best
/// estimate and its error bound so callers can decide what to do.
class accuracy_error : public std::runtime_error {
 public:
  accuracy_error(const std::string& what, double estimate, double error_bound)
      : std::runtime_error(what), estimate_(estimate), error_bound_(error_bound) {}

  double estimate() const noexcept { return estimate_; }
  double error_bound() const noexcept { return error_bound_; }

 private:
  double estimate_;
  double error_bound_;
};

}  // namespace mrs
