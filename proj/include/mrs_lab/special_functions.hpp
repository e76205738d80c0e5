// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <numbers>

#include "mrs_lab/errors.hpp"

namespace mrs {

namespace detail {

// Below this argument the ascending series is summed directly; above it the
// Hankel asymptotic series is used. At x = 25 the smallest asymptotic term is
// ~e^(-2x) ~ 2e-22 relative, and the ascending series still fits in a double.
inline constexpr double kBesselSeriesLimit = 25.0;

// sum_{k>=1} (x^2/4)^k / (k!)^2, i.e. I0(x) - 1.
inline double i0_series_tail(double x) {
  const double t = 0.25 * x * x;
  double term = 1.0, sum = 0.0;
  for (int k = 1; k < 500; ++k) {
    term *= t / (double(k) * double(k));
    sum += term;
    if (term <= 1e-17 * sum) break;
  }
  return sum;
}

// sqrt(2 pi x) e^-x I0(x) ~ sum_k ((2k-1)!!)^2 / (k! (8x)^k).
inline double i0_asymptotic_sum(double x) {
  double term = 1.0, sum = 1.0;
  for (int k = 1; k < 200; ++k) {
    const double next = term * (2.0 * k - 1.0) * (2.0 * k - 1.0) / (8.0 * k * x);
    if (next >= term) break;
    term = next;
    sum += term;
    if (term <= 1e-17 * sum) break;
  }
  return sum;
}

inline void check_bessel_arg(double x) {
  if (!(x >= 0.0) || std::isinf(x)) throw input_error("bessel_i0: argument must be finite and >= 0");
}

}  // namespace detail

/// e^-x I0(x) for x >= 0. Value lies in (0, 1] and decreases monotonically.
inline double bessel_i0_scaled(double x) {
  detail::check_bessel_arg(x);
  if (x < detail::kBesselSeriesLimit) return std::exp(-x) * (1.0 + detail::i0_series_tail(x));
  return detail::i0_asymptotic_sum(x) / std::sqrt(2.0 * std::numbers::pi * x);
}

/// ln I0(x) without overflow; accurate near 0 where ln I0(x) ~ x^2/4.
inline double log_bessel_i0(double x) {
  detail::check_bessel_arg(x);
  if (x < detail::kBesselSeriesLimit) return std::log1p(detail::i0_series_tail(x));
  return x + std::log(detail::i0_asymptotic_sum(x)) - 0.5 * std::log(2.0 * std::numbers::pi * x);
}

struct BesselI0Parts {
  double scaled;  // e^-x I0(x)
  double log;     // ln I0(x)
};

/// Both forms from a single series evaluation.
inline BesselI0Parts bessel_i0_parts(double x) {
  detail::check_bessel_arg(x);
  if (x < detail::kBesselSeriesLimit) {
    const double tail = detail::i0_series_tail(x);
    return {std::exp(-x) * (1.0 + tail), std::log1p(tail)};
  }
  const double a = detail::i0_asymptotic_sum(x);
  const double half_log = 0.5 * std::log(2.0 * std::numbers::pi * x);
  return {a * std::exp(-half_log), x + std::log(a) - half_log};
}

}  // namespace mrs
