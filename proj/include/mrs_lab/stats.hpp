// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace mrs {

/// Pairwise (cascade) summation in a fixed tree order.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;  // sample standard deviation / sqrt(n)
};

inline Estimate summarize(std::span<const double> v) {
  Estimate e;
  if (v.empty()) return e;
  const double n = static_cast<double>(v.size());
  e.mean = pairwise_sum(v) / n;
  if (v.size() < 2) return e;
  // Corrected two-pass variance: the second term cancels the rounding error
  // of the mean, so constant samples give exactly zero in practice.
  std::vector<double> d(v.size()), sq(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    d[i] = v[i] - e.mean;
    sq[i] = d[i] * d[i];
  }
  const double drift = pairwise_sum(d);
  const double ss = std::max(0.0, pairwise_sum(sq) - drift * drift / n);
  e.std_error = std::sqrt(ss / (n - 1.0) / n);
  return e;
}

/// summarize() over one field of a vector of records.
template <class Record, class Field>
Estimate summarize_field(const std::vector<Record>& records, Field Record::*field) {
  std::vector<double> v;
  v.reserve(records.size());
  for (const auto& r : records) v.push_back(static_cast<double>(r.*field));
  return summarize(v);
}

}  // namespace mrs
