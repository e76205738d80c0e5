// SPDX-License-Identifier: Apache-2.0
#pragma once

// Globally adaptive Gauss-Kronrod (7/15) quadrature with a QUADPACK-style
// error estimate, plus a semi-infinite driver built on top of it.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "mrs_lab/errors.hpp"

namespace mrs {

struct QuadratureResult {
  double value = 0.0;
  double abs_error = 0.0;
  int evaluations = 0;
};

struct QuadratureOptions {
  /// Relative tolerance, combined with the absolute one as max(abs, rel*|I|).
  double rel_tol = 0.0;
  /// Known truncation point for semi-infinite integrals; searched for when unset.
  std::optional<double> upper;
  /// Interior points where the integrand changes character (peaks, kinks).
  std::vector<double> breakpoints;
  int max_subdivisions = 2000;
};

namespace detail {

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

template <class F>
Panel gauss_kronrod_15(F& f, double a, double b) {
  static constexpr std::array<double, 8> xgk = {
      0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
      0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
      0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
      0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
  static constexpr std::array<double, 8> wgk = {
      0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
      0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
      0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
      0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
  static constexpr std::array<double, 4> wg = {
      0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
      0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

  const double centr = 0.5 * (a + b);
  const double hlgth = 0.5 * (b - a);
  const double fc = f(centr);
  double resg = fc * wg[3];
  double resk = fc * wgk[7];
  double resabs = std::abs(resk);
  std::array<double, 7> fv1{}, fv2{};
  for (int j = 0; j < 7; ++j) {
    const double absc = hlgth * xgk[j];
    fv1[j] = f(centr - absc);
    fv2[j] = f(centr + absc);
    const double fsum = fv1[j] + fv2[j];
    resk += wgk[j] * fsum;
    resabs += wgk[j] * (std::abs(fv1[j]) + std::abs(fv2[j]));
    if (j % 2 == 1) resg += wg[j / 2] * fsum;
  }
  const double reskh = 0.5 * resk;
  double resasc = wgk[7] * std::abs(fc - reskh);
  for (int j = 0; j < 7; ++j) resasc += wgk[j] * (std::abs(fv1[j] - reskh) + std::abs(fv2[j] - reskh));

  const double result = resk * hlgth;
  resabs *= std::abs(hlgth);
  resasc *= std::abs(hlgth);
  double err = std::abs((resk - resg) * hlgth);
  if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  constexpr double eps = std::numeric_limits<double>::epsilon();
  constexpr double tiny = std::numeric_limits<double>::min();
  if (resabs > tiny / (50.0 * eps)) err = std::max(50.0 * eps * resabs, err);
  return {a, b, result, err};
}

}  // namespace detail

/// Adaptive integral of f over [a, b], split first at the given breakpoints.
/// Throws accuracy_error when the subdivision budget runs out.
template <class F>
QuadratureResult integrate_adaptive(F&& f, double a, double b, double abs_tol, double rel_tol = 0.0,
                                    std::span<const double> breakpoints = {}, int max_subdivisions = 2000) {
  if (!(b > a)) throw input_error("integrate_adaptive: empty interval");
  int evaluations = 0;
  auto counted = [&](double x) {
    ++evaluations;
    return static_cast<double>(f(x));
  };

  std::vector<double> edges{a};
  for (double p : breakpoints)
    if (p > a && p < b) edges.push_back(p);
  edges.push_back(b);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  std::priority_queue<detail::Panel> heap;
  double total = 0.0, total_err = 0.0;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    const auto p = detail::gauss_kronrod_15(counted, edges[i], edges[i + 1]);
    total += p.value;
    total_err += p.error;
    heap.push(p);
  }

  int subdivisions = static_cast<int>(heap.size());
  while (total_err > std::max(abs_tol, rel_tol * std::abs(total))) {
    if (subdivisions >= max_subdivisions)
      throw accuracy_error("integrate_adaptive: subdivision limit reached", total, total_err);
    const auto worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b))
      throw accuracy_error("integrate_adaptive: interval cannot be split further", total, total_err);
    const auto left = detail::gauss_kronrod_15(counted, worst.a, mid);
    const auto right = detail::gauss_kronrod_15(counted, mid, worst.b);
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++subdivisions;
  }

  // Re-sum from the panels so the result does not carry the running-update drift.
  total = 0.0;
  total_err = 0.0;
  std::vector<detail::Panel> panels;
  panels.reserve(heap.size());
  while (!heap.empty()) {
    panels.push_back(heap.top());
    heap.pop();
  }
  std::sort(panels.begin(), panels.end(), [](const auto& l, const auto& r) { return l.a < r.a; });
  for (const auto& p : panels) {
    total += p.value;
    total_err += p.error;
  }
  return {total, total_err, evaluations};
}

/// Integral of f over [0, inf). With options.upper set, the integral is
/// truncated there (the caller vouches for the tail). Otherwise geometric
/// panels [0,1], [1,2], [2,4], ... are added until two consecutive panels
/// contribute less than tol/8; f must decay at least like a Gaussian tail.
template <class F>
QuadratureResult integrate_semi_infinite(F&& f, double tol, const QuadratureOptions& options = {}) {
  if (!(tol > 0.0)) throw input_error("integrate_semi_infinite: tol must be > 0");
  if (options.upper) {
    if (!(*options.upper > 0.0)) throw input_error("integrate_semi_infinite: upper must be > 0");
    return integrate_adaptive(f, 0.0, *options.upper, tol, options.rel_tol, options.breakpoints,
                              options.max_subdivisions);
  }

  QuadratureResult acc;
  double lo = 0.0, hi = 1.0, budget = 0.5 * tol;
  int quiet = 0;
  for (int k = 0; k < 64; ++k) {
    budget *= 0.5;
    const auto panel = integrate_adaptive(f, lo, hi, budget, options.rel_tol, options.breakpoints,
                                          options.max_subdivisions);
    acc.value += panel.value;
    acc.abs_error += panel.abs_error;
    acc.evaluations += panel.evaluations;
    quiet = (std::abs(panel.value) + panel.abs_error < 0.125 * tol) ? quiet + 1 : 0;
    if (quiet >= 2 && lo >= 1.0) return acc;
    lo = hi;
    hi *= 2.0;
  }
  throw accuracy_error("integrate_semi_infinite: integrand tail did not decay", acc.value, acc.abs_error);
}

}  // namespace mrs
