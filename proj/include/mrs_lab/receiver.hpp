// SPDX-License-Identifier: Apache-2.0
#pragma once

// Single-antenna MRS (K = 1) joint decoding: MMSE-SIC over the legacy
// streams with the re-scattered path as interference, then a matched filter
// on the MRS flow once G0 x0 has been cancelled.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include "mrs_lab/channel.hpp"
#include "mrs_lab/numerics.hpp"
#include "mrs_lab/quadrature.hpp"
#include "mrs_lab/rates.hpp"
#include "mrs_lab/special_functions.hpp"

namespace mrs {

enum class DecodingOrder {
  column_norm,  // fixed pre-sort by descending column norm of G0
  greedy_sinr,  // at each stage decode the undecoded stream with the best SINR
};

enum class MrsSnrForm {
  /// beta_1 x0^H G1^H G1 x0 / (nt sigma^2)
  tx_averaged,
  /// beta_1 ||G1 x0||^2 / sigma^2, the matched-filter SNR of
  /// y1 = sqrt(beta_1) (G1 x0) x1 + z
  matched_filter,
};

struct ReceiverOptions {
  DecodingOrder order = DecodingOrder::column_norm;
  MrsSnrForm snr_form = MrsSnrForm::tx_averaged;
};

struct SicResult {
  std::vector<int> order;
  std::vector<double> per_stream_sinr;  // in decoding order
  double legacy_rate_bits = 0.0;
  double gamma1 = 0.0;
  double mrs_rate_wpc_bits = 0.0;
  double mrs_rate_gaussian_bits = 0.0;
};

/// Stream indices by descending column norm; ties keep ascending index.
inline std::vector<int> decoding_order(const CMatrix& g0) {
  std::vector<int> order(static_cast<std::size_t>(g0.cols()));
  std::iota(order.begin(), order.end(), 0);
  const Eigen::VectorXd norms = g0.colwise().squaredNorm().transpose();
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return norms(a) > norms(b); });
  return order;
}

namespace detail {

// [G0(:, current) | G0(:, remaining...) | interference]
inline CMatrix stage_matrix(const CMatrix& g0, int current, const std::vector<int>& remaining,
                            const CMatrix& interference) {
  CMatrix h(g0.rows(), static_cast<Index>(remaining.size()) + interference.cols());
  Index col = 0;
  h.col(col++) = g0.col(current);
  for (int r : remaining)
    if (r != current) h.col(col++) = g0.col(r);
  if (interference.cols() > 0) h.rightCols(interference.cols()) = interference;
  return h;
}

}  // namespace detail

/// MMSE-SIC over the columns of G0 with every column of `interference`
/// kept as undecodable interference, at per-antenna SNR c. Fills the legacy
/// part of SicResult.
inline SicResult legacy_sic_rate(const CMatrix& g0, const CMatrix& interference, double c,
                                 DecodingOrder order = DecodingOrder::column_norm) {
  if (interference.cols() > 0 && interference.rows() != g0.rows())
    throw input_error("legacy_sic_rate: interference has the wrong number of rows");
  SicResult res;
  const std::vector<int> presorted = decoding_order(g0);
  std::vector<int> remaining = presorted;

  while (!remaining.empty()) {
    int pick = remaining.front();
    double sinr = 0.0;
    if (order == DecodingOrder::column_norm) {
      sinr = mmse_residual_sinr(detail::stage_matrix(g0, pick, remaining, interference), c);
    } else {
      // Ties resolve to the lowest stream index.
      std::vector<int> candidates = remaining;
      std::sort(candidates.begin(), candidates.end());
      sinr = -1.0;
      for (int cand : candidates) {
        const double s = mmse_residual_sinr(detail::stage_matrix(g0, cand, remaining, interference), c);
        if (s > sinr) {
          sinr = s;
          pick = cand;
        }
      }
    }
    res.order.push_back(pick);
    res.per_stream_sinr.push_back(sinr);
    res.legacy_rate_bits += std::log2(1.0 + sinr);
    remaining.erase(std::find(remaining.begin(), remaining.end(), pick));
  }
  return res;
}

/// Legacy MMSE-SIC rate for a K = 1 configuration, G1 treated as interference.
inline SicResult legacy_sic_rate(const CMatrix& g0, const CMatrix& g1, const SystemConfig& cfg,
                                 DecodingOrder order = DecodingOrder::column_norm) {
  if (cfg.K != 1) throw config_error("legacy_sic_rate: receiver is defined for K = 1");
  return legacy_sic_rate(g0, g1, per_antenna_snr(cfg), order);
}

/// Post-SIC SNR of the MRS flow.
inline double mrs_postsic_snr(const CMatrix& g1, const CVector& x0, const SystemConfig& cfg,
                              MrsSnrForm form = MrsSnrForm::tx_averaged) {
  if (cfg.K != 1) throw config_error("mrs_postsic_snr: receiver is defined for K = 1");
  if (g1.cols() != x0.size()) throw input_error("mrs_postsic_snr: x0 length does not match G1");
  const double energy = (g1 * x0).squaredNorm();
  const double snr = scaling_factor(cfg) * energy / cfg.sigma2;
  return form == MrsSnrForm::tx_averaged ? snr / cfg.nt : snr;
}

/// Gaussian-codebook rate log2(1 + gamma1); an upper bound for the MRS flow.
inline double mrs_rate_gaussian(double gamma1) {
  if (!(gamma1 >= 0.0)) throw input_error("mrs_rate_gaussian: gamma1 must be >= 0");
  return std::log2(1.0 + gamma1);
}

/// Rician envelope density of |x1 + n| for unit-modulus x1 and noise
/// variance 1/gamma1: 2 u g e^(-g(1+u^2)) I0(2 u g), evaluated as
/// 2 u g e^(-g(1-u)^2) [e^(-2ug) I0(2ug)] so it cannot overflow.
inline double wyner_envelope_pdf(double u, double gamma1) {
  if (!(gamma1 >= 0.0)) throw input_error("wyner_envelope_pdf: gamma1 must be >= 0");
  if (u <= 0.0 || gamma1 == 0.0) return 0.0;
  const double d = 1.0 - u;
  return 2.0 * u * gamma1 * std::exp(-gamma1 * d * d) * bessel_i0_scaled(2.0 * u * gamma1);
}

namespace detail {

// Below this SNR the series g - g^2/2 + g^3/3 - 3g^4/8 is used; the
// remainder is about 0.7 g^5, far under the quadrature tolerance.
inline constexpr double kWpcSmallSnr = 1e-4;
inline constexpr double kWpcAbsTol = 1e-14;
inline constexpr double kWpcRelTol = 1e-12;

// Truncation covers 12 standard deviations of the envelope on both the
// high-SNR (width ~ 1/sqrt(g)) and low-SNR (Rayleigh scale ~ 1/sqrt(g),
// mean-square 1 + 1/g) sides; the neglected tail mass is below e^-70.
// Breakpoints at 1 +- s 2^k (s the envelope scale) keep every panel
// comparable to the local width, so no Gaussian bump falls between nodes.
inline QuadratureOptions wpc_quadrature(double gamma1) {
  QuadratureOptions q;
  const double scale = 1.0 / std::sqrt(gamma1);
  const double upper = 1.0 + 12.0 * scale + 12.0 / gamma1;
  q.upper = upper;
  q.breakpoints = {1.0};
  for (double step = 0.5 * scale; 1.0 + step < upper; step *= 2.0) {
    q.breakpoints.push_back(1.0 + step);
    if (step < 1.0) q.breakpoints.push_back(1.0 - step);
  }
  q.rel_tol = kWpcRelTol;
  return q;
}

}  // namespace detail

/// Mutual information (nats) of the unit-modulus, uniform-phase input over a
/// scalar AWGN channel at SNR gamma1:
///   R = -int f ln(f/u) du + ln(2 gamma1 / e).
/// With int f = 1 and E[u^2] = 1 + 1/gamma1 this equals
///   R = 2 gamma1 - E_f[ln I0(2 gamma1 u)],
/// which is what is integrated (no ln(2 gamma1) cancellation at low SNR).
inline double mrs_rate_wpc_nats(double gamma1) {
  if (!(gamma1 >= 0.0) || std::isinf(gamma1)) throw input_error("mrs_rate_wpc: gamma1 must be finite and >= 0");
  if (gamma1 == 0.0) return 0.0;
  if (gamma1 < detail::kWpcSmallSnr)
    return gamma1 * (1.0 + gamma1 * (-0.5 + gamma1 * (1.0 / 3.0 - 0.375 * gamma1)));

  auto integrand = [gamma1](double u) {
    if (u <= 0.0) return 0.0;
    const double x = 2.0 * gamma1 * u;
    const auto i0 = bessel_i0_parts(x);
    const double d = 1.0 - u;
    return x * std::exp(-gamma1 * d * d) * i0.scaled * i0.log;
  };
  const auto q = integrate_semi_infinite(integrand, detail::kWpcAbsTol, detail::wpc_quadrature(gamma1));
  return 2.0 * gamma1 - q.value;
}

/// The same rate from the defining integral, without the moment identities.
/// Loses accuracy at small gamma1; used to cross-check mrs_rate_wpc_nats.
inline double mrs_rate_wpc_literal_nats(double gamma1) {
  if (!(gamma1 > 0.0)) throw input_error("mrs_rate_wpc_literal: gamma1 must be > 0");
  const double log2g = std::log(2.0 * gamma1);
  auto integrand = [gamma1, log2g](double u) {
    if (u <= 0.0) return 0.0;
    const double x = 2.0 * gamma1 * u;
    const auto i0 = bessel_i0_parts(x);
    const double d = 1.0 - u;
    const double log_f_over_u = log2g - gamma1 * d * d + std::log(i0.scaled);
    return u * std::exp(log_f_over_u) * log_f_over_u;
  };
  const auto q = integrate_semi_infinite(integrand, detail::kWpcAbsTol, detail::wpc_quadrature(gamma1));
  return -q.value + log2g - 1.0;
}

/// WPC rate in bits.
inline double mrs_rate_wpc(double gamma1) { return mrs_rate_wpc_nats(gamma1) / std::numbers::ln2; }

/// Rate the legacy link reaches on G0 + x1 G1 when x1 is known at the receiver.
inline double joint_known_x1_rate(const CMatrix& g0, const CMatrix& g1, Complex x1, const SystemConfig& cfg) {
  if (cfg.K != 1) throw config_error("joint_known_x1_rate: receiver is defined for K = 1");
  if (std::abs(std::abs(x1) - 1.0) > 1e-12) throw input_error("joint_known_x1_rate: |x1| must be 1");
  if (g0.rows() != g1.rows() || g0.cols() != g1.cols()) throw input_error("joint_known_x1_rate: shape mismatch");
  return gram_logdet_rate(g0 + x1 * g1, per_antenna_snr(cfg));
}

/// Full K = 1 chain: legacy MMSE-SIC, cancellation of G0 x0, MRS rates.
inline SicResult decode_k1(const ChannelRealization& ch, const SymbolDraw& sym, const SystemConfig& cfg,
                           const ReceiverOptions& opts = {}) {
  if (ch.K() != 1) throw config_error("decode_k1: realization must have exactly one keyhole");
  const CMatrix& g1 = ch.keyholes.front().G;
  SicResult res = legacy_sic_rate(ch.G0, g1, cfg, opts.order);
  res.gamma1 = mrs_postsic_snr(g1, sym.x0, cfg, opts.snr_form);
  res.mrs_rate_wpc_bits = mrs_rate_wpc(res.gamma1);
  res.mrs_rate_gaussian_bits = mrs_rate_gaussian(res.gamma1);
  return res;
}

/// Every per-realization rate for one draw. Receiver fields are filled only for K = 1.
inline RateSample make_rate_sample(const ChannelRealization& ch, const SymbolDraw& sym, const SystemConfig& cfg,
                                   const ReceiverOptions& opts = {}) {
  RateSample s;
  s.sum_rate = sum_rate(ch, cfg);
  s.legacy_alone = legacy_alone_rate(ch.G0, cfg);
  if (cfg.K == 1) {
    const SicResult sic = decode_k1(ch, sym, cfg, opts);
    s.legacy_sic = sic.legacy_rate_bits;
    s.per_stream_sinr = sic.per_stream_sinr;
    s.gamma1 = sic.gamma1;
    s.mrs_wpc = sic.mrs_rate_wpc_bits;
    s.mrs_gaussian_bound = sic.mrs_rate_gaussian_bits;
    s.joint_known_x1 = joint_known_x1_rate(ch.G0, ch.keyholes.front().G, sym.x1(0), cfg);
  }
  return s;
}

}  // namespace mrs
