// SPDX-License-Identifier: Apache-2.0
#pragma once

// Full-CSIR achievable rates: the composite-channel sum rate, the gain over
// the direct path alone, and the large-array limits.

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "mrs_lab/channel.hpp"
#include "mrs_lab/numerics.hpp"

namespace mrs {

/// Per-realization rate quantities, all in bits.
struct RateSample {
  double sum_rate = 0.0;
  double legacy_alone = 0.0;
  double legacy_sic = 0.0;
  double mrs_wpc = 0.0;
  double mrs_gaussian_bound = 0.0;
  double joint_known_x1 = 0.0;
  double gamma1 = 0.0;  // linear
  std::vector<double> per_stream_sinr;
};

/// gamma * beta_K / nt: the per-antenna SNR that multiplies G G^H.
inline double per_antenna_snr(const SystemConfig& cfg) { return cfg.gamma() * scaling_factor(cfg) / cfg.nt; }

/// log2 det(I + gamma beta_K G G^H / nt).
inline double sum_rate(const ChannelRealization& ch, const SystemConfig& cfg) {
  if (ch.K() != cfg.K || ch.nt() != cfg.nt || ch.nr() != cfg.nr)
    throw input_error("sum_rate: realization does not match the configuration");
  return gram_logdet_rate(ch.G, per_antenna_snr(cfg));
}

/// Rate of the legacy link with no MRS node present (K = 0, beta_0 = 1/nr).
inline double legacy_alone_rate(const CMatrix& g0, const SystemConfig& cfg) {
  return gram_logdet_rate(g0, cfg.gamma() / (static_cast<double>(cfg.nr) * cfg.nt));
}

struct Dominance {
  double r_with = 0.0;
  double r_direct = 0.0;
  double delta = 0.0;
};

/// Compares log2 det(I + F + D) with log2 det(I + F) at the same gamma_0,
/// F = gamma_0 G0 G0^H and D = gamma_0 sum_k Gk Gk^H. delta >= 0 always.
/// Both determinants are taken on the nr x nr side, so D = 0 gives delta = 0
/// exactly.
inline Dominance dominance_check(const ChannelRealization& ch, const SystemConfig& cfg) {
  if (cfg.K < 1) throw config_error("dominance_check: needs K >= 1");
  if (ch.K() != cfg.K) throw input_error("dominance_check: realization does not match the configuration");
  const double g0 = per_antenna_snr(cfg);
  CMatrix base = g0 * ch.G0 * ch.G0.adjoint();
  base.diagonal().array() += 1.0;
  CMatrix bumped = base;
  for (const auto& kh : ch.keyholes) bumped += g0 * kh.G * kh.G.adjoint();

  const CholeskyFactor direct(std::move(base)), with(std::move(bumped));
  if (!direct.ok() || !with.ok()) throw std::logic_error("dominance_check: shifted Gram matrix is not positive definite");
  Dominance d;
  d.r_with = with.log_det() / std::numbers::ln2;
  d.r_direct = direct.log_det() / std::numbers::ln2;
  d.delta = d.r_with - d.r_direct;
  return d;
}

/// Which constant multiplies the limiting eigenvalues in the nr -> inf limit.
enum class LarRxConstant {
  /// gamma beta_K nr / nt = gamma / (nt (K|alpha|^2 + 1)); independent of nr.
  nr_independent,
  /// gamma beta_K as printed; vanishes as nr grows. Kept for comparison only.
  as_printed,
};

/// Limiting rate as nr -> inf for fixed nt and K:
/// nt log2(1 + c1) + sum_k log2(1 + |alpha|^2 ||g_tk||^2 c1).
inline double lar_rx_limit(std::span<const CVector> g_t, const SystemConfig& cfg,
                           LarRxConstant constant = LarRxConstant::nr_independent) {
  if (static_cast<int>(g_t.size()) != cfg.K) throw input_error("lar_rx_limit: need one g_t per MRS antenna");
  const double c1 = constant == LarRxConstant::nr_independent
                        ? cfg.gamma() / (cfg.nt * (cfg.K * cfg.alpha_power() + 1.0))
                        : cfg.gamma() * scaling_factor(cfg);
  double r = cfg.nt * std::log2(1.0 + c1);
  for (const auto& g : g_t) {
    if (g.size() != cfg.nt) throw input_error("lar_rx_limit: g_t has wrong length");
    r += std::log2(1.0 + cfg.alpha_power() * g.squaredNorm() * c1);
  }
  return r;
}

struct LarTxLimit {
  /// log2 det(I + gamma beta_K (I + sum_k |alpha|^2 g_rk g_rk^H)).
  double exact = 0.0;
  /// (nr-K) log2(1 + gamma beta_K) + sum_k log2(1 + |alpha|^2 ||g_rk||^2 gamma beta_K);
  /// only matches the exact form when the g_rk are orthogonal and the
  /// direct-path unit is neglected on the keyhole eigenvalues.
  double separable = 0.0;
};

/// Limiting rate as nt -> inf for fixed nr >= K.
inline LarTxLimit lar_tx_limit(std::span<const CVector> g_r, const SystemConfig& cfg) {
  if (static_cast<int>(g_r.size()) != cfg.K) throw input_error("lar_tx_limit: need one g_r per MRS antenna");
  if (cfg.nr < cfg.K) throw config_error("lar_tx_limit: needs nr >= K");
  const double gb = cfg.gamma() * scaling_factor(cfg);

  LarTxLimit out;
  out.exact = cfg.nr * std::log2(1.0 + gb);
  out.separable = (cfg.nr - cfg.K) * std::log2(1.0 + gb);
  if (cfg.K == 0) return out;

  // det((1+gb) I + gb |a|^2 R R^H) = (1+gb)^nr det(I + gb |a|^2/(1+gb) R R^H)
  CMatrix r(cfg.nr, cfg.K);
  for (int k = 0; k < cfg.K; ++k) {
    if (g_r[k].size() != cfg.nr) throw input_error("lar_tx_limit: g_r has wrong length");
    r.col(k) = g_r[k];
    out.separable += std::log2(1.0 + cfg.alpha_power() * g_r[k].squaredNorm() * gb);
  }
  out.exact += gram_logdet_rate(r, gb * cfg.alpha_power() / (1.0 + gb));
  return out;
}

}  // namespace mrs
