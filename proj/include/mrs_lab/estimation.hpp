// SPDX-License-Identifier: Apache-2.0
#pragma once

// Joint LS estimation of the direct and re-scattered paths. The legacy
// pilot block X0p is repeated m1 times; during repetition j every MRS
// antenna holds the constant reflection X1p(k, j). The composite training
// matrix is therefore Psi_p = X1p (x) X0p, and Hadamard rows make it exactly
// orthogonal.

#include <cmath>

#include "mrs_lab/channel.hpp"
#include "mrs_lab/config.hpp"
#include "mrs_lab/numerics.hpp"
#include "mrs_lab/rates.hpp"
#include "mrs_lab/rng.hpp"

namespace mrs {

inline constexpr int kMaxHadamardOrder = 1 << 14;

/// Sylvester-Hadamard matrix of order n (a power of two), H_n = H_1 (x) H_{n/2}.
inline Eigen::MatrixXi hadamard_int(int n) {
  if (!is_power_of_two(n) || n > kMaxHadamardOrder) throw input_error("hadamard: order must be a power of two <= 2^14");
  Eigen::MatrixXi h = Eigen::MatrixXi::Ones(1, 1);
  Eigen::Matrix2i h1;
  h1 << 1, 1, 1, -1;
  while (h.rows() < n) h = kronecker(h1, h);
  return h;
}

inline CMatrix hadamard(int n) { return hadamard_int(n).cast<double>().cast<Complex>(); }

struct PilotBlock {
  CMatrix X0p;    // nt x m0, entries +-sqrt(rho_p)
  CMatrix X1p;    // (K+1) x m1, entries +-1, first row all ones
  CMatrix Psi_p;  // nt(K+1) x m0*m1
  int m0 = 0;
  int m1 = 0;

  int Np() const { return m0 * m1; }
};

inline PilotBlock build_pilots(const SystemConfig& cfg) {
  cfg.validate_training();
  PilotBlock p;
  p.m0 = cfg.m0;
  p.m1 = cfg.m1_resolved();
  p.X1p = hadamard(p.m1).topRows(cfg.K + 1);
  p.X0p = std::sqrt(cfg.rho_p()) * hadamard(p.m0).topRows(cfg.nt);
  p.Psi_p = kronecker(p.X1p, p.X0p);
  return p;
}

/// Yp = sqrt(beta_K) G Psi_p + Zp with Zp i.i.d. CSCG(0, sigma2). sigma2 = 0
/// gives the noiseless observation.
inline CMatrix observe_pilots(const ChannelRealization& ch, const PilotBlock& pilots, const SystemConfig& cfg,
                              Substream& rng) {
  if (ch.G.cols() != pilots.Psi_p.rows()) throw input_error("observe_pilots: pilot block does not match channel");
  if (!(cfg.sigma2 >= 0.0)) throw input_error("observe_pilots: sigma2 must be >= 0");
  CMatrix y = std::sqrt(scaling_factor(cfg)) * ch.G * pilots.Psi_p;
  if (cfg.sigma2 > 0.0) {
    for (Index j = 0; j < y.cols(); ++j)
      for (Index i = 0; i < y.rows(); ++i) y(i, j) += rng.cscg(cfg.sigma2);
  }
  return y;
}

/// nt (K+1) rho_d sigma2 / (rho_p m0 m1): the scalar s in Cov(sqrt(beta_K) G~ psi) = s I.
inline double error_covariance_scale(const SystemConfig& cfg) {
  return cfg.nt * (cfg.K + 1.0) * cfg.rho_d() * cfg.sigma2 / (cfg.rho_p() * cfg.pilot_length());
}

struct EstimationResult {
  CMatrix G_hat;             // estimate of G
  CMatrix G_hat_normalized;  // sqrt(beta_K) * G_hat, the raw LS output
  double error_cov_scale = 0.0;
  double rate_lower_bound_bits = 0.0;
};

/// sqrt(beta_K) G_hat = Yp Psi_p^H / (m0 m1 rho_p). Rate fields are left for
/// estimated_csi_rate_bound.
inline EstimationResult ls_estimate(const CMatrix& yp, const PilotBlock& pilots, const SystemConfig& cfg) {
  if (yp.cols() != pilots.Psi_p.cols()) throw input_error("ls_estimate: Yp has the wrong number of columns");
  EstimationResult r;
  const double energy = static_cast<double>(pilots.Np()) * cfg.rho_p();
  r.G_hat_normalized = yp * pilots.Psi_p.adjoint() / energy;
  r.G_hat = r.G_hat_normalized / std::sqrt(scaling_factor(cfg));
  r.error_cov_scale = error_covariance_scale(cfg);
  return r;
}

enum class EstBoundSnr {
  /// gamma beta_K sigma2 / nt; reduces to the full-CSIR sum rate when s = 0, Np = 0.
  per_tx_antenna,
  /// gamma beta_K sigma2, without the 1/nt.
  total,
};

/// ((N - Np)/N) log2 det(I + W^-1 (snr) G_hat G_hat^H) with W = (sigma2 + s) I.
inline double estimated_csi_rate_bound(const CMatrix& g_hat, const SystemConfig& cfg, double error_scale,
                                       int pilot_length, EstBoundSnr form = EstBoundSnr::per_tx_antenna) {
  if (pilot_length < 0 || pilot_length >= cfg.N) throw config_error("estimated_csi_rate_bound: needs Np < N");
  if (!(error_scale >= 0.0)) throw input_error("estimated_csi_rate_bound: error scale must be >= 0");
  double snr = cfg.gamma() * scaling_factor(cfg) * cfg.sigma2 / (cfg.sigma2 + error_scale);
  if (form == EstBoundSnr::per_tx_antenna) snr /= cfg.nt;
  const double fraction = static_cast<double>(cfg.N - pilot_length) / cfg.N;
  return fraction * gram_logdet_rate(g_hat, snr);
}

inline double estimated_csi_rate_bound(const CMatrix& g_hat, const SystemConfig& cfg,
                                       EstBoundSnr form = EstBoundSnr::per_tx_antenna) {
  return estimated_csi_rate_bound(g_hat, cfg, error_covariance_scale(cfg), cfg.pilot_length(), form);
}

/// Training, LS estimate and rate bound for one realization.
inline EstimationResult estimate_channel(const ChannelRealization& ch, const PilotBlock& pilots,
                                         const SystemConfig& cfg, Substream& noise,
                                         EstBoundSnr form = EstBoundSnr::per_tx_antenna) {
  EstimationResult r = ls_estimate(observe_pilots(ch, pilots, cfg, noise), pilots, cfg);
  r.rate_lower_bound_bits = estimated_csi_rate_bound(r.G_hat, cfg, form);
  return r;
}

}  // namespace mrs
