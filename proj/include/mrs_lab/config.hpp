// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bit>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <string>

#include "mrs_lab/errors.hpp"

namespace mrs {

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

/// Complex scale factor from a power-dB magnitude (|alpha|^2 = 10^(db/10)).
/// -inf dB gives alpha = 0.
inline std::complex<double> alpha_from_db(double db, double phase_rad = 0.0) {
  if (std::isinf(db) && db < 0) return {0.0, 0.0};
  return std::polar(std::pow(10.0, db / 20.0), phase_rad);
}

inline bool is_power_of_two(long long n) { return n > 0 && std::has_single_bit(static_cast<unsigned long long>(n)); }

inline int next_power_of_two(int n) {
  return n <= 1 ? 1 : static_cast<int>(std::bit_ceil(static_cast<unsigned>(n)));
}

/// Scalar model parameters. Powers are linear; gamma_db is the total average
/// received SNR. rho_d defaults to gamma*sigma2/nt and rho_p to rho_d.
struct SystemConfig {
  int nt = 2;
  int nr = 4;
  int K = 1;
  std::complex<double> alpha = alpha_from_db(-3.0);
  double gamma_db = 20.0;
  double sigma2 = 1.0;
  std::optional<double> rho_d_override;
  std::optional<double> rho_p_override;
  int m0 = 64;
  int m1 = 0;  // 0: smallest power of two >= K+1
  int N = 1000;

  double gamma() const { return db_to_linear(gamma_db); }
  double alpha_power() const { return std::norm(alpha); }
  double rho_d() const { return rho_d_override ? *rho_d_override : gamma() * sigma2 / nt; }
  double rho_p() const { return rho_p_override ? *rho_p_override : rho_d(); }
  int m1_resolved() const { return m1 > 0 ? m1 : next_power_of_two(K + 1); }
  int pilot_length() const { return m0 * m1_resolved(); }

  SystemConfig with_snr_db(double db) const {
    SystemConfig c = *this;
    c.gamma_db = db;
    return c;
  }

  /// Same link with a different MRS antenna count; the pilot repetition
  /// count is pinned so the training length stays the same.
  SystemConfig with_K(int k) const {
    SystemConfig c = *this;
    c.m1 = m1_resolved();
    c.K = k;
    return c;
  }

  /// Antenna counts, powers and the SNR.
  void validate() const {
    if (nt < 1) throw config_error("nt must be >= 1");
    if (nr < 1) throw config_error("nr must be >= 1");
    if (K < 0) throw config_error("K must be >= 0");
    if (!std::isfinite(alpha.real()) || !std::isfinite(alpha.imag())) throw config_error("alpha must be finite");
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw config_error("sigma2 must be > 0");
    if (std::isnan(gamma_db) || (std::isinf(gamma_db) && gamma_db > 0)) throw config_error("gamma_db must be finite");
    if (!(rho_d() > 0.0) || !std::isfinite(rho_d())) throw config_error("rho_d must be > 0");
    if (!(rho_p() > 0.0) || !std::isfinite(rho_p())) throw config_error("rho_p must be > 0");
  }

  /// Pilot and coherence-interval constraints, needed only when channel
  /// estimation is simulated.
  void validate_training() const {
    validate();
    const int m1r = m1_resolved();
    if (!is_power_of_two(m1r)) throw config_error("m1 must be a power of two");
    if (m1r < K + 1) throw config_error("m1 must be >= K+1");
    if (!is_power_of_two(m0)) throw config_error("m0 must be a power of two");
    if (m0 < nt) throw config_error("m0 must be >= nt");
    if (static_cast<long long>(m0) * m1r > (1LL << 24)) throw config_error("pilot block too long");
    if (N <= static_cast<long long>(m0) * m1r) throw config_error("coherence length N must exceed m0*m1");
  }
};

}  // namespace mrs
