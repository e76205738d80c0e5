// SPDX-License-Identifier: Apache-2.0
#pragma once

// Composite direct + keyhole channel G = [G0 G1 ... GK] with
// Gk = alpha * g_rk * g_tk^H, and the random symbols driving it.

#include <utility>
#include <vector>

#include "mrs_lab/config.hpp"
#include "mrs_lab/numerics.hpp"
#include "mrs_lab/rng.hpp"

namespace mrs {

struct Keyhole {
  CVector g_t;  // transmitter -> MRS antenna, length nt
  CVector g_r;  // MRS antenna -> receiver, length nr
  CMatrix G;    // alpha * g_r * g_t^H
};

struct ChannelRealization {
  CMatrix G0;
  std::vector<Keyhole> keyholes;
  CMatrix G;

  int K() const { return static_cast<int>(keyholes.size()); }
  int nt() const { return static_cast<int>(G0.cols()); }
  int nr() const { return static_cast<int>(G0.rows()); }
};

struct SymbolDraw {
  CVector x0;  // legacy symbols, per-entry power rho_d
  CVector x1;  // MRS reflection coefficients, unit modulus
  CVector u;   // x0 / sqrt(rho_d)
};

/// beta_K = 1 / (nr (K |alpha|^2 + 1)).
inline double scaling_factor(const SystemConfig& cfg) {
  return 1.0 / (cfg.nr * (cfg.K * cfg.alpha_power() + 1.0));
}

inline CVector sample_cscg_vector(Index n, Substream& rng) {
  CVector v(n);
  for (Index i = 0; i < n; ++i) v(i) = rng.cscg();
  return v;
}

/// nr x nt matrix of i.i.d. unit-variance CSCG entries.
inline CMatrix sample_direct(const SystemConfig& cfg, Substream& rng) {
  CMatrix g(cfg.nr, cfg.nt);
  for (Index j = 0; j < g.cols(); ++j)
    for (Index i = 0; i < g.rows(); ++i) g(i, j) = rng.cscg();
  return g;
}

inline Keyhole make_keyhole(CVector g_t, CVector g_r, Complex alpha) {
  CMatrix gk = alpha * g_r * g_t.adjoint();
  return {std::move(g_t), std::move(g_r), std::move(gk)};
}

inline Keyhole sample_keyhole(const SystemConfig& cfg, Substream& rng) {
  if (cfg.K < 1) throw config_error("sample_keyhole: configuration has no MRS antenna");
  CVector g_t = sample_cscg_vector(cfg.nt, rng);
  CVector g_r = sample_cscg_vector(cfg.nr, rng);
  return make_keyhole(std::move(g_t), std::move(g_r), cfg.alpha);
}

inline ChannelRealization assemble_composite(CMatrix g0, std::vector<Keyhole> keyholes) {
  if (g0.rows() < 1 || g0.cols() < 1) throw input_error("assemble_composite: empty direct channel");
  const Index nr = g0.rows(), nt = g0.cols();
  for (const auto& kh : keyholes) {
    if (kh.G.rows() != nr || kh.G.cols() != nt || kh.g_t.size() != nt || kh.g_r.size() != nr)
      throw input_error("assemble_composite: keyhole dimensions do not match the direct channel");
  }
  CMatrix g(nr, nt * static_cast<Index>(keyholes.size() + 1));
  g.leftCols(nt) = g0;
  for (std::size_t k = 0; k < keyholes.size(); ++k) g.middleCols(nt * static_cast<Index>(k + 1), nt) = keyholes[k].G;
  return {std::move(g0), std::move(keyholes), std::move(g)};
}

/// One full draw: G0 first, then the K keyholes, all from the same substream.
inline ChannelRealization sample_channel(const SystemConfig& cfg, Substream& rng) {
  CMatrix g0 = sample_direct(cfg, rng);
  std::vector<Keyhole> keyholes;
  keyholes.reserve(static_cast<std::size_t>(cfg.K));
  for (int k = 0; k < cfg.K; ++k) keyholes.push_back(sample_keyhole(cfg, rng));
  return assemble_composite(std::move(g0), std::move(keyholes));
}

/// Legacy symbols are CSCG(0, rho_d I). MRS reflections have uniform phase on
/// the unit circle; with polyphase_order = M > 0 the phase is restricted to
/// the M-ary alphabet 2 pi m / M.
inline SymbolDraw sample_symbols(const SystemConfig& cfg, Substream& rng, int polyphase_order = 0) {
  if (polyphase_order < 0) throw config_error("polyphase order must be >= 0");
  SymbolDraw s;
  s.u = sample_cscg_vector(cfg.nt, rng);
  s.x0 = std::sqrt(cfg.rho_d()) * s.u;
  s.x1.resize(cfg.K);
  for (int k = 0; k < cfg.K; ++k) {
    double ph;
    if (polyphase_order == 0) {
      ph = rng.phase();
    } else {
      const auto m = static_cast<int>(rng.uniform() * polyphase_order);
      ph = 2.0 * std::numbers::pi * m / polyphase_order;
    }
    s.x1(k) = std::polar(1.0, ph);
  }
  return s;
}

}  // namespace mrs
