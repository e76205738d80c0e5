// SPDX-License-Identifier: Apache-2.0
#pragma once

// Seeded Monte Carlo engine and the canonical experiments. Trial i draws
// everything from substreams keyed by (seed, i, label), so the same trial
// sees the same channel at every SNR point and results do not depend on the
// number of workers. Reductions are pairwise sums in trial order.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "mrs_lab/channel.hpp"
#include "mrs_lab/estimation.hpp"
#include "mrs_lab/rates.hpp"
#include "mrs_lab/receiver.hpp"
#include "mrs_lab/stats.hpp"

namespace mrs {

enum class Experiment { sum_rate_sweep, rate_region, lar_convergence, estimation_sweep };
enum class GrowDim { nr, nt };

inline constexpr int kMaxGrownDim = 1 << 13;
inline constexpr std::size_t kDefaultTrials = 20000;
inline constexpr std::size_t kPaperScaleTrials = 200000;

/// Modelling variants; the defaults are the reference choices.
struct ModelOptions {
  ReceiverOptions receiver;
  LarRxConstant lar_constant = LarRxConstant::nr_independent;
  EstBoundSnr est_bound = EstBoundSnr::per_tx_antenna;
  int polyphase_order = 0;  // 0: continuous phase
};

struct Scenario {
  SystemConfig cfg;
  std::vector<double> snr_grid_db{20.0};
  std::size_t trials = kDefaultTrials;
  std::uint64_t seed = 1;
  Experiment experiment = Experiment::sum_rate_sweep;
  unsigned workers = 0;  // 0: one per hardware thread
  ModelOptions model;
  GrowDim grow = GrowDim::nr;  // lar_convergence only
  std::vector<int> grid;       // lar_convergence only

  void validate() const {
    if (trials < 1) throw config_error("trials must be >= 1");
    if (snr_grid_db.empty()) throw config_error("SNR grid is empty");
    for (double s : snr_grid_db) cfg.with_snr_db(s).validate();
  }
};

inline unsigned resolve_workers(unsigned requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(i) for i in [0, trials) on `workers` threads and returns the
/// records in trial order. The first exception thrown by any trial is rethrown.
template <class Record, class Fn>
std::vector<Record> run_trials(std::size_t trials, unsigned workers, Fn&& fn) {
  std::vector<Record> out(trials);
  const auto n = static_cast<unsigned>(std::min<std::size_t>(resolve_workers(workers), trials));
  if (n <= 1) {
    for (std::size_t i = 0; i < trials; ++i) out[i] = fn(i);
    return out;
  }

  constexpr std::size_t kChunk = 16;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    while (!failed.load(std::memory_order_relaxed)) {
      const std::size_t begin = next.fetch_add(kChunk);
      if (begin >= trials) return;
      const std::size_t end = std::min(trials, begin + kChunk);
      try {
        for (std::size_t i = begin; i < end; ++i) out[i] = fn(i);
      } catch (...) {
        const std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
        return;
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(n);
    for (unsigned w = 0; w < n; ++w) pool.emplace_back(work);
  }
  if (error) std::rethrow_exception(error);
  return out;
}

// ---------------------------------------------------------------- sum rate

struct SweepPoint {
  double snr_db = 0.0;
  Estimate sum_rate;            // K as configured
  Estimate legacy_alone;        // K = 0, beta_0
  Estimate mrs_wpc;             // K = 1 only
  Estimate mrs_gauss_bound;     // K = 1 only
  Estimate est_lower_bound;     // K as configured
  Estimate est_lower_bound_k0;  // K = 0 baseline, same training length
  Estimate lar_nr;              // nr -> inf limit, K as configured
  Estimate lar_nr_k0;
  /// Draws where the estimated-CSI bound exceeded (N-Np)/N times the
  /// perfect-CSI rate evaluated on the same estimate.
  std::size_t bound_violations = 0;
};

struct SweepResult {
  Scenario scenario;
  std::vector<SweepPoint> points;
};

namespace detail {

struct SweepTrial {
  double sum_rate = 0, legacy_alone = 0, mrs_wpc = 0, mrs_gauss = 0;
  double est = 0, est_k0 = 0, lar = 0, lar_k0 = 0;
  bool bound_ok = true;
};

inline std::vector<CVector> transmit_side(const ChannelRealization& ch) {
  std::vector<CVector> v;
  for (const auto& kh : ch.keyholes) v.push_back(kh.g_t);
  return v;
}

inline std::vector<CVector> receive_side(const ChannelRealization& ch) {
  std::vector<CVector> v;
  for (const auto& kh : ch.keyholes) v.push_back(kh.g_r);
  return v;
}

inline SweepTrial sweep_trial(const Scenario& sc, const SystemConfig& cfg, const PilotBlock& pilots,
                              const PilotBlock& pilots_k0, std::uint64_t trial) {
  Substream chan_rng(sc.seed, trial, Stream::channel);
  Substream sym_rng(sc.seed, trial, Stream::symbols);
  Substream noise_rng(sc.seed, trial, Stream::pilot_noise);
  Substream noise_k0_rng(sc.seed, trial, Stream::baseline_pilot_noise);

  const ChannelRealization ch = sample_channel(cfg, chan_rng);
  const SymbolDraw sym = sample_symbols(cfg, sym_rng, sc.model.polyphase_order);
  const SystemConfig cfg0 = cfg.with_K(0);

  SweepTrial t;
  t.sum_rate = sum_rate(ch, cfg);
  t.legacy_alone = legacy_alone_rate(ch.G0, cfg);
  if (cfg.K == 1) {
    const SicResult sic = decode_k1(ch, sym, cfg, sc.model.receiver);
    t.mrs_wpc = sic.mrs_rate_wpc_bits;
    t.mrs_gauss = sic.mrs_rate_gaussian_bits;
  }

  const EstimationResult est = estimate_channel(ch, pilots, cfg, noise_rng, sc.model.est_bound);
  t.est = est.rate_lower_bound_bits;
  const double fraction = static_cast<double>(cfg.N - pilots.Np()) / cfg.N;
  const double perfect_on_estimate = gram_logdet_rate(est.G_hat, per_antenna_snr(cfg));
  t.bound_ok = t.est <= fraction * perfect_on_estimate + 1e-12;

  if (cfg.K > 0) {
    const ChannelRealization ch0 = assemble_composite(ch.G0, {});
    t.est_k0 = estimate_channel(ch0, pilots_k0, cfg0, noise_k0_rng, sc.model.est_bound).rate_lower_bound_bits;
  } else {
    t.est_k0 = t.est;
  }

  const auto g_t = transmit_side(ch);
  t.lar = lar_rx_limit(g_t, cfg, sc.model.lar_constant);
  t.lar_k0 = lar_rx_limit({}, cfg0, sc.model.lar_constant);
  return t;
}

}  // namespace detail

inline SweepResult run_sum_rate_sweep(Scenario sc) {
  sc.validate();
  std::sort(sc.snr_grid_db.begin(), sc.snr_grid_db.end());
  SweepResult res{sc, {}};
  for (double snr : sc.snr_grid_db) {
    const SystemConfig cfg = sc.cfg.with_snr_db(snr);
    cfg.validate_training();
    const PilotBlock pilots = build_pilots(cfg);
    const PilotBlock pilots_k0 = build_pilots(cfg.with_K(0));

    const auto trials = run_trials<detail::SweepTrial>(
        sc.trials, sc.workers, [&](std::size_t i) { return detail::sweep_trial(sc, cfg, pilots, pilots_k0, i); });

    using T = detail::SweepTrial;
    SweepPoint p;
    p.snr_db = snr;
    p.sum_rate = summarize_field(trials, &T::sum_rate);
    p.legacy_alone = summarize_field(trials, &T::legacy_alone);
    p.mrs_wpc = summarize_field(trials, &T::mrs_wpc);
    p.mrs_gauss_bound = summarize_field(trials, &T::mrs_gauss);
    p.est_lower_bound = summarize_field(trials, &T::est);
    p.est_lower_bound_k0 = summarize_field(trials, &T::est_k0);
    p.lar_nr = summarize_field(trials, &T::lar);
    p.lar_nr_k0 = summarize_field(trials, &T::lar_k0);
    p.bound_violations = static_cast<std::size_t>(
        std::count_if(trials.begin(), trials.end(), [](const T& t) { return !t.bound_ok; }));
    res.points.push_back(p);
  }
  return res;
}

// ------------------------------------------------------------- rate region

struct RateRegionPoint {
  char vertex = 'A';
  Estimate legacy_rate_bits;
  Estimate mrs_rate_bits;
};

struct RegionPoint {
  double snr_db = 0.0;
  RateRegionPoint A, B, C, D;
  Estimate legacy_alone;    // K = 0 reference
  Estimate joint_known_x1;  // legacy rate on G0 + x1 G1 with x1 known
  Estimate mrs_gauss;       // Gaussian-codebook MRS rate (dashed region)
};

struct RegionResult {
  Scenario scenario;
  std::vector<RegionPoint> points;
};

namespace detail {

struct RegionTrial {
  double r0 = 0, wpc = 0, gauss = 0, sum = 0, joint = 0, alone = 0;
};

inline RegionTrial region_trial(const Scenario& sc, const SystemConfig& cfg, std::uint64_t trial) {
  Substream chan_rng(sc.seed, trial, Stream::channel);
  Substream sym_rng(sc.seed, trial, Stream::symbols);
  const ChannelRealization ch = sample_channel(cfg, chan_rng);
  const SymbolDraw sym = sample_symbols(cfg, sym_rng, sc.model.polyphase_order);
  const RateSample s = make_rate_sample(ch, sym, cfg, sc.model.receiver);
  return {s.legacy_sic, s.mrs_wpc, s.mrs_gaussian_bound, s.sum_rate, s.joint_known_x1, s.legacy_alone};
}

}  // namespace detail

/// Vertices per SNR: A = (0, E[R_WPC]), B = (E[R0], E[R_WPC]),
/// C = (E[sum rate], 0), D = (E[R0], 0). The boundary is the polyline
/// A-B-C; B-C is reached by time sharing. D is the legacy rate with x1
/// treated as noise.
inline RegionResult run_rate_region(Scenario sc) {
  sc.validate();
  if (sc.cfg.K != 1) throw config_error("rate region needs K = 1");
  std::sort(sc.snr_grid_db.begin(), sc.snr_grid_db.end());
  RegionResult res{sc, {}};
  for (double snr : sc.snr_grid_db) {
    const SystemConfig cfg = sc.cfg.with_snr_db(snr);
    const auto trials = run_trials<detail::RegionTrial>(sc.trials, sc.workers,
                                                        [&](std::size_t i) { return detail::region_trial(sc, cfg, i); });
    using T = detail::RegionTrial;
    const Estimate r0 = summarize_field(trials, &T::r0);
    const Estimate wpc = summarize_field(trials, &T::wpc);
    const Estimate sum = summarize_field(trials, &T::sum);
    RegionPoint p;
    p.snr_db = snr;
    p.A = {'A', {}, wpc};
    p.B = {'B', r0, wpc};
    p.C = {'C', sum, {}};
    p.D = {'D', r0, {}};
    p.legacy_alone = summarize_field(trials, &T::alone);
    p.joint_known_x1 = summarize_field(trials, &T::joint);
    p.mrs_gauss = summarize_field(trials, &T::gauss);
    res.points.push_back(p);
  }
  return res;
}

// ---------------------------------------------------------- LAR convergence

struct LarPoint {
  int value = 0;
  Estimate exact;
  Estimate lar;
  Estimate lar_separable;  // nt growth only
  double rel_gap = 0.0;         // |mean exact - mean lar| / mean lar
  double median_rel_gap = 0.0;  // median over trials of |exact - lar| / lar
};

struct LarResult {
  Scenario scenario;
  std::vector<LarPoint> points;
};

namespace detail {

struct LarTrial {
  double exact = 0, lar = 0, separable = 0, gap = 0;
};

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

}  // namespace detail

/// Exact sum rate against its large-array limit along a grid of nr (or nt)
/// values. The limit is evaluated on the trial's own keyhole vectors on the
/// fixed side (g_t when nr grows, g_r when nt grows).
inline LarResult run_lar_convergence(Scenario sc) {
  sc.validate();
  if (sc.snr_grid_db.size() != 1) throw config_error("LAR convergence takes exactly one SNR value");
  if (sc.grid.empty()) throw config_error("LAR convergence needs a non-empty grid");
  for (int v : sc.grid) {
    if (v < 1) throw config_error("grid values must be >= 1");
    if (v > kMaxGrownDim) throw size_error("grown dimension exceeds 2^13");
  }
  if (sc.grow == GrowDim::nt && sc.cfg.nr < sc.cfg.K) throw config_error("nt growth needs nr >= K");

  LarResult res{sc, {}};
  const SystemConfig base = sc.cfg.with_snr_db(sc.snr_grid_db.front());
  for (int v : sc.grid) {
    SystemConfig cfg = base;
    (sc.grow == GrowDim::nr ? cfg.nr : cfg.nt) = v;
    cfg.validate();
    const auto trials = run_trials<detail::LarTrial>(sc.trials, sc.workers, [&](std::size_t i) {
      Substream rng(sc.seed, i, Stream::channel);
      const ChannelRealization ch = sample_channel(cfg, rng);
      detail::LarTrial t;
      t.exact = sum_rate(ch, cfg);
      if (sc.grow == GrowDim::nr) {
        t.lar = lar_rx_limit(detail::transmit_side(ch), cfg, sc.model.lar_constant);
        t.separable = t.lar;
      } else {
        const LarTxLimit lim = lar_tx_limit(detail::receive_side(ch), cfg);
        t.lar = lim.exact;
        t.separable = lim.separable;
      }
      t.gap = std::abs(t.exact - t.lar) / t.lar;
      return t;
    });
    using T = detail::LarTrial;
    LarPoint p;
    p.value = v;
    p.exact = summarize_field(trials, &T::exact);
    p.lar = summarize_field(trials, &T::lar);
    p.lar_separable = summarize_field(trials, &T::separable);
    p.rel_gap = std::abs(p.exact.mean - p.lar.mean) / p.lar.mean;
    std::vector<double> gaps;
    gaps.reserve(trials.size());
    for (const auto& t : trials) gaps.push_back(t.gap);
    p.median_rel_gap = detail::median(std::move(gaps));
    res.points.push_back(p);
  }
  return res;
}

// -------------------------------------------------------- estimation sweep

struct EstimationPoint {
  double snr_db = 0.0;
  Estimate sum_rate;
  Estimate est_lower_bound;
  Estimate error_variance;  // per-entry variance of sqrt(beta_K) (G_hat - G)
  double predicted_error_variance = 0.0;  // sigma2 / (m0 m1 rho_p)
  double error_cov_scale = 0.0;
};

struct EstimationSweepResult {
  Scenario scenario;
  std::vector<EstimationPoint> points;
};

/// Perfect- against estimated-CSI rates and the LS error statistics per SNR.
inline EstimationSweepResult run_estimation_sweep(Scenario sc) {
  sc.validate();
  std::sort(sc.snr_grid_db.begin(), sc.snr_grid_db.end());
  EstimationSweepResult res{sc, {}};
  struct Trial {
    double sum = 0, est = 0, err = 0;
  };
  for (double snr : sc.snr_grid_db) {
    const SystemConfig cfg = sc.cfg.with_snr_db(snr);
    cfg.validate_training();
    const PilotBlock pilots = build_pilots(cfg);
    const double sqrt_beta = std::sqrt(scaling_factor(cfg));
    const auto trials = run_trials<Trial>(sc.trials, sc.workers, [&](std::size_t i) {
      Substream chan_rng(sc.seed, i, Stream::channel);
      Substream noise_rng(sc.seed, i, Stream::pilot_noise);
      const ChannelRealization ch = sample_channel(cfg, chan_rng);
      const EstimationResult est = estimate_channel(ch, pilots, cfg, noise_rng, sc.model.est_bound);
      const double err = (sqrt_beta * (est.G_hat - ch.G)).squaredNorm() / static_cast<double>(ch.G.size());
      return Trial{sum_rate(ch, cfg), est.rate_lower_bound_bits, err};
    });
    EstimationPoint p;
    p.snr_db = snr;
    p.sum_rate = summarize_field(trials, &Trial::sum);
    p.est_lower_bound = summarize_field(trials, &Trial::est);
    p.error_variance = summarize_field(trials, &Trial::err);
    p.predicted_error_variance = cfg.sigma2 / (static_cast<double>(pilots.Np()) * cfg.rho_p());
    p.error_cov_scale = error_covariance_scale(cfg);
    res.points.push_back(p);
  }
  return res;
}

}  // namespace mrs
