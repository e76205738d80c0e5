// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "mrs_lab/channel.hpp"
#include "mrs_lab/estimation.hpp"
#include "mrs_lab/stats.hpp"

using namespace mrs;

namespace {

SystemConfig training_link(int k = 1, double gamma_db = 20.0) {
  SystemConfig c;
  c.nt = 2;
  c.nr = 4;
  c.K = k;
  c.gamma_db = gamma_db;
  c.alpha = alpha_from_db(-3.0);
  c.m0 = 64;
  c.m1 = 2;
  c.N = 1000;
  return c;
}

double rel_residual(const CMatrix& a, const CMatrix& b) { return (a - b).norm() / b.norm(); }

}  // namespace

// ---------------------------------------------------------------- Hadamard

TEST(Hadamard, OrderTwo) {
  Eigen::Matrix2i expected;
  expected << 1, 1, 1, -1;
  EXPECT_EQ(hadamard_int(2), expected);
}

TEST(Hadamard, RecursionAndExactOrthogonality) {
  Eigen::Matrix2i h1;
  h1 << 1, 1, 1, -1;
  EXPECT_EQ(hadamard_int(4), kronecker(h1, h1));
  for (int n = 1; n <= 1024; n *= 2) {
    const Eigen::MatrixXi h = hadamard_int(n);
    EXPECT_EQ(h * h.transpose(), n * Eigen::MatrixXi::Identity(n, n)) << n;
    EXPECT_TRUE((h.row(0).array() == 1).all());
    EXPECT_TRUE((h.col(0).array() == 1).all());
  }
}

TEST(Hadamard, ComplexViewMatchesIntegers) {
  EXPECT_EQ(hadamard(8).real(), hadamard_int(8).cast<double>());
  EXPECT_EQ(hadamard(8).imag().norm(), 0.0);
}

TEST(Hadamard, RejectsBadOrders) {
  EXPECT_THROW(hadamard_int(0), input_error);
  EXPECT_THROW(hadamard_int(12), input_error);
  EXPECT_THROW(hadamard_int(1 << 15), input_error);
}

// ------------------------------------------------------------------ pilots

TEST(Pilots, ReferenceTrainingBlock) {
  const SystemConfig c = training_link();
  const PilotBlock p = build_pilots(c);
  ASSERT_EQ(p.Psi_p.rows(), 4);
  ASSERT_EQ(p.Psi_p.cols(), 128);
  EXPECT_EQ(p.Np(), 128);
  const CMatrix target = 128.0 * c.rho_p() * CMatrix::Identity(4, 4);
  EXPECT_LE(rel_residual(p.Psi_p * p.Psi_p.adjoint(), target), 1e-12);
  EXPECT_LE(rel_residual(p.X0p * p.X0p.adjoint(), 64.0 * c.rho_p() * CMatrix::Identity(2, 2)), 1e-10);
  EXPECT_EQ(p.X1p * p.X1p.adjoint(), 2.0 * CMatrix::Identity(2, 2));
  EXPECT_TRUE((p.X1p.row(0).array() == Complex(1.0)).all());
}

TEST(Pilots, MrsHoldsSymbolAcrossLegacyBlock) {
  const PilotBlock p = build_pilots(training_link());
  // Repetition j carries X1p(k, j) times the legacy block.
  for (int j = 0; j < p.m1; ++j)
    EXPECT_EQ(p.Psi_p.block(2, j * p.m0, 2, p.m0), p.X1p(1, j) * p.X0p);
}

TEST(Pilots, DirectOnlyIsLegacyBlock) {
  SystemConfig c = training_link(0);
  c.m1 = 0;
  const PilotBlock p = build_pilots(c);
  EXPECT_EQ(p.X1p.rows(), 1);
  EXPECT_EQ(p.X1p.cols(), 1);
  EXPECT_EQ(p.Psi_p, p.X0p);
}

TEST(Pilots, InfeasibleLengthsRejected) {
  SystemConfig c = training_link(3);
  c.m1 = 2;
  EXPECT_THROW(build_pilots(c), config_error);
  c = training_link();
  c.N = 100;
  EXPECT_THROW(build_pilots(c), config_error);
}

// ------------------------------------------------------------ observation

TEST(Observation, NoiselessAndShape) {
  SystemConfig c = training_link();
  c.rho_d_override = 50.0;
  const PilotBlock p = build_pilots(c);
  c.sigma2 = 0.0;  // noise-free observation only
  Substream rng(1, 0, Stream::channel), noise(1, 0, Stream::pilot_noise);
  const auto ch = sample_channel(c, rng);
  const CMatrix y = observe_pilots(ch, p, c, noise);
  EXPECT_EQ(y.rows(), 4);
  EXPECT_EQ(y.cols(), 128);
  EXPECT_EQ(y, CMatrix(std::sqrt(scaling_factor(c)) * ch.G * p.Psi_p));
}

TEST(Observation, NoiseVariance) {
  SystemConfig c = training_link();
  c.sigma2 = 2.0;
  const PilotBlock p = build_pilots(c);
  Substream rng(2, 0, Stream::channel);
  const auto ch = sample_channel(c, rng);
  const CMatrix clean = std::sqrt(scaling_factor(c)) * ch.G * p.Psi_p;
  std::vector<double> power;
  for (int t = 0; t < 200; ++t) {
    Substream noise(2, t, Stream::pilot_noise);
    const CMatrix z = observe_pilots(ch, p, c, noise) - clean;
    for (Index i = 0; i < z.size(); ++i) power.push_back(std::norm(z.data()[i]));
  }
  ASSERT_GE(power.size(), 100000u);
  EXPECT_NEAR(summarize(power).mean / 2.0, 1.0, 0.01);
}

// ---------------------------------------------------------------- LS

TEST(LsEstimate, NoiselessRecovery) {
  SystemConfig c = training_link();
  c.rho_d_override = 50.0;
  const PilotBlock p = build_pilots(c);
  c.sigma2 = 0.0;  // noise-free observation only
  Substream rng(3, 0, Stream::channel), noise(3, 0, Stream::pilot_noise);
  const auto ch = sample_channel(c, rng);
  const EstimationResult r = ls_estimate(observe_pilots(ch, p, c, noise), p, c);
  EXPECT_LE(rel_residual(r.G_hat, ch.G), 1e-10);
  EXPECT_LE(rel_residual(r.G_hat_normalized, CMatrix(std::sqrt(scaling_factor(c)) * ch.G)), 1e-10);
}

TEST(LsEstimate, ErrorIsProjectedNoise) {
  const SystemConfig c = training_link();
  const PilotBlock p = build_pilots(c);
  Substream rng(4, 0, Stream::channel), noise(4, 0, Stream::pilot_noise), replay(4, 0, Stream::pilot_noise);
  const auto ch = sample_channel(c, rng);
  const CMatrix y = observe_pilots(ch, p, c, noise);
  const CMatrix z = y - std::sqrt(scaling_factor(c)) * ch.G * p.Psi_p;
  const EstimationResult r = ls_estimate(y, p, c);
  const CMatrix err = r.G_hat_normalized - std::sqrt(scaling_factor(c)) * ch.G;
  const CMatrix predicted = z * p.Psi_p.adjoint() / (128.0 * c.rho_p());
  EXPECT_LE(rel_residual(err, predicted), 1e-10);
}

TEST(LsEstimate, UnbiasedAndCalibratedErrorVariance) {
  const SystemConfig c = training_link();
  const PilotBlock p = build_pilots(c);
  Substream rng(5, 0, Stream::channel);
  const auto ch = sample_channel(c, rng);
  const double sb = std::sqrt(scaling_factor(c));
  constexpr int kTrials = 10000;
  std::vector<std::vector<double>> re(16), im(16);
  std::vector<double> var;
  for (int t = 0; t < kTrials; ++t) {
    Substream noise(5, t, Stream::pilot_noise);
    const CMatrix e = ls_estimate(observe_pilots(ch, p, c, noise), p, c).G_hat_normalized - sb * ch.G;
    for (Index i = 0; i < 16; ++i) {
      re[i].push_back(e.data()[i].real());
      im[i].push_back(e.data()[i].imag());
      var.push_back(std::norm(e.data()[i]));
    }
  }
  for (int i = 0; i < 16; ++i) {
    const Estimate a = summarize(re[i]), b = summarize(im[i]);
    EXPECT_LE(std::abs(a.mean), 3.0 * a.std_error) << i;
    EXPECT_LE(std::abs(b.mean), 3.0 * b.std_error) << i;
  }
  EXPECT_NEAR(summarize(var).mean / (c.sigma2 / (128.0 * c.rho_p())), 1.0, 0.03);
}

// -------------------------------------------------------- error covariance

TEST(ErrorCovariance, ReferenceScale) {
  EXPECT_DOUBLE_EQ(error_covariance_scale(training_link()), 0.03125);
}

TEST(ErrorCovariance, VanishesWithPilotPower) {
  SystemConfig c = training_link();
  c.rho_p_override = 1e12;
  EXPECT_LT(error_covariance_scale(c), 1e-10);
}

TEST(ErrorCovariance, MonteCarloMatch) {
  const SystemConfig c = training_link();
  const PilotBlock p = build_pilots(c);
  Substream rng(6, 0, Stream::channel);
  const auto ch = sample_channel(c, rng);
  const double sb = std::sqrt(scaling_factor(c));
  constexpr int kDraws = 100000;
  CMatrix cov = CMatrix::Zero(4, 4);
  for (int t = 0; t < kDraws; ++t) {
    Substream noise(6, t, Stream::pilot_noise), sym(6, t, Stream::symbols);
    const CMatrix e = ls_estimate(observe_pilots(ch, p, c, noise), p, c).G_hat_normalized - sb * ch.G;
    const SymbolDraw s = sample_symbols(c, sym);
    CVector psi(4);
    psi << s.x0, s.x1(0) * s.x0;
    const CVector v = e * psi;
    cov += v * v.adjoint();
  }
  cov /= kDraws;
  const CMatrix target = error_covariance_scale(c) * CMatrix::Identity(4, 4);
  EXPECT_LE(rel_residual(cov, target), 0.03);
}

// ---------------------------------------------------------- rate bound

TEST(RateBound, PerfectCsiLimit) {
  const SystemConfig c = training_link();
  Substream rng(7, 0, Stream::channel);
  const auto ch = sample_channel(c, rng);
  EXPECT_NEAR(estimated_csi_rate_bound(ch.G, c, 0.0, 0), sum_rate(ch, c), 1e-14);
}

TEST(RateBound, TimeFractionPrefactor) {
  const SystemConfig c = training_link();
  Substream rng(8, 0, Stream::channel);
  const auto ch = sample_channel(c, rng);
  EXPECT_NEAR(estimated_csi_rate_bound(ch.G, c, 0.0, 128), 0.872 * sum_rate(ch, c), 1e-13);
}

TEST(RateBound, BelowScaledPerfectRateOnEstimate) {
  const SystemConfig c = training_link();
  const PilotBlock p = build_pilots(c);
  for (int t = 0; t < 500; ++t) {
    Substream rng(9, t, Stream::channel), noise(9, t, Stream::pilot_noise);
    const auto ch = sample_channel(c, rng);
    const EstimationResult r = estimate_channel(ch, p, c, noise);
    EXPECT_GE(r.rate_lower_bound_bits, 0.0);
    EXPECT_LE(r.rate_lower_bound_bits, 0.872 * gram_logdet_rate(r.G_hat, per_antenna_snr(c)));
  }
}

TEST(RateBound, MonotoneInTrainingQuality) {
  const SystemConfig c = training_link();
  Substream rng(10, 0, Stream::channel);
  const CMatrix g_hat = sample_channel(c, rng).G;
  // Better training (higher rho_p or longer m0 m1) shrinks s.
  double prev = -1.0;
  for (double rho_p : {0.1, 1.0, 10.0, 100.0, 1000.0}) {
    SystemConfig cc = c;
    cc.rho_p_override = rho_p;
    const double r = estimated_csi_rate_bound(g_hat, cc, error_covariance_scale(cc), 128);
    EXPECT_GE(r, prev);
    prev = r;
  }
  prev = -1.0;
  for (int m0 : {2, 4, 16, 64, 256}) {
    SystemConfig cc = c;
    cc.m0 = m0;
    const double r = estimated_csi_rate_bound(g_hat, cc, error_covariance_scale(cc), 128);
    EXPECT_GE(r, prev);
    prev = r;
  }
  // Longer training costs data time.
  prev = 1e9;
  for (int np : {0, 64, 128, 512, 999}) {
    const double r = estimated_csi_rate_bound(g_hat, c, error_covariance_scale(c), np);
    EXPECT_LE(r, prev);
    prev = r;
  }
}

TEST(RateBound, TotalSnrVariant) {
  const SystemConfig c = training_link();
  Substream rng(11, 0, Stream::channel);
  const CMatrix g = sample_channel(c, rng).G;
  const double s = error_covariance_scale(c);
  const double snr = c.gamma() * scaling_factor(c) * c.sigma2 / (c.sigma2 + s);
  EXPECT_NEAR(estimated_csi_rate_bound(g, c, EstBoundSnr::total), 0.872 * gram_logdet_rate(g, snr), 1e-13);
  EXPECT_NEAR(estimated_csi_rate_bound(g, c), 0.872 * gram_logdet_rate(g, snr / 2.0), 1e-13);
}

TEST(RateBound, TrainingMustFitCoherence) {
  const SystemConfig c = training_link();
  EXPECT_THROW(estimated_csi_rate_bound(CMatrix::Ones(4, 4), c, 0.1, 1000), config_error);
}
