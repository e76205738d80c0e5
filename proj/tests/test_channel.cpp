// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "mrs_lab/channel.hpp"
#include "mrs_lab/stats.hpp"

using namespace mrs;

namespace {

SystemConfig link(int nt, int nr, int k, double alpha_db = -3.0) {
  SystemConfig c;
  c.nt = nt;
  c.nr = nr;
  c.K = k;
  c.alpha = alpha_from_db(alpha_db);
  return c;
}

}  // namespace

// ------------------------------------------------------------------ config

TEST(Config, DecibelConversions) {
  EXPECT_DOUBLE_EQ(db_to_linear(20.0), 100.0);
  EXPECT_NEAR(std::norm(alpha_from_db(-3.0)), 0.50118723362727224, 1e-15);
  EXPECT_EQ(alpha_from_db(-INFINITY), Complex(0.0, 0.0));
  EXPECT_NEAR(std::arg(alpha_from_db(0.0, 0.5)), 0.5, 1e-15);
}

TEST(Config, DerivedPowers) {
  SystemConfig c = link(2, 4, 1);
  c.gamma_db = 20.0;
  EXPECT_DOUBLE_EQ(c.rho_d(), 50.0);
  EXPECT_DOUBLE_EQ(c.rho_p(), 50.0);
  c.rho_p_override = 7.0;
  EXPECT_DOUBLE_EQ(c.rho_p(), 7.0);
  EXPECT_EQ(c.m1_resolved(), 2);
  EXPECT_EQ(c.pilot_length(), 128);
  c.K = 3;
  EXPECT_EQ(c.m1_resolved(), 4);
}

TEST(Config, BaselineKeepsTrainingLength) {
  const SystemConfig c = link(2, 4, 1).with_K(0);
  EXPECT_EQ(c.K, 0);
  EXPECT_EQ(c.pilot_length(), 128);
}

TEST(Config, ValidationRejectsBadValues) {
  EXPECT_NO_THROW(link(2, 4, 1).validate_training());
  EXPECT_THROW(link(0, 4, 1).validate(), config_error);
  EXPECT_THROW(link(2, 0, 1).validate(), config_error);
  EXPECT_THROW(link(2, 4, -1).validate(), config_error);
  SystemConfig c = link(2, 4, 1);
  c.sigma2 = 0.0;
  EXPECT_THROW(c.validate(), config_error);
  c = link(2, 4, 1);
  c.m1 = 3;
  EXPECT_THROW(c.validate_training(), config_error);
  c.m1 = 1;
  EXPECT_THROW(c.validate_training(), config_error);
  c = link(2, 4, 1);
  c.m0 = 48;
  EXPECT_THROW(c.validate_training(), config_error);
  c = link(4, 4, 1);
  c.m0 = 2;
  EXPECT_THROW(c.validate_training(), config_error);
  c = link(2, 4, 1);
  c.N = 128;
  EXPECT_THROW(c.validate_training(), config_error);
}

// ----------------------------------------------------------------- scaling

TEST(ScalingFactor, DirectOnly) { EXPECT_DOUBLE_EQ(scaling_factor(link(2, 4, 0)), 0.25); }

TEST(ScalingFactor, OneKeyhole) {
  EXPECT_NEAR(scaling_factor(link(2, 4, 1)), 1.0 / (4.0 * (1.0 + 0.50118723362727224)), 1e-15);
  EXPECT_NEAR(scaling_factor(link(2, 4, 1)), 0.166535, 1e-6);
}

TEST(ScalingFactor, ZeroAlphaFallsBack) { EXPECT_DOUBLE_EQ(scaling_factor(link(2, 2, 1, -INFINITY)), 0.5); }

// ------------------------------------------------------------------ direct

TEST(SampleDirect, UnitVarianceZeroMean) {
  const SystemConfig c = link(2, 4, 0);
  constexpr int kDraws = 100000;
  std::vector<double> energy(kDraws), re(kDraws);
  for (int t = 0; t < kDraws; ++t) {
    Substream rng(5, t, Stream::channel);
    const CMatrix g = sample_direct(c, rng);
    energy[t] = g.squaredNorm() / 8.0;
    re[t] = g(1, 0).real();
  }
  EXPECT_NEAR(summarize(energy).mean, 1.0, 0.01);
  const Estimate m = summarize(re);
  EXPECT_LE(std::abs(m.mean), 3.0 * m.std_error);
}

TEST(SampleDirect, DeterministicPerSubstream) {
  const SystemConfig c = link(3, 5, 0);
  Substream a(9, 17, Stream::channel), b(9, 17, Stream::channel), other(9, 18, Stream::channel);
  const CMatrix ga = sample_direct(c, a);
  EXPECT_EQ(ga, sample_direct(c, b));
  EXPECT_NE(ga, sample_direct(c, other));
}

// ----------------------------------------------------------------- keyhole

TEST(SampleKeyhole, RankOneOuterProduct) {
  const SystemConfig c = link(3, 4, 1);
  Substream rng(1, 0, Stream::channel);
  const Keyhole kh = sample_keyhole(c, rng);
  EXPECT_LE((kh.G - c.alpha * kh.g_r * kh.g_t.adjoint()).norm(), 1e-14 * kh.G.norm());
  const Eigen::JacobiSVD<CMatrix> svd(kh.G);
  EXPECT_LE(svd.singularValues()(1), 1e-10 * svd.singularValues()(0));
  EXPECT_NEAR(kh.G.squaredNorm(), c.alpha_power() * kh.g_r.squaredNorm() * kh.g_t.squaredNorm(),
              1e-10 * kh.G.squaredNorm());
}

TEST(SampleKeyhole, MeanEnergy) {
  const SystemConfig c = link(2, 4, 1);
  constexpr int kDraws = 100000;
  std::vector<double> e(kDraws);
  for (int t = 0; t < kDraws; ++t) {
    Substream rng(6, t, Stream::channel);
    e[t] = sample_keyhole(c, rng).G.squaredNorm() / 8.0;
  }
  EXPECT_NEAR(summarize(e).mean / c.alpha_power(), 1.0, 0.01);
}

TEST(SampleKeyhole, ZeroAlphaGivesZero) {
  Substream rng(1, 0, Stream::channel);
  EXPECT_EQ(sample_keyhole(link(2, 3, 1, -INFINITY), rng).G.norm(), 0.0);
}

TEST(SampleKeyhole, NeedsAnMrsAntenna) {
  Substream rng(1, 0, Stream::channel);
  EXPECT_THROW(sample_keyhole(link(2, 3, 0), rng), config_error);
}

// --------------------------------------------------------------- composite

TEST(Composite, DirectOnlyIsG0) {
  Substream rng(2, 0, Stream::channel);
  const ChannelRealization ch = sample_channel(link(2, 4, 0), rng);
  EXPECT_EQ(ch.G, ch.G0);
  EXPECT_EQ(ch.K(), 0);
}

TEST(Composite, BlockLayout) {
  Substream rng(2, 0, Stream::channel);
  const ChannelRealization ch = sample_channel(link(2, 4, 2), rng);
  ASSERT_EQ(ch.G.rows(), 4);
  ASSERT_EQ(ch.G.cols(), 6);
  EXPECT_EQ(ch.G.leftCols(2), ch.G0);
  EXPECT_EQ(ch.G.middleCols(2, 2), ch.keyholes[0].G);
  EXPECT_EQ(ch.G.rightCols(2), ch.keyholes[1].G);
}

TEST(Composite, FourByFourForReferenceLink) {
  Substream rng(3, 0, Stream::channel);
  const ChannelRealization ch = sample_channel(link(2, 4, 1), rng);
  EXPECT_EQ(ch.G.rows(), 4);
  EXPECT_EQ(ch.G.cols(), 4);
}

TEST(Composite, DimensionMismatchRejected) {
  Substream rng(3, 0, Stream::channel);
  Keyhole kh = sample_keyhole(link(3, 4, 1), rng);
  EXPECT_THROW(assemble_composite(CMatrix::Ones(4, 2), {kh}), input_error);
}

TEST(Composite, NormalizationAndReceivedSnr) {
  const SystemConfig c = link(2, 4, 1);
  constexpr int kDraws = 100000;
  std::vector<double> e(kDraws), snr(kDraws);
  const double beta = scaling_factor(c);
  for (int t = 0; t < kDraws; ++t) {
    Substream rng(7, t, Stream::channel);
    const double g2 = sample_channel(c, rng).G.squaredNorm();
    e[t] = g2 / c.nt;
    // Received SNR: (P_t / nt) E||G||^2 beta_K / sigma2 with P_t = nt rho_d.
    snr[t] = c.rho_d() * g2 * beta / c.sigma2;
  }
  EXPECT_NEAR(summarize(e).mean / 6.0047489, 1.0, 0.01);
  EXPECT_NEAR(summarize(snr).mean / c.gamma(), 1.0, 0.01);
}

// ----------------------------------------------------------------- symbols

TEST(Symbols, UnitModulusAndMoments) {
  const SystemConfig c = link(2, 4, 2);
  constexpr int kDraws = 100000;
  CMatrix corr = CMatrix::Zero(2, 2);
  Complex mean = 0.0;
  std::vector<double> p(kDraws);
  for (int t = 0; t < kDraws; ++t) {
    Substream rng(8, t, Stream::symbols);
    const SymbolDraw s = sample_symbols(c, rng);
    for (int k = 0; k < 2; ++k) ASSERT_NEAR(std::abs(s.x1(k)), 1.0, 1e-15);
    corr += s.x1 * s.x1.adjoint();
    mean += s.x1(0);
    p[t] = std::norm(s.x0(1));
    ASSERT_LE((s.x0 - std::sqrt(c.rho_d()) * s.u).norm(), 1e-12 * s.x0.norm());
  }
  corr /= kDraws;
  EXPECT_LE((corr - CMatrix::Identity(2, 2)).norm() / std::sqrt(2.0), 0.01);
  EXPECT_LE(std::abs(mean) / kDraws, 0.01);
  EXPECT_NEAR(summarize(p).mean / c.rho_d(), 1.0, 0.01);
}

TEST(Symbols, PolyphaseAlphabet) {
  const SystemConfig c = link(2, 4, 1);
  std::set<long> seen;
  for (int t = 0; t < 2000; ++t) {
    Substream rng(9, t, Stream::symbols);
    const SymbolDraw s = sample_symbols(c, rng, 4);
    const double idx = std::arg(s.x1(0)) / (std::numbers::pi / 2.0);
    ASSERT_NEAR(idx, std::round(idx), 1e-12);
    seen.insert(std::lround(idx + 4.0) % 4);
  }
  EXPECT_EQ(seen.size(), 4u);
  Substream rng(9, 0, Stream::symbols);
  EXPECT_THROW(sample_symbols(c, rng, -1), config_error);
}

// --------------------------------------------------------------------- rng

TEST(Substream, StreamsAreIndependentlyKeyed) {
  Substream a(1, 0, Stream::channel), b(1, 0, Stream::symbols), c(2, 0, Stream::channel);
  const auto x = a.next_u64();
  EXPECT_NE(x, b.next_u64());
  EXPECT_NE(x, c.next_u64());
  EXPECT_EQ(a.counter(), 1u);
}

TEST(Substream, UniformRange) {
  Substream r(3, 3, Stream::channel);
  std::vector<double> u(200000);
  for (auto& v : u) {
    v = r.uniform();
    ASSERT_GE(v, 0.0);
    ASSERT_LT(v, 1.0);
  }
  EXPECT_NEAR(summarize(u).mean, 0.5, 0.005);
}
