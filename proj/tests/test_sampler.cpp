#include <gtest/gtest.h>

#include "support/generators.hpp"
#include "support/oracles.hpp"
#include "vau/error.hpp"
#include "vau/sampler.hpp"

using namespace vau;

namespace {

ScoreTimeline tl(std::vector<double> s) {
  ScoreTimeline t;
  t.scores = Eigen::Map<Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
  return t;
}

std::vector<double> vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

using Idx = std::vector<std::size_t>;

}  // namespace

TEST(CumulativeMass, Examples) {
  EXPECT_EQ(vec(cumulative_mass(tl({0, 0, 0, 0}), 0.1).values),
            (std::vector<double>{0.1, 0.2, 0.30000000000000004, 0.4}));
  const auto m = cumulative_mass(tl({0, 1, 0, 0}), 0.1).values;
  EXPECT_DOUBLE_EQ(m[0], 0.1);
  EXPECT_DOUBLE_EQ(m[1], 1.2);
  EXPECT_DOUBLE_EQ(m[2], 1.3);
  EXPECT_DOUBLE_EQ(m[3], 1.4);
  EXPECT_EQ(vec(cumulative_mass(tl({1, 1}), 0.0).values), (std::vector<double>{1, 2}));
  EXPECT_THROW(cumulative_mass(tl({1}), -0.5), ParameterError);
}

TEST(CumulativeMass, EntriesAreCorrectlyRoundedExactSums) {
  gen::Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto t = gen::timeline(rng, gen::between(rng, 1, 200));
    const double tau = gen::uniform(rng, 0, 1);
    const auto m = cumulative_mass(t, tau).values;
    oracle::Rational acc = 0;
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      acc += oracle::exact(t.scores[i]) + oracle::exact(tau);
      EXPECT_EQ(m[i], oracle::nearest(acc)) << "trial " << trial << " index " << i;
      if (i > 0) EXPECT_GT(m[i], m[i - 1]);
    }
  }
}

TEST(SampleAts, ConstantScoresReduceToUniformSpacing) {
  EXPECT_EQ(sample_ats(tl({0, 0, 0, 0}), 0.1, 2).indices, (Idx{0, 2}));
}

TEST(SampleAts, SpikeCollisionIsNudgedUpward) {
  EXPECT_EQ(ats_target_indices(tl({0, 1, 0, 0}), 0.1, 2), (Idx{1, 1}));
  EXPECT_EQ(sample_ats(tl({0, 1, 0, 0}), 0.1, 2).indices, (Idx{1, 2}));
}

TEST(SampleAts, NudgingWalksDownAtTheEnd) {
  // all mass on the last frame: every target lands there
  EXPECT_EQ(ats_target_indices(tl({0, 0, 0, 1}), 0.0, 3), (Idx{3, 3, 3}));
  EXPECT_EQ(sample_ats(tl({0, 0, 0, 1}), 0.0, 3).indices, (Idx{1, 2, 3}));
}

TEST(SampleAts, TwoRegionShares) {
  std::vector<double> s(200, 0.05);
  std::fill(s.begin() + 100, s.end(), 0.95);
  const auto raw = ats_target_indices(tl(s), 0.1, 20);
  const auto first = std::count_if(raw.begin(), raw.end(), [](std::size_t i) { return i < 100; });
  // 20 * 15 / 120 = 2.5
  EXPECT_GE(first, 2);
  EXPECT_LE(first, 3);
}

TEST(SampleAts, Errors) {
  EXPECT_THROW(sample_ats(tl({0.5, 0.5}), 0.1, 3), ParameterError);
  try {
    sample_ats(tl({0, 0, 0}), 0.0, 1);
    FAIL();
  } catch (const ParameterError& e) {
    EXPECT_NE(std::string(e.what()).find("degenerate mass"), std::string::npos);
  }
  EXPECT_THROW(sample_ats(tl({1.5}), 0.1, 1), ValidationError);
}

TEST(SampleAts, TargetsMatchSpanOracle) {
  gen::Rng rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t frames = gen::between(rng, 1, 300);
    const auto t = gen::timeline(rng, frames);
    const double tau = gen::below(rng, 4) == 0 ? 0.0 : gen::uniform(rng, 0, 2);
    if (tau == 0.0 && t.scores.sum() == 0.0) continue;
    const std::size_t n = gen::between(rng, 1, frames);
    EXPECT_EQ(ats_target_indices(t, tau, n), oracle::ats_spans(vec(t.scores), tau, n)) << "trial " << trial;
  }
}

TEST(SampleAts, OutputInvariants) {
  gen::Rng rng(19);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t frames = gen::between(rng, 1, 200);
    const auto t = gen::timeline(rng, frames);
    const std::size_t n = gen::between(rng, 1, frames);
    const auto raw = ats_target_indices(t, 0.1, n);
    const auto s = sample_ats(t, 0.1, n);
    ASSERT_EQ(s.indices.size(), n);
    EXPECT_TRUE(std::is_sorted(raw.begin(), raw.end()));
    for (std::size_t k = 1; k < n; ++k) EXPECT_LT(s.indices[k - 1], s.indices[k]);
    EXPECT_LT(s.indices.back(), frames);
    // without collisions nudging is the identity
    if (std::adjacent_find(raw.begin(), raw.end()) == raw.end()) EXPECT_EQ(s.indices, raw);
  }
}

TEST(SampleAts, ScaleCovariance) {
  // masses (s + tau) scaled by 1/2 exactly: s/2 with tau/2
  gen::Rng rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t frames = gen::between(rng, 1, 150);
    auto t = gen::timeline(rng, frames);
    const double tau = gen::uniform(rng, 0.01, 1);
    const std::size_t n = gen::between(rng, 1, frames);
    auto half = t;
    half.scores /= 2.0;
    EXPECT_EQ(sample_ats(t, tau, n).indices, sample_ats(half, tau / 2.0, n).indices);
  }
}

TEST(SampleAts, ConstantScoresEqualUniform) {
  gen::Rng rng(29);
  for (double tau : {0.01, 0.1, 1.0}) {
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t frames = gen::between(rng, 1, 512);
      const double c = gen::below(rng, 5) == 0 ? 0.0 : gen::uniform(rng);
      ScoreTimeline t;
      t.scores = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(frames), c);
      const std::size_t n = gen::between(rng, 1, frames);
      EXPECT_EQ(sample_ats(t, tau, n).indices, sample_uniform(frames, n).indices)
          << "T=" << frames << " n=" << n << " c=" << c << " tau=" << tau;
    }
  }
}

TEST(SampleUniform, Examples) {
  EXPECT_EQ(sample_uniform(4, 4).indices, (Idx{0, 1, 2, 3}));
  EXPECT_EQ(sample_uniform(4, 2).indices, (Idx{0, 2}));
  EXPECT_EQ(sample_uniform(10, 3).indices, (Idx{1, 4, 8}));
  EXPECT_THROW(sample_uniform(3, 4), ParameterError);
}

TEST(SampleUniform, MidpointEnumeration) {
  // index k holds the midpoint target (2k-1)/(2N) of the unit interval when
  // frame t covers ((t)/T, (t+1)/T]
  for (std::size_t frames = 1; frames <= 60; ++frames) {
    for (std::size_t n = 1; n <= frames; ++n) {
      Idx expected;
      for (std::size_t k = 1; k <= n; ++k) {
        std::size_t t = 0;
        while ((t + 1) * 2 * n < (2 * k - 1) * frames) ++t;
        expected.push_back(t);
      }
      EXPECT_EQ(sample_uniform(frames, n).indices, expected) << frames << "/" << n;
    }
  }
}

TEST(SampleTopk, Examples) {
  EXPECT_EQ(sample_topk(tl({0.1, 0.9, 0.5}), 1).indices, (Idx{1}));
  EXPECT_EQ(sample_topk(tl({0.5, 0.5, 0.5}), 2).indices, (Idx{0, 1}));
  EXPECT_EQ(sample_topk(tl({0.2, 0.8, 0.8, 0.1}), 2).indices, (Idx{1, 2}));
  EXPECT_THROW(sample_topk(tl({0.2}), 2), ParameterError);
}

TEST(EventCoverage, Examples) {
  FrameLabels l{{0, 1, 1, 0}};
  auto c = event_coverage({{1, 2}, 2}, l);
  EXPECT_DOUBLE_EQ(c.anomaly_recall, 1.0);
  EXPECT_DOUBLE_EQ(c.events_hit, 1.0);
  c = event_coverage({{0, 3}, 2}, l);
  EXPECT_DOUBLE_EQ(c.anomaly_recall, 0.0);
  EXPECT_DOUBLE_EQ(c.events_hit, 0.0);
  EXPECT_EQ(c.runs_total, 1u);
  c = event_coverage({{0, 3}, 2}, FrameLabels{{0, 0, 0, 0}});
  EXPECT_EQ(c.runs_total, 0u);
  EXPECT_DOUBLE_EQ(c.events_hit, 0.0);
}

TEST(EventCoverage, MatchesRunEnumeration) {
  gen::Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    FrameLabels l;
    for (int i = 0; i < 200; ++i) l.labels.push_back(gen::below(rng, 6) == 0);
    const auto s = sample_uniform(200, gen::between(rng, 1, 40));
    // runs: a frame starts a run if it is 1 and its left neighbour is not
    std::size_t runs = 0, hit = 0, positive = 0;
    for (std::size_t i = 0; i < 200; ++i) {
      if (!l.labels[i] || (i > 0 && l.labels[i - 1])) continue;
      ++runs;
      std::size_t j = i;
      while (j < 200 && l.labels[j]) ++j;
      bool any = false;
      for (std::size_t idx : s.indices) any = any || (idx >= i && idx < j);
      hit += any;
    }
    for (std::size_t idx : s.indices) positive += l.labels[idx];
    const auto c = event_coverage(s, l);
    EXPECT_EQ(c.runs_total, runs);
    EXPECT_EQ(c.runs_hit, hit);
    EXPECT_DOUBLE_EQ(c.anomaly_recall, static_cast<double>(positive) / s.indices.size());
  }
}

TEST(TemporalSpread, MeanGapOverLength) {
  EXPECT_DOUBLE_EQ(temporal_spread({{0, 2, 8}, 3}, 10), 0.4);
  EXPECT_DOUBLE_EQ(temporal_spread({{5}, 1}, 10), 0.0);
}

TEST(Samplers, ParseNames) {
  EXPECT_EQ(parse_sampler("topk"), SamplerKind::topk);
  EXPECT_EQ(to_string(SamplerKind::ats), "ats");
  EXPECT_THROW(parse_sampler("random"), ParameterError);
}
