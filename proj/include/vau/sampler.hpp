#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "vau/timeline.hpp"

namespace vau {

inline constexpr double k_default_tau = 0.1;
inline constexpr std::size_t k_default_budget = 16;

/// Strictly increasing scored-frame indices chosen by a sampler.
struct SampleSet {
  std::vector<std::size_t> indices;
  std::size_t budget = 0;
};

/// Prefix sums of (s_i + tau). Entries are the correctly rounded values of
/// the exact sums.
struct CumulativeMass {
  Eigen::VectorXd values;
  double tau = 0.0;

  double total() const { return values.size() ? values[values.size() - 1] : 0.0; }
};

enum class SamplerKind { ats, uniform, topk };

SamplerKind parse_sampler(std::string_view name);
std::string_view to_string(SamplerKind kind);

CumulativeMass cumulative_mass(const ScoreTimeline& t, double tau);

/// Inverse-CDF image of the midpoint targets u_k = (k - 1/2) M / N: for each
/// k the smallest t with S(t) >= u_k. May contain repeats; see sample_ats.
std::vector<std::size_t> ats_target_indices(const ScoreTimeline& t, double tau, std::size_t n);

/// Anomaly-focused sampling: target indices with repeats resolved by moving
/// each collision to the next free index above it (or below, if none).
SampleSet sample_ats(const ScoreTimeline& t, double tau, std::size_t n);

/// Midpoint rule on a flat mass: smallest t with 2N(t+1) >= (2k-1)T.
SampleSet sample_uniform(std::size_t frame_count, std::size_t n);

/// The n highest scores, earlier index first among ties, returned in time order.
SampleSet sample_topk(const ScoreTimeline& t, std::size_t n);

SampleSet sample(SamplerKind kind, const ScoreTimeline& t, double tau, std::size_t n);

struct Coverage {
  double anomaly_recall = 0.0;  ///< sampled frames that are anomalous / sampled frames
  double events_hit = 0.0;      ///< hit runs / runs, 0 when there are no runs
  std::size_t runs_hit = 0;
  std::size_t runs_total = 0;
};

Coverage event_coverage(const SampleSet& s, const FrameLabels& labels);

/// Mean gap between consecutive indices divided by the timeline length.
double temporal_spread(const SampleSet& s, std::size_t frame_count);

}  // namespace vau
