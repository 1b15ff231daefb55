#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace vau {

/// Label reserved for non-anomalous intervals and videos.
inline constexpr std::string_view k_normal_label = "Normal";

/// Category names of the two source taxonomies (UCF-Crime, then XD-Violence).
const std::vector<std::string>& anomaly_categories();

/// Per-scored-frame anomaly scores. Scored frame i covers raw frame i*stride.
struct ScoreTimeline {
  Eigen::VectorXd scores;
  int stride = 16;
  double fps = 30.0;

  Eigen::Index size() const { return scores.size(); }
  /// Seconds at which scored frame i starts.
  double timestamp(Eigen::Index i) const;
};

struct EventInterval {
  double start_s = 0.0;
  double end_s = 0.0;
  std::string label;

  bool anomalous() const { return label != k_normal_label; }
};

/// Binary per-frame labels aligned index-for-index with a ScoreTimeline.
struct FrameLabels {
  std::vector<std::uint8_t> labels;

  std::size_t size() const { return labels.size(); }
  std::size_t positives() const;
};

/// Every invariant violation of the timeline; empty means valid.
std::vector<std::string> validate_timeline(const ScoreTimeline& t);

/// labels[i] = 1 iff (i*stride)/fps lies in [start_s, end_s) of some
/// non-Normal event. Comparisons use exact rationals built from the
/// shortest decimal form of fps and of each bound.
/// Throws ValidationError naming the first reversed interval.
FrameLabels derive_frame_labels(const std::vector<EventInterval>& events, std::size_t frame_count,
                                int stride, double fps);

/// Nearest scored frame for a time in seconds, ties toward the earlier
/// frame, clamped to [0, frame_count).
std::size_t frame_index_at(double seconds, std::size_t frame_count, int stride, double fps);

/// Number of scored frames covering a clip of raw_frames frames.
std::size_t scored_frame_count(std::size_t raw_frames, int stride);

/// Maximal runs of 1s as half-open [begin, end) index pairs.
std::vector<std::pair<std::size_t, std::size_t>> positive_runs(const FrameLabels& labels);

}  // namespace vau
