#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vau/features.hpp"
#include "vau/sampler.hpp"
#include "vau/timeline.hpp"

namespace vau::io {

namespace fs = std::filesystem;

struct VideoScores {
  std::string video;
  ScoreTimeline timeline;
};

struct VideoLabels {
  std::string video;
  FrameLabels labels;
  int stride = 16;
  double fps = 30.0;
};

/// Shortest decimal that parses back to exactly x.
std::string format_double(double x);

std::string read_file(const fs::path& path);

/// Writes to a sibling temporary and renames over path, so readers never see
/// a partial file.
void write_file_atomic(const fs::path& path, std::string_view content);

// Score files
std::vector<VideoScores> parse_scores_jsonl(std::string_view text, const std::string& source = "<scores>");
std::vector<VideoScores> read_scores(const fs::path& path, int stride = 16, double fps = 30.0);
std::string format_scores_jsonl(const std::vector<VideoScores>& videos);
std::string format_scores_csv(const ScoreTimeline& t);
ScoreTimeline parse_scores_csv(std::string_view text, int stride, double fps,
                               const std::string& source = "<scores>");

// Event files
std::vector<EventInterval> parse_events_json(std::string_view text, const std::string& source = "<events>");
std::vector<EventInterval> read_events(const fs::path& path);
std::string format_events_json(const std::vector<EventInterval>& events);

// Label files
std::vector<VideoLabels> parse_labels_jsonl(std::string_view text, const std::string& source = "<labels>");
std::vector<VideoLabels> read_labels(const fs::path& path);
std::string format_labels_line(const VideoLabels& v);

// Sample sets
std::string format_sample_line(const std::string& video, const SampleSet& s, SamplerKind kind, double tau);

// Feature files: binary container "VAUFEAT1" | u32 T | u32 D | u32 dtype (1=f32)
// | u32 id length | id bytes | T*D little-endian f32, row-major; plus a JSON
// sidecar at <path>.json. Paths ending in .csv are read as one frame per row.
struct FeatureSidecar {
  std::string video;
  long long frames = 0;
  long long dim = 0;
  std::string dtype = "f32";
  std::optional<int> stride;
  std::optional<double> fps;
};

void write_features(const fs::path& path, const FeatureSequence& seq, std::optional<int> stride = std::nullopt,
                    std::optional<double> fps = std::nullopt);
FeatureSequence read_features(const fs::path& path);
std::optional<FeatureSidecar> read_feature_sidecar(const fs::path& path);

}  // namespace vau::io
