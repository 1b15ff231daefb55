#pragma once

// Corpus-level operations behind the command-line tool. Each returns the
// exact bytes the tool writes, so callers and tests can use them directly.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "vau/dataengine.hpp"
#include "vau/eval.hpp"
#include "vau/io.hpp"
#include "vau/sampler.hpp"
#include "vau/scorer.hpp"

namespace vau::cmd {

/// Runs fn(0..n-1) on at most `jobs` threads. If any call throws, the
/// exception of the lowest failing index is rethrown after all finish.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

/// What derive_frame_labels needs for one video.
struct TimelineMeta {
  std::string video;
  std::size_t frames = 0;  ///< scored frames T
  int stride = 16;
  double fps = 30.0;
  std::vector<EventInterval> events;
};

/// JSONL lines {"video", "frames", "stride"?, "fps"?, "events": [...]}.
std::vector<TimelineMeta> parse_timeline_meta(std::string_view text, const std::string& source = "<meta>");
/// One entry per record: T = ceil(n_frames / stride), events labelled with
/// the record's first category (or Normal).
std::vector<TimelineMeta> meta_from_annotations(const std::vector<AnnotationRecord>& records, int stride);
std::string labels_jsonl(const std::vector<TimelineMeta>& videos, std::size_t jobs = 1);

/// One format_sample_line per video, in input order. A budget above a
/// video's length fails with a ParameterError naming the video.
std::string samples_jsonl(const std::vector<io::VideoScores>& videos, SamplerKind kind, double tau, std::size_t n,
                          std::size_t jobs = 1);

struct BenchRow {
  SamplerKind sampler = SamplerKind::ats;
  std::size_t budget = 0;
  double anomaly_recall = 0.0;  ///< mean over all videos
  double events_hit = 0.0;      ///< mean over videos with at least one anomalous run
  double spread = 0.0;          ///< mean temporal_spread over all videos
  std::size_t videos = 0;
  std::size_t videos_with_events = 0;
};

/// Rows for every (sampler, budget), samplers in ats/uniform/topk order.
/// Budgets above a video's length are clamped to it. Scores and labels are
/// matched by video id; a missing partner or a length mismatch is a
/// ValidationError.
std::vector<BenchRow> bench_samplers(const std::vector<io::VideoScores>& scores,
                                     const std::vector<io::VideoLabels>& labels,
                                     const std::vector<std::size_t>& budgets, double tau, std::size_t jobs = 1);
std::string format_bench_json(const std::vector<BenchRow>& rows, double tau);
std::string format_bench_csv(const std::vector<BenchRow>& rows);
std::string format_bench_table(const std::vector<BenchRow>& rows);

/// Regular files in the given directories (sorted by name) and files, in order.
std::vector<std::filesystem::path> expand_feature_paths(const std::vector<std::filesystem::path>& inputs);
std::vector<FeatureSequence> read_feature_corpus(const std::vector<std::filesystem::path>& files, std::size_t jobs = 1);

/// Pairs each feature sequence with its labels by video id.
std::vector<TrainingExample> pair_examples(const std::vector<FeatureSequence>& features,
                                           const std::vector<io::VideoLabels>& labels);

/// Scores every sequence with the given stride and fps.
std::vector<io::VideoScores> score_corpus(const ScorerModel& model, const std::vector<FeatureSequence>& features,
                                          int stride, double fps, std::size_t jobs = 1);

struct InstructionFiles {
  std::string items;   ///< JSONL of InstructionItems
  std::string review;  ///< JSONL of ReviewEntries
  std::size_t item_count = 0;
  std::size_t review_count = 0;
};

/// Builds every record in input order. The first invalid record aborts with
/// a ValidationError naming it.
InstructionFiles instruction_files(const std::vector<AnnotationRecord>& records, const PromptPool& pools,
                                   std::uint64_t seed, const InstructionOptions& options = {}, std::size_t jobs = 1);

/// Frame-level AUC/AP over the concatenation of all videos (scores order),
/// keyed under `dataset`.
EvalReport detection_report(const std::vector<io::VideoScores>& scores, const std::vector<io::VideoLabels>& labels,
                            const std::string& dataset);

}  // namespace vau::cmd
