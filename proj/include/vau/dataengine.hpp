#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vau {

using Span = std::array<double, 2>;  ///< [start_s, end_s]

/// One video's hierarchical annotation: events, their clips and captions,
/// per-event summaries and the video summary.
struct AnnotationRecord {
  std::string video;
  long long n_frames = 0;
  double fps = 0.0;
  std::vector<std::string> label;
  std::vector<std::vector<Span>> clips;
  std::vector<std::vector<std::string>> clip_captions;
  std::vector<Span> events;
  std::vector<std::string> event_summary;
  std::string video_summary;

  /// True when the video carries no anomaly category.
  bool normal() const;
  std::size_t clip_count() const;
};

AnnotationRecord parse_annotation(std::string_view json_text, const std::string& source = "<annotation>");
/// Accepts a single record object, an array of records, or JSONL.
std::vector<AnnotationRecord> parse_annotations(std::string_view text, const std::string& source = "<annotations>");
std::vector<AnnotationRecord> read_annotations(const std::filesystem::path& path);
std::string format_annotation(const AnnotationRecord& r);

/// Every structural violation; empty means the record is usable.
std::vector<std::string> validate_annotation(const AnnotationRecord& r);

enum class Facet { caption, judgement, description, analysis };

struct PromptPool {
  std::vector<std::string> caption;
  std::vector<std::string> judgement;
  std::vector<std::string> description;
  std::vector<std::string> analysis;

  const std::vector<std::string>& pool(Facet f) const;
};

inline constexpr std::size_t k_caption_pool_size = 24;
inline constexpr std::size_t k_facet_pool_size = 10;

/// The pools compiled in from data/prompts.
const PromptPool& default_prompt_pools();
/// Reads caption.txt, judgement.txt, description.txt, analysis.txt (one prompt per line).
PromptPool load_prompt_pools(const std::filesystem::path& dir);
PromptPool parse_prompt_pools(std::string_view caption, std::string_view judgement, std::string_view description,
                              std::string_view analysis);
std::vector<std::string> validate_prompt_pools(const PromptPool& pools);
/// FNV-1a digest over pool names and prompts in order.
std::uint64_t pool_digest(const PromptPool& pools);

enum class SummaryLevel { event, video };

struct SummaryRequest {
  std::string prompt;
  SummaryLevel level = SummaryLevel::event;
  std::string record_id;
  int event_index = -1;  ///< -1 for video level
  std::string label;         ///< injected category block, e.g. "Explosion"
  std::string first_source;  ///< first caption (event) or first event summary (video)

  std::string request_id() const;
};

SummaryRequest render_event_summary_prompt(const AnnotationRecord& r, std::size_t event_index);
SummaryRequest render_video_summary_prompt(const AnnotationRecord& r);

enum class ItemType { clip, event, video };
std::string_view to_string(ItemType t);

struct Turn {
  std::string from;  ///< "human" or "gpt"
  std::string value;

  bool operator==(const Turn&) const = default;
};

struct InstructionItem {
  std::string id;
  ItemType type = ItemType::clip;
  std::string video;
  std::vector<Turn> conversations;

  bool operator==(const InstructionItem&) const = default;
};

/// An item withheld because its summary could not be split into facets.
struct ReviewEntry {
  std::string id;
  ItemType type = ItemType::event;
  std::string video;
  std::string reason;
  std::string summary;
};

struct InstructionBuild {
  std::vector<InstructionItem> items;
  std::vector<ReviewEntry> review;
};

/// Video paths are <dataset>/<clips|events|videos>/<split>/<id><extension>.
struct InstructionOptions {
  std::string dataset = "ucf-crime";
  std::string split = "train";
  std::string extension = ".mp4";
};

/// Judgement / Description / Analysis slices of a summary. Each is a
/// substring of the source text.
struct SummaryParts {
  std::string judgement;
  std::string description;
  std::optional<std::string> analysis;
};

struct SplitOutcome {
  std::optional<SummaryParts> parts;
  std::string reason;  ///< why splitting failed, empty on success
};

/// Splits on "1. ... 2. ... 3. ..." markers when present; otherwise by
/// sentences: the first is the judgement, the first later sentence that
/// states a basis/reason opens the analysis, the ones between describe.
SplitOutcome split_summary(std::string_view summary, bool require_analysis);

/// Pool index for one prompt slot, from a hash of (seed, video, type, event,
/// clip, facet). Independent of every other record and item.
std::size_t prompt_choice(std::uint64_t seed, std::string_view video, ItemType type, int event, int clip, Facet facet,
                          std::size_t pool_size);

/// One clip item per clip, one item per event and one for the video. Throws
/// ValidationError for invalid records.
InstructionBuild build_instructions(const AnnotationRecord& r, const PromptPool& pools, std::uint64_t seed,
                                    const InstructionOptions& options = {});

std::string format_instruction_line(const InstructionItem& item);
std::string format_review_line(const ReviewEntry& entry);

}  // namespace vau
