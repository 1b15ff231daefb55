#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "vau/metrics.hpp"

namespace vau {

/// One line of a predictions or references file: {"id","type","text"}.
struct TextItem {
  std::string id;
  std::string type;  ///< clip, event or video
  std::string text;
};

std::vector<TextItem> parse_text_items(std::string_view jsonl, const std::string& source = "<text>");
std::vector<TextItem> read_text_items(const std::filesystem::path& path);

struct TextScore {
  std::array<double, 4> bleu_n{};
  double bleu_sum = 0.0;
  double rouge_l = 0.0;
  double cider = 0.0;
  double meteor = 0.0;
};

struct GranularityScore {
  std::size_t count = 0;
  TextScore mean;
};

struct EvalReport {
  std::map<std::string, GranularityScore> text;       ///< keyed by clip / event / video
  std::map<std::string, DetectionResult> detection;   ///< keyed by dataset name
};

/// Scores every prediction against the reference with the same id. CIDEr
/// document frequencies are taken over the whole reference file; all other
/// metrics are per item. Means are accumulated in id order, so the result
/// does not depend on `jobs`. Orphan or duplicate ids raise ValidationError.
EvalReport evaluate_corpus(const std::vector<TextItem>& predictions, const std::vector<TextItem>& references,
                           std::size_t jobs = 1);

/// Fixed-schema JSON report (one trailing newline).
std::string format_report_json(const EvalReport& report);
/// Flat CSV: section,key,metric,value.
std::string format_report_csv(const EvalReport& report);

}  // namespace vau
