#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace vau {

// ---- detection ----

struct DetectionResult {
  double auc = 0.0;
  double ap = 0.0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

/// Mann-Whitney AUC: (concordant pairs + half the tied pairs) / (P * N).
/// Throws UndefinedMetricError unless both classes are present.
double roc_auc(const Eigen::VectorXd& scores, const std::vector<std::uint8_t>& labels);

/// Area under the descending-score precision/recall sweep, equal scores
/// entering as one block. Throws UndefinedMetricError without positives.
double average_precision(const Eigen::VectorXd& scores, const std::vector<std::uint8_t>& labels);

DetectionResult evaluate_detection(const Eigen::VectorXd& scores, const std::vector<std::uint8_t>& labels);

// ---- text ----

using Tokens = std::vector<std::string>;

/// Lowercases ASCII letters, splits on whitespace and emits every ASCII
/// punctuation character as its own token.
Tokens tokenize(std::string_view text);

struct BleuScore {
  std::array<double, 4> cumulative{};  ///< BLEU-1 .. BLEU-4
  double sum = 0.0;
};

/// Cumulative BLEU with clipped counts over all references, brevity penalty
/// against the closest reference length (shorter wins ties), no smoothing.
/// An empty candidate scores zero.
BleuScore bleu(const Tokens& candidate, const std::vector<Tokens>& references);

inline constexpr double k_rouge_beta = 1.2;

/// LCS F-measure with recall weighted by beta = 1.2; 0 when the LCS is empty.
double rouge_l(const Tokens& candidate, const Tokens& reference);

struct CiderScore {
  std::vector<double> per_item;
  double mean = 0.0;
};

/// CIDEr (without the D variant's clipping and length penalty): mean over
/// n = 1..4 of the TF-IDF cosine between candidate and each reference,
/// averaged over references, times 10. Document frequencies come from the
/// reference sets; idf = log(items) - log(max(1, df)). Needs >= 2 items.
CiderScore cider(const std::vector<Tokens>& candidates, const std::vector<std::vector<Tokens>>& references);

struct MeteorAlignment {
  std::size_t matches = 0;
  std::size_t exact = 0;
  std::size_t chunks = 0;
};

/// Best unigram alignment: most exact matches, then most matches (exact or
/// Porter stem), then fewest chunks. Exact search up to `node_limit` search
/// nodes, then the best alignment found so far.
MeteorAlignment meteor_align(const Tokens& candidate, const Tokens& reference, std::size_t node_limit = 200000);

/// F = 10PR / (R + 9P), penalty = 0.5 (chunks/matches)^3, score = F (1 - penalty).
double meteor_score(const MeteorAlignment& a, std::size_t candidate_len, std::size_t reference_len);
double meteor_lite(const Tokens& candidate, const Tokens& reference);

/// Porter (1980) suffix-stripping stemmer for lowercase ASCII words; other
/// input is returned unchanged.
std::string porter_stem(std::string_view word);

}  // namespace vau
