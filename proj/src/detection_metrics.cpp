#include <algorithm>
#include <cmath>
#include <numeric>

#include "vau/error.hpp"
#include "vau/metrics.hpp"

namespace vau {

namespace {

void check_inputs(const Eigen::VectorXd& scores, const std::vector<std::uint8_t>& labels, const char* metric) {
  if (static_cast<std::size_t>(scores.size()) != labels.size()) {
    throw ShapeError(std::string(metric) + ": " + std::to_string(scores.size()) + " scores but " +
                     std::to_string(labels.size()) + " labels");
  }
  for (Eigen::Index i = 0; i < scores.size(); ++i)
    if (std::isnan(scores[i])) throw ValidationError(std::string(metric) + ": score[" + std::to_string(i) + "] is NaN");
}

// Indices in descending score order; equal scores stay in index order.
std::vector<std::size_t> descending(const Eigen::VectorXd& scores) {
  std::vector<std::size_t> order(static_cast<std::size_t>(scores.size()));
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

}  // namespace

double roc_auc(const Eigen::VectorXd& scores, const std::vector<std::uint8_t>& labels) {
  check_inputs(scores, labels, "roc_auc");
  const std::size_t n = labels.size();
  const std::size_t pos = static_cast<std::size_t>(std::count_if(labels.begin(), labels.end(), [](auto l) { return l != 0; }));
  const std::size_t neg = n - pos;
  if (pos == 0 || neg == 0) throw UndefinedMetricError("roc_auc: needs both positive and negative labels");

  // Twice the rank-sum of positives, with tied blocks sharing their mid-rank,
  // kept in integers so the only rounding is the final division.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  unsigned long long twice_rank_sum = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    std::size_t block_pos = 0;
    while (j < n && scores[order[j]] == scores[order[i]]) block_pos += labels[order[j++]] != 0;
    twice_rank_sum += static_cast<unsigned long long>(block_pos) * (i + 1 + j);
    i = j;
  }
  const unsigned long long twice_u = twice_rank_sum - static_cast<unsigned long long>(pos) * (pos + 1);
  return static_cast<double>(twice_u) / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
}

double average_precision(const Eigen::VectorXd& scores, const std::vector<std::uint8_t>& labels) {
  check_inputs(scores, labels, "average_precision");
  const std::size_t pos = static_cast<std::size_t>(std::count_if(labels.begin(), labels.end(), [](auto l) { return l != 0; }));
  if (pos == 0) throw UndefinedMetricError("average_precision: needs at least one positive label");

  const auto order = descending(scores);
  double ap = 0.0;
  std::size_t tp = 0, seen = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::size_t block_pos = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) block_pos += labels[order[j++]] != 0;
    tp += block_pos;
    seen += j - i;
    if (block_pos) ap += (static_cast<double>(block_pos) / pos) * (static_cast<double>(tp) / seen);
    i = j;
  }
  return ap;
}

DetectionResult evaluate_detection(const Eigen::VectorXd& scores, const std::vector<std::uint8_t>& labels) {
  DetectionResult r;
  r.auc = roc_auc(scores, labels);
  r.ap = average_precision(scores, labels);
  r.positives = static_cast<std::size_t>(std::count_if(labels.begin(), labels.end(), [](auto l) { return l != 0; }));
  r.negatives = labels.size() - r.positives;
  return r;
}

}  // namespace vau
