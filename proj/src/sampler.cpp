#include "vau/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <boost/multiprecision/cpp_int.hpp>

#include "vau/error.hpp"

namespace vau {

namespace {

using boost::multiprecision::cpp_int;

// Every finite double is m * 2^e with integer m. Scaling all masses by
// 2^-min(e) turns the prefix sums into exact integers.
struct ExactMass {
  std::vector<cpp_int> prefix;  // prefix[t] = sum_{i<=t} (s_i + tau) * 2^-shift
  int shift = 0;

  const cpp_int& total() const { return prefix.back(); }
};

std::pair<long long, int> split_double(double x) {
  if (x == 0.0) return {0, 0};
  int e = 0;
  const double f = std::frexp(x, &e);
  return {static_cast<long long>(std::ldexp(f, 53)), e - 53};
}

void require_valid(const ScoreTimeline& t, double tau) {
  if (!(tau >= 0.0) || !std::isfinite(tau)) throw ParameterError("tau must be finite and >= 0");
  auto violations = validate_timeline(t);
  if (!violations.empty()) throw ValidationError("invalid timeline: " + violations.front(), violations);
}

ExactMass exact_mass(const ScoreTimeline& t, double tau) {
  const auto n = static_cast<std::size_t>(t.scores.size());
  std::vector<std::pair<long long, int>> parts(n + 1);
  int min_exp = 0;
  bool any = false;
  auto visit = [&](std::size_t slot, double x) {
    parts[slot] = split_double(x);
    if (parts[slot].first != 0) {
      min_exp = any ? std::min(min_exp, parts[slot].second) : parts[slot].second;
      any = true;
    }
  };
  for (std::size_t i = 0; i < n; ++i) visit(i, t.scores[static_cast<Eigen::Index>(i)]);
  visit(n, tau);

  auto scaled = [&](const std::pair<long long, int>& p) {
    if (p.first == 0) return cpp_int(0);
    return cpp_int(p.first) << static_cast<unsigned>(p.second - min_exp);
  };
  ExactMass out;
  out.shift = min_exp;
  out.prefix.reserve(n);
  const cpp_int tau_int = scaled(parts[n]);
  cpp_int acc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += scaled(parts[i]) + tau_int;
    out.prefix.push_back(acc);
  }
  return out;
}

// Round-half-even of v * 2^shift; convert_to<double> truncates on some Boost versions.
double nearest_double(const cpp_int& v, int shift) {
  if (v == 0) return 0.0;
  const unsigned bits = boost::multiprecision::msb(v) + 1;
  if (bits <= 53) return std::ldexp(v.convert_to<double>(), shift);
  const unsigned drop = bits - 53;
  cpp_int mant = v >> drop;
  const cpp_int rem = v - (mant << drop);
  const cpp_int half = cpp_int(1) << (drop - 1);
  if (rem > half || (rem == half && (mant & 1) != 0)) ++mant;
  return std::ldexp(mant.convert_to<double>(), shift + static_cast<int>(drop));
}

void require_budget(std::size_t frame_count, std::size_t n) {
  if (n < 1) throw ParameterError("budget must be >= 1");
  if (n > frame_count) {
    std::ostringstream msg;
    msg << "budget exceeds timeline (n=" << n << ", T=" << frame_count << ")";
    throw ParameterError(msg.str());
  }
}

}  // namespace

SamplerKind parse_sampler(std::string_view name) {
  if (name == "ats") return SamplerKind::ats;
  if (name == "uniform") return SamplerKind::uniform;
  if (name == "topk") return SamplerKind::topk;
  throw ParameterError("unknown sampler '" + std::string(name) + "' (expected ats, uniform or topk)");
}

std::string_view to_string(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::ats: return "ats";
    case SamplerKind::uniform: return "uniform";
    case SamplerKind::topk: return "topk";
  }
  return "?";
}

CumulativeMass cumulative_mass(const ScoreTimeline& t, double tau) {
  require_valid(t, tau);
  const ExactMass exact = exact_mass(t, tau);
  CumulativeMass out;
  out.tau = tau;
  out.values.resize(t.scores.size());
  for (std::size_t i = 0; i < exact.prefix.size(); ++i) {
    out.values[static_cast<Eigen::Index>(i)] = nearest_double(exact.prefix[i], exact.shift);
  }
  return out;
}

std::vector<std::size_t> ats_target_indices(const ScoreTimeline& t, double tau, std::size_t n) {
  require_valid(t, tau);
  const auto frame_count = static_cast<std::size_t>(t.scores.size());
  require_budget(frame_count, n);
  const ExactMass exact = exact_mass(t, tau);
  if (exact.total() == 0) throw ParameterError("degenerate mass, supply tau > 0");

  // S(t) >= (k - 1/2) M / N  <=>  2N * S(t) >= (2k - 1) * M
  std::vector<std::size_t> out;
  out.reserve(n);
  const cpp_int two_n = 2 * cpp_int(n);
  std::size_t cursor = 0;
  for (std::size_t k = 1; k <= n; ++k) {
    const cpp_int target = cpp_int(2 * k - 1) * exact.total();
    while (cursor + 1 < frame_count && two_n * exact.prefix[cursor] < target) ++cursor;
    out.push_back(cursor);
  }
  return out;
}

SampleSet sample_ats(const ScoreTimeline& t, double tau, std::size_t n) {
  const auto raw = ats_target_indices(t, tau, n);
  const auto frame_count = static_cast<std::size_t>(t.scores.size());
  std::vector<char> taken(frame_count, 0);
  SampleSet out;
  out.budget = n;
  out.indices.reserve(n);
  for (std::size_t idx : raw) {
    std::size_t pick = idx;
    while (pick < frame_count && taken[pick]) ++pick;
    if (pick == frame_count) {
      pick = idx;
      while (taken[pick]) --pick;  // n <= T guarantees a free slot below
    }
    taken[pick] = 1;
    out.indices.push_back(pick);
  }
  std::sort(out.indices.begin(), out.indices.end());
  return out;
}

SampleSet sample_uniform(std::size_t frame_count, std::size_t n) {
  require_budget(frame_count, n);
  SampleSet out;
  out.budget = n;
  out.indices.reserve(n);
  for (std::size_t k = 1; k <= n; ++k) {
    const std::size_t num = (2 * k - 1) * frame_count;
    const std::size_t den = 2 * n;
    out.indices.push_back((num + den - 1) / den - 1);
  }
  return out;
}

SampleSet sample_topk(const ScoreTimeline& t, std::size_t n) {
  const auto frame_count = static_cast<std::size_t>(t.scores.size());
  require_budget(frame_count, n);
  std::vector<std::size_t> order(frame_count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return t.scores[static_cast<Eigen::Index>(a)] > t.scores[static_cast<Eigen::Index>(b)];
  });
  SampleSet out;
  out.budget = n;
  out.indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n));
  std::sort(out.indices.begin(), out.indices.end());
  return out;
}

SampleSet sample(SamplerKind kind, const ScoreTimeline& t, double tau, std::size_t n) {
  switch (kind) {
    case SamplerKind::ats: return sample_ats(t, tau, n);
    case SamplerKind::uniform: return sample_uniform(static_cast<std::size_t>(t.scores.size()), n);
    case SamplerKind::topk: return sample_topk(t, n);
  }
  throw ParameterError("unknown sampler");
}

Coverage event_coverage(const SampleSet& s, const FrameLabels& labels) {
  Coverage c;
  std::size_t positive = 0;
  for (std::size_t idx : s.indices) {
    if (idx < labels.size() && labels.labels[idx]) ++positive;
  }
  if (!s.indices.empty()) c.anomaly_recall = static_cast<double>(positive) / static_cast<double>(s.indices.size());

  const auto runs = positive_runs(labels);
  c.runs_total = runs.size();
  for (const auto& [begin, end] : runs) {
    auto it = std::lower_bound(s.indices.begin(), s.indices.end(), begin);
    if (it != s.indices.end() && *it < end) ++c.runs_hit;
  }
  if (c.runs_total) c.events_hit = static_cast<double>(c.runs_hit) / static_cast<double>(c.runs_total);
  return c;
}

double temporal_spread(const SampleSet& s, std::size_t frame_count) {
  if (s.indices.size() < 2 || frame_count == 0) return 0.0;
  const double span = static_cast<double>(s.indices.back() - s.indices.front());
  return span / static_cast<double>(s.indices.size() - 1) / static_cast<double>(frame_count);
}

}  // namespace vau
