#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>
#include <tuple>
#include <unordered_map>

#include "vau/error.hpp"
#include "vau/metrics.hpp"

namespace vau {

namespace {

using NgramCounts = std::map<std::string, double>;

// n-gram keys joined with a unit separator, which tokenize() never emits.
NgramCounts ngrams(const Tokens& t, std::size_t n) {
  NgramCounts out;
  if (t.size() < n) return out;
  for (std::size_t i = 0; i + n <= t.size(); ++i) {
    std::string key = t[i];
    for (std::size_t k = 1; k < n; ++k) {
      key += '\x1f';
      key += t[i + k];
    }
    out[key] += 1.0;
  }
  return out;
}

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace

Tokens tokenize(std::string_view text) {
  Tokens out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 0x80 && std::isspace(c)) {
      flush();
    } else if (c < 0x80 && std::ispunct(c)) {
      flush();
      out.emplace_back(1, ch);
    } else {
      cur += static_cast<char>(c < 0x80 ? std::tolower(c) : c);
    }
  }
  flush();
  return out;
}

BleuScore bleu(const Tokens& candidate, const std::vector<Tokens>& references) {
  BleuScore out;
  if (candidate.empty() || references.empty()) return out;

  const double c = static_cast<double>(candidate.size());
  double r = static_cast<double>(references.front().size());
  for (const auto& ref : references) {
    const double len = static_cast<double>(ref.size());
    if (std::abs(len - c) < std::abs(r - c) || (std::abs(len - c) == std::abs(r - c) && len < r)) r = len;
  }
  const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);

  double log_sum = 0.0;
  bool zero = false;
  for (std::size_t n = 1; n <= 4; ++n) {
    const auto cand = ngrams(candidate, n);
    NgramCounts max_ref;
    for (const auto& ref : references)
      for (const auto& [g, count] : ngrams(ref, n)) max_ref[g] = std::max(max_ref[g], count);
    double clipped = 0.0, total = 0.0;
    for (const auto& [g, count] : cand) {
      total += count;
      auto it = max_ref.find(g);
      if (it != max_ref.end()) clipped += std::min(count, it->second);
    }
    if (clipped == 0.0) zero = true;
    if (!zero) log_sum += std::log(clipped / total);
    out.cumulative[n - 1] = zero ? 0.0 : bp * std::exp(log_sum / static_cast<double>(n));
  }
  for (double b : out.cumulative) out.sum += b;
  return out;
}

double rouge_l(const Tokens& candidate, const Tokens& reference) {
  if (candidate.empty() || reference.empty()) return 0.0;
  const std::size_t lcs = lcs_length(candidate, reference);
  if (lcs == 0) return 0.0;
  const double p = static_cast<double>(lcs) / static_cast<double>(candidate.size());
  const double r = static_cast<double>(lcs) / static_cast<double>(reference.size());
  const double b2 = k_rouge_beta * k_rouge_beta;
  return (1.0 + b2) * p * r / (r + b2 * p);
}

CiderScore cider(const std::vector<Tokens>& candidates, const std::vector<std::vector<Tokens>>& references) {
  if (candidates.size() != references.size())
    throw ShapeError("cider: " + std::to_string(candidates.size()) + " candidates but " +
                     std::to_string(references.size()) + " reference sets");
  if (candidates.size() < 2) throw UndefinedMetricError("cider: needs at least 2 items for document frequencies");
  for (std::size_t i = 0; i < references.size(); ++i)
    if (references[i].empty()) throw ValidationError("cider: item " + std::to_string(i) + " has no references");

  const std::size_t items = candidates.size();
  const double log_items = std::log(static_cast<double>(items));
  CiderScore out;
  out.per_item.assign(items, 0.0);

  for (std::size_t n = 1; n <= 4; ++n) {
    std::vector<NgramCounts> cand(items);
    std::vector<std::vector<NgramCounts>> refs(items);
    std::unordered_map<std::string, double> df;
    for (std::size_t i = 0; i < items; ++i) {
      cand[i] = ngrams(candidates[i], n);
      std::set<std::string> seen;
      for (const auto& ref : references[i]) {
        refs[i].push_back(ngrams(ref, n));
        for (const auto& kv : refs[i].back()) seen.insert(kv.first);
      }
      for (const auto& g : seen) df[g] += 1.0;
    }
    auto idf = [&](const std::string& g) {
      auto it = df.find(g);
      return log_items - std::log(std::max(1.0, it == df.end() ? 0.0 : it->second));
    };
    auto weigh = [&](const NgramCounts& counts) {
      NgramCounts v;
      for (const auto& [g, c] : counts) v[g] = c * idf(g);
      return v;
    };
    auto norm = [](const NgramCounts& v) {
      double s = 0.0;
      for (const auto& kv : v) s += kv.second * kv.second;
      return std::sqrt(s);
    };
    for (std::size_t i = 0; i < items; ++i) {
      const NgramCounts vc = weigh(cand[i]);
      const double nc = norm(vc);
      double sum = 0.0;
      for (const auto& r : refs[i]) {
        const NgramCounts vr = weigh(r);
        const double nr = norm(vr);
        if (nc == 0.0 || nr == 0.0) continue;
        double dot = 0.0;
        for (const auto& [g, w] : vc) {
          auto it = vr.find(g);
          if (it != vr.end()) dot += w * it->second;
        }
        sum += dot / (nc * nr);
      }
      out.per_item[i] += sum / static_cast<double>(refs[i].size());
    }
  }
  double total = 0.0;
  for (auto& s : out.per_item) {
    s = 10.0 * s / 4.0;
    total += s;
  }
  out.mean = total / static_cast<double>(items);
  return out;
}

namespace {

// Depth-first search over candidate positions; each is matched to an unused
// reference position or left unmatched.
class AlignmentSearch {
 public:
  AlignmentSearch(const Tokens& cand, const Tokens& ref, std::size_t node_limit)
      : cand_(cand), ref_(ref), node_limit_(node_limit), used_(ref.size(), false) {
    std::vector<std::string> cs, rs;
    for (const auto& t : cand) cs.push_back(porter_stem(t));
    for (const auto& t : ref) rs.push_back(porter_stem(t));
    partners_.resize(cand.size());
    for (std::size_t i = 0; i < cand.size(); ++i) {
      for (std::size_t j = 0; j < ref.size(); ++j)
        if (cand[i] == ref[j]) partners_[i].push_back({j, true});
      for (std::size_t j = 0; j < ref.size(); ++j)
        if (cand[i] != ref[j] && cs[i] == rs[j]) partners_[i].push_back({j, false});
    }
  }

  MeteorAlignment run() {
    dfs(0, 0, 0, 0, kNone);
    return best_;
  }

 private:
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  struct Partner {
    std::size_t ref;
    bool exact;
  };

  static auto key(std::size_t exact, std::size_t matches, std::size_t chunks) {
    return std::make_tuple(exact, matches, -static_cast<long long>(chunks));
  }

  // prev_ref: reference position matched by candidate i-1, kNone if i-1 is unmatched.
  void dfs(std::size_t i, std::size_t exact, std::size_t matches, std::size_t chunks, std::size_t prev_ref) {
    if (nodes_++ >= node_limit_ && have_best_) return;
    if (i == cand_.size()) {
      if (!have_best_ || key(exact, matches, chunks) > key(best_.exact, best_.matches, best_.chunks)) {
        best_ = {matches, exact, chunks};
        have_best_ = true;
      }
      return;
    }
    if (have_best_) {
      std::size_t exact_ub = exact, match_ub = matches;
      for (std::size_t k = i; k < cand_.size(); ++k) {
        bool any = false, any_exact = false;
        for (const auto& p : partners_[k]) {
          if (used_[p.ref]) continue;
          any = true;
          any_exact = any_exact || p.exact;
        }
        exact_ub += any_exact;
        match_ub += any;
      }
      if (key(exact_ub, match_ub, chunks) <= key(best_.exact, best_.matches, best_.chunks)) return;
    }

    // Continuing the current chunk first makes the first leaf a good greedy bound.
    std::vector<Partner> order = partners_[i];
    std::stable_sort(order.begin(), order.end(), [&](const Partner& a, const Partner& b) {
      const bool ca = prev_ref != kNone && a.ref == prev_ref + 1;
      const bool cb = prev_ref != kNone && b.ref == prev_ref + 1;
      if (a.exact != b.exact) return a.exact;
      return ca && !cb;
    });
    for (const auto& p : order) {
      if (used_[p.ref]) continue;
      const bool continues = prev_ref != kNone && p.ref == prev_ref + 1;
      used_[p.ref] = true;
      dfs(i + 1, exact + p.exact, matches + 1, chunks + (continues ? 0 : 1), p.ref);
      used_[p.ref] = false;
    }
    dfs(i + 1, exact, matches, chunks, kNone);
  }

  const Tokens& cand_;
  const Tokens& ref_;
  std::size_t node_limit_;
  std::vector<bool> used_;
  std::vector<std::vector<Partner>> partners_;
  MeteorAlignment best_;
  bool have_best_ = false;
  std::size_t nodes_ = 0;
};

}  // namespace

MeteorAlignment meteor_align(const Tokens& candidate, const Tokens& reference, std::size_t node_limit) {
  return AlignmentSearch(candidate, reference, node_limit).run();
}

double meteor_score(const MeteorAlignment& a, std::size_t candidate_len, std::size_t reference_len) {
  if (a.matches == 0 || candidate_len == 0 || reference_len == 0) return 0.0;
  const double m = static_cast<double>(a.matches);
  const double p = m / static_cast<double>(candidate_len);
  const double r = m / static_cast<double>(reference_len);
  const double f = 10.0 * p * r / (r + 9.0 * p);
  const double penalty = 0.5 * std::pow(static_cast<double>(a.chunks) / m, 3.0);
  return f * (1.0 - penalty);
}

double meteor_lite(const Tokens& candidate, const Tokens& reference) {
  return meteor_score(meteor_align(candidate, reference), candidate.size(), reference.size());
}

}  // namespace vau
