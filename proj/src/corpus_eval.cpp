#include "vau/eval.hpp"

#include <algorithm>
#include <atomic>
#include <set>
#include <thread>

#include "vau/detail/json.hpp"
#include "vau/error.hpp"
#include "vau/io.hpp"

namespace vau {

using detail::Json;
using detail::OrderedJson;

namespace {

const std::set<std::string>& granularities() {
  static const std::set<std::string> g{"clip", "event", "video"};
  return g;
}

std::string list(const std::vector<std::string>& ids, std::size_t limit = 10) {
  std::string out;
  for (std::size_t i = 0; i < ids.size() && i < limit; ++i) out += (i ? ", " : "") + ids[i];
  if (ids.size() > limit) out += ", ... (" + std::to_string(ids.size()) + " total)";
  return out;
}

std::map<std::string, const TextItem*> index_by_id(const std::vector<TextItem>& items, const char* what) {
  std::map<std::string, const TextItem*> out;
  std::vector<std::string> dup;
  for (const auto& it : items)
    if (!out.emplace(it.id, &it).second) dup.push_back(it.id);
  if (!dup.empty()) throw ValidationError(std::string("duplicate ids in ") + what + ": " + list(dup), dup);
  return out;
}

}  // namespace

std::vector<TextItem> parse_text_items(std::string_view jsonl, const std::string& source) {
  std::vector<TextItem> out;
  std::size_t line = 0;
  for (const Json& j : detail::parse_jsonl(jsonl, source)) {
    ++line;
    const std::string where = source + ": item " + std::to_string(line);
    if (!j.is_object() || !j.contains("id") || !j.contains("type") || !j.contains("text"))
      throw ValidationError(where + ": expected {\"id\", \"type\", \"text\"}");
    TextItem item;
    try {
      item.id = j["id"].get<std::string>();
      item.type = j["type"].get<std::string>();
      item.text = j["text"].get<std::string>();
    } catch (const Json::exception& e) {
      throw ValidationError(where + ": " + e.what());
    }
    if (!granularities().count(item.type))
      throw ValidationError(where + ": type must be clip, event or video, got '" + item.type + "'");
    out.push_back(std::move(item));
  }
  return out;
}

std::vector<TextItem> read_text_items(const std::filesystem::path& path) {
  return parse_text_items(io::read_file(path), path.string());
}

EvalReport evaluate_corpus(const std::vector<TextItem>& predictions, const std::vector<TextItem>& references,
                           std::size_t jobs) {
  const auto preds = index_by_id(predictions, "predictions");
  const auto refs = index_by_id(references, "references");

  std::vector<std::string> orphans;
  for (const auto& [id, _] : preds)
    if (!refs.count(id)) orphans.push_back(id + " (prediction only)");
  for (const auto& [id, _] : refs)
    if (!preds.count(id)) orphans.push_back(id + " (reference only)");
  if (!orphans.empty()) throw ValidationError("unmatched ids: " + list(orphans), orphans);

  std::vector<std::string> mismatched;
  for (const auto& [id, p] : preds)
    if (p->type != refs.at(id)->type) mismatched.push_back(id);
  if (!mismatched.empty()) throw ValidationError("type differs between files for ids: " + list(mismatched), mismatched);

  // id order from here on
  std::vector<const TextItem*> pred_items, ref_items;
  for (const auto& [id, p] : preds) {
    pred_items.push_back(p);
    ref_items.push_back(refs.at(id));
  }
  const std::size_t n = pred_items.size();
  std::vector<Tokens> cand_tokens(n);
  std::vector<std::vector<Tokens>> ref_tokens(n);
  for (std::size_t i = 0; i < n; ++i) {
    cand_tokens[i] = tokenize(pred_items[i]->text);
    ref_tokens[i] = {tokenize(ref_items[i]->text)};
  }

  std::vector<TextScore> scores(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      const BleuScore b = bleu(cand_tokens[i], ref_tokens[i]);
      scores[i].bleu_n = b.cumulative;
      scores[i].bleu_sum = b.sum;
      scores[i].rouge_l = rouge_l(cand_tokens[i], ref_tokens[i][0]);
      scores[i].meteor = meteor_lite(cand_tokens[i], ref_tokens[i][0]);
    }
  };
  const std::size_t threads = std::min(std::max<std::size_t>(1, jobs), std::max<std::size_t>(1, n));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  const CiderScore c = cider(cand_tokens, ref_tokens);
  for (std::size_t i = 0; i < n; ++i) scores[i].cider = c.per_item[i];

  EvalReport report;
  for (std::size_t i = 0; i < n; ++i) {
    auto& g = report.text[pred_items[i]->type];
    ++g.count;
    for (std::size_t k = 0; k < 4; ++k) g.mean.bleu_n[k] += scores[i].bleu_n[k];
    g.mean.bleu_sum += scores[i].bleu_sum;
    g.mean.rouge_l += scores[i].rouge_l;
    g.mean.cider += scores[i].cider;
    g.mean.meteor += scores[i].meteor;
  }
  for (auto& [_, g] : report.text) {
    const double d = static_cast<double>(g.count);
    for (auto& b : g.mean.bleu_n) b /= d;
    g.mean.bleu_sum /= d;
    g.mean.rouge_l /= d;
    g.mean.cider /= d;
    g.mean.meteor /= d;
  }
  return report;
}

std::string format_report_json(const EvalReport& report) {
  OrderedJson j;
  OrderedJson text = OrderedJson::object();
  for (const auto& [key, g] : report.text) {
    OrderedJson s;
    s["count"] = g.count;
    s["bleu_1"] = g.mean.bleu_n[0];
    s["bleu_2"] = g.mean.bleu_n[1];
    s["bleu_3"] = g.mean.bleu_n[2];
    s["bleu_4"] = g.mean.bleu_n[3];
    s["bleu_sum"] = g.mean.bleu_sum;
    s["rouge_l"] = g.mean.rouge_l;
    s["cider"] = g.mean.cider;
    s["meteor_lite"] = g.mean.meteor;
    text[key] = std::move(s);
  }
  OrderedJson detection = OrderedJson::object();
  for (const auto& [key, d] : report.detection) {
    OrderedJson s;
    s["auc"] = d.auc;
    s["ap"] = d.ap;
    s["positives"] = d.positives;
    s["negatives"] = d.negatives;
    detection[key] = std::move(s);
  }
  j["text"] = std::move(text);
  j["detection"] = std::move(detection);
  return j.dump(2) + "\n";
}

std::string format_report_csv(const EvalReport& report) {
  std::string out = "section,key,metric,value\n";
  auto row = [&](const char* section, const std::string& key, const char* metric, const std::string& value) {
    out += std::string(section) + "," + key + "," + metric + "," + value + "\n";
  };
  for (const auto& [key, g] : report.text) {
    row("text", key, "count", std::to_string(g.count));
    row("text", key, "bleu_1", io::format_double(g.mean.bleu_n[0]));
    row("text", key, "bleu_2", io::format_double(g.mean.bleu_n[1]));
    row("text", key, "bleu_3", io::format_double(g.mean.bleu_n[2]));
    row("text", key, "bleu_4", io::format_double(g.mean.bleu_n[3]));
    row("text", key, "bleu_sum", io::format_double(g.mean.bleu_sum));
    row("text", key, "rouge_l", io::format_double(g.mean.rouge_l));
    row("text", key, "cider", io::format_double(g.mean.cider));
    row("text", key, "meteor_lite", io::format_double(g.mean.meteor));
  }
  for (const auto& [key, d] : report.detection) {
    row("detection", key, "auc", io::format_double(d.auc));
    row("detection", key, "ap", io::format_double(d.ap));
    row("detection", key, "positives", std::to_string(d.positives));
    row("detection", key, "negatives", std::to_string(d.negatives));
  }
  return out;
}

}  // namespace vau
