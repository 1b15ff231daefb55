#include "vau/dataengine.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include <vau/embedded_prompts.hpp>

#include "vau/detail/json.hpp"
#include "vau/detail/random.hpp"
#include "vau/error.hpp"
#include "vau/io.hpp"
#include "vau/timeline.hpp"

namespace vau {

using detail::Json;
using detail::OrderedJson;

namespace {

template <typename T>
T get_or(const Json& j, const char* key, T fallback, const std::string& source) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const Json::exception& e) {
    throw ValidationError(source + ": field '" + key + "' has wrong type: " + e.what());
  }
}

AnnotationRecord record_from_json(const Json& j, const std::string& source) {
  if (!j.is_object()) throw ValidationError(source + ": annotation must be a JSON object");
  AnnotationRecord r;
  r.video = get_or<std::string>(j, "video", "", source);
  r.n_frames = get_or<long long>(j, "n_frames", 0, source);
  r.fps = get_or<double>(j, "fps", 0.0, source);
  if (j.contains("label") && j["label"].is_string())
    r.label = {j["label"].get<std::string>()};
  else
    r.label = get_or<std::vector<std::string>>(j, "label", {}, source);
  r.clips = get_or<std::vector<std::vector<Span>>>(j, "clips", {}, source);
  r.clip_captions = get_or<std::vector<std::vector<std::string>>>(j, "clip_captions", {}, source);
  r.events = get_or<std::vector<Span>>(j, "events", {}, source);
  r.event_summary = get_or<std::vector<std::string>>(j, "event_summary", {}, source);
  r.video_summary = get_or<std::string>(j, "video_summary", "", source);
  return r;
}

std::string fmt_span(const Span& s) {
  std::ostringstream out;
  out << "[" << io::format_double(s[0]) << ", " << io::format_double(s[1]) << "]";
  return out.str();
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> out;
  std::size_t offset = 0;
  while (offset < text.size()) {
    std::size_t end = text.find('\n', offset);
    if (end == std::string_view::npos) end = text.size();
    std::string line(text.substr(offset, end - offset));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.push_back(std::move(line));
    offset = end + 1;
  }
  return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Block followed by a sentence period, without doubling an existing one.
std::string closed(std::string block) {
  const auto t = trim(block);
  block = std::string(t);
  if (block.empty() || (block.back() != '.' && block.back() != '!' && block.back() != '?')) block += '.';
  return block;
}

std::string label_block(const AnnotationRecord& r) { return join(r.label, ", "); }

std::string existence_clause(const AnnotationRecord& r) {
  return (r.normal() ? "There is no abnormal events (" : "There are abnormal events (") + label_block(r) +
         ") in the video.";
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

bool states_basis(std::string_view sentence) {
  static const char* const keys[] = {"basis", "reason", "because", "evidence", "judging", "judgment", "judgement"};
  const std::string l = lower(sentence);
  return std::any_of(std::begin(keys), std::end(keys), [&](const char* k) { return l.find(k) != std::string::npos; });
}

// Position of marker "<n>." at the start or after whitespace, at or after from.
std::size_t find_marker(std::string_view s, char digit, std::size_t from) {
  for (std::size_t i = from; i + 1 < s.size(); ++i) {
    if (s[i] == digit && s[i + 1] == '.' && (i == 0 || std::isspace(static_cast<unsigned char>(s[i - 1]))) &&
        (i + 2 == s.size() || std::isspace(static_cast<unsigned char>(s[i + 2]))))
      return i;
  }
  return std::string_view::npos;
}

struct Sentence {
  std::size_t begin, end;
};

std::vector<Sentence> sentences(std::string_view s) {
  std::vector<Sentence> out;
  std::size_t begin = 0;
  auto flush = [&](std::size_t end) {
    std::size_t b = begin, e = end;
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    if (e > b) out.push_back({b, e});
  };
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if ((c == '.' || c == '!' || c == '?') && (i + 1 == s.size() || std::isspace(static_cast<unsigned char>(s[i + 1])))) {
      flush(i + 1);
      begin = i + 1;
    }
  }
  flush(s.size());
  return out;
}

void append_le64(std::string& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
}

}  // namespace

bool AnnotationRecord::normal() const {
  return label.empty() || std::all_of(label.begin(), label.end(), [](const std::string& l) { return l == k_normal_label; });
}

std::size_t AnnotationRecord::clip_count() const {
  std::size_t n = 0;
  for (const auto& c : clips) n += c.size();
  return n;
}

AnnotationRecord parse_annotation(std::string_view json_text, const std::string& source) {
  return record_from_json(detail::parse_json(json_text, source), source);
}

std::vector<AnnotationRecord> parse_annotations(std::string_view text, const std::string& source) {
  std::vector<AnnotationRecord> out;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return out;
  std::vector<Json> docs;
  if (text[first] == '[') {
    const Json arr = detail::parse_json(text, source);
    docs.assign(arr.begin(), arr.end());
  } else {
    // a single (possibly pretty-printed) object, or JSONL
    try {
      docs.push_back(Json::parse(text.begin(), text.end()));
    } catch (const Json::parse_error&) {
      docs = detail::parse_jsonl(text, source);
    }
  }
  for (const auto& d : docs) out.push_back(record_from_json(d, source));
  return out;
}

std::vector<AnnotationRecord> read_annotations(const std::filesystem::path& path) {
  return parse_annotations(io::read_file(path), path.string());
}

std::string format_annotation(const AnnotationRecord& r) {
  OrderedJson j;
  j["video"] = r.video;
  j["n_frames"] = r.n_frames;
  j["fps"] = r.fps;
  j["label"] = r.label;
  j["clips"] = r.clips;
  j["clip_captions"] = r.clip_captions;
  j["events"] = r.events;
  j["event_summary"] = r.event_summary;
  j["video_summary"] = r.video_summary;
  return j.dump();
}

std::vector<std::string> validate_annotation(const AnnotationRecord& r) {
  std::vector<std::string> v;
  if (r.video.empty()) v.emplace_back("missing video id");
  if (r.n_frames <= 0) v.emplace_back("n_frames must be > 0");
  if (!(r.fps > 0.0)) v.emplace_back("fps must be > 0");
  if (r.label.empty()) v.emplace_back("label list is empty");
  if (r.events.empty()) v.emplace_back("record has no events");

  const std::size_t n = r.events.size();
  auto count_check = [&](std::size_t got, const char* what) {
    if (got != n) {
      std::ostringstream msg;
      msg << what << " has " << got << " entries but events has " << n;
      v.push_back(msg.str());
    }
  };
  count_check(r.clips.size(), "clips");
  count_check(r.clip_captions.size(), "clip_captions");
  count_check(r.event_summary.size(), "event_summary");

  const double video_end = r.fps > 0.0 ? static_cast<double>(r.n_frames) / r.fps + 1.0 : 0.0;
  for (std::size_t e = 0; e < n; ++e) {
    const Span& ev = r.events[e];
    const std::string where = "event " + std::to_string(e);
    if (!(ev[0] < ev[1])) v.push_back(where + ": reversed interval " + fmt_span(ev));
    if (ev[0] < 0.0) v.push_back(where + ": negative start " + fmt_span(ev));
    if (r.fps > 0.0 && ev[1] > video_end) v.push_back(where + ": ends after the video " + fmt_span(ev));

    if (e < r.clips.size()) {
      const auto& clips = r.clips[e];
      if (clips.empty()) v.push_back(where + ": no clips");
      for (std::size_t c = 0; c < clips.size(); ++c) {
        const std::string cw = where + " clip " + std::to_string(c);
        const Span& cl = clips[c];
        if (!(cl[0] < cl[1])) v.push_back(cw + ": reversed interval " + fmt_span(cl));
        if (cl[0] < ev[0] || cl[1] > ev[1]) v.push_back(cw + ": outside event interval " + fmt_span(cl));
        if (c > 0 && cl[0] < clips[c - 1][1]) v.push_back(cw + ": overlaps or precedes clip " + std::to_string(c - 1));
      }
      if (e < r.clip_captions.size() && r.clip_captions[e].size() != clips.size()) {
        std::ostringstream msg;
        msg << where << ": " << clips.size() << " clips but " << r.clip_captions[e].size() << " captions";
        v.push_back(msg.str());
      }
    }
    if (e < r.clip_captions.size()) {
      if (r.clip_captions[e].empty()) v.push_back(where + ": empty caption list");
      for (std::size_t c = 0; c < r.clip_captions[e].size(); ++c)
        if (trim(r.clip_captions[e][c]).empty())
          v.push_back(where + " clip " + std::to_string(c) + ": empty caption");
    }
    if (e < r.event_summary.size() && trim(r.event_summary[e]).empty()) v.push_back(where + ": empty summary");
  }
  if (trim(r.video_summary).empty()) v.emplace_back("empty video summary");
  return v;
}

const std::vector<std::string>& PromptPool::pool(Facet f) const {
  switch (f) {
    case Facet::caption: return caption;
    case Facet::judgement: return judgement;
    case Facet::description: return description;
    case Facet::analysis: return analysis;
  }
  return caption;
}

PromptPool parse_prompt_pools(std::string_view caption, std::string_view judgement, std::string_view description,
                              std::string_view analysis) {
  PromptPool p{split_lines(caption), split_lines(judgement), split_lines(description), split_lines(analysis)};
  auto problems = validate_prompt_pools(p);
  if (!problems.empty()) throw ValidationError("invalid prompt pools: " + problems.front(), problems);
  return p;
}

const PromptPool& default_prompt_pools() {
  static const PromptPool pools = parse_prompt_pools(embedded::k_caption_pool, embedded::k_judgement_pool,
                                                     embedded::k_description_pool, embedded::k_analysis_pool);
  return pools;
}

PromptPool load_prompt_pools(const std::filesystem::path& dir) {
  return parse_prompt_pools(io::read_file(dir / "caption.txt"), io::read_file(dir / "judgement.txt"),
                            io::read_file(dir / "description.txt"), io::read_file(dir / "analysis.txt"));
}

std::vector<std::string> validate_prompt_pools(const PromptPool& pools) {
  std::vector<std::string> v;
  auto check = [&](const std::vector<std::string>& pool, const char* name, std::size_t expected) {
    if (pool.size() != expected)
      v.push_back(std::string(name) + " pool has " + std::to_string(pool.size()) + " prompts, expected " +
                  std::to_string(expected));
    std::set<std::string> seen;
    for (const auto& p : pool) {
      if (trim(p).empty()) v.push_back(std::string(name) + " pool has an empty prompt");
      if (!seen.insert(p).second) v.push_back(std::string(name) + " pool repeats \"" + p + "\"");
    }
  };
  check(pools.caption, "caption", k_caption_pool_size);
  check(pools.judgement, "judgement", k_facet_pool_size);
  check(pools.description, "description", k_facet_pool_size);
  check(pools.analysis, "analysis", k_facet_pool_size);
  return v;
}

std::uint64_t pool_digest(const PromptPool& pools) {
  std::uint64_t h = detail::fnv1a("");
  auto feed = [&](std::string_view name, const std::vector<std::string>& pool) {
    h = detail::fnv1a(name, h);
    h = detail::fnv1a("\n", h);
    for (const auto& p : pool) {
      h = detail::fnv1a(p, h);
      h = detail::fnv1a("\n", h);
    }
  };
  feed("caption", pools.caption);
  feed("judgement", pools.judgement);
  feed("description", pools.description);
  feed("analysis", pools.analysis);
  return h;
}

std::string SummaryRequest::request_id() const {
  std::string id = record_id + (level == SummaryLevel::event ? ":event:" + std::to_string(event_index) : ":video");
  return id;
}

SummaryRequest render_event_summary_prompt(const AnnotationRecord& r, std::size_t event_index) {
  if (event_index >= r.events.size()) {
    throw ValidationError("event index " + std::to_string(event_index) + " out of range (record has " +
                          std::to_string(r.events.size()) + " events)");
  }
  if (event_index >= r.clip_captions.size() || r.clip_captions[event_index].empty())
    throw ValidationError("event " + std::to_string(event_index) + ": empty caption list");
  const auto& captions = r.clip_captions[event_index];
  for (std::size_t c = 0; c < captions.size(); ++c)
    if (trim(captions[c]).empty())
      throw ValidationError("event " + std::to_string(event_index) + " clip " + std::to_string(c) + ": empty caption");

  SummaryRequest req;
  req.level = SummaryLevel::event;
  req.record_id = r.video;
  req.event_index = static_cast<int>(event_index);
  req.label = label_block(r);
  req.first_source = captions.front();
  req.prompt = "The dense caption of the video is: " + closed(join(captions, " ")) + " " + existence_clause(r) +
               " Your response should include the following three parts: "
               "1. Whether the anomaly exists and the specific name of the anomaly. "
               "2. A summary of the anomaly events. "
               "3. Brief explanation of the basis for judging the anomaly.";
  return req;
}

SummaryRequest render_video_summary_prompt(const AnnotationRecord& r) {
  if (r.events.empty()) throw ValidationError("record " + r.video + " has no events to summarize");
  std::vector<std::string> missing;
  for (std::size_t e = 0; e < r.events.size(); ++e)
    if (e >= r.event_summary.size() || trim(r.event_summary[e]).empty()) missing.push_back(std::to_string(e));
  if (!missing.empty()) throw ValidationError("missing event summaries at indices " + join(missing, ", "), missing);

  SummaryRequest req;
  req.level = SummaryLevel::video;
  req.record_id = r.video;
  req.label = label_block(r);
  req.first_source = r.event_summary.front();
  req.prompt = "Below is a summary of all the events in the video: " + closed(join(r.event_summary, " ")) + " " +
               existence_clause(r) +
               " Your response should include the following three parts: "
               "1. Whether the anomaly exists and the specific name of the anomaly. "
               "2. Detailed description of the video anomaly event from start to end. "
               "3. Brief analysis of the basis for judging the anomaly.";
  return req;
}

std::string_view to_string(ItemType t) {
  switch (t) {
    case ItemType::clip: return "clip";
    case ItemType::event: return "event";
    case ItemType::video: return "video";
  }
  return "?";
}

SplitOutcome split_summary(std::string_view summary, bool require_analysis) {
  SplitOutcome out;
  const std::string_view s = summary;

  const std::size_t m1 = find_marker(s, '1', 0);
  const std::size_t m2 = m1 == std::string_view::npos ? m1 : find_marker(s, '2', m1 + 2);
  const std::size_t m3 = m2 == std::string_view::npos ? m2 : find_marker(s, '3', m2 + 2);
  if (m3 != std::string_view::npos) {
    SummaryParts p;
    p.judgement = std::string(trim(s.substr(m1 + 2, m2 - m1 - 2)));
    p.description = std::string(trim(s.substr(m2 + 2, m3 - m2 - 2)));
    p.analysis = std::string(trim(s.substr(m3 + 2)));
    if (p.judgement.empty() || p.description.empty() || p.analysis->empty()) {
      out.reason = "numbered summary has an empty part";
      return out;
    }
    out.parts = std::move(p);
    return out;
  }

  const auto sent = sentences(s);
  if (sent.size() < 2) {
    out.reason = "summary has fewer than two sentences";
    return out;
  }
  std::size_t basis = 0;
  for (std::size_t i = 1; i < sent.size(); ++i) {
    if (states_basis(s.substr(sent[i].begin, sent[i].end - sent[i].begin))) {
      basis = i;
      break;
    }
  }
  if (basis == 0 && require_analysis) {
    out.reason = "no sentence states the basis of the judgement";
    return out;
  }
  const std::size_t desc_end = basis == 0 ? sent.size() : basis;
  if (desc_end <= 1) {
    out.reason = "no description between judgement and analysis";
    return out;
  }
  SummaryParts p;
  p.judgement = std::string(s.substr(sent[0].begin, sent[0].end - sent[0].begin));
  p.description = std::string(s.substr(sent[1].begin, sent[desc_end - 1].end - sent[1].begin));
  if (basis != 0) p.analysis = std::string(s.substr(sent[basis].begin, sent.back().end - sent[basis].begin));
  out.parts = std::move(p);
  return out;
}

std::size_t prompt_choice(std::uint64_t seed, std::string_view video, ItemType type, int event, int clip, Facet facet,
                          std::size_t pool_size) {
  std::string key;
  append_le64(key, seed);
  key += video;
  key += '\0';
  key += to_string(type);
  key += '\0';
  key += std::to_string(event);
  key += '\0';
  key += std::to_string(clip);
  key += '\0';
  key += std::to_string(static_cast<int>(facet));
  detail::SplitMix64 rng(detail::fnv1a(key));
  return static_cast<std::size_t>(rng.below(pool_size));
}

InstructionBuild build_instructions(const AnnotationRecord& r, const PromptPool& pools, std::uint64_t seed,
                                    const InstructionOptions& options) {
  auto violations = validate_annotation(r);
  if (!violations.empty())
    throw ValidationError("invalid annotation for " + r.video + ": " + violations.front(), violations);

  InstructionBuild out;
  auto path_for = [&](std::string_view level, const std::string& id) {
    return options.dataset + "/" + std::string(level) + "/" + options.split + "/" + id + options.extension;
  };
  auto ask = [&](ItemType type, int event, int clip, Facet facet) {
    const auto& pool = pools.pool(facet);
    return pool[prompt_choice(seed, r.video, type, event, clip, facet, pool.size())];
  };

  for (std::size_t e = 0; e < r.clips.size(); ++e) {
    for (std::size_t c = 0; c < r.clips[e].size(); ++c) {
      InstructionItem item;
      item.id = r.video + "_E" + std::to_string(e) + "C" + std::to_string(c);
      item.type = ItemType::clip;
      item.video = path_for("clips", item.id);
      item.conversations = {{"human", ask(ItemType::clip, static_cast<int>(e), static_cast<int>(c), Facet::caption)},
                            {"gpt", r.clip_captions[e][c]}};
      out.items.push_back(std::move(item));
    }
  }

  const bool need_analysis = !r.normal();
  auto facet_item = [&](ItemType type, int event, const std::string& id, const std::string& video_path,
                        const std::string& summary) {
    const SplitOutcome split = split_summary(summary, need_analysis);
    if (!split.parts) {
      out.review.push_back({id, type, video_path, split.reason, summary});
      return;
    }
    InstructionItem item;
    item.id = id;
    item.type = type;
    item.video = video_path;
    item.conversations = {{"human", ask(type, event, -1, Facet::judgement)},
                          {"gpt", split.parts->judgement},
                          {"human", ask(type, event, -1, Facet::description)},
                          {"gpt", split.parts->description}};
    if (split.parts->analysis) {
      item.conversations.push_back({"human", ask(type, event, -1, Facet::analysis)});
      item.conversations.push_back({"gpt", *split.parts->analysis});
    }
    out.items.push_back(std::move(item));
  };

  for (std::size_t e = 0; e < r.events.size(); ++e) {
    const std::string id = r.video + "_E" + std::to_string(e);
    facet_item(ItemType::event, static_cast<int>(e), id, path_for("events", id), r.event_summary[e]);
  }
  facet_item(ItemType::video, -1, r.video, path_for("videos", r.video), r.video_summary);
  return out;
}

std::string format_instruction_line(const InstructionItem& item) {
  OrderedJson j;
  j["id"] = item.id;
  j["type"] = std::string(to_string(item.type));
  j["video"] = item.video;
  OrderedJson conv = OrderedJson::array();
  for (const auto& t : item.conversations) {
    OrderedJson turn;
    turn["from"] = t.from;
    turn["value"] = t.value;
    conv.push_back(std::move(turn));
  }
  j["conversations"] = std::move(conv);
  return j.dump() + "\n";
}

std::string format_review_line(const ReviewEntry& entry) {
  OrderedJson j;
  j["id"] = entry.id;
  j["type"] = std::string(to_string(entry.type));
  j["video"] = entry.video;
  j["reason"] = entry.reason;
  j["summary"] = entry.summary;
  return j.dump() + "\n";
}

}  // namespace vau
