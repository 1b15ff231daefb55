#pragma once

// A small on-disk corpus (annotations, features, scores, labels, texts) and a
// helper for running the command-line tool against it.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "support/generators.hpp"
#include "vau/commands.hpp"
#include "vau/dataengine.hpp"
#include "vau/eval.hpp"
#include "vau/io.hpp"

namespace fixture {

namespace fs = std::filesystem;

struct Corpus {
  fs::path dir;
  fs::path annotations, meta, events, features, scores, labels, predictions, references;
  std::vector<vau::AnnotationRecord> records;
  std::vector<vau::cmd::TimelineMeta> timelines;
};

inline std::string meta_line(const vau::cmd::TimelineMeta& m) {
  nlohmann::ordered_json j;
  j["video"] = m.video;
  j["frames"] = m.frames;
  j["stride"] = m.stride;
  j["fps"] = m.fps;
  j["events"] = nlohmann::ordered_json::parse(vau::io::format_events_json(m.events));
  return j.dump() + "\n";
}

inline std::string text_line(const std::string& id, const std::string& type, const std::string& text) {
  nlohmann::ordered_json j;
  j["id"] = id;
  j["type"] = type;
  j["text"] = text;
  return j.dump() + "\n";
}

/// `videos` random records with matching features, scores and labels.
inline Corpus make_corpus(const fs::path& dir, std::size_t videos, std::uint64_t seed) {
  fs::remove_all(dir);
  fs::create_directories(dir / "features");
  gen::Rng rng(seed);
  Corpus c;
  c.dir = dir;
  c.annotations = dir / "annotations.jsonl";
  c.meta = dir / "meta.jsonl";
  c.events = dir / "events.json";
  c.features = dir / "features";
  c.scores = dir / "scores.jsonl";
  c.labels = dir / "labels.jsonl";
  c.predictions = dir / "predictions.jsonl";
  c.references = dir / "references.jsonl";

  std::string ann, meta, preds, refs;
  for (std::size_t v = 0; v < videos; ++v) {
    char id[32];
    std::snprintf(id, sizeof id, "vid_%03zu", v);
    auto r = gen::record(rng, id);
    if (v % 7 == 3) {
      r.label = {"Normal"};
      r.video_summary = "There is no anomaly. " + gen::sentence(rng);
      for (auto& s : r.event_summary) s = "Nothing unusual happens here. " + gen::sentence(rng);
    }
    ann += vau::format_annotation(r) + "\n";
    c.records.push_back(r);

    for (std::size_t e = 0; e < r.clips.size(); ++e)
      for (std::size_t k = 0; k < r.clips[e].size(); ++k) {
        const std::string cid = r.video + "_E" + std::to_string(e) + "C" + std::to_string(k);
        refs += text_line(cid, "clip", r.clip_captions[e][k]);
        preds += text_line(cid, "clip", gen::below(rng, 3) ? gen::sentence(rng) : r.clip_captions[e][k]);
      }
    for (std::size_t e = 0; e < r.events.size(); ++e) {
      const std::string eid = r.video + "_E" + std::to_string(e);
      refs += text_line(eid, "event", r.event_summary[e]);
      preds += text_line(eid, "event", gen::summary(rng, r.label.front()));
    }
    refs += text_line(r.video, "video", r.video_summary);
    preds += text_line(r.video, "video", gen::summary(rng, r.label.front()));
  }
  c.timelines = vau::cmd::meta_from_annotations(c.records, 16);
  for (const auto& m : c.timelines) meta += meta_line(m);
  vau::io::write_file_atomic(c.annotations, ann);
  vau::io::write_file_atomic(c.meta, meta);
  vau::io::write_file_atomic(c.events, vau::io::format_events_json(c.timelines.front().events));
  vau::io::write_file_atomic(c.predictions, preds);
  vau::io::write_file_atomic(c.references, refs);
  const std::string labels = vau::cmd::labels_jsonl(c.timelines);
  vau::io::write_file_atomic(c.labels, labels);

  std::vector<vau::io::VideoScores> scores;
  const auto parsed = vau::io::parse_labels_jsonl(labels);
  for (const auto& l : parsed) {
    auto f = gen::separable_features(rng, l.labels, 8, 1.0, l.video);
    vau::io::write_features(c.features / (l.video + ".feat"), f, l.stride, l.fps);
    vau::ScoreTimeline t = gen::oracle_scores(rng, l.labels);
    t.stride = l.stride;
    t.fps = l.fps;
    scores.push_back({l.video, t});
  }
  vau::io::write_file_atomic(c.scores, vau::io::format_scores_jsonl(scores));
  return c;
}

inline std::string quote(const std::string& s) {
  std::string out = "'";
  for (char ch : s) out += ch == '\'' ? std::string("'\\''") : std::string(1, ch);
  return out + "'";
}

/// Runs the tool through /bin/sh; `env` is a prefix like "VAU_TAU=0.5".
/// Returns the exit status; stderr goes to `log`.
inline int run_cli(const std::vector<std::string>& args, const fs::path& log, const std::string& env = "") {
  std::string cmd = env.empty() ? "" : env + " ";
  cmd += quote(VAU_CLI_PATH);
  for (const auto& a : args) cmd += " " + quote(a);
  cmd += " >/dev/null 2>" + quote(log.string());
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace fixture
