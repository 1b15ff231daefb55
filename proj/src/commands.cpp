#include "vau/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <sstream>
#include <thread>

#include "vau/detail/json.hpp"
#include "vau/error.hpp"

namespace vau::cmd {

using detail::Json;
using detail::OrderedJson;
namespace fs = std::filesystem;

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min(std::max<std::size_t>(1, jobs), std::max<std::size_t>(1, n));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

namespace {

template <typename T>
T field(const Json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) throw ValidationError(where + ": missing field '" + key + "'");
  try {
    return it->get<T>();
  } catch (const Json::exception& e) {
    throw ValidationError(where + ": field '" + key + "' has wrong type: " + e.what());
  }
}

std::string prefixed(const std::string& video, const std::exception& e) { return "video " + video + ": " + e.what(); }

// Runs fn and rethrows validation failures with the video id in front.
template <typename F>
auto for_video(const std::string& video, F&& fn) {
  try {
    return fn();
  } catch (const ParameterError& e) {
    throw ParameterError(prefixed(video, e));
  } catch (const ShapeError& e) {
    throw ShapeError(prefixed(video, e));
  } catch (const ValidationError& e) {
    throw ValidationError(prefixed(video, e), e.violations());
  }
}

void require_valid(const io::VideoScores& v) {
  auto problems = validate_timeline(v.timeline);
  if (!problems.empty()) throw ValidationError("video " + v.video + ": " + problems.front(), problems);
}

std::map<std::string, const io::VideoLabels*> labels_by_id(const std::vector<io::VideoLabels>& labels) {
  std::map<std::string, const io::VideoLabels*> out;
  for (const auto& l : labels)
    if (!out.emplace(l.video, &l).second) throw ValidationError("duplicate labels for video " + l.video);
  return out;
}

const io::VideoLabels& partner(const std::map<std::string, const io::VideoLabels*>& by_id, const std::string& video,
                               std::size_t frames) {
  auto it = by_id.find(video);
  if (it == by_id.end()) throw ValidationError("no labels for video " + video);
  if (it->second->labels.size() != frames) {
    throw ValidationError("video " + video + ": " + std::to_string(frames) + " frames but " +
                          std::to_string(it->second->labels.size()) + " labels");
  }
  return *it->second;
}

}  // namespace

std::vector<TimelineMeta> parse_timeline_meta(std::string_view text, const std::string& source) {
  std::vector<TimelineMeta> out;
  std::size_t line = 0;
  for (const Json& j : detail::parse_jsonl(text, source)) {
    const std::string where = source + ": entry " + std::to_string(++line);
    TimelineMeta m;
    m.video = field<std::string>(j, "video", where);
    const long long frames = field<long long>(j, "frames", where);
    if (frames < 0) throw ValidationError(where + ": frames must be >= 0");
    m.frames = static_cast<std::size_t>(frames);
    if (j.contains("stride")) m.stride = field<int>(j, "stride", where);
    if (j.contains("fps")) m.fps = field<double>(j, "fps", where);
    if (j.contains("events")) m.events = io::parse_events_json(j["events"].dump(), where);
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<TimelineMeta> meta_from_annotations(const std::vector<AnnotationRecord>& records, int stride) {
  if (stride < 1) throw ParameterError("stride must be >= 1");
  std::vector<TimelineMeta> out;
  for (const auto& r : records) {
    if (r.n_frames < 0) throw ValidationError("record " + r.video + ": n_frames must be >= 0");
    TimelineMeta m;
    m.video = r.video;
    m.frames = scored_frame_count(static_cast<std::size_t>(r.n_frames), stride);
    m.stride = stride;
    m.fps = r.fps;
    const std::string label = r.normal() ? std::string(k_normal_label) : r.label.front();
    for (const auto& e : r.events) m.events.push_back({e[0], e[1], label});
    out.push_back(std::move(m));
  }
  return out;
}

std::string labels_jsonl(const std::vector<TimelineMeta>& videos, std::size_t jobs) {
  std::vector<std::string> lines(videos.size());
  parallel_for(videos.size(), jobs, [&](std::size_t i) {
    const auto& m = videos[i];
    io::VideoLabels v{m.video, for_video(m.video, [&] { return derive_frame_labels(m.events, m.frames, m.stride, m.fps); }),
                      m.stride, m.fps};
    lines[i] = io::format_labels_line(v);
  });
  std::string out;
  for (auto& l : lines) out += l;
  return out;
}

std::string samples_jsonl(const std::vector<io::VideoScores>& videos, SamplerKind kind, double tau, std::size_t n,
                          std::size_t jobs) {
  std::vector<std::string> lines(videos.size());
  parallel_for(videos.size(), jobs, [&](std::size_t i) {
    const auto& v = videos[i];
    require_valid(v);
    const SampleSet s = for_video(v.video, [&] { return sample(kind, v.timeline, tau, n); });
    lines[i] = io::format_sample_line(v.video, s, kind, tau);
  });
  std::string out;
  for (auto& l : lines) out += l;
  return out;
}

std::vector<BenchRow> bench_samplers(const std::vector<io::VideoScores>& scores,
                                     const std::vector<io::VideoLabels>& labels,
                                     const std::vector<std::size_t>& budgets, double tau, std::size_t jobs) {
  if (budgets.empty()) throw ParameterError("no budgets given");
  for (std::size_t b : budgets)
    if (b < 1) throw ParameterError("budgets must be >= 1");
  const auto by_id = labels_by_id(labels);
  std::vector<const io::VideoLabels*> matched;
  for (const auto& v : scores) {
    require_valid(v);
    matched.push_back(&partner(by_id, v.video, static_cast<std::size_t>(v.timeline.size())));
  }
  if (labels.size() != scores.size()) {
    std::vector<std::string> extra;
    std::map<std::string, int> seen;
    for (const auto& v : scores) seen[v.video] = 1;
    for (const auto& l : labels)
      if (!seen.count(l.video)) extra.push_back(l.video);
    throw ValidationError("labels without scores for " + std::to_string(extra.size()) + " videos, first " +
                              (extra.empty() ? std::string("?") : extra.front()),
                          extra);
  }

  const std::vector<SamplerKind> kinds{SamplerKind::ats, SamplerKind::uniform, SamplerKind::topk};
  struct Cell {
    Coverage coverage;
    double spread = 0.0;
  };
  const std::size_t per_video = kinds.size() * budgets.size();
  std::vector<Cell> cells(scores.size() * per_video);
  parallel_for(scores.size(), jobs, [&](std::size_t v) {
    const auto& t = scores[v].timeline;
    const std::size_t frames = static_cast<std::size_t>(t.size());
    for (std::size_t k = 0; k < kinds.size(); ++k) {
      for (std::size_t b = 0; b < budgets.size(); ++b) {
        const std::size_t n = std::min(budgets[b], frames);
        const SampleSet s = for_video(scores[v].video, [&] { return sample(kinds[k], t, tau, n); });
        Cell& c = cells[v * per_video + k * budgets.size() + b];
        c.coverage = event_coverage(s, matched[v]->labels);
        c.spread = temporal_spread(s, frames);
      }
    }
  });

  std::vector<BenchRow> rows;
  for (std::size_t k = 0; k < kinds.size(); ++k) {
    for (std::size_t b = 0; b < budgets.size(); ++b) {
      BenchRow row;
      row.sampler = kinds[k];
      row.budget = budgets[b];
      row.videos = scores.size();
      for (std::size_t v = 0; v < scores.size(); ++v) {
        const Cell& c = cells[v * per_video + k * budgets.size() + b];
        row.anomaly_recall += c.coverage.anomaly_recall;
        row.spread += c.spread;
        if (c.coverage.runs_total > 0) {
          row.events_hit += c.coverage.events_hit;
          ++row.videos_with_events;
        }
      }
      if (row.videos) {
        row.anomaly_recall /= static_cast<double>(row.videos);
        row.spread /= static_cast<double>(row.videos);
      }
      if (row.videos_with_events) row.events_hit /= static_cast<double>(row.videos_with_events);
      rows.push_back(row);
    }
  }
  return rows;
}

std::string format_bench_json(const std::vector<BenchRow>& rows, double tau) {
  OrderedJson j;
  j["tau"] = tau;
  OrderedJson arr = OrderedJson::array();
  for (const auto& r : rows) {
    OrderedJson o;
    o["sampler"] = std::string(to_string(r.sampler));
    o["budget"] = r.budget;
    o["anomaly_recall"] = r.anomaly_recall;
    o["events_hit"] = r.events_hit;
    o["spread"] = r.spread;
    o["videos"] = r.videos;
    o["videos_with_events"] = r.videos_with_events;
    arr.push_back(std::move(o));
  }
  j["rows"] = std::move(arr);
  return j.dump(2) + "\n";
}

std::string format_bench_csv(const std::vector<BenchRow>& rows) {
  std::string out = "sampler,budget,anomaly_recall,events_hit,spread,videos,videos_with_events\n";
  for (const auto& r : rows) {
    out += std::string(to_string(r.sampler)) + "," + std::to_string(r.budget) + "," +
           io::format_double(r.anomaly_recall) + "," + io::format_double(r.events_hit) + "," +
           io::format_double(r.spread) + "," + std::to_string(r.videos) + "," + std::to_string(r.videos_with_events) +
           "\n";
  }
  return out;
}

std::string format_bench_table(const std::vector<BenchRow>& rows) {
  std::ostringstream out;
  out << "sampler   budget  recall   events_hit  spread\n";
  out.setf(std::ios::fixed);
  out.precision(4);
  for (const auto& r : rows) {
    std::string name(to_string(r.sampler));
    name.resize(9, ' ');
    std::string budget = std::to_string(r.budget);
    budget.resize(7, ' ');
    out << name << " " << budget << " " << r.anomaly_recall << "   " << r.events_hit << "      " << r.spread << "\n";
  }
  return out.str();
}

std::vector<fs::path> expand_feature_paths(const std::vector<fs::path>& inputs) {
  std::vector<fs::path> out;
  for (const auto& p : inputs) {
    std::error_code ec;
    if (fs::is_directory(p, ec)) {
      std::vector<fs::path> files;
      for (const auto& entry : fs::directory_iterator(p)) {
        const auto& f = entry.path();
        if (!entry.is_regular_file()) continue;
        const std::string name = f.filename().string();
        if (f.extension() == ".json" || (!name.empty() && name.front() == '.')) continue;  // sidecars, hidden files
        files.push_back(f);
      }
      std::sort(files.begin(), files.end());
      out.insert(out.end(), files.begin(), files.end());
    } else {
      out.push_back(p);
    }
  }
  if (out.empty()) throw ValidationError("no feature files found");
  return out;
}

std::vector<FeatureSequence> read_feature_corpus(const std::vector<fs::path>& files, std::size_t jobs) {
  std::vector<FeatureSequence> out(files.size());
  parallel_for(files.size(), jobs, [&](std::size_t i) { out[i] = io::read_features(files[i]); });
  return out;
}

std::vector<TrainingExample> pair_examples(const std::vector<FeatureSequence>& features,
                                           const std::vector<io::VideoLabels>& labels) {
  const auto by_id = labels_by_id(labels);
  std::vector<TrainingExample> out;
  for (const auto& f : features) {
    const auto& l = partner(by_id, f.video, static_cast<std::size_t>(f.frames()));
    out.push_back({f, l.labels});
  }
  return out;
}

std::vector<io::VideoScores> score_corpus(const ScorerModel& model, const std::vector<FeatureSequence>& features,
                                          int stride, double fps, std::size_t jobs) {
  std::vector<io::VideoScores> out(features.size());
  parallel_for(features.size(), jobs, [&](std::size_t i) {
    out[i].video = features[i].video;
    out[i].timeline = for_video(features[i].video, [&] { return score(model, features[i], stride, fps); });
  });
  return out;
}

InstructionFiles instruction_files(const std::vector<AnnotationRecord>& records, const PromptPool& pools,
                                   std::uint64_t seed, const InstructionOptions& options, std::size_t jobs) {
  std::vector<InstructionBuild> builds(records.size());
  parallel_for(records.size(), jobs, [&](std::size_t i) {
    builds[i] = for_video(records[i].video, [&] { return build_instructions(records[i], pools, seed, options); });
  });
  InstructionFiles out;
  for (const auto& b : builds) {
    for (const auto& item : b.items) out.items += format_instruction_line(item);
    for (const auto& r : b.review) out.review += format_review_line(r);
    out.item_count += b.items.size();
    out.review_count += b.review.size();
  }
  return out;
}

EvalReport detection_report(const std::vector<io::VideoScores>& scores, const std::vector<io::VideoLabels>& labels,
                            const std::string& dataset) {
  const auto by_id = labels_by_id(labels);
  std::vector<double> all_scores;
  std::vector<std::uint8_t> all_labels;
  for (const auto& v : scores) {
    require_valid(v);
    const auto& l = partner(by_id, v.video, static_cast<std::size_t>(v.timeline.size()));
    all_scores.insert(all_scores.end(), v.timeline.scores.data(), v.timeline.scores.data() + v.timeline.size());
    all_labels.insert(all_labels.end(), l.labels.labels.begin(), l.labels.labels.end());
  }
  EvalReport report;
  report.detection[dataset] = evaluate_detection(
      Eigen::Map<const Eigen::VectorXd>(all_scores.data(), static_cast<Eigen::Index>(all_scores.size())), all_labels);
  return report;
}

}  // namespace vau::cmd
