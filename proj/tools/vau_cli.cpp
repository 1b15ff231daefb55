// vau: command-line front end for labels, sampling, scoring, instruction
// building and evaluation.
//
// Exit codes: 0 ok, 1 internal error, 2 invalid input or usage,
// 3 summarization service failure, 4 training diverged.

#include <charconv>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vau/commands.hpp"
#include "vau/detail/json.hpp"
#include "vau/error.hpp"
#include "vau/summarize.hpp"

namespace fs = std::filesystem;
using OrderedJson = nlohmann::ordered_json;
using Json = nlohmann::json;

namespace {

constexpr const char* k_version = "0.1.0";

bool g_quiet = false;

void log_line(const char* level, const std::string& command, const std::string& message,
              const OrderedJson& extra = OrderedJson::object()) {
  if (g_quiet && std::string(level) == "info") return;
  OrderedJson j;
  j["ts"] = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
                .count();
  j["level"] = level;
  j["cmd"] = command;
  j["msg"] = message;
  for (const auto& [k, v] : extra.items()) j[k] = v;
  std::cerr << j.dump() << '\n';
}

template <typename T>
std::optional<T> parse_text(const std::string& s);

template <>
std::optional<std::string> parse_text(const std::string& s) {
  return s;
}

template <>
std::optional<bool> parse_text(const std::string& s) {
  if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
  if (s == "0" || s == "false" || s == "no" || s == "off") return false;
  return std::nullopt;
}

template <typename T>
std::optional<T> parse_number(const std::string& s) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

template <>
std::optional<int> parse_text(const std::string& s) {
  return parse_number<int>(s);
}
template <>
std::optional<double> parse_text(const std::string& s) {
  return parse_number<double>(s);
}
template <>
std::optional<std::uint64_t> parse_text(const std::string& s) {
  return parse_number<std::uint64_t>(s);
}
template <>
std::optional<long long> parse_text(const std::string& s) {
  return parse_number<long long>(s);
}

template <>
std::optional<std::vector<std::string>> parse_text(const std::string& s) {
  std::vector<std::string> out;
  std::size_t begin = 0;
  while (begin <= s.size()) {
    std::size_t end = s.find(',', begin);
    if (end == std::string::npos) end = s.size();
    out.push_back(s.substr(begin, end - begin));
    begin = end + 1;
  }
  return out;
}

template <>
std::optional<std::vector<std::size_t>> parse_text(const std::string& s) {
  std::vector<std::size_t> out;
  std::size_t begin = 0;
  while (begin <= s.size()) {
    std::size_t end = s.find(',', begin);
    if (end == std::string::npos) end = s.size();
    auto v = parse_number<unsigned long>(s.substr(begin, end - begin));
    if (!v) return std::nullopt;
    out.push_back(*v);
    begin = end + 1;
  }
  return out;
}

// Resolves each setting from flag, then VAU_<KEY> in the environment, then
// the config file (subcommand section before top level), then the default,
// and remembers the winning value and its source for the run manifest.
class Settings {
 public:
  explicit Settings(std::string command) : command_(std::move(command)) {}

  void load_config(const std::string& path) {
    if (path.empty()) return;
    config_ = vau::detail::parse_json(vau::io::read_file(path), path);
    if (!config_.is_object()) throw vau::ValidationError(path + ": config must be a JSON object");
    config_path_ = path;
  }

  template <typename T>
  std::optional<T> find(const std::string& key, const CLI::Option* opt, const T& flag_value) {
    if (opt && opt->count() > 0) return record(key, flag_value, "flag");
    std::string env = "VAU_";
    for (char c : key) env += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (const char* v = std::getenv(env.c_str()); v && *v) {
      auto parsed = parse_text<T>(v);
      if (!parsed) throw vau::ValidationError("environment variable " + env + " has an invalid value '" + v + "'");
      return record(key, *parsed, "env");
    }
    for (const Json* section : {config_section(), static_cast<const Json*>(&config_)}) {
      if (!section || !section->is_object()) continue;
      auto it = section->find(key);
      if (it == section->end()) continue;
      try {
        return record(key, it->get<T>(), "config");
      } catch (const Json::exception&) {
        throw vau::ValidationError(config_path_ + ": setting '" + key + "' has the wrong type");
      }
    }
    return std::nullopt;
  }

  template <typename T>
  T get(const std::string& key, const CLI::Option* opt, const T& flag_value, const T& fallback) {
    if (auto v = find(key, opt, flag_value)) return *v;
    return record(key, fallback, "default");
  }

  template <typename T>
  T require(const std::string& key, const CLI::Option* opt, const T& flag_value) {
    if (auto v = find(key, opt, flag_value)) return *v;
    throw vau::ValidationError("--" + key + " is required (flag, VAU_ environment variable or config file)");
  }

  std::string manifest(const std::vector<fs::path>& outputs) const {
    OrderedJson j;
    j["tool"] = "vau";
    j["version"] = k_version;
    j["command"] = command_;
    j["config"] = effective_;
    j["sources"] = sources_;
    std::vector<std::string> out;
    for (const auto& p : outputs) out.push_back(p.string());
    j["outputs"] = out;
    return j.dump(2) + "\n";
  }

 private:
  const Json* config_section() const {
    if (!config_.is_object()) return nullptr;
    auto it = config_.find(command_);
    return it == config_.end() ? nullptr : &*it;
  }

  template <typename T>
  T record(const std::string& key, const T& value, const char* source) {
    effective_[key] = value;
    sources_[key] = source;
    return value;
  }

  std::string command_;
  Json config_;
  std::string config_path_;
  OrderedJson effective_ = OrderedJson::object();
  OrderedJson sources_ = OrderedJson::object();
};

// Everything is computed before the first write, so a failing run leaves
// no files behind; each file is then written via temp + rename.
void commit(const std::vector<std::pair<fs::path, std::string>>& files, const Settings& settings) {
  std::vector<fs::path> paths;
  for (const auto& [p, _] : files) paths.push_back(p);
  for (const auto& [p, content] : files) vau::io::write_file_atomic(p, content);
  vau::io::write_file_atomic(fs::path(files.front().first.string() + ".manifest.json"), settings.manifest(paths));
}

std::size_t default_jobs() { return std::max(1u, std::min(8u, std::thread::hardware_concurrency())); }

struct Common {
  std::string output;
  std::string config;
  int jobs = 1;
  std::string format = "json";
  CLI::Option* output_opt = nullptr;
  CLI::Option* jobs_opt = nullptr;
  CLI::Option* format_opt = nullptr;
};

void add_common(CLI::App* sub, Common& c, bool with_format) {
  c.output_opt = sub->add_option("-o,--output", c.output, "Output file");
  sub->add_option("--config", c.config, "JSON config file (top-level keys or a section named after the subcommand)");
  c.jobs_opt = sub->add_option("-j,--jobs", c.jobs, "Worker threads (output order never depends on it)");
  if (with_format)
    c.format_opt =
        sub->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
}

struct Resolved {
  fs::path output;
  std::size_t jobs = 1;
  std::string format = "json";
};

Resolved resolve_common(Settings& s, Common& c) {
  s.load_config(c.config);
  Resolved r;
  r.output = s.require<std::string>("output", c.output_opt, c.output);
  const int jobs = s.get<int>("jobs", c.jobs_opt, c.jobs, static_cast<int>(default_jobs()));
  if (jobs < 1) throw vau::ParameterError("--jobs must be >= 1");
  r.jobs = static_cast<std::size_t>(jobs);
  if (c.format_opt) {
    r.format = s.get<std::string>("format", c.format_opt, c.format, "json");
    if (r.format != "json" && r.format != "csv") throw vau::ParameterError("--format must be json or csv");
  }
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Video anomaly pipeline tools: frame labels, sampling, scoring, instruction data, evaluation"};
  app.set_version_flag("--version", k_version);
  app.require_subcommand(1);
  app.fallthrough();
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Only log warnings and errors");
  std::string active = "vau";
  std::function<void()> run;

  // labels
  Common lc;
  std::string l_events, l_video, l_meta, l_annotations;
  long long l_frames = -1, l_raw = -1;
  int l_stride = 16;
  double l_fps = 30.0;
  auto* labels = app.add_subcommand("labels", "Derive frame-level labels from event intervals");
  add_common(labels, lc, false);
  auto* o_events = labels->add_option("--events", l_events, "Events JSON array [{start_s,end_s,label}]");
  auto* o_video = labels->add_option("--video", l_video, "Video id (with --events)");
  auto* o_frames = labels->add_option("--frames", l_frames, "Scored frame count T (with --events)");
  auto* o_raw = labels->add_option("--raw-frames", l_raw, "Raw frame count; T = ceil(raw / stride)");
  auto* o_meta = labels->add_option("--meta", l_meta, "JSONL of {video, frames, stride, fps, events}");
  auto* o_ann = labels->add_option("--annotations", l_annotations, "Annotation records");
  auto* o_lstride = labels->add_option("--stride", l_stride, "Frame stride");
  auto* o_lfps = labels->add_option("--fps", l_fps, "Frames per second");
  labels->callback([&] {
    active = "labels";
    run = [&] {
      Settings s("labels");
      const Resolved r = resolve_common(s, lc);
      const int stride = s.get<int>("stride", o_lstride, l_stride, 16);
      const double fps = s.get<double>("fps", o_lfps, l_fps, 30.0);
      const auto events = s.find<std::string>("events", o_events, l_events);
      const auto meta = s.find<std::string>("meta", o_meta, l_meta);
      const auto ann = s.find<std::string>("annotations", o_ann, l_annotations);
      if (int(events.has_value()) + int(meta.has_value()) + int(ann.has_value()) != 1)
        throw vau::ValidationError("give exactly one of --events, --meta, --annotations");
      std::vector<vau::cmd::TimelineMeta> videos;
      if (events) {
        vau::cmd::TimelineMeta m;
        m.video = s.require<std::string>("video", o_video, l_video);
        const auto frames = s.find<long long>("frames", o_frames, l_frames);
        const auto raw = s.find<long long>("raw-frames", o_raw, l_raw);
        if (frames.has_value() == raw.has_value()) throw vau::ValidationError("give exactly one of --frames, --raw-frames");
        const long long count = frames ? *frames : *raw;
        if (count < 0) throw vau::ValidationError("frame count must be >= 0");
        if (stride < 1) throw vau::ParameterError("stride must be >= 1");
        m.frames = frames ? static_cast<std::size_t>(count)
                          : vau::scored_frame_count(static_cast<std::size_t>(count), stride);
        m.stride = stride;
        m.fps = fps;
        m.events = vau::io::read_events(*events);
        videos.push_back(std::move(m));
      } else if (meta) {
        videos = vau::cmd::parse_timeline_meta(vau::io::read_file(*meta), *meta);
      } else {
        videos = vau::cmd::meta_from_annotations(vau::read_annotations(*ann), stride);
      }
      const std::string out = vau::cmd::labels_jsonl(videos, r.jobs);
      commit({{r.output, out}}, s);
      log_line("info", "labels", "wrote labels", {{"videos", videos.size()}, {"output", r.output.string()}});
    };
  });

  // sample
  Common sc;
  std::string s_scores, s_sampler = "ats";
  double s_tau = vau::k_default_tau;
  int s_n = static_cast<int>(vau::k_default_budget), s_stride = 16;
  double s_fps = 30.0;
  auto* samp = app.add_subcommand("sample", "Select frames per video with a sampler");
  add_common(samp, sc, false);
  auto* o_sscores = samp->add_option("--scores", s_scores, "Scores JSONL, or CSV for one video");
  auto* o_sampler = samp->add_option("--sampler", s_sampler, "ats | uniform | topk");
  auto* o_tau = samp->add_option("--tau", s_tau, "Mass offset added to every score");
  auto* o_n = samp->add_option("-n,--n", s_n, "Frames per video");
  auto* o_sstride = samp->add_option("--stride", s_stride, "Stride for CSV input");
  auto* o_sfps = samp->add_option("--fps", s_fps, "FPS for CSV input");
  samp->callback([&] {
    active = "sample";
    run = [&] {
      Settings s("sample");
      const Resolved r = resolve_common(s, sc);
      const auto kind = vau::parse_sampler(s.get<std::string>("sampler", o_sampler, s_sampler, "ats"));
      const double tau = s.get<double>("tau", o_tau, s_tau, vau::k_default_tau);
      const int n = s.get<int>("n", o_n, s_n, static_cast<int>(vau::k_default_budget));
      if (n < 1) throw vau::ParameterError("--n must be >= 1");
      const int stride = s.get<int>("stride", o_sstride, s_stride, 16);
      const double fps = s.get<double>("fps", o_sfps, s_fps, 30.0);
      const auto videos = vau::io::read_scores(s.require<std::string>("scores", o_sscores, s_scores), stride, fps);
      const std::string out = vau::cmd::samples_jsonl(videos, kind, tau, static_cast<std::size_t>(n), r.jobs);
      commit({{r.output, out}}, s);
      log_line("info", "sample", "wrote sample sets", {{"videos", videos.size()}, {"output", r.output.string()}});
    };
  });

  // bench-samplers
  Common bc;
  std::string b_scores, b_labels;
  std::vector<std::size_t> b_budgets{8, 16, 32};
  double b_tau = vau::k_default_tau;
  auto* bench = app.add_subcommand("bench-samplers", "Compare samplers' anomaly coverage over a labelled corpus");
  add_common(bench, bc, true);
  auto* o_bscores = bench->add_option("--scores", b_scores, "Scores JSONL");
  auto* o_blabels = bench->add_option("--labels", b_labels, "Labels JSONL");
  auto* o_budgets = bench->add_option("--budgets", b_budgets, "Frame budgets")->delimiter(',');
  auto* o_btau = bench->add_option("--tau", b_tau, "Mass offset for ats");
  bench->callback([&] {
    active = "bench-samplers";
    run = [&] {
      Settings s("bench-samplers");
      const Resolved r = resolve_common(s, bc);
      const auto budgets = s.get<std::vector<std::size_t>>("budgets", o_budgets, b_budgets, {8, 16, 32});
      const double tau = s.get<double>("tau", o_btau, b_tau, vau::k_default_tau);
      const auto scores = vau::io::read_scores(s.require<std::string>("scores", o_bscores, b_scores));
      const auto labels = vau::io::read_labels(s.require<std::string>("labels", o_blabels, b_labels));
      const auto rows = vau::cmd::bench_samplers(scores, labels, budgets, tau, r.jobs);
      const std::string out =
          r.format == "csv" ? vau::cmd::format_bench_csv(rows) : vau::cmd::format_bench_json(rows, tau);
      commit({{r.output, out}}, s);
      if (!g_quiet) std::cout << vau::cmd::format_bench_table(rows);
      log_line("info", "bench-samplers", "wrote report", {{"videos", scores.size()}, {"output", r.output.string()}});
    };
  });

  // train
  Common tc;
  std::vector<std::string> t_features;
  std::string t_labels, t_optimizer = "adam";
  std::uint64_t t_seed = 0;
  int t_epochs = 50, t_batch = 8, t_hidden = 16, t_window = 5, t_slots = 8;
  double t_lr = 1e-4, t_momentum = 0.9, t_was = 1, t_wtri = 1, t_wkl = 1, t_margin = 1;
  bool t_no_encoder = false, t_no_global = false, t_no_local = false;
  auto* train = app.add_subcommand("train", "Train the anomaly scorer on features and frame labels");
  add_common(train, tc, false);
  auto* o_tfeat = train->add_option("--features", t_features, "Feature files or directories");
  auto* o_tlabels = train->add_option("--labels", t_labels, "Labels JSONL");
  auto* o_seed = train->add_option("--seed", t_seed, "Seed (required)");
  auto* o_epochs = train->add_option("--epochs", t_epochs, "Epochs");
  auto* o_batch = train->add_option("--batch", t_batch, "Videos per update");
  auto* o_lr = train->add_option("--lr", t_lr, "Learning rate");
  auto* o_opt = train->add_option("--optimizer", t_optimizer, "adam | sgd");
  auto* o_mom = train->add_option("--momentum", t_momentum, "SGD momentum");
  auto* o_hidden = train->add_option("--hidden", t_hidden, "Encoder width");
  auto* o_window = train->add_option("--window", t_window, "Local attention half-width");
  auto* o_slots = train->add_option("--memory-slots", t_slots, "Prototypes per memory bank (0 disables)");
  auto* o_noenc = train->add_flag("--no-encoder", t_no_encoder, "Score raw features (logistic model)");
  auto* o_noglob = train->add_flag("--no-global", t_no_global, "Disable global attention");
  auto* o_noloc = train->add_flag("--no-local", t_no_local, "Disable local attention");
  auto* o_was = train->add_option("--w-as", t_was, "Frame BCE weight");
  auto* o_wtri = train->add_option("--w-triplet", t_wtri, "Triplet weight");
  auto* o_wkl = train->add_option("--w-kl", t_wkl, "KL weight");
  auto* o_margin = train->add_option("--margin", t_margin, "Triplet margin");
  train->callback([&] {
    active = "train";
    run = [&] {
      Settings s("train");
      const Resolved r = resolve_common(s, tc);
      vau::TrainConfig cfg;
      cfg.seed = s.require<std::uint64_t>("seed", o_seed, t_seed);
      cfg.epochs = s.get<int>("epochs", o_epochs, t_epochs, cfg.epochs);
      cfg.batch_size = s.get<int>("batch", o_batch, t_batch, cfg.batch_size);
      cfg.learning_rate = s.get<double>("lr", o_lr, t_lr, cfg.learning_rate);
      const std::string opt = s.get<std::string>("optimizer", o_opt, t_optimizer, "adam");
      if (opt != "adam" && opt != "sgd") throw vau::ParameterError("--optimizer must be adam or sgd");
      cfg.optimizer = opt == "adam" ? vau::OptimizerKind::adam : vau::OptimizerKind::sgd_momentum;
      cfg.momentum = s.get<double>("momentum", o_mom, t_momentum, cfg.momentum);
      cfg.arch.hidden_dim = s.get<int>("hidden", o_hidden, t_hidden, cfg.arch.hidden_dim);
      cfg.arch.window = s.get<int>("window", o_window, t_window, cfg.arch.window);
      cfg.arch.memory_slots = s.get<int>("memory-slots", o_slots, t_slots, cfg.arch.memory_slots);
      cfg.arch.encoder = !s.get<bool>("no-encoder", o_noenc, t_no_encoder, false);
      cfg.arch.global_attention = !s.get<bool>("no-global", o_noglob, t_no_global, false);
      cfg.arch.local_attention = !s.get<bool>("no-local", o_noloc, t_no_local, false);
      cfg.weights.as = s.get<double>("w-as", o_was, t_was, 1.0);
      cfg.weights.triplet = s.get<double>("w-triplet", o_wtri, t_wtri, 1.0);
      cfg.weights.kl = s.get<double>("w-kl", o_wkl, t_wkl, 1.0);
      cfg.weights.margin = s.get<double>("margin", o_margin, t_margin, 1.0);

      std::vector<fs::path> inputs;
      for (const auto& f : s.require<std::vector<std::string>>("features", o_tfeat, t_features)) inputs.emplace_back(f);
      const auto features = vau::cmd::read_feature_corpus(vau::cmd::expand_feature_paths(inputs), r.jobs);
      const auto labels = vau::io::read_labels(s.require<std::string>("labels", o_tlabels, t_labels));
      const auto dataset = vau::cmd::pair_examples(features, labels);
      if (dataset.empty()) throw vau::ValidationError("no training videos");
      cfg.arch.input_dim = static_cast<int>(dataset.front().features.dim());
      log_line("info", "train", "training", {{"videos", dataset.size()}, {"epochs", cfg.epochs}});
      vau::TrainResult result;
      try {
        result = vau::train(dataset, cfg);
      } catch (const vau::DivergenceError& e) {
        const fs::path rescue = r.output.string() + ".last-finite";
        vau::save_model(rescue, e.last_finite(), &cfg);
        log_line("error", "train", "last finite model saved", {{"path", rescue.string()}});
        throw;
      }
      const std::string blob = vau::serialize_model(result.model);
      const std::string model_manifest = vau::model_manifest(result.model, &cfg);
      commit({{r.output, blob}, {fs::path(r.output.string() + ".json"), model_manifest}}, s);
      log_line("info", "train", "saved model",
               {{"output", r.output.string()}, {"final_loss", result.epoch_loss.empty() ? 0.0 : result.epoch_loss.back()}});
    };
  });

  // score
  Common scc;
  std::string c_model;
  std::vector<std::string> c_features;
  int c_stride = 16;
  double c_fps = 30.0;
  auto* scorec = app.add_subcommand("score", "Score feature sequences with a trained model");
  add_common(scorec, scc, true);
  auto* o_model = scorec->add_option("--model", c_model, "Model checkpoint");
  auto* o_cfeat = scorec->add_option("--features", c_features, "Feature files or directories");
  auto* o_cstride = scorec->add_option("--stride", c_stride, "Frame stride written to the output");
  auto* o_cfps = scorec->add_option("--fps", c_fps, "FPS written to the output");
  scorec->callback([&] {
    active = "score";
    run = [&] {
      Settings s("score");
      const Resolved r = resolve_common(s, scc);
      const int stride = s.get<int>("stride", o_cstride, c_stride, 16);
      const double fps = s.get<double>("fps", o_cfps, c_fps, 30.0);
      const auto model = vau::load_model(s.require<std::string>("model", o_model, c_model));
      std::vector<fs::path> inputs;
      for (const auto& f : s.require<std::vector<std::string>>("features", o_cfeat, c_features)) inputs.emplace_back(f);
      const auto features = vau::cmd::read_feature_corpus(vau::cmd::expand_feature_paths(inputs), r.jobs);
      const auto scores = vau::cmd::score_corpus(model, features, stride, fps, r.jobs);
      std::string out;
      if (r.format == "csv") {
        if (scores.size() != 1) throw vau::ValidationError("--format csv holds one video; got " + std::to_string(scores.size()));
        out = vau::io::format_scores_csv(scores.front().timeline);
      } else {
        out = vau::io::format_scores_jsonl(scores);
      }
      commit({{r.output, out}}, s);
      log_line("info", "score", "wrote scores", {{"videos", scores.size()}, {"output", r.output.string()}});
    };
  });

  // build-instructions
  Common ic;
  std::string i_ann, i_prompts, i_review, i_dataset = "ucf-crime", i_split = "train";
  std::uint64_t i_seed = 0;
  auto* build = app.add_subcommand("build-instructions", "Build clip/event/video instruction items from annotations");
  add_common(build, ic, false);
  auto* o_iann = build->add_option("--annotations", i_ann, "Annotation records (object, array or JSONL)");
  auto* o_iseed = build->add_option("--seed", i_seed, "Seed for prompt choice (required)");
  auto* o_prompts = build->add_option("--prompts", i_prompts, "Directory with caption/judgement/description/analysis.txt");
  auto* o_review = build->add_option("--review", i_review, "Review queue path (default <output>.review.jsonl)");
  auto* o_dataset = build->add_option("--dataset", i_dataset, "Dataset directory name in video paths");
  auto* o_split = build->add_option("--split", i_split, "Split name in video paths");
  build->callback([&] {
    active = "build-instructions";
    run = [&] {
      Settings s("build-instructions");
      const Resolved r = resolve_common(s, ic);
      const std::uint64_t seed = s.require<std::uint64_t>("seed", o_iseed, i_seed);
      vau::InstructionOptions options;
      options.dataset = s.get<std::string>("dataset", o_dataset, i_dataset, options.dataset);
      options.split = s.get<std::string>("split", o_split, i_split, options.split);
      const auto prompts = s.find<std::string>("prompts", o_prompts, i_prompts);
      const vau::PromptPool pools = prompts ? vau::load_prompt_pools(*prompts) : vau::default_prompt_pools();
      const fs::path review =
          s.get<std::string>("review", o_review, i_review, r.output.string() + ".review.jsonl");
      const auto records = vau::read_annotations(s.require<std::string>("annotations", o_iann, i_ann));
      const auto files = vau::cmd::instruction_files(records, pools, seed, options, r.jobs);
      commit({{r.output, files.items}, {review, files.review}}, s);
      log_line("info", "build-instructions", "wrote instructions",
               {{"records", records.size()}, {"items", files.item_count}, {"review", files.review_count}});
      if (files.review_count)
        log_line("warning", "build-instructions", "items held for manual review", {{"path", review.string()}});
    };
  });

  // eval-detect
  Common dc;
  std::string d_scores, d_labels, d_dataset = "default";
  auto* evald = app.add_subcommand("eval-detect", "Frame-level AUC and AP");
  add_common(evald, dc, true);
  auto* o_dscores = evald->add_option("--scores", d_scores, "Scores JSONL");
  auto* o_dlabels = evald->add_option("--labels", d_labels, "Labels JSONL");
  auto* o_ddataset = evald->add_option("--dataset", d_dataset, "Name of the report entry");
  evald->callback([&] {
    active = "eval-detect";
    run = [&] {
      Settings s("eval-detect");
      const Resolved r = resolve_common(s, dc);
      const auto scores = vau::io::read_scores(s.require<std::string>("scores", o_dscores, d_scores));
      const auto labels = vau::io::read_labels(s.require<std::string>("labels", o_dlabels, d_labels));
      const auto report =
          vau::cmd::detection_report(scores, labels, s.get<std::string>("dataset", o_ddataset, d_dataset, "default"));
      const std::string out = r.format == "csv" ? vau::format_report_csv(report) : vau::format_report_json(report);
      commit({{r.output, out}}, s);
      const auto& d = report.detection.begin()->second;
      log_line("info", "eval-detect", "evaluated", {{"auc", d.auc}, {"ap", d.ap}});
    };
  });

  // eval-text
  Common ec;
  std::string e_pred, e_ref, e_scores, e_labels, e_dataset = "default";
  auto* evalt = app.add_subcommand("eval-text", "BLEU, ROUGE-L, CIDEr and METEOR-lite per granularity");
  add_common(evalt, ec, true);
  auto* o_pred = evalt->add_option("--predictions", e_pred, "Predictions JSONL {id,type,text}");
  auto* o_ref = evalt->add_option("--references", e_ref, "References JSONL {id,type,text}");
  auto* o_escores = evalt->add_option("--scores", e_scores, "Optional scores JSONL for a detection block");
  auto* o_elabels = evalt->add_option("--labels", e_labels, "Labels JSONL for the detection block");
  auto* o_edataset = evalt->add_option("--dataset", e_dataset, "Detection entry name");
  evalt->callback([&] {
    active = "eval-text";
    run = [&] {
      Settings s("eval-text");
      const Resolved r = resolve_common(s, ec);
      const auto preds = vau::read_text_items(s.require<std::string>("predictions", o_pred, e_pred));
      const auto refs = vau::read_text_items(s.require<std::string>("references", o_ref, e_ref));
      auto report = vau::evaluate_corpus(preds, refs, r.jobs);
      const auto scores_path = s.find<std::string>("scores", o_escores, e_scores);
      const auto labels_path = s.find<std::string>("labels", o_elabels, e_labels);
      if (scores_path.has_value() != labels_path.has_value())
        throw vau::ValidationError("--scores and --labels go together");
      if (scores_path) {
        const auto det = vau::cmd::detection_report(vau::io::read_scores(*scores_path), vau::io::read_labels(*labels_path),
                                                    s.get<std::string>("dataset", o_edataset, e_dataset, "default"));
        report.detection = det.detection;
      }
      const std::string out = r.format == "csv" ? vau::format_report_csv(report) : vau::format_report_json(report);
      commit({{r.output, out}}, s);
      log_line("info", "eval-text", "evaluated", {{"items", preds.size()}});
    };
  });

  // summarize
  Common mc;
  std::string m_ann, m_service;
  bool m_mock = false;
  int m_max_tokens = 512, m_attempts = 3, m_delay_ms = 200;
  auto* summ = app.add_subcommand("summarize", "Fill event and video summaries from a summarization service");
  add_common(summ, mc, false);
  auto* o_mann = summ->add_option("--annotations", m_ann, "Annotation records with clip captions");
  auto* o_service = summ->add_option("--service-config", m_service, "Service JSON {endpoint, model, api_key, ...}");
  auto* o_mock = summ->add_flag("--mock", m_mock, "Use the deterministic offline summarizer");
  auto* o_maxtok = summ->add_option("--max-tokens", m_max_tokens, "Completion length cap");
  auto* o_attempts = summ->add_option("--attempts", m_attempts, "Attempts per request");
  auto* o_delay = summ->add_option("--retry-delay-ms", m_delay_ms, "First retry delay, doubled each time");
  summ->callback([&] {
    active = "summarize";
    run = [&] {
      Settings s("summarize");
      const Resolved r = resolve_common(s, mc);
      const auto records = vau::read_annotations(s.require<std::string>("annotations", o_mann, m_ann));
      const bool mock = s.get<bool>("mock", o_mock, m_mock, false);
      const auto service_file = s.find<std::string>("service-config", o_service, m_service);
      vau::ServiceConfig service =
          vau::load_service_config(service_file ? std::optional<fs::path>(*service_file) : std::nullopt);
      vau::GenerationParams params = service.generation;
      params.max_tokens = s.get<int>("max-tokens", o_maxtok, m_max_tokens, params.max_tokens);
      vau::RetryPolicy policy;
      policy.attempts = s.get<int>("attempts", o_attempts, m_attempts, 3);
      policy.base_delay = std::chrono::milliseconds(s.get<int>("retry-delay-ms", o_delay, m_delay_ms, 200));
      std::unique_ptr<vau::SummarizationClient> client;
      if (mock)
        client = std::make_unique<vau::MockSummarizationClient>();
      else
        client = std::make_unique<vau::HttpChatClient>(service);
      std::string out;
      for (const auto& rec : records)
        out += vau::format_annotation(vau::summarize_record(rec, *client, params, policy, service.max_in_flight)) + "\n";
      commit({{r.output, out}}, s);
      log_line("info", "summarize", "wrote summaries", {{"records", records.size()}});
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  g_quiet = quiet;

  try {
    run();
    return 0;
  } catch (const vau::ValidationError& e) {
    OrderedJson extra = OrderedJson::object();
    if (!e.violations().empty()) extra["violations"] = e.violations();
    log_line("error", active, e.what(), extra);
    return 2;
  } catch (const vau::ServiceError& e) {
    log_line("error", active, e.what(), {{"request_id", e.request_id()}});
    return 3;
  } catch (const vau::DivergenceError& e) {
    log_line("error", active, e.what());
    return 4;
  } catch (const std::exception& e) {
    log_line("error", active, e.what());
    return 1;
  }
}
