#include "vau/io.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>

#include "vau/detail/json.hpp"
#include "vau/error.hpp"

namespace vau {

namespace detail {

Json parse_json(std::string_view text, const std::string& source) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    std::ostringstream msg;
    msg << source << ": malformed JSON at byte " << (e.byte ? e.byte - 1 : 0) << ": " << e.what();
    throw ValidationError(msg.str());
  }
}

std::vector<Json> parse_jsonl(std::string_view text, const std::string& source) {
  std::vector<Json> out;
  std::size_t offset = 0;
  while (offset < text.size()) {
    std::size_t end = text.find('\n', offset);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(offset, end - offset);
    if (line.find_first_not_of(" \t\r") != std::string_view::npos) {
      try {
        out.push_back(Json::parse(line.begin(), line.end()));
      } catch (const Json::parse_error& e) {
        std::ostringstream msg;
        msg << source << ": malformed JSON at byte " << (offset + e.byte - (e.byte ? 1 : 0)) << ": " << e.what();
        throw ValidationError(msg.str());
      }
    }
    offset = end + 1;
  }
  return out;
}

}  // namespace detail

namespace io {

using detail::Json;
using detail::OrderedJson;

namespace {

template <typename T>
T field(const Json& j, const char* key, const std::string& source) {
  auto it = j.find(key);
  if (it == j.end()) throw ValidationError(source + ": missing field '" + key + "'");
  try {
    return it->get<T>();
  } catch (const Json::exception& e) {
    throw ValidationError(source + ": field '" + key + "' has wrong type: " + e.what());
  }
}

bool has_extension(const fs::path& p, std::string_view ext) {
  return p.extension().string() == ext;
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFFu));
}

std::uint32_t get_u32(std::string_view in, std::size_t& pos, const std::string& source) {
  if (pos + 4 > in.size()) throw ValidationError(source + ": truncated feature header");
  std::uint32_t v = 0;
  for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + b])) << (8 * b);
  pos += 4;
  return v;
}

constexpr std::string_view k_feature_magic = "VAUFEAT1";
constexpr std::uint32_t k_dtype_f32 = 1;

}  // namespace

std::string format_double(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, end);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const fs::path& path, std::string_view content) {
  const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  std::random_device rd;
  const fs::path tmp = dir / ("." + path.filename().string() + ".tmp" + std::to_string(rd()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp);
      throw ValidationError("write failed for " + path.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw ValidationError("cannot move output into place at " + path.string() + ": " + ec.message());
  }
}

std::vector<VideoScores> parse_scores_jsonl(std::string_view text, const std::string& source) {
  std::vector<VideoScores> out;
  for (const auto& j : detail::parse_jsonl(text, source)) {
    VideoScores v;
    v.video = field<std::string>(j, "video", source);
    auto scores = field<std::vector<double>>(j, "scores", source);
    v.timeline.scores = Eigen::Map<Eigen::VectorXd>(scores.data(), static_cast<Eigen::Index>(scores.size()));
    v.timeline.stride = j.contains("stride") ? field<int>(j, "stride", source) : 16;
    v.timeline.fps = j.contains("fps") ? field<double>(j, "fps", source) : 30.0;
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<VideoScores> read_scores(const fs::path& path, int stride, double fps) {
  const std::string text = read_file(path);
  if (has_extension(path, ".csv")) {
    VideoScores v;
    v.video = path.stem().string();
    v.timeline = parse_scores_csv(text, stride, fps, path.string());
    return {std::move(v)};
  }
  return parse_scores_jsonl(text, path.string());
}

std::string format_scores_jsonl(const std::vector<VideoScores>& videos) {
  std::string out;
  for (const auto& v : videos) {
    OrderedJson j;
    j["video"] = v.video;
    j["scores"] = std::vector<double>(v.timeline.scores.data(), v.timeline.scores.data() + v.timeline.scores.size());
    j["stride"] = v.timeline.stride;
    j["fps"] = v.timeline.fps;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::string format_scores_csv(const ScoreTimeline& t) {
  std::string out;
  for (Eigen::Index i = 0; i < t.scores.size(); ++i) {
    out += format_double(t.scores[i]);
    out += '\n';
  }
  return out;
}

ScoreTimeline parse_scores_csv(std::string_view text, int stride, double fps, const std::string& source) {
  std::vector<double> values;
  std::size_t line_no = 0;
  std::size_t offset = 0;
  while (offset < text.size()) {
    std::size_t end = text.find('\n', offset);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(offset, end - offset);
    ++line_no;
    offset = end + 1;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
    while (!line.empty() && line.front() == ' ') line.remove_prefix(1);
    if (line.empty()) continue;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), v);
    if (ec != std::errc{} || ptr != line.data() + line.size())
      throw ValidationError(source + ": line " + std::to_string(line_no) + ": not a number");
    values.push_back(v);
  }
  ScoreTimeline t;
  t.scores = Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  t.stride = stride;
  t.fps = fps;
  return t;
}

std::vector<EventInterval> parse_events_json(std::string_view text, const std::string& source) {
  const Json j = detail::parse_json(text, source);
  if (!j.is_array()) throw ValidationError(source + ": expected a JSON array of events");
  std::vector<EventInterval> out;
  for (const auto& e : j) {
    EventInterval ev;
    ev.start_s = field<double>(e, "start_s", source);
    ev.end_s = field<double>(e, "end_s", source);
    ev.label = field<std::string>(e, "label", source);
    out.push_back(std::move(ev));
  }
  return out;
}

std::vector<EventInterval> read_events(const fs::path& path) {
  return parse_events_json(read_file(path), path.string());
}

std::string format_events_json(const std::vector<EventInterval>& events) {
  OrderedJson arr = OrderedJson::array();
  for (const auto& e : events) {
    OrderedJson j;
    j["start_s"] = e.start_s;
    j["end_s"] = e.end_s;
    j["label"] = e.label;
    arr.push_back(std::move(j));
  }
  return arr.dump() + "\n";
}

std::vector<VideoLabels> parse_labels_jsonl(std::string_view text, const std::string& source) {
  std::vector<VideoLabels> out;
  for (const auto& j : detail::parse_jsonl(text, source)) {
    VideoLabels v;
    v.video = field<std::string>(j, "video", source);
    for (int l : field<std::vector<int>>(j, "labels", source)) {
      if (l != 0 && l != 1) throw ValidationError(source + ": labels must be 0 or 1 (video " + v.video + ")");
      v.labels.labels.push_back(static_cast<std::uint8_t>(l));
    }
    v.stride = j.contains("stride") ? field<int>(j, "stride", source) : 16;
    v.fps = j.contains("fps") ? field<double>(j, "fps", source) : 30.0;
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<VideoLabels> read_labels(const fs::path& path) {
  return parse_labels_jsonl(read_file(path), path.string());
}

std::string format_labels_line(const VideoLabels& v) {
  OrderedJson j;
  j["video"] = v.video;
  std::vector<int> labels(v.labels.labels.begin(), v.labels.labels.end());
  j["labels"] = labels;
  j["stride"] = v.stride;
  j["fps"] = v.fps;
  return j.dump() + "\n";
}

std::string format_sample_line(const std::string& video, const SampleSet& s, SamplerKind kind, double tau) {
  OrderedJson j;
  j["video"] = video;
  j["indices"] = s.indices;
  j["sampler"] = std::string(to_string(kind));
  j["tau"] = tau;
  j["n"] = s.budget;
  return j.dump() + "\n";
}

void write_features(const fs::path& path, const FeatureSequence& seq, std::optional<int> stride,
                    std::optional<double> fps) {
  std::string blob(k_feature_magic);
  put_u32(blob, static_cast<std::uint32_t>(seq.features.rows()));
  put_u32(blob, static_cast<std::uint32_t>(seq.features.cols()));
  put_u32(blob, k_dtype_f32);
  put_u32(blob, static_cast<std::uint32_t>(seq.video.size()));
  blob += seq.video;
  for (Eigen::Index r = 0; r < seq.features.rows(); ++r)
    for (Eigen::Index c = 0; c < seq.features.cols(); ++c)
      put_u32(blob, std::bit_cast<std::uint32_t>(static_cast<float>(seq.features(r, c))));
  write_file_atomic(path, blob);

  OrderedJson side;
  side["video"] = seq.video;
  side["T"] = seq.features.rows();
  side["D"] = seq.features.cols();
  side["dtype"] = "f32";
  if (stride) side["stride"] = *stride;
  if (fps) side["fps"] = *fps;
  write_file_atomic(fs::path(path.string() + ".json"), side.dump(2) + "\n");
}

std::optional<FeatureSidecar> read_feature_sidecar(const fs::path& path) {
  const fs::path side_path(path.string() + ".json");
  if (!fs::exists(side_path)) return std::nullopt;
  const std::string src = side_path.string();
  const Json j = detail::parse_json(read_file(side_path), src);
  FeatureSidecar s;
  s.video = field<std::string>(j, "video", src);
  s.frames = field<long long>(j, "T", src);
  s.dim = field<long long>(j, "D", src);
  s.dtype = field<std::string>(j, "dtype", src);
  if (j.contains("stride")) s.stride = field<int>(j, "stride", src);
  if (j.contains("fps")) s.fps = field<double>(j, "fps", src);
  return s;
}

FeatureSequence read_features(const fs::path& path) {
  const std::string src = path.string();
  const std::string data = read_file(path);
  FeatureSequence seq;
  if (has_extension(path, ".csv")) {
    seq.video = path.stem().string();
    std::vector<std::vector<double>> rows;
    std::istringstream in(data);
    std::string line;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      std::vector<double> row;
      std::istringstream ls(line);
      std::string cell;
      while (std::getline(ls, cell, ',')) {
        double v = 0.0;
        const auto b = cell.find_first_not_of(' ');
        const auto e = cell.find_last_not_of(" \r");
        if (b == std::string::npos) throw ValidationError(src + ": empty cell");
        auto [ptr, ec] = std::from_chars(cell.data() + b, cell.data() + e + 1, v);
        if (ec != std::errc{} || ptr != cell.data() + e + 1) throw ValidationError(src + ": bad number '" + cell + "'");
        row.push_back(v);
      }
      if (!rows.empty() && row.size() != rows.front().size())
        throw ValidationError(src + ": ragged feature rows");
      rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ValidationError(src + ": no feature rows");
    seq.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (std::size_t c = 0; c < rows[r].size(); ++c)
        seq.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  } else {
    if (data.compare(0, k_feature_magic.size(), k_feature_magic) != 0)
      throw ValidationError(src + ": not a feature container (bad magic)");
    std::size_t pos = k_feature_magic.size();
    const std::uint32_t frames = get_u32(data, pos, src);
    const std::uint32_t dim = get_u32(data, pos, src);
    const std::uint32_t dtype = get_u32(data, pos, src);
    const std::uint32_t id_len = get_u32(data, pos, src);
    if (dtype != k_dtype_f32) throw ValidationError(src + ": unsupported dtype code " + std::to_string(dtype));
    if (pos + id_len > data.size()) throw ValidationError(src + ": truncated video id");
    seq.video = data.substr(pos, id_len);
    pos += id_len;
    const std::size_t expect = static_cast<std::size_t>(frames) * dim * 4;
    if (data.size() - pos != expect) throw ValidationError(src + ": payload size does not match T*D");
    seq.features.resize(frames, dim);
    for (std::uint32_t r = 0; r < frames; ++r)
      for (std::uint32_t c = 0; c < dim; ++c)
        seq.features(r, c) = static_cast<double>(std::bit_cast<float>(get_u32(data, pos, src)));
  }
  if (!seq.features.allFinite()) throw ValidationError(src + ": non-finite feature values");
  return seq;
}

}  // namespace io
}  // namespace vau
