#include "vau/timeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <system_error>

#include "vau/detail/rational.hpp"
#include "vau/error.hpp"

namespace vau {

namespace detail {

Rational decimal_rational(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  if (ec != std::errc{}) throw std::runtime_error("decimal_rational: to_chars failed");
  std::string_view s(buf, static_cast<std::size_t>(end - buf));

  bool negative = false;
  if (!s.empty() && s.front() == '-') {
    negative = true;
    s.remove_prefix(1);
  }
  boost::multiprecision::cpp_int mantissa = 0;
  int exponent = 0;
  std::size_t i = 0;
  bool after_point = false;
  for (; i < s.size() && s[i] != 'e'; ++i) {
    if (s[i] == '.') {
      after_point = true;
      continue;
    }
    mantissa = mantissa * 10 + (s[i] - '0');
    if (after_point) --exponent;
  }
  if (i < s.size()) {
    int e = 0;
    std::string_view tail = s.substr(i + 1);
    if (!tail.empty() && tail.front() == '+') tail.remove_prefix(1);
    std::from_chars(tail.data(), tail.data() + tail.size(), e);
    exponent += e;
  }
  Rational r(mantissa);
  boost::multiprecision::cpp_int scale = boost::multiprecision::pow(boost::multiprecision::cpp_int(10),
                                                                    static_cast<unsigned>(std::abs(exponent)));
  if (exponent >= 0)
    r *= scale;
  else
    r /= scale;
  return negative ? Rational(-r) : r;
}

}  // namespace detail

const std::vector<std::string>& anomaly_categories() {
  static const std::vector<std::string> categories = {
      // UCF-Crime
      "Abuse", "Arrest", "Arson", "Assault", "Burglary", "Explosion", "Fighting", "RoadAccidents",
      "Robbery", "Shooting", "Shoplifting", "Stealing", "Vandalism",
      // XD-Violence
      "Abuse", "Car accident", "Explosion", "Fighting", "Riot", "Shooting"};
  return categories;
}

double ScoreTimeline::timestamp(Eigen::Index i) const {
  return static_cast<double>(i) * static_cast<double>(stride) / fps;
}

std::size_t FrameLabels::positives() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), std::uint8_t{1}));
}

std::vector<std::string> validate_timeline(const ScoreTimeline& t) {
  std::vector<std::string> violations;
  if (t.scores.size() == 0) violations.emplace_back("empty timeline");
  for (Eigen::Index i = 0; i < t.scores.size(); ++i) {
    const double s = t.scores[i];
    if (!(s >= 0.0 && s <= 1.0)) {
      std::ostringstream msg;
      msg << "score[" << i << "] out of [0,1]";
      violations.push_back(msg.str());
    }
  }
  if (t.stride < 1) violations.emplace_back("stride must be >= 1");
  if (!(t.fps > 0.0) || !std::isfinite(t.fps)) violations.emplace_back("fps must be > 0");
  return violations;
}

FrameLabels derive_frame_labels(const std::vector<EventInterval>& events, std::size_t frame_count,
                                int stride, double fps) {
  using detail::Rational;
  if (frame_count < 1) throw ParameterError("derive_frame_labels: frame count must be >= 1");
  if (stride < 1) throw ParameterError("derive_frame_labels: stride must be >= 1");
  if (!(fps > 0.0) || !std::isfinite(fps)) throw ParameterError("derive_frame_labels: fps must be > 0");

  for (std::size_t e = 0; e < events.size(); ++e) {
    const auto& ev = events[e];
    if (!(ev.end_s > ev.start_s) || !std::isfinite(ev.start_s) || !std::isfinite(ev.end_s)) {
      std::ostringstream msg;
      msg << "event " << e << " [" << ev.start_s << ", " << ev.end_s << "] (" << ev.label
          << "): end must be greater than start";
      throw ValidationError(msg.str());
    }
  }

  // i*stride/fps in [a, b)  <=>  a*fps <= i*stride < b*fps
  const Rational rate = detail::decimal_rational(fps);
  FrameLabels out;
  out.labels.assign(frame_count, 0);
  for (const auto& ev : events) {
    if (!ev.anomalous()) continue;
    const Rational lo = detail::decimal_rational(ev.start_s) * rate;
    const Rational hi = detail::decimal_rational(ev.end_s) * rate;
    for (std::size_t i = 0; i < frame_count; ++i) {
      const Rational raw(static_cast<long long>(i) * stride);
      if (raw >= hi) break;
      if (raw >= lo) out.labels[i] = 1;
    }
  }
  return out;
}

std::size_t frame_index_at(double seconds, std::size_t frame_count, int stride, double fps) {
  if (frame_count == 0) return 0;
  const double pos = seconds * fps / static_cast<double>(stride);
  if (!(pos > 0.0)) return 0;
  // nearest, ties to the earlier frame
  const double idx = std::ceil(pos - 0.5);
  if (idx >= static_cast<double>(frame_count - 1)) return frame_count - 1;
  return static_cast<std::size_t>(idx);
}

std::size_t scored_frame_count(std::size_t raw_frames, int stride) {
  const auto s = static_cast<std::size_t>(stride);
  return (raw_frames + s - 1) / s;
}

std::vector<std::pair<std::size_t, std::size_t>> positive_runs(const FrameLabels& labels) {
  std::vector<std::pair<std::size_t, std::size_t>> runs;
  const auto& l = labels.labels;
  for (std::size_t i = 0; i < l.size();) {
    if (l[i] == 0) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < l.size() && l[j] != 0) ++j;
    runs.emplace_back(i, j);
    i = j;
  }
  return runs;
}

}  // namespace vau
