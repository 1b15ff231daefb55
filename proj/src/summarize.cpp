#include "vau/summarize.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

#include "vau/detail/json.hpp"
#include "vau/error.hpp"
#include "vau/io.hpp"

// Last: <resolv.h>, pulled in by httplib, defines a `_res` macro that breaks Eigen.
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

namespace vau {

using detail::Json;

std::string MockSummarizationClient::complete(const SummaryRequest& req, const GenerationParams&) {
  return "MOCK-SUMMARY: " + req.label + " " + req.first_source;
}

ServiceConfig load_service_config(const std::optional<std::filesystem::path>& file,
                                  const std::function<const char*(const char*)>& getenv) {
  ServiceConfig c;
  if (file) {
    const Json j = detail::parse_json(io::read_file(*file), file->string());
    if (!j.is_object()) throw ValidationError(file->string() + ": service config must be a JSON object");
    try {
      c.endpoint = j.value("endpoint", c.endpoint);
      c.model = j.value("model", c.model);
      c.api_key = j.value("api_key", c.api_key);
      c.timeout_s = j.value("timeout_s", c.timeout_s);
      c.generation.max_tokens = j.value("max_tokens", c.generation.max_tokens);
      c.generation.temperature = j.value("temperature", c.generation.temperature);
      c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
    } catch (const Json::exception& e) {
      throw ValidationError(file->string() + ": " + e.what());
    }
  }
  auto env = getenv ? getenv : [](const char* k) -> const char* { return std::getenv(k); };
  if (const char* v = env("VAU_LLM_ENDPOINT"); v && *v) c.endpoint = v;
  if (const char* v = env("VAU_LLM_MODEL"); v && *v) c.model = v;
  if (const char* v = env("VAU_LLM_API_KEY"); v && *v) c.api_key = v;
  return c;
}

HttpChatClient::HttpChatClient(ServiceConfig config) : config_(std::move(config)) {
  const std::string& url = config_.endpoint;
  const auto scheme = url.find("://");
  if (url.empty() || scheme == std::string::npos)
    throw ValidationError("service endpoint must be an absolute http(s) URL, got '" + url + "'");
  const auto slash = url.find('/', scheme + 3);
  origin_ = url.substr(0, slash);
  path_ = slash == std::string::npos ? "/v1/chat/completions" : url.substr(slash);
  if (config_.max_in_flight == 0) config_.max_in_flight = 1;
}

std::string HttpChatClient::complete(const SummaryRequest& req, const GenerationParams& params) {
  httplib::Client cli(origin_);
  const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
      std::chrono::duration<double>(config_.timeout_s));
  cli.set_connection_timeout(timeout);
  cli.set_read_timeout(timeout);
  cli.set_write_timeout(timeout);

  Json body = {{"model", config_.model},
               {"messages", Json::array({{{"role", "user"}, {"content", req.prompt}}})},
               {"max_tokens", params.max_tokens},
               {"temperature", params.temperature}};
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  auto res = cli.Post(path_, headers, body.dump(), "application/json");
  if (!res) throw TransportError("request " + req.request_id() + ": " + httplib::to_string(res.error()));
  if (res->status == 429 || res->status >= 500)
    throw TransportError("request " + req.request_id() + ": HTTP " + std::to_string(res->status));
  if (res->status != 200)
    throw ServiceError("request " + req.request_id() + ": HTTP " + std::to_string(res->status) + ": " + res->body,
                       req.request_id());

  Json reply = Json::parse(res->body, nullptr, false);
  if (reply.is_discarded()) throw ContentError("request " + req.request_id() + ": reply is not JSON", req.request_id());
  const Json* content = nullptr;
  if (reply.contains("choices") && reply["choices"].is_array() && !reply["choices"].empty()) {
    const Json& choice = reply["choices"][0];
    if (choice.contains("message") && choice["message"].contains("content")) content = &choice["message"]["content"];
  }
  if (!content || !content->is_string())
    throw ContentError("request " + req.request_id() + ": reply has no choices[0].message.content", req.request_id());
  return content->get<std::string>();
}

SummaryOutcome summarize(const SummaryRequest& req, SummarizationClient& client, const GenerationParams& params,
                         const RetryPolicy& policy) {
  const int attempts = std::max(1, policy.attempts);
  auto delay = policy.base_delay;
  std::string last_error;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
    std::string text;
    try {
      text = client.complete(req, params);
    } catch (const TransportError& e) {
      last_error = e.what();
      continue;
    }
    if (text.find_first_not_of(" \t\r\n") == std::string::npos)
      throw ContentError("request " + req.request_id() + ": empty completion", req.request_id());
    return {std::move(text), attempt, req.request_id()};
  }
  throw ServiceError("request " + req.request_id() + " failed after " + std::to_string(attempts) +
                         " attempts: " + last_error,
                     req.request_id());
}

std::vector<SummaryOutcome> summarize_all(const std::vector<SummaryRequest>& requests, SummarizationClient& client,
                                          const GenerationParams& params, const RetryPolicy& policy,
                                          std::size_t max_in_flight) {
  std::vector<SummaryOutcome> out(requests.size());
  std::vector<std::exception_ptr> errors(requests.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < requests.size(); i = next++) {
      try {
        out[i] = summarize(requests[i], client, params, policy);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::min(std::max<std::size_t>(1, max_in_flight), requests.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

AnnotationRecord summarize_record(AnnotationRecord r, SummarizationClient& client, const GenerationParams& params,
                                  const RetryPolicy& policy, std::size_t max_in_flight) {
  std::vector<SummaryRequest> event_requests;
  for (std::size_t e = 0; e < r.events.size(); ++e) event_requests.push_back(render_event_summary_prompt(r, e));
  auto events = summarize_all(event_requests, client, params, policy, max_in_flight);
  r.event_summary.clear();
  for (auto& o : events) r.event_summary.push_back(std::move(o.text));
  r.video_summary = summarize(render_video_summary_prompt(r), client, params, policy).text;
  return r;
}

}  // namespace vau
