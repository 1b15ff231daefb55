#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vau/dataengine.hpp"

namespace vau {

struct GenerationParams {
  int max_tokens = 512;
  double temperature = 0.0;
};

/// Request/response contract for the external summarizer. complete() throws
/// TransportError for retryable failures and ServiceError for final ones.
class SummarizationClient {
 public:
  virtual ~SummarizationClient() = default;
  virtual std::string complete(const SummaryRequest& req, const GenerationParams& params) = 0;
};

/// Deterministic stand-in: "MOCK-SUMMARY: <label> <first source text>".
class MockSummarizationClient : public SummarizationClient {
 public:
  std::string complete(const SummaryRequest& req, const GenerationParams& params) override;
};

/// Endpoint, model and credentials. Never compiled in; see load_service_config.
struct ServiceConfig {
  std::string endpoint;  ///< e.g. http://localhost:8000/v1/chat/completions
  std::string model;
  std::string api_key;
  double timeout_s = 60.0;
  GenerationParams generation;
  std::size_t max_in_flight = 4;
};

/// Reads an optional JSON config file, then applies VAU_LLM_ENDPOINT,
/// VAU_LLM_MODEL and VAU_LLM_API_KEY from the environment. `getenv` is
/// injectable for tests.
ServiceConfig load_service_config(const std::optional<std::filesystem::path>& file,
                                  const std::function<const char*(const char*)>& getenv = nullptr);

/// Chat-completions over HTTP(S): POST {"model","messages","max_tokens","temperature"},
/// reads choices[0].message.content.
class HttpChatClient : public SummarizationClient {
 public:
  explicit HttpChatClient(ServiceConfig config);
  std::string complete(const SummaryRequest& req, const GenerationParams& params) override;

 private:
  ServiceConfig config_;
  std::string origin_;
  std::string path_;
};

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds base_delay{200};  ///< doubled after each failure
};

struct SummaryOutcome {
  std::string text;
  int retries = 0;
  std::string request_id;
};

/// One request with retries. Throws ServiceError (carrying the request id)
/// once attempts are exhausted and ContentError for an empty completion.
SummaryOutcome summarize(const SummaryRequest& req, SummarizationClient& client, const GenerationParams& params = {},
                         const RetryPolicy& policy = {});

/// Runs requests with at most `max_in_flight` concurrent calls. Results are
/// in request order; if any request fails, the lowest-index failure is rethrown.
std::vector<SummaryOutcome> summarize_all(const std::vector<SummaryRequest>& requests, SummarizationClient& client,
                                          const GenerationParams& params = {}, const RetryPolicy& policy = {},
                                          std::size_t max_in_flight = 4);

/// Fills every event summary and then the video summary of `r` from the client.
AnnotationRecord summarize_record(AnnotationRecord r, SummarizationClient& client, const GenerationParams& params = {},
                                  const RetryPolicy& policy = {}, std::size_t max_in_flight = 4);

}  // namespace vau
