#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <map>
#include <mutex>
#include <thread>

#include "vau/dataengine.hpp"
#include "vau/error.hpp"
#include "vau/io.hpp"
#include "vau/summarize.hpp"

// must match the library build, httplib classes change layout with TLS support
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <json.hpp>

using namespace vau;
using namespace std::chrono_literals;

namespace {

AnnotationRecord explosion() {
  return read_annotations(std::filesystem::path(VAU_TEST_DATA_DIR) / "explosion_record.json").at(0);
}

// Fails with TransportError `failures` times, then answers `reply`.
class FlakyClient : public SummarizationClient {
 public:
  FlakyClient(int failures, std::string reply) : failures_(failures), reply_(std::move(reply)) {}
  std::string complete(const SummaryRequest&, const GenerationParams&) override {
    ++calls;
    if (failures_-- > 0) throw TransportError("timed out");
    return reply_;
  }
  int calls = 0;

 private:
  int failures_;
  std::string reply_;
};

class CountingClient : public SummarizationClient {
 public:
  std::string complete(const SummaryRequest& req, const GenerationParams&) override {
    const int now = ++active;
    int seen = peak.load();
    while (now > seen && !peak.compare_exchange_weak(seen, now)) {
    }
    std::this_thread::sleep_for(5ms);
    --active;
    return "S:" + req.request_id();
  }
  std::atomic<int> active{0}, peak{0};
};

const RetryPolicy fast{3, 1ms};

}  // namespace

TEST(Mock, DeterministicCanonicalText) {
  MockSummarizationClient mock;
  const auto r = explosion();
  const auto req = render_event_summary_prompt(r, 0);
  const auto out = summarize(req, mock);
  EXPECT_EQ(out.text, "MOCK-SUMMARY: Explosion " + r.clip_captions[0][0]);
  EXPECT_EQ(out.retries, 0);
  EXPECT_EQ(out.request_id, "v=2rfyeR-YaJw__#1_label_G-0-0:event:0");
  EXPECT_EQ(summarize(req, mock).text, out.text);
}

TEST(Retry, TwoTimeoutsThenSuccess) {
  FlakyClient c(2, "fine");
  const auto out = summarize(render_event_summary_prompt(explosion(), 1), c, {}, fast);
  EXPECT_EQ(out.text, "fine");
  EXPECT_EQ(out.retries, 2);
  EXPECT_EQ(c.calls, 3);
}

TEST(Retry, ThreeFailuresSurfaceServiceErrorWithRequestId) {
  FlakyClient c(3, "never");
  try {
    summarize(render_video_summary_prompt(explosion()), c, {}, fast);
    FAIL();
  } catch (const ContentError&) {
    FAIL() << "wrong error type";
  } catch (const ServiceError& e) {
    EXPECT_EQ(e.request_id(), "v=2rfyeR-YaJw__#1_label_G-0-0:video");
    EXPECT_NE(std::string(e.what()).find("after 3 attempts"), std::string::npos);
  }
  EXPECT_EQ(c.calls, 3);
}

TEST(Retry, EmptyCompletionIsContentError) {
  FlakyClient c(0, "  \n");
  EXPECT_THROW(summarize(render_event_summary_prompt(explosion(), 0), c, {}, fast), ContentError);
  EXPECT_EQ(c.calls, 1);
}

TEST(SummarizeAll, KeepsOrderAndRespectsInFlightCap) {
  const auto r = explosion();
  std::vector<SummaryRequest> reqs;
  for (int k = 0; k < 6; ++k)
    for (std::size_t e = 0; e < r.events.size(); ++e) reqs.push_back(render_event_summary_prompt(r, e));
  CountingClient c;
  const auto out = summarize_all(reqs, c, {}, fast, 3);
  ASSERT_EQ(out.size(), reqs.size());
  for (std::size_t i = 0; i < reqs.size(); ++i) EXPECT_EQ(out[i].text, "S:" + reqs[i].request_id());
  EXPECT_LE(c.peak.load(), 3);
  EXPECT_GE(c.peak.load(), 2);
}

TEST(SummarizeRecord, FillsEventAndVideoSummaries) {
  MockSummarizationClient mock;
  const auto r = summarize_record(explosion(), mock);
  ASSERT_EQ(r.event_summary.size(), 2u);
  EXPECT_EQ(r.event_summary[1], "MOCK-SUMMARY: Explosion " + explosion().clip_captions[1][0]);
  EXPECT_EQ(r.video_summary, "MOCK-SUMMARY: Explosion " + r.event_summary[0]);
}

TEST(ServiceConfigLoading, FileThenEnvironment) {
  const auto p = std::filesystem::temp_directory_path() / "vau_service.json";
  io::write_file_atomic(p, R"({"endpoint":"http://a:1/x","model":"m1","api_key":"k1","max_tokens":64})");
  std::map<std::string, std::string> env{{"VAU_LLM_MODEL", "m2"}, {"VAU_LLM_API_KEY", ""}};
  auto fake = [&](const char* k) -> const char* {
    auto it = env.find(k);
    return it == env.end() ? nullptr : it->second.c_str();
  };
  const auto c = load_service_config(p, fake);
  EXPECT_EQ(c.endpoint, "http://a:1/x");
  EXPECT_EQ(c.model, "m2");
  EXPECT_EQ(c.api_key, "k1");
  EXPECT_EQ(c.generation.max_tokens, 64);
  io::write_file_atomic(p, R"({"max_tokens":"many"})");
  EXPECT_THROW(load_service_config(p, fake), ValidationError);
  EXPECT_THROW(HttpChatClient(ServiceConfig{}), ValidationError);
}

class HttpClientTest : public ::testing::Test {
 protected:
  void SetUp() override {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      std::lock_guard lock(mu_);
      last_body_ = req.body;
      last_auth_ = req.get_header_value("Authorization");
      const int code = statuses_.empty() ? 200 : statuses_.front();
      if (!statuses_.empty()) statuses_.erase(statuses_.begin());
      res.status = code;
      res.set_content(code == 200 ? reply_ : "{\"error\":\"x\"}", "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  void TearDown() override {
    server_.stop();
    thread_.join();
  }
  ServiceConfig config() const {
    ServiceConfig c;
    c.endpoint = "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
    c.model = "local-model";
    c.api_key = "secret";
    c.timeout_s = 5;
    return c;
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::mutex mu_;
  std::vector<int> statuses_;
  std::string reply_ = R"({"choices":[{"message":{"role":"assistant","content":"1. Yes. 2. Boom. 3. Fire."}}]})";
  std::string last_body_, last_auth_;
};

TEST_F(HttpClientTest, PostsChatRequestAndReadsContent) {
  HttpChatClient client(config());
  const auto req = render_event_summary_prompt(explosion(), 1);
  const auto out = summarize(req, client, GenerationParams{128, 0.0}, fast);
  EXPECT_EQ(out.text, "1. Yes. 2. Boom. 3. Fire.");
  const auto body = nlohmann::json::parse(last_body_);
  EXPECT_EQ(body["model"], "local-model");
  EXPECT_EQ(body["max_tokens"], 128);
  EXPECT_EQ(body["messages"][0]["content"], req.prompt);
  EXPECT_EQ(last_auth_, "Bearer secret");
}

TEST_F(HttpClientTest, RetriesServerErrorsThenSucceeds) {
  statuses_ = {503, 429};
  HttpChatClient client(config());
  const auto out = summarize(render_event_summary_prompt(explosion(), 0), client, {}, fast);
  EXPECT_EQ(out.retries, 2);
}

TEST_F(HttpClientTest, ClientErrorsAreFinal) {
  statuses_ = {401};
  HttpChatClient client(config());
  EXPECT_THROW(summarize(render_event_summary_prompt(explosion(), 0), client, {}, fast), ServiceError);
  statuses_ = {500, 500, 500};
  try {
    summarize(render_event_summary_prompt(explosion(), 0), client, {}, fast);
    FAIL();
  } catch (const ServiceError& e) {
    EXPECT_EQ(e.request_id(), "v=2rfyeR-YaJw__#1_label_G-0-0:event:0");
  }
}

TEST_F(HttpClientTest, MalformedReplyIsContentError) {
  reply_ = R"({"choices":[]})";
  HttpChatClient client(config());
  EXPECT_THROW(summarize(render_event_summary_prompt(explosion(), 0), client, {}, fast), ContentError);
}

TEST(HttpClient, UnreachableServiceExhaustsRetries) {
  ServiceConfig c;
  c.endpoint = "http://127.0.0.1:1/v1/chat/completions";
  c.timeout_s = 1;
  HttpChatClient client(c);
  EXPECT_THROW(summarize(render_event_summary_prompt(explosion(), 0), client, {}, fast), ServiceError);
}
