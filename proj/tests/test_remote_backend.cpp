#include <gtest/gtest.h>

#include <httplib.h>

#include <atomic>
#include <thread>

#include "pjudge/json_io.h"
#include "pjudge/remote_backend.h"

namespace pjudge {
namespace {

// Local chat-completion stand-in: fails the first `failures` requests with
// `fail_status`, then answers.
class FakeServer {
 public:
  FakeServer(int failures, int fail_status) : failures_(failures), fail_status_(fail_status) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req,
                                                httplib::Response& res) {
      last_auth_ = req.get_header_value("Authorization");
      last_body_ = req.body;
      if (requests_.fetch_add(1) < failures_) {
        res.status = fail_status_;
        res.set_content(R"({"error":"nope"})", "application/json");
        return;
      }
      res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"B]] [[64]]"}}]})",
                      "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeServer() {
    server_.stop();
    thread_.join();
  }

  RemoteConfig config() const {
    RemoteConfig c;
    c.base_url = "http://127.0.0.1:" + std::to_string(port_);
    c.api_key = "secret";
    c.timeout = std::chrono::seconds(5);
    c.backoff = std::chrono::milliseconds(1);
    return c;
  }

  int requests() const { return requests_.load(); }
  std::string last_auth_;
  std::string last_body_;

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> requests_{0};
  int failures_;
  int fail_status_;
};

TEST(RemoteBackend, RequestBodyShape) {
  const auto body = RemoteBackend::request_body("hi", GenerationParams{"gpt-4", 0.5, 0.9, 64});
  EXPECT_EQ(body.at("model"), "gpt-4");
  EXPECT_EQ(body.at("messages").size(), 1u);
  EXPECT_EQ(body.at("messages")[0].at("role"), "user");
  EXPECT_EQ(body.at("messages")[0].at("content"), "hi");
  EXPECT_DOUBLE_EQ(body.at("temperature").get<double>(), 0.5);
  EXPECT_DOUBLE_EQ(body.at("top_p").get<double>(), 0.9);
  EXPECT_EQ(body.at("max_tokens"), 64);
}

TEST(RemoteBackend, CompletionText) {
  EXPECT_EQ(RemoteBackend::completion_text(
                json::parse(R"({"choices":[{"message":{"content":"A]]"}}]})")),
            "A]]");
  EXPECT_EQ(RemoteBackend::completion_text(
                json::parse(R"({"choices":[{"message":{"content":null}}]})")),
            "");
  EXPECT_THROW(RemoteBackend::completion_text(json::parse(R"({"choices":[]})")), BackendError);
}

TEST(RemoteBackend, Success) {
  FakeServer server(0, 500);
  RemoteBackend backend(server.config());
  EXPECT_EQ(backend.complete("prompt", GenerationParams{"m"}), "B]] [[64]]");
  EXPECT_EQ(server.last_auth_, "Bearer secret");
  EXPECT_EQ(json::parse(server.last_body_).at("messages")[0].at("content"), "prompt");
  EXPECT_EQ(backend.calls(), 1u);
}

TEST(RemoteBackend, RetriesServerErrors) {
  FakeServer server(2, 500);
  RemoteBackend backend(server.config());
  EXPECT_EQ(backend.complete("prompt", GenerationParams{"m"}), "B]] [[64]]");
  EXPECT_EQ(server.requests(), 3);
}

TEST(RemoteBackend, GivesUpAfterTransportRetries) {
  FakeServer server(100, 429);
  RemoteBackend backend(server.config());
  EXPECT_THROW(backend.complete("prompt", GenerationParams{"m"}), BackendError);
  EXPECT_EQ(server.requests(), 4);
}

TEST(RemoteBackend, ClientErrorIsNotRetried) {
  FakeServer server(100, 401);
  RemoteBackend backend(server.config());
  EXPECT_THROW(backend.complete("prompt", GenerationParams{"m"}), BackendError);
  EXPECT_EQ(server.requests(), 1);
}

TEST(RemoteBackend, UnreachableHostIsBackendError) {
  RemoteConfig c;
  c.base_url = "http://127.0.0.1:1";
  c.api_key = "k";
  c.timeout = std::chrono::seconds(1);
  c.transport_retries = 0;
  RemoteBackend backend(c);
  EXPECT_THROW(backend.complete("prompt", GenerationParams{"m"}), BackendError);
}

}  // namespace
}  // namespace pjudge
