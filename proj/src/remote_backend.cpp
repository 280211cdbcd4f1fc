#include "pjudge/remote_backend.h"

#include <cstdlib>
#include <thread>

#include <httplib.h>

namespace pjudge {

RemoteConfig RemoteConfig::from_env() {
  RemoteConfig config;
  const char* key = std::getenv(kApiKeyEnv);
  if (!key || !*key) key = std::getenv("OPENAI_API_KEY");
  if (!key || !*key) {
    throw BackendError(std::string("no API credentials: set ") + kApiKeyEnv);
  }
  config.api_key = key;
  if (const char* base = std::getenv(kApiBaseEnv); base && *base) config.base_url = base;
  return config;
}

RemoteBackend::RemoteBackend(RemoteConfig config) : config_(std::move(config)) {
  if (config_.api_key.empty()) throw BackendError("remote backend requires an API key");
}

nlohmann::json RemoteBackend::request_body(const std::string& prompt,
                                           const GenerationParams& params) {
  return nlohmann::json{
      {"model", params.model_id},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
      {"temperature", params.temperature},
      {"top_p", params.top_p},
      {"max_tokens", params.max_output_tokens},
  };
}

std::string RemoteBackend::completion_text(const nlohmann::json& response) {
  try {
    const auto& content = response.at("choices").at(0).at("message").at("content");
    if (content.is_null()) return {};
    return content.get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(std::string("unexpected chat-completion response: ") + e.what());
  }
}

std::string RemoteBackend::complete(const std::string& prompt, const GenerationParams& params) {
  count_call();
  httplib::Client client(config_.base_url);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  client.set_write_timeout(config_.timeout);
  const httplib::Headers headers = {{"Authorization", "Bearer " + config_.api_key}};
  const std::string body = request_body(prompt, params).dump();

  std::string last_error;
  auto delay = config_.backoff;
  for (int attempt = 0; attempt <= config_.transport_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
    auto res = client.Post(config_.path, headers, body, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw BackendError("chat-completion request failed: HTTP " + std::to_string(res->status) +
                         ": " + res->body.substr(0, 500));
    }
    nlohmann::json parsed;
    try {
      parsed = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::parse_error& e) {
      throw BackendError(std::string("chat-completion response is not JSON: ") + e.what());
    }
    return completion_text(parsed);
  }
  throw BackendError("chat-completion request failed after retries: " + last_error);
}

}  // namespace pjudge
