#pragma once

#include <chrono>
#include <string>

#include <nlohmann/json.hpp>

#include "pjudge/backend.h"

namespace pjudge {

inline constexpr const char* kApiKeyEnv = "PJUDGE_API_KEY";
inline constexpr const char* kApiBaseEnv = "PJUDGE_API_BASE";

struct RemoteConfig {
  /// Scheme, host and optional port, e.g. "https://api.openai.com".
  std::string base_url = "https://api.openai.com";
  std::string path = "/v1/chat/completions";
  std::string api_key;
  std::chrono::seconds timeout{120};
  /// Transport-level retries for 429/5xx and connection errors. Separate
  /// from verdict regeneration, which the judge engine owns.
  int transport_retries = 3;
  std::chrono::milliseconds backoff{500};

  /// Reads PJUDGE_API_KEY (falling back to OPENAI_API_KEY) and PJUDGE_API_BASE.
  /// Throws BackendError when no key is set.
  static RemoteConfig from_env();
};

/// OpenAI-compatible chat-completion client. The prompt is sent as a single
/// user message.
class RemoteBackend final : public JudgeBackend {
 public:
  explicit RemoteBackend(RemoteConfig config);
  std::string complete(const std::string& prompt, const GenerationParams& params) override;

  static nlohmann::json request_body(const std::string& prompt, const GenerationParams& params);
  /// Extracts choices[0].message.content; throws BackendError otherwise.
  static std::string completion_text(const nlohmann::json& response);

 private:
  RemoteConfig config_;
};

}  // namespace pjudge
