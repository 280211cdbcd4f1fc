#include <gtest/gtest.h>

#include <openssl/sha.h>

#include <cstdio>

#include "pjudge/backend.h"
#include "pjudge/json_io.h"
#include "pjudge/prompt.h"
#include "test_util.h"

namespace pjudge {
namespace {

std::string prompt_for(std::string_view persona, std::string_view a, std::string_view b,
                       JudgeMode mode = JudgeMode::NoTieCertainty) {
  return build_prompt("Q?", a, b, mode, persona);
}

TEST(PromptView, ReadsSectionsBack) {
  const auto p = prompt_for("Age: 30\nReligion: Hindu", "first answer", "second answer");
  EXPECT_EQ(prompt_view::profile_value(p, "Religion"), "Hindu");
  EXPECT_EQ(prompt_view::profile_value(p, "Age"), "30");
  EXPECT_FALSE(prompt_view::profile_value(p, "Sex").has_value());
  EXPECT_EQ(prompt_view::answer_a(p), "first answer");
  EXPECT_EQ(prompt_view::answer_b(p), "second answer");
  EXPECT_TRUE(prompt_view::requests_certainty(p));
  EXPECT_FALSE(prompt_view::offers_tie(p));
  const auto t = prompt_for("", "x", "y", JudgeMode::WithTie);
  EXPECT_TRUE(prompt_view::offers_tie(t));
  EXPECT_FALSE(prompt_view::requests_certainty(t));
}

TEST(ScriptedBackend, PickByProfileField) {
  ScriptedBackend backend(ScriptedBackend::default_rules());
  const GenerationParams params{"mock"};
  EXPECT_EQ(backend.complete(prompt_for("Religion: Hindu", "As a Hindu...", "As a Jain..."), params),
            "A]] [[90]]");
  EXPECT_EQ(backend.complete(prompt_for("Religion: Jain", "As a Hindu...", "As a Jain..."), params),
            "B]] [[90]]");
  // Value absent from both answers: fallback choice and certainty.
  EXPECT_EQ(backend.complete(prompt_for("Religion: Sikh", "one", "two"), params), "A]] [[40]]");
  // No religion in profile: second rule.
  EXPECT_EQ(backend.complete(prompt_for("Age: 3", "one", "two"), params), "A]] [[30]]");
  EXPECT_EQ(backend.complete(prompt_for("Age: 3", "one", "two", JudgeMode::NoTiePlain), params),
            "A]]");
  EXPECT_EQ(backend.calls(), 5u);
}

TEST(ScriptedBackend, CompletionsServedInOrderPerPrompt) {
  ScriptedBackend backend(json::parse(R"([{"completions": ["junk", "B]] [[70]]"]}])"));
  const GenerationParams params{"mock"};
  const auto p1 = prompt_for("", "x", "y");
  const auto p2 = prompt_for("", "x", "z");
  EXPECT_EQ(backend.complete(p1, params), "junk");
  EXPECT_EQ(backend.complete(p2, params), "junk");
  EXPECT_EQ(backend.complete(p1, params), "B]] [[70]]");
  EXPECT_EQ(backend.complete(p1, params), "B]] [[70]]");
}

TEST(ScriptedBackend, PredicatesAndErrors) {
  ScriptedBackend backend(json::parse(R"({"rules": [
    {"when_contains": ["alpha", "beta"], "completion": "both"},
    {"when_contains": "alpha", "when_not_contains": "gamma", "choice": "B"}
  ]})"));
  const GenerationParams params{"mock"};
  EXPECT_EQ(backend.complete("alpha beta", params), "both");
  EXPECT_EQ(backend.complete("alpha", params), "B]]");
  EXPECT_THROW(backend.complete("alpha gamma", params), BackendError);

  EXPECT_THROW(ScriptedBackend(json::parse(R"([{"choice": "A", "completion": "x"}])")),
               UsageError);
  EXPECT_THROW(ScriptedBackend(json::parse(R"([])")), UsageError);
  EXPECT_THROW(ScriptedBackend(json::parse(R"([{"choice": "Q"}])")), UsageError);
}

TEST(ScriptedBackend, RandomChoiceIsSeededAndRespectsTieOffer) {
  ScriptedBackend backend(json::parse(R"([{"random_choice": true, "seed": 3}])"));
  const GenerationParams params{"mock"};
  int ties = 0;
  for (int i = 0; i < 300; ++i) {
    const auto p = prompt_for("", "x" + std::to_string(i), "y", JudgeMode::WithTie);
    const auto c = backend.complete(p, params);
    EXPECT_EQ(c, backend.complete(p, params));
    ties += c == "C]]";
    EXPECT_NE(backend.complete(prompt_for("", "x", "y" + std::to_string(i), JudgeMode::NoTiePlain),
                               params),
              "C]]");
  }
  EXPECT_GT(ties, 50);
}

TEST(ReplayBackend, AlwaysMisses) {
  ReplayBackend backend;
  EXPECT_THROW(backend.complete("p", GenerationParams{"m"}), BackendError);
}

// Independent digest of the documented key material.
std::string oracle_key(const std::string& model, const std::string& prompt, const char* temp,
                       const char* top_p, int attempt) {
  const auto material = json::array({model, prompt, temp, top_p, attempt}).dump();
  unsigned char digest[SHA256_DIGEST_LENGTH];
  SHA256(reinterpret_cast<const unsigned char*>(material.data()), material.size(), digest);
  std::string hex;
  char buf[3];
  for (unsigned char b : digest) {
    std::snprintf(buf, sizeof buf, "%02x", b);
    hex += buf;
  }
  return hex;
}

TEST(CacheKey, MatchesOracleAndSeparatesFields) {
  GenerationParams params{"gpt-x", 0.7, 0.95, 512};
  const auto key = CacheKey::make(params, "hello", 2);
  EXPECT_EQ(key.hex, oracle_key("gpt-x", "hello", "0.69999999999999996", "0.94999999999999996", 2));
  EXPECT_NE(key, CacheKey::make(params, "hello", 3));
  EXPECT_NE(key, CacheKey::make(params, "hello!", 2));
  auto other = params;
  other.temperature = 0.0;
  EXPECT_NE(key, CacheKey::make(other, "hello", 2));
  other = params;
  other.model_id = "gpt-y";
  EXPECT_NE(key, CacheKey::make(other, "hello", 2));
  other = params;
  other.max_output_tokens = 8;  // not part of the key
  EXPECT_EQ(key, CacheKey::make(other, "hello", 2));
}

TEST(DirectoryCache, PutGetAndLayout) {
  testing::TempDir dir;
  DirectoryCache cache(dir.path());
  const auto key = CacheKey::make(GenerationParams{"m"}, "p", 0);
  EXPECT_FALSE(cache.get(key).has_value());
  cache.put(key, "A]] [[80]]\n");
  EXPECT_EQ(cache.get(key), "A]] [[80]]\n");
  EXPECT_EQ(cache.path_for(key), dir.path() / key.hex.substr(0, 2) / (key.hex + ".txt"));
  EXPECT_EQ(cache.size(), 1u);

  DirectoryCache reopened(dir.path());
  EXPECT_EQ(reopened.get(key), "A]] [[80]]\n");
}

TEST(MemoryCache, PutGet) {
  MemoryCache cache;
  const auto key = CacheKey::make(GenerationParams{"m"}, "p", 0);
  EXPECT_FALSE(cache.get(key));
  cache.put(key, "x");
  EXPECT_EQ(cache.get(key), "x");
  EXPECT_EQ(cache.size(), 1u);
}

}  // namespace
}  // namespace pjudge
