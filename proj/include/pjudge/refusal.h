#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace pjudge {

/// Matches responses that decline to answer, using a list of opening phrases.
/// Empty or whitespace-only text counts as a refusal.
class RefusalDetector {
 public:
  /// Uses the phrase list shipped in data/refusal_phrases.txt.
  RefusalDetector();
  explicit RefusalDetector(std::vector<std::string> phrases);

  static RefusalDetector from_file(const std::filesystem::path& path);
  /// Parses the phrase-list format: one phrase per line, '#' comments.
  static RefusalDetector from_text(std::string_view text);

  bool is_refusal(std::string_view text) const;
  const std::vector<std::string>& phrases() const { return phrases_; }

 private:
  std::vector<std::string> phrases_;  // normalized
};

/// Shorthand for RefusalDetector{}.is_refusal(text).
bool detect_refusal(std::string_view text);

}  // namespace pjudge
