#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ras/api/search_result.hpp"

namespace ras::summarize {

inline constexpr std::size_t kMaxPromptChars = 8000;
inline constexpr std::size_t kMaxTitleChars = 300;

struct DigestEntry {
  int rank = 0;
  std::string title;
  std::string doc_type;
  std::string collection;
  double score = 0.0;

  friend bool operator==(const DigestEntry&, const DigestEntry&) = default;
};

struct AnalysisPrompt {
  std::string system_preamble;
  /// Rank order; lowest ranks dropped first when the prompt is too long.
  std::vector<DigestEntry> result_digest;
  /// Results left out of the digest to respect kMaxPromptChars.
  std::size_t omitted = 0;
  std::string instruction;

  /// Digest lines, omission note and instruction, as sent in the user turn.
  [[nodiscard]] std::string user_message() const;
  /// Bytes of system preamble plus user message.
  [[nodiscard]] std::size_t length() const;
};

std::string format_digest_line(const DigestEntry& entry);

/// Pure and deterministic. Titles longer than kMaxTitleChars are shortened.
/// Throws InvalidArgument for an empty result list.
AnalysisPrompt build_prompt(std::span<const SearchResult> results);

}  // namespace ras::summarize
