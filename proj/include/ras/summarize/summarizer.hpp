#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "ras/api/search_result.hpp"
#include "ras/summarize/llm_client.hpp"
#include "ras/summarize/prompt.hpp"

namespace ras::summarize {

struct AnalysisResult {
  std::string text;
  std::string model_id;
  std::int64_t latency_ms = 0;
  /// LLM calls made, 2 when the transport retry was used.
  int attempts = 0;
  std::size_t digest_size = 0;
};

/// Builds the prompt and returns the model's reply verbatim. One retry on a
/// transport failure, none on timeout or on content.
/// Errors: InvalidArgument (no results), Timeout, UpstreamUnavailable
/// (including an empty reply).
AnalysisResult analyze(std::span<const SearchResult> results, LlmClient& llm);

}  // namespace ras::summarize
