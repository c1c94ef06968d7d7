#include "ras/summarize/summarizer.hpp"

#include <chrono>

#include <spdlog/spdlog.h>

#include "ras/common/error.hpp"

namespace ras::summarize {

AnalysisResult analyze(std::span<const SearchResult> results, LlmClient& llm) {
  const AnalysisPrompt prompt = build_prompt(results);
  const ChatRequest request{prompt.system_preamble, prompt.user_message()};

  AnalysisResult out;
  out.digest_size = prompt.result_digest.size();
  const auto start = std::chrono::steady_clock::now();
  ChatReply reply;
  for (;;) {
    ++out.attempts;
    try {
      reply = llm.complete(request);
      break;
    } catch (const Timeout&) {
      throw;
    } catch (const UpstreamUnavailable& e) {
      if (out.attempts > 1) throw;
      spdlog::warn("LLM call failed ({}), retrying once", e.what());
    }
  }
  out.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::steady_clock::now() - start)
                       .count();
  if (reply.text.empty()) throw UpstreamUnavailable("LLM returned an empty reply");
  out.text = std::move(reply.text);
  out.model_id = std::move(reply.model_id);
  return out;
}

}  // namespace ras::summarize
