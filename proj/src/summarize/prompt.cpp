#include "ras/summarize/prompt.hpp"

#include <cstdio>

#include "ras/common/error.hpp"

namespace ras::summarize {

namespace {

constexpr std::string_view kPreamble =
    "You are a research assistant for a digital library of historical maps. You see only the "
    "catalogue metadata of search results, never the images themselves.";

constexpr std::string_view kInstruction =
    "In one or two short paragraphs, describe what these results have in common. Identify the "
    "dominant themes, the time periods covered, the formats present, the main subjects, and any "
    "authors or creators that stand out. Mention only what the metadata supports.";

constexpr std::string_view kDigestHeader = "Search results (rank. title | type | collection | score):\n";

std::string one_line(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) out.push_back(c == '\n' || c == '\r' || c == '\t' ? ' ' : c);
  return out;
}

// Cuts at a UTF-8 character boundary.
std::string shorten(std::string s, std::size_t max_bytes) {
  if (s.size() <= max_bytes) return s;
  std::size_t cut = max_bytes - 3;
  while (cut > 0 && (static_cast<unsigned char>(s[cut]) & 0xC0) == 0x80) --cut;
  s.resize(cut);
  return s + "...";
}

std::string omitted_line(std::size_t omitted) {
  if (omitted == 0) return {};
  return "(" + std::to_string(omitted) + " lower-ranked results omitted for length.)\n";
}

std::string assemble(std::span<const DigestEntry> digest, std::size_t omitted,
                     std::string_view instruction) {
  std::string out(kDigestHeader);
  for (const auto& e : digest) out += format_digest_line(e);
  out += omitted_line(omitted);
  out += "\n";
  out += instruction;
  return out;
}

}  // namespace

std::string format_digest_line(const DigestEntry& e) {
  char score[32];
  std::snprintf(score, sizeof score, "%.4f", e.score);
  return std::to_string(e.rank) + ". " + e.title + " | " + e.doc_type + " | " + e.collection + " | " +
         score + "\n";
}

std::string AnalysisPrompt::user_message() const {
  return assemble(result_digest, omitted, instruction);
}

std::size_t AnalysisPrompt::length() const { return system_preamble.size() + user_message().size(); }

AnalysisPrompt build_prompt(std::span<const SearchResult> results) {
  if (results.empty()) throw InvalidArgument("analysis needs at least one result");

  std::vector<DigestEntry> all;
  all.reserve(results.size());
  for (const auto& r : results)
    all.push_back({r.rank, shorten(one_line(r.title), kMaxTitleChars), one_line(r.doc_type),
                   one_line(r.collection), r.score});

  const std::size_t fixed = kPreamble.size() + kDigestHeader.size() + 1 + kInstruction.size();
  std::size_t keep = 0;
  std::size_t lines = 0;
  for (std::size_t m = 1; m <= all.size(); ++m) {
    lines += format_digest_line(all[m - 1]).size();
    if (fixed + lines + omitted_line(all.size() - m).size() > kMaxPromptChars) break;
    keep = m;
  }

  AnalysisPrompt prompt;
  prompt.system_preamble = kPreamble;
  prompt.instruction = kInstruction;
  prompt.omitted = all.size() - keep;
  all.resize(keep);
  prompt.result_digest = std::move(all);
  return prompt;
}

}  // namespace ras::summarize
