#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ras/scoring/maxsim.hpp"

namespace ras::scoring {

inline constexpr std::size_t kDefaultTopK = 5;

struct ScoredId {
  std::string doc_id;
  double score = 0.0;
};

struct RankedHit {
  std::size_t doc_ref = 0;  // position in the scored input
  std::string doc_id;
  double score = 0.0;

  friend bool operator==(const RankedHit&, const RankedHit&) = default;
};

/// Ranking order: higher score first, then ascending doc_id.
[[nodiscard]] bool ranks_before(double score_a, std::string_view id_a, double score_b,
                                std::string_view id_b) noexcept;

/// First min(k, n) entries of the (score desc, doc_id asc) order.
/// Throws InvalidArgument when k == 0.
std::vector<RankedHit> top_k(std::span<const ScoredId> scores, std::size_t k = kDefaultTopK);

/// Same selection over parallel id/score arrays (ids.size() == scores.size()).
std::vector<RankedHit> top_k(std::span<const std::string> ids, std::span<const double> scores,
                             std::size_t k = kDefaultTopK);

/// Same selection with ids taken from scored documents.
std::vector<RankedHit> top_k(std::span<const CorpusDocument> docs, std::span<const double> scores,
                             std::size_t k = kDefaultTopK);

}  // namespace ras::scoring
