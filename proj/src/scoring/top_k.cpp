#include "ras/scoring/top_k.hpp"

#include <algorithm>
#include <numeric>

#include "ras/common/error.hpp"

namespace ras::scoring {

bool ranks_before(double score_a, std::string_view id_a, double score_b,
                  std::string_view id_b) noexcept {
  if (score_a != score_b) return score_a > score_b;
  return id_a < id_b;
}

namespace {

template <typename IdAt, typename ScoreAt>
std::vector<RankedHit> select(std::size_t n, std::size_t k, IdAt id_at, ScoreAt score_at) {
  if (k == 0) throw InvalidArgument("k must be >= 1");
  const std::size_t take = std::min(k, n);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto better = [&](std::size_t a, std::size_t b) {
    return ranks_before(score_at(a), id_at(a), score_at(b), id_at(b));
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                    better);

  std::vector<RankedHit> hits;
  hits.reserve(take);
  for (std::size_t i = 0; i < take; ++i)
    hits.push_back({order[i], std::string(id_at(order[i])), score_at(order[i])});
  return hits;
}

}  // namespace

std::vector<RankedHit> top_k(std::span<const ScoredId> scores, std::size_t k) {
  return select(
      scores.size(), k, [&](std::size_t i) -> std::string_view { return scores[i].doc_id; },
      [&](std::size_t i) { return scores[i].score; });
}

std::vector<RankedHit> top_k(std::span<const std::string> ids, std::span<const double> scores,
                             std::size_t k) {
  if (ids.size() != scores.size()) throw InvalidArgument("top_k: ids and scores differ in length");
  return select(
      ids.size(), k, [&](std::size_t i) -> std::string_view { return ids[i]; },
      [&](std::size_t i) { return scores[i]; });
}

std::vector<RankedHit> top_k(std::span<const CorpusDocument> docs, std::span<const double> scores,
                             std::size_t k) {
  if (docs.size() != scores.size()) throw InvalidArgument("top_k: docs and scores differ in length");
  return select(
      docs.size(), k, [&](std::size_t i) -> std::string_view { return docs[i].doc_id; },
      [&](std::size_t i) { return scores[i]; });
}

}  // namespace ras::scoring
