#include "ras/scoring/reference.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "ras/common/error.hpp"

namespace ras::scoring::reference {

double maxsim_score(const EmbeddingMatrix& query, const EmbeddingMatrix& doc) {
  if (query.dim() != doc.dim())
    throw DimensionError("query dim " + std::to_string(query.dim()) + " != document dim " +
                         std::to_string(doc.dim()));
  query.require_finite();
  doc.require_finite();
  if (query.empty() || doc.empty()) return 0.0;

  double total = 0.0;
  for (std::size_t t = 0; t < query.rows(); ++t) {
    const auto q = query.row(t);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < doc.rows(); ++p) {
      const auto x = doc.row(p);
      double dot = 0.0;
      for (std::size_t k = 0; k < q.size(); ++k) dot += static_cast<double>(q[k]) * x[k];
      best = std::max(best, dot);
    }
    total += best;
  }
  return total;
}

std::vector<double> score_corpus(const EmbeddingMatrix& query,
                                 std::span<const EmbeddingMatrix> corpus) {
  std::vector<double> out;
  out.reserve(corpus.size());
  for (const auto& doc : corpus) out.push_back(maxsim_score(query, doc));
  return out;
}

}  // namespace ras::scoring::reference
