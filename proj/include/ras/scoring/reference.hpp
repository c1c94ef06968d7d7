#pragma once

#include <span>
#include <vector>

#include "ras/scoring/embedding_matrix.hpp"

// Straightforward scalar implementations kept as the baseline for tests and
// benchmarks. Row-major input, f64 arithmetic, no blocking.
namespace ras::scoring::reference {

double maxsim_score(const EmbeddingMatrix& query, const EmbeddingMatrix& doc);

std::vector<double> score_corpus(const EmbeddingMatrix& query,
                                 std::span<const EmbeddingMatrix> corpus);

}  // namespace ras::scoring::reference
