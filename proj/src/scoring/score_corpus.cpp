#include <cstdint>
#include <string>

#include "ras/common/error.hpp"
#include "ras/scoring/maxsim.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ras::scoring {

namespace {

void check_dims(const PreparedQuery& query, std::span<const CorpusDocument> corpus) {
  for (const auto& doc : corpus) {
    if (doc.matrix == nullptr) throw InvalidArgument("document '" + doc.doc_id + "' has no matrix");
    if (doc.matrix->dim() != query.dim())
      throw DimensionError("document '" + doc.doc_id + "' has dim " +
                           std::to_string(doc.matrix->dim()) + ", query has dim " +
                           std::to_string(query.dim()));
  }
}

const float* next_block(std::span<const CorpusDocument> corpus, std::size_t i) noexcept {
  return i + 1 < corpus.size() && corpus[i + 1].matrix->rows() > 0 ? corpus[i + 1].matrix->block(0)
                                                                   : nullptr;
}

}  // namespace

int scan_threads(ScanOptions options) noexcept {
#ifdef _OPENMP
  return options.threads > 0 ? options.threads : omp_get_max_threads();
#else
  (void)options;
  return 1;
#endif
}

std::vector<double> score_corpus_serial(const PreparedQuery& query,
                                        std::span<const CorpusDocument> corpus) {
  check_dims(query, corpus);
  std::vector<double> scores(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i)
    scores[i] = maxsim_packed(query, *corpus[i].matrix, next_block(corpus, i));
  return scores;
}

std::vector<double> score_corpus(const PreparedQuery& query, std::span<const CorpusDocument> corpus,
                                 ScanOptions options) {
  const int threads = scan_threads(options);
  if (threads <= 1) return score_corpus_serial(query, corpus);

  check_dims(query, corpus);
  std::vector<double> scores(corpus.size());
  const auto n = static_cast<std::int64_t>(corpus.size());
  // Documents are independent; each one is reduced entirely by one worker.
#pragma omp parallel for schedule(static) num_threads(threads)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    scores[idx] = maxsim_packed(query, *corpus[idx].matrix, next_block(corpus, idx));
  }
  return scores;
}

std::vector<double> score_corpus(const EmbeddingMatrix& query,
                                 std::span<const CorpusDocument> corpus, ScanOptions options) {
  return score_corpus(PreparedQuery(query), corpus, options);
}

}  // namespace ras::scoring
