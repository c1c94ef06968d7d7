#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ras/scoring/embedding_matrix.hpp"
#include "ras/scoring/packed_matrix.hpp"

namespace ras::scoring {

/// Query tokens converted once per search: f32 copy for the scan, f64 copy for
/// the exact recomputation of each token's best patch.
class PreparedQuery {
 public:
  /// Throws InvalidEmbedding on non-finite input.
  explicit PreparedQuery(const EmbeddingMatrix& query);

  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
  [[nodiscard]] const float* f32() const noexcept { return f32_.data(); }
  [[nodiscard]] const double* f64() const noexcept { return f64_.data(); }

 private:
  std::size_t rows_;
  std::size_t dim_;
  std::vector<float> f32_;
  std::vector<double> f64_;
};

/// A scoring target: stable id plus immutable packed patches. Several
/// documents may share one matrix.
struct CorpusDocument {
  std::string doc_id;
  std::shared_ptr<const PackedMatrix> matrix;
};

/// MaxSim over a packed document: the sum over query tokens of the largest
/// token/patch dot product. The scan locates each token's best patch in f32;
/// that dot product is then recomputed in f64 and summed in f64 in token order.
/// Returns 0.0 when either side has no rows.
/// Dimensions are not checked here.
///
/// `prefetch_next` optionally points at the first block of the document that
/// will be scored next.
double maxsim_packed(const PreparedQuery& query, const PackedMatrix& doc,
                     const float* prefetch_next = nullptr) noexcept;

/// True when the scan accumulates with fused multiply-add (one rounding per
/// step); otherwise each step rounds the product and then the sum.
bool scan_uses_fma() noexcept;

/// Validating single-pair entry point; same arithmetic as maxsim_packed.
/// Throws DimensionError on dim mismatch, InvalidEmbedding on non-finite input.
double maxsim_score(const EmbeddingMatrix& query, const EmbeddingMatrix& doc);

struct ScanOptions {
  /// Worker count for the document-parallel scan; 0 uses the OpenMP default.
  int threads = 0;
};

/// Scores every document; element i belongs to corpus[i]. Output is bitwise
/// identical for any thread count. Throws DimensionError naming the first
/// document whose dim differs from the query's.
std::vector<double> score_corpus(const EmbeddingMatrix& query,
                                 std::span<const CorpusDocument> corpus, ScanOptions options = {});

std::vector<double> score_corpus(const PreparedQuery& query, std::span<const CorpusDocument> corpus,
                                 ScanOptions options = {});

/// Single-threaded scan, same kernel.
std::vector<double> score_corpus_serial(const PreparedQuery& query,
                                        std::span<const CorpusDocument> corpus);

/// Number of workers the parallel scan would use for `options`.
int scan_threads(ScanOptions options) noexcept;

}  // namespace ras::scoring
