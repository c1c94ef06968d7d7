#include <algorithm>
#include <cstring>
#include <limits>
#include <string>
#include <vector>

#include "ras/common/error.hpp"
#include "ras/scoring/maxsim.hpp"

namespace ras::scoring {

namespace {

constexpr std::size_t kLanes = PackedMatrix::kLanes;
static_assert(kLanes == 16);

using Lanes = float __attribute__((vector_size(64)));
using LaneMask = int __attribute__((vector_size(64)));

constexpr float kNegInf = -std::numeric_limits<float>::infinity();

inline Lanes splat(float v) noexcept { return Lanes{v, v, v, v, v, v, v, v, v, v, v, v, v, v, v, v}; }

inline Lanes load(const float* p) noexcept {
  Lanes v;
  std::memcpy(&v, p, sizeof v);
  return v;
}

// Exact dot of one query token against one packed patch: products of two f32
// values are exact in f64, accumulation runs in index order.
double exact_dot(const double* token, const PackedMatrix& doc, std::size_t patch) noexcept {
  const float* col = doc.block(patch / kLanes) + patch % kLanes;
  const std::size_t dim = doc.dim();
  double sum = 0.0;
  for (std::size_t k = 0; k < dim; ++k) sum += token[k] * static_cast<double>(col[k * kLanes]);
  return sum;
}

// Accumulates kTile query tokens (`q` points at the first) against kGroup
// consecutive blocks starting at block `b`, then folds each lane into the
// running maximum and the block it came from. Blocks are folded in order and
// ties keep the earlier block; padded lanes of a partial last block are
// masked to -inf.
template <std::size_t kTile, std::size_t kGroup>
inline void tile_group(const float* q, const PackedMatrix& doc, std::size_t b, const float* ahead,
                       Lanes* best, Lanes* best_block) noexcept {
  const std::size_t dim = doc.dim();
  const float* blk = doc.block(b);

  Lanes acc[kGroup][kTile];
#pragma GCC unroll 32
  for (std::size_t g = 0; g < kGroup; ++g)
#pragma GCC unroll 32
    for (std::size_t t = 0; t < kTile; ++t) acc[g][t] = splat(0.0f);
  for (std::size_t k = 0; k < dim; ++k) {
    if (ahead != nullptr) __builtin_prefetch(ahead + k * kLanes);
    Lanes x[kGroup];
#pragma GCC unroll 32
    for (std::size_t g = 0; g < kGroup; ++g) x[g] = load(blk + (g * dim + k) * kLanes);
#pragma GCC unroll 32
    for (std::size_t t = 0; t < kTile; ++t) {
      const Lanes qt = splat(q[t * dim + k]);
#pragma GCC unroll 32
      for (std::size_t g = 0; g < kGroup; ++g) acc[g][t] += qt * x[g];
    }
  }

  const std::size_t rows = doc.rows();
  const Lanes lane = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15};
#pragma GCC unroll 32
  for (std::size_t g = 0; g < kGroup; ++g) {
    const std::size_t valid = std::min(kLanes, rows - (b + g) * kLanes);
    const Lanes block_id = splat(static_cast<float>(b + g));
#pragma GCC unroll 32
    for (std::size_t t = 0; t < kTile; ++t) {
      Lanes v = acc[g][t];
      if (valid < kLanes) v = lane >= splat(static_cast<float>(valid)) ? splat(kNegInf) : v;
      const LaneMask better = v > best[t];
      best[t] = better ? v : best[t];
      best_block[t] = better ? block_id : best_block[t];
    }
  }
}

// All query tokens against blocks [b, b + kGroup), eight tokens at a time.
template <std::size_t kGroup>
inline void scan_group(const PreparedQuery& query, const PackedMatrix& doc, std::size_t b,
                       const float* ahead, Lanes* best, Lanes* best_block) noexcept {
  const std::size_t dim = doc.dim();
  const std::size_t rows = query.rows();
  const float* q = query.f32();
  std::size_t t = 0;
  for (; t + 8 <= rows; t += 8)
    tile_group<8, kGroup>(q + t * dim, doc, b, t == 0 ? ahead : nullptr, best + t, best_block + t);
  if (rows - t >= 4) tile_group<4, kGroup>(q + t * dim, doc, b, nullptr, best + t, best_block + t), t += 4;
  if (rows - t >= 2) tile_group<2, kGroup>(q + t * dim, doc, b, nullptr, best + t, best_block + t), t += 2;
  if (rows - t >= 1) tile_group<1, kGroup>(q + t * dim, doc, b, nullptr, best + t, best_block + t);
}

constexpr std::size_t kGroupBlocks = 3;

}  // namespace

bool scan_uses_fma() noexcept {
#ifdef __FMA__
  return true;
#else
  return false;
#endif
}

PreparedQuery::PreparedQuery(const EmbeddingMatrix& query)
    : rows_(query.rows()), dim_(query.dim()) {
  query.require_finite();
  f32_.assign(query.values().begin(), query.values().end());
  f64_.assign(query.values().begin(), query.values().end());
}

double maxsim_packed(const PreparedQuery& query, const PackedMatrix& doc,
                     const float* prefetch_next) noexcept {
  if (query.rows() == 0 || doc.rows() == 0) return 0.0;
  const std::size_t rows = query.rows();
  const std::size_t dim = doc.dim();
  const std::size_t blocks = doc.blocks();
  std::vector<Lanes> best(rows, splat(kNegInf));
  std::vector<Lanes> best_block(rows, splat(0.0f));

  // The first tile of each group prefetches the group after it, one line per k
  // across its three blocks.
  std::size_t b = 0;
  for (; b + kGroupBlocks <= blocks; b += kGroupBlocks) {
    const float* ahead = b + kGroupBlocks < blocks ? doc.block(b + kGroupBlocks) : prefetch_next;
    scan_group<kGroupBlocks>(query, doc, b, ahead, best.data(), best_block.data());
  }
  for (; b < blocks; ++b) scan_group<1>(query, doc, b, nullptr, best.data(), best_block.data());

  double total = 0.0;
  for (std::size_t t = 0; t < rows; ++t) {
    float top = kNegInf;
    std::size_t patch = 0;
    for (std::size_t l = 0; l < kLanes; ++l) {
      if (best[t][l] > top) {
        top = best[t][l];
        patch = static_cast<std::size_t>(best_block[t][l]) * kLanes + l;
      }
    }
    total += exact_dot(query.f64() + t * dim, doc, patch);
  }
  return total;
}

double maxsim_score(const EmbeddingMatrix& query, const EmbeddingMatrix& doc) {
  if (query.dim() != doc.dim())
    throw DimensionError("query dim " + std::to_string(query.dim()) + " != document dim " +
                         std::to_string(doc.dim()));
  const PreparedQuery prepared(query);
  const PackedMatrix packed(doc);
  return maxsim_packed(prepared, packed);
}

}  // namespace ras::scoring
