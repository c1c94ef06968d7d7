#pragma once

#include <cstddef>
#include <vector>

#include "ras/scoring/embedding_matrix.hpp"

namespace ras::scoring {

/// Scan layout for document matrices. Patch rows are grouped into blocks of
/// kLanes; inside a block values are dimension-major, so one SIMD load yields
/// the same coordinate for kLanes consecutive patches. The last block is
/// zero-padded; padded lanes are never reported by the kernel.
class PackedMatrix {
 public:
  static constexpr std::size_t kLanes = 16;

  PackedMatrix() = default;

  /// Throws InvalidEmbedding if `m` holds a non-finite value.
  explicit PackedMatrix(const EmbeddingMatrix& m);

  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
  [[nodiscard]] std::size_t blocks() const noexcept { return (rows_ + kLanes - 1) / kLanes; }

  [[nodiscard]] const float* block(std::size_t b) const noexcept {
    return data_.data() + b * dim_ * kLanes;
  }

  [[nodiscard]] float at(std::size_t row, std::size_t col) const noexcept {
    return data_[(row / kLanes) * dim_ * kLanes + col * kLanes + row % kLanes];
  }

  /// Inverse of the packing constructor (bit-exact).
  [[nodiscard]] EmbeddingMatrix unpack() const;

  [[nodiscard]] std::size_t memory_bytes() const noexcept { return data_.size() * sizeof(float); }

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 1;
  std::vector<float> data_;
};

}  // namespace ras::scoring
