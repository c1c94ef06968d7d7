#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ras::scoring {

/// Row-major matrix of d-dimensional vectors: query tokens (T x d) or
/// document patches (P x d). Zero rows is valid; dim is at least 1.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;

  /// Throws InvalidArgument if dim == 0 or values.size() != rows * dim.
  EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<float> values);

  static EmbeddingMatrix zeros(std::size_t rows, std::size_t dim);

  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
  [[nodiscard]] bool empty() const noexcept { return rows_ == 0; }

  [[nodiscard]] std::span<const float> values() const noexcept { return values_; }
  [[nodiscard]] std::span<float> mutable_values() noexcept { return values_; }

  [[nodiscard]] std::span<const float> row(std::size_t i) const noexcept {
    return {values_.data() + i * dim_, dim_};
  }
  [[nodiscard]] std::span<float> mutable_row(std::size_t i) noexcept {
    return {values_.data() + i * dim_, dim_};
  }

  [[nodiscard]] bool all_finite() const noexcept;

  /// True when every row has L2 norm within `tolerance` of 1.
  [[nodiscard]] bool rows_unit_norm(double tolerance = 1e-3) const noexcept;

  /// Throws InvalidEmbedding when any value is NaN or infinite.
  void require_finite() const;

  /// Appends the rows of `other`; dims must match.
  void append_rows(const EmbeddingMatrix& other);

  [[nodiscard]] std::size_t memory_bytes() const noexcept { return values_.size() * sizeof(float); }

  /// Bitwise comparison of shape and values (distinguishes -0.0 from 0.0).
  friend bool operator==(const EmbeddingMatrix& a, const EmbeddingMatrix& b) noexcept;

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 1;
  std::vector<float> values_;
};

}  // namespace ras::scoring
