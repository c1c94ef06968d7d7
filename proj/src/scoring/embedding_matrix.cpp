#include "ras/scoring/embedding_matrix.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "ras/common/error.hpp"

namespace ras::scoring {

EmbeddingMatrix::EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<float> values)
    : rows_(rows), dim_(dim), values_(std::move(values)) {
  if (dim_ == 0) throw InvalidArgument("embedding dim must be >= 1");
  if (values_.size() != rows_ * dim_)
    throw InvalidArgument("embedding has " + std::to_string(values_.size()) + " values, expected " +
                          std::to_string(rows_) + " x " + std::to_string(dim_));
}

EmbeddingMatrix EmbeddingMatrix::zeros(std::size_t rows, std::size_t dim) {
  return EmbeddingMatrix(rows, dim, std::vector<float>(rows * dim, 0.0f));
}

bool EmbeddingMatrix::all_finite() const noexcept {
  for (float v : values_)
    if (!std::isfinite(v)) return false;
  return true;
}

bool EmbeddingMatrix::rows_unit_norm(double tolerance) const noexcept {
  for (std::size_t r = 0; r < rows_; ++r) {
    double sq = 0.0;
    for (float v : row(r)) sq += static_cast<double>(v) * v;
    if (std::abs(std::sqrt(sq) - 1.0) > tolerance) return false;
  }
  return true;
}

void EmbeddingMatrix::require_finite() const {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i]))
      throw InvalidEmbedding("non-finite value at row " + std::to_string(i / dim_) + ", column " +
                             std::to_string(i % dim_));
  }
}

void EmbeddingMatrix::append_rows(const EmbeddingMatrix& other) {
  if (other.dim_ != dim_)
    throw DimensionError("cannot append rows of dim " + std::to_string(other.dim_) +
                         " to matrix of dim " + std::to_string(dim_));
  values_.insert(values_.end(), other.values_.begin(), other.values_.end());
  rows_ += other.rows_;
}

bool operator==(const EmbeddingMatrix& a, const EmbeddingMatrix& b) noexcept {
  return a.rows_ == b.rows_ && a.dim_ == b.dim_ &&
         (a.values_.empty() ||
          std::memcmp(a.values_.data(), b.values_.data(), a.values_.size() * sizeof(float)) == 0);
}

}  // namespace ras::scoring
