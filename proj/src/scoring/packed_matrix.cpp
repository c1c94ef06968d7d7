#include "ras/scoring/packed_matrix.hpp"

namespace ras::scoring {

PackedMatrix::PackedMatrix(const EmbeddingMatrix& m) : rows_(m.rows()), dim_(m.dim()) {
  m.require_finite();
  data_.assign(blocks() * dim_ * kLanes, 0.0f);
  for (std::size_t r = 0; r < rows_; ++r) {
    float* dst = data_.data() + (r / kLanes) * dim_ * kLanes + r % kLanes;
    const auto src = m.row(r);
    for (std::size_t k = 0; k < dim_; ++k) dst[k * kLanes] = src[k];
  }
}

EmbeddingMatrix PackedMatrix::unpack() const {
  std::vector<float> values(rows_ * dim_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t k = 0; k < dim_; ++k) values[r * dim_ + k] = at(r, k);
  return EmbeddingMatrix(rows_, dim_, std::move(values));
}

}  // namespace ras::scoring
