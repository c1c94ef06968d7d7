#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "ras/embed/embedder.hpp"

namespace ras::embed {

inline constexpr std::size_t kMockDim = 128;
inline constexpr std::size_t kMockImageRows = 768;
inline constexpr std::size_t kMockMaxTextRows = 32;
inline constexpr std::string_view kMockModelId = "mock-fnv-xorshift";

/// xorshift64* (Vigna). A zero state is replaced by a fixed odd constant.
class XorShift64Star {
 public:
  explicit XorShift64Star(std::uint64_t seed) noexcept
      : state_(seed != 0 ? seed : 0x9E3779B97F4A7C15ULL) {}

  std::uint64_t next() noexcept {
    state_ ^= state_ >> 12;
    state_ ^= state_ << 25;
    state_ ^= state_ >> 27;
    return state_ * 0x2545F4914F6CDD1DULL;
  }

  /// Top 53 bits mapped onto [-1, 1).
  double next_signed() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-52 - 1.0;
  }

 private:
  std::uint64_t state_;
};

/// Number of whitespace-separated tokens.
std::size_t count_tokens(std::string_view text) noexcept;

/// Seed of one row: FNV-1a 64 over kind byte (text 0, image 1), payload
/// bytes, then the row index as u32 little-endian.
std::uint64_t mock_row_seed(EmbedKind kind, std::string_view payload, std::uint32_t row) noexcept;

/// Deterministic model-free embedder. Text yields min(tokens, 32) rows,
/// images 768 rows; every row is L2-normalized. Pure function of its input.
class MockEmbedder final : public EmbedBackend {
 public:
  explicit MockEmbedder(std::size_t dim = kMockDim) : dim_(dim) {}

  /// Throws InvalidArgument for blank text or an empty image payload.
  EmbedResponse embed(const EmbedRequest& request) override;
  EmbedderHealth health() noexcept override;

  [[nodiscard]] scoring::EmbeddingMatrix embed_payload(EmbedKind kind, std::string_view payload) const;
  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }

 private:
  std::size_t dim_;
};

}  // namespace ras::embed
