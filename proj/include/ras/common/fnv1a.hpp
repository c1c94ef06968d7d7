#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace ras {

// 64-bit FNV-1a. Used for shard checksums, manifest hashes and mock seeds.
class Fnv1a64 {
 public:
  static constexpr std::uint64_t kOffsetBasis = 0xcbf29ce484222325ULL;
  static constexpr std::uint64_t kPrime = 0x100000001b3ULL;

  constexpr void update(std::uint8_t byte) noexcept {
    state_ ^= byte;
    state_ *= kPrime;
  }

  void update(std::span<const std::byte> bytes) noexcept {
    for (std::byte b : bytes) update(static_cast<std::uint8_t>(b));
  }

  constexpr void update(std::string_view text) noexcept {
    for (char c : text) update(static_cast<std::uint8_t>(c));
  }

  // Little-endian encoding of an unsigned integer of `width` bytes.
  constexpr void update_le(std::uint64_t value, int width) noexcept {
    for (int i = 0; i < width; ++i) update(static_cast<std::uint8_t>(value >> (8 * i)));
  }

  [[nodiscard]] constexpr std::uint64_t digest() const noexcept { return state_; }

 private:
  std::uint64_t state_ = kOffsetBasis;
};

inline std::uint64_t fnv1a64(std::span<const std::byte> bytes) noexcept {
  Fnv1a64 h;
  h.update(bytes);
  return h.digest();
}

constexpr std::uint64_t fnv1a64(std::string_view text) noexcept {
  Fnv1a64 h;
  h.update(text);
  return h.digest();
}

static_assert(fnv1a64("") == 0xcbf29ce484222325ULL);
static_assert(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);

}  // namespace ras
