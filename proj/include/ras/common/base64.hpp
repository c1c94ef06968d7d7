#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ras {

// RFC 4648 standard alphabet with padding.
std::string base64_encode(std::span<const std::byte> bytes);

// Throws InvalidArgument on characters outside the alphabet or bad padding.
std::vector<std::byte> base64_decode(std::string_view text);

inline std::span<const std::byte> as_bytes(std::string_view s) {
  return std::as_bytes(std::span<const char>(s.data(), s.size()));
}

}  // namespace ras
