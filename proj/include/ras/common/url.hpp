#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace ras {

struct UrlParts {
  std::string scheme;
  /// scheme://host[:port]
  std::string origin;
  /// Starts with '/', includes any query string. "/" when absent.
  std::string path;
};

/// Accepts absolute http and https URLs with a non-empty host.
std::optional<UrlParts> split_url(std::string_view url);

}  // namespace ras
