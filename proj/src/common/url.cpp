#include "ras/common/url.hpp"

#include <algorithm>
#include <cctype>

namespace ras {

std::optional<UrlParts> split_url(std::string_view url) {
  const auto sep = url.find("://");
  if (sep == std::string_view::npos) return std::nullopt;
  std::string scheme(url.substr(0, sep));
  std::transform(scheme.begin(), scheme.end(), scheme.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (scheme != "http" && scheme != "https") return std::nullopt;

  const auto host_start = sep + 3;
  const auto path_start = url.find_first_of("/?#", host_start);
  const auto authority = url.substr(host_start, path_start == std::string_view::npos
                                                    ? std::string_view::npos
                                                    : path_start - host_start);
  if (authority.empty() || authority.front() == ':') return std::nullopt;
  if (std::any_of(authority.begin(), authority.end(),
                  [](unsigned char c) { return std::isspace(c) || c == '@'; }))
    return std::nullopt;

  UrlParts parts;
  parts.scheme = scheme;
  parts.origin = scheme + "://" + std::string(authority);
  parts.path = path_start == std::string_view::npos ? "/" : std::string(url.substr(path_start));
  if (parts.path.front() != '/') parts.path.insert(parts.path.begin(), '/');
  if (const auto hash = parts.path.find('#'); hash != std::string::npos) parts.path.resize(hash);
  if (parts.path.find_first_of(" \t\r\n") != std::string::npos) return std::nullopt;
  return parts;
}

}  // namespace ras
