#pragma once

#include <string>

namespace ras {

/// One ranked hit as returned to clients. Ranks start at 1.
struct SearchResult {
  std::string doc_id;
  std::string title;
  std::string image_url;
  std::string resource_url;
  std::string doc_type;
  std::string collection;
  double score = 0.0;
  int rank = 0;

  friend bool operator==(const SearchResult&, const SearchResult&) = default;
};

}  // namespace ras
