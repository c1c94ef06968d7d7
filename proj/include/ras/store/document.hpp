#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "ras/scoring/embedding_matrix.hpp"

namespace ras::store {

enum class DocumentSource { base_corpus, user_upload, federated_import };

std::string_view to_string(DocumentSource source) noexcept;
std::optional<DocumentSource> parse_source(std::string_view text) noexcept;

struct DocumentEmbedding {
  std::string doc_id;  // IIIF identifier or user-assigned id
  scoring::EmbeddingMatrix matrix;
  DocumentSource source = DocumentSource::base_corpus;
};

/// Per-document descriptive fields. `extra` holds any further columns;
/// `image_url` is kept there so the fixed header stays as published.
struct MetadataRecord {
  std::string doc_id;
  std::string title;
  std::string resource_url;
  std::string doc_type;
  std::string collection;
  std::map<std::string, std::string> extra;

  [[nodiscard]] std::string image_url() const {
    const auto it = extra.find("image_url");
    return it == extra.end() ? std::string() : it->second;
  }

  friend bool operator==(const MetadataRecord&, const MetadataRecord&) = default;
};

}  // namespace ras::store
