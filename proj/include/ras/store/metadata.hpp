#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <ostream>
#include <string>

#include "ras/store/document.hpp"

namespace ras::store {

using MetadataTable = std::map<std::string, MetadataRecord>;

// metadata.csv header: doc_id,title,resource_url,doc_type,collection, then
// any extra columns in sorted order.
inline constexpr std::string_view kMetadataFile = "metadata.csv";

/// Throws InvalidArgument if the fixed columns are missing or a row has an
/// empty doc_id. Later rows for the same doc_id replace earlier ones.
MetadataTable read_metadata_csv(std::istream& in);
void write_metadata_csv(std::ostream& out, const MetadataTable& table);

/// Missing file -> empty table.
MetadataTable load_metadata(const std::filesystem::path& path);
void save_metadata(const std::filesystem::path& path, const MetadataTable& table);

}  // namespace ras::store
