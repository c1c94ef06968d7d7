#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <memory>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "ras/store/document.hpp"

namespace ras {
class CsvReader;
}

namespace ras::ingest {

inline constexpr std::string_view kDefaultIiifSize = "!1000,1000";

struct ManifestRow {
  std::string doc_id;
  /// As written in the manifest.
  std::string image_url;
  store::MetadataRecord metadata;
  /// 1-based line of the record's first line.
  std::size_t line = 0;
};

struct RejectedRow {
  std::size_t line = 0;
  std::string doc_id;
  std::string reason;
};

/// Reads a manifest one row at a time. Required columns, in any order:
/// doc_id, image_url, title, resource_url, doc_type, collection. Other
/// columns become metadata extras.
class ManifestReader {
 public:
  /// Throws ManifestError when a required column is missing.
  explicit ManifestReader(std::istream& in);
  ~ManifestReader();

  /// Next valid row; malformed rows are collected in rejected().
  std::optional<ManifestRow> next();

  [[nodiscard]] const std::vector<RejectedRow>& rejected() const noexcept { return rejected_; }

 private:
  std::unique_ptr<CsvReader> csv_;
  std::vector<std::string> header_;
  std::vector<std::size_t> required_;
  std::unordered_set<std::string> seen_ids_;
  std::vector<RejectedRow> rejected_;
};

struct Manifest {
  std::vector<ManifestRow> rows;
  std::vector<RejectedRow> rejected;

  [[nodiscard]] std::size_t total() const noexcept { return rows.size() + rejected.size(); }
};

Manifest parse_manifest(std::istream& in);
Manifest read_manifest(const std::filesystem::path& path);

/// Content hash (FNV-1a 64, hex) of the manifest file.
std::string manifest_hash(const std::filesystem::path& path);

/// Download URL for a manifest image_url. Already complete IIIF requests
/// (ending in quality.format) and plain image files are used as given; an
/// info.json URL or bare identifier gets
/// /full/{size}/0/default.jpg appended.
std::string iiif_image_url(std::string_view image_url, std::string_view size = kDefaultIiifSize);

}  // namespace ras::ingest
