#include "ras/ingest/manifest.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <fstream>

#include "ras/common/csv.hpp"
#include "ras/common/error.hpp"
#include "ras/common/fnv1a.hpp"
#include "ras/common/url.hpp"

namespace ras::ingest {

namespace {

constexpr std::array<std::string_view, 6> kRequired = {"doc_id",       "image_url", "title",
                                                       "resource_url", "doc_type",  "collection"};
enum Column { kDocId, kImageUrl, kTitle, kResourceUrl, kDocType, kCollection };

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

}  // namespace

ManifestReader::ManifestReader(std::istream& in) : csv_(std::make_unique<CsvReader>(in)) {
  auto header = csv_->next();
  if (!header) throw ManifestError("manifest is empty (no header row)");
  for (auto& h : *header) h = trim(h);
  header_ = std::move(*header);
  for (auto name : kRequired) {
    const auto it = std::find(header_.begin(), header_.end(), name);
    if (it == header_.end()) throw ManifestError("manifest is missing required column '" + std::string(name) + "'");
    required_.push_back(static_cast<std::size_t>(it - header_.begin()));
  }
}

ManifestReader::~ManifestReader() = default;

std::optional<ManifestRow> ManifestReader::next() {
  for (;;) {
    std::optional<std::vector<std::string>> fields;
    try {
      fields = csv_->next();
    } catch (const InvalidArgument& e) {
      throw ManifestError(std::string("manifest: ") + e.what());
    }
    if (!fields) return std::nullopt;
    const std::size_t line = csv_->record_line();
    if (fields->size() == 1 && trim(fields->front()).empty()) continue;

    auto reject = [&](std::string doc_id, std::string reason) {
      rejected_.push_back({line, std::move(doc_id), std::move(reason)});
    };
    if (fields->size() > header_.size()) {
      reject(fields->size() > required_[kDocId] ? trim((*fields)[required_[kDocId]]) : "",
             std::to_string(fields->size()) + " fields but the header has " +
                 std::to_string(header_.size()));
      continue;
    }
    fields->resize(header_.size());
    auto get = [&](Column c) { return trim((*fields)[required_[c]]); };

    ManifestRow row;
    row.line = line;
    row.doc_id = get(kDocId);
    row.image_url = get(kImageUrl);
    if (row.doc_id.empty()) {
      reject("", "empty doc_id");
      continue;
    }
    if (!split_url(row.image_url)) {
      reject(row.doc_id, "image_url is not an absolute http(s) URL: '" + row.image_url + "'");
      continue;
    }
    if (!seen_ids_.insert(row.doc_id).second) {
      reject(row.doc_id, "duplicate doc_id");
      continue;
    }
    row.metadata = {row.doc_id, get(kTitle), get(kResourceUrl), get(kDocType), get(kCollection), {}};
    for (std::size_t c = 0; c < header_.size(); ++c) {
      if (std::find(required_.begin(), required_.end(), c) != required_.end()) continue;
      auto value = trim((*fields)[c]);
      if (!value.empty() && !header_[c].empty()) row.metadata.extra[header_[c]] = std::move(value);
    }
    row.metadata.extra["image_url"] = iiif_image_url(row.image_url);
    return row;
  }
}

Manifest parse_manifest(std::istream& in) {
  ManifestReader reader(in);
  Manifest m;
  while (auto row = reader.next()) m.rows.push_back(std::move(*row));
  m.rejected = reader.rejected();
  return m;
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest " + path.string());
  return parse_manifest(in);
}

std::string manifest_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest " + path.string());
  Fnv1a64 h;
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    h.update(std::string_view(buf.data(), static_cast<std::size_t>(in.gcount())));
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h.digest()));
  return hex;
}

std::string iiif_image_url(std::string_view image_url, std::string_view size) {
  std::string base(image_url);
  const auto query = base.find_first_of("?#");
  const std::string path = lower(base.substr(0, query));
  const auto slash = path.rfind('/');
  const std::string last = slash == std::string::npos ? path : path.substr(slash + 1);

  for (std::string_view quality : {"default.", "color.", "gray.", "bitonal.", "native."})
    if (last.rfind(quality, 0) == 0 && last.size() > quality.size()) return base;
  for (std::string_view ext : {".jpg", ".jpeg", ".png", ".tif", ".tiff", ".gif", ".jp2", ".webp"})
    if (ends_with(last, ext)) return base;

  if (query != std::string::npos) base.resize(query);
  if (ends_with(lower(base), "/info.json")) base.resize(base.size() - std::string_view("/info.json").size());
  while (!base.empty() && base.back() == '/') base.pop_back();
  return base + "/full/" + std::string(size) + "/0/default.jpg";
}

}  // namespace ras::ingest
