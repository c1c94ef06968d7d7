#include "ras/store/metadata.hpp"

#include <array>
#include <fstream>
#include <set>
#include <sstream>

#include "ras/common/csv.hpp"
#include "ras/common/error.hpp"
#include "ras/common/file_io.hpp"

namespace ras::store {

namespace {

constexpr std::array<std::string_view, 5> kFixed = {"doc_id", "title", "resource_url", "doc_type",
                                                    "collection"};

}  // namespace

MetadataTable read_metadata_csv(std::istream& in) {
  CsvReader csv(in);
  auto header = csv.next();
  MetadataTable table;
  if (!header) return table;
  for (std::size_t i = 0; i < kFixed.size(); ++i) {
    if (header->size() <= i || (*header)[i] != kFixed[i])
      throw InvalidArgument("metadata.csv: expected column '" + std::string(kFixed[i]) +
                            "' at position " + std::to_string(i + 1));
  }
  while (auto row = csv.next()) {
    if (row->size() == 1 && row->front().empty()) continue;  // blank line
    row->resize(header->size());
    MetadataRecord rec{(*row)[0], (*row)[1], (*row)[2], (*row)[3], (*row)[4], {}};
    if (rec.doc_id.empty())
      throw InvalidArgument("metadata.csv: empty doc_id on line " + std::to_string(csv.record_line()));
    for (std::size_t c = kFixed.size(); c < header->size(); ++c)
      if (!(*row)[c].empty()) rec.extra[(*header)[c]] = (*row)[c];
    std::string id = rec.doc_id;
    table.insert_or_assign(std::move(id), std::move(rec));
  }
  return table;
}

void write_metadata_csv(std::ostream& out, const MetadataTable& table) {
  std::set<std::string> extra_columns;
  for (const auto& [id, rec] : table)
    for (const auto& [key, value] : rec.extra) extra_columns.insert(key);

  std::vector<std::string> header(kFixed.begin(), kFixed.end());
  header.insert(header.end(), extra_columns.begin(), extra_columns.end());
  write_csv_row(out, header);
  for (const auto& [id, rec] : table) {
    std::vector<std::string> row{rec.doc_id, rec.title, rec.resource_url, rec.doc_type,
                                 rec.collection};
    for (const auto& key : extra_columns) {
      const auto it = rec.extra.find(key);
      row.push_back(it == rec.extra.end() ? std::string() : it->second);
    }
    write_csv_row(out, row);
  }
}

MetadataTable load_metadata(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return {};
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_metadata_csv(in);
}

void save_metadata(const std::filesystem::path& path, const MetadataTable& table) {
  std::ostringstream out;
  write_metadata_csv(out, table);
  write_file_atomic(path, out.str());
}

}  // namespace ras::store
