#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace ras {

/// Streaming RFC 4180 reader: quoted fields may contain separators, doubled
/// quotes and line breaks. One record is materialized at a time.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in) : in_(in) {}

  /// Next record, or nullopt at end of input. Throws InvalidArgument on an
  /// unterminated quoted field.
  std::optional<std::vector<std::string>> next();

  /// 1-based line number where the most recently returned record started.
  [[nodiscard]] std::size_t record_line() const noexcept { return record_line_; }

 private:
  std::istream& in_;
  std::size_t line_ = 1;
  std::size_t record_line_ = 0;
  bool first_ = true;
};

std::string csv_escape(std::string_view field);

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace ras
