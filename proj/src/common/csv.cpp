#include "ras/common/csv.hpp"

#include "ras/common/error.hpp"

namespace ras {

std::optional<std::vector<std::string>> CsvReader::next() {
  int c = in_.get();
  if (first_) {
    first_ = false;
    // UTF-8 byte order mark
    if (c == 0xEF && in_.peek() == 0xBB) {
      in_.get();
      if (in_.get() != 0xBF) throw InvalidArgument("csv: malformed byte order mark");
      c = in_.get();
    }
  }
  if (c == std::char_traits<char>::eof()) return std::nullopt;

  record_line_ = line_;
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool field_started_quoted = false;

  for (;; c = in_.get()) {
    if (c == std::char_traits<char>::eof()) {
      if (quoted) throw InvalidArgument("csv: unterminated quoted field starting at line " +
                                        std::to_string(record_line_));
      fields.push_back(std::move(field));
      return fields;
    }
    const char ch = static_cast<char>(c);
    if (quoted) {
      if (ch == '"') {
        if (in_.peek() == '"') {
          in_.get();
          field.push_back('"');
        } else {
          quoted = false;
        }
      } else {
        if (ch == '\n') ++line_;
        field.push_back(ch);
      }
      continue;
    }
    if (ch == '"' && field.empty() && !field_started_quoted) {
      quoted = true;
      field_started_quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
      field_started_quoted = false;
    } else if (ch == '\r' && in_.peek() == '\n') {
      // handled by the '\n' branch
    } else if (ch == '\n') {
      ++line_;
      fields.push_back(std::move(field));
      return fields;
    } else {
      field.push_back(ch);
    }
  }
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << csv_escape(fields[i]);
  }
  out << '\n';
}

}  // namespace ras
