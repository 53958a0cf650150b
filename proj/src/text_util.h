#ifndef LRSCONFLATE_SRC_TEXT_UTIL_H_
#define LRSCONFLATE_SRC_TEXT_UTIL_H_

#include <cstddef>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace lrsconflate {

inline std::string Trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

// "line L, column C" for a byte offset into `text`.
inline std::string DescribeOffset(std::string_view text, std::size_t offset) {
  std::size_t line = 1;
  std::size_t column = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(column);
}

// nlohmann parse errors read "[json.exception...] parse error at line L,
// column C: detail"; keep only the detail.
inline std::string ParseErrorDetail(std::string_view what) {
  const auto column = what.find("column ");
  const auto colon = what.find(": ", column == std::string_view::npos ? 0 : column);
  if (colon == std::string_view::npos) return std::string(what);
  return std::string(what.substr(colon + 2));
}

// RFC 4180 reader: quoted fields may contain separators, doubled quotes and
// newlines.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in) : in_(in) {}

  bool Next(std::vector<std::string>& fields) {
    fields.clear();
    int c = in_.get();
    if (c == EOF) return false;
    ++line_;
    std::string field;
    bool quoted = false;
    for (;; c = in_.get()) {
      if (quoted) {
        if (c == EOF) break;
        if (c == '"') {
          if (in_.peek() == '"') {
            field.push_back('"');
            in_.get();
          } else {
            quoted = false;
          }
        } else {
          if (c == '\n') ++line_;
          field.push_back(static_cast<char>(c));
        }
        continue;
      }
      if (c == EOF || c == '\n') break;
      if (c == '\r') continue;
      if (c == '"' && field.empty()) {
        quoted = true;
      } else if (c == ',') {
        fields.push_back(std::move(field));
        field.clear();
      } else {
        field.push_back(static_cast<char>(c));
      }
    }
    fields.push_back(std::move(field));
    return true;
  }

  // Line number of the last record returned (1-based).
  std::size_t line() const { return line_; }

 private:
  std::istream& in_;
  std::size_t line_ = 0;
};

inline std::string CsvEscape(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) {
    return std::string(s);
  }
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace lrsconflate

#endif  // LRSCONFLATE_SRC_TEXT_UTIL_H_
