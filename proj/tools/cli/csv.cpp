#include "csv.hpp"

#include "enrolcast/error.hpp"

namespace enrolcast::cli {

namespace {

constexpr std::string_view kHashPrefix = "# run_manifest_hash=";

CsvRow split_line(std::string_view line, std::size_t line_no) {
  CsvRow out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          out.back() += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else {
      out.back() += c;
    }
  }
  if (quoted) throw Error("line " + std::to_string(line_no) + ": unterminated quote");
  return out;
}

}  // namespace

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw Error("missing CSV column '" + std::string(name) + "'");
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string csv_line(const CsvRow& row) {
  std::string out;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out += ',';
    out += csv_field(row[i]);
  }
  return out + '\n';
}

std::string csv_document(const std::string& manifest_hash, const CsvRow& header,
                         const std::vector<CsvRow>& rows) {
  std::string out(kHashPrefix);
  out += manifest_hash + '\n';
  out += csv_line(header);
  for (const auto& r : rows) out += csv_line(r);
  return out;
}

CsvTable parse_csv_document(std::string_view text) {
  CsvTable t;
  std::size_t pos = 0, line_no = 0;
  std::string pending;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (pending.empty() && line.substr(0, kHashPrefix.size()) == kHashPrefix) {
      t.manifest_hash = std::string(line.substr(kHashPrefix.size()));
      continue;
    }
    if (pending.empty() && line.empty()) continue;
    pending += line;
    // a quoted field may span lines
    std::size_t quotes = 0;
    for (char c : pending) quotes += c == '"';
    if (quotes % 2) {
      pending += '\n';
      continue;
    }
    auto row = split_line(pending, line_no);
    pending.clear();
    if (t.header.empty()) {
      t.header = std::move(row);
    } else {
      if (row.size() != t.header.size())
        throw Error("line " + std::to_string(line_no) + ": expected " +
                    std::to_string(t.header.size()) + " fields");
      t.rows.push_back(std::move(row));
    }
  }
  if (!pending.empty()) throw Error("unterminated quote at end of table");
  if (t.header.empty()) throw Error("missing CSV header");
  return t;
}

}  // namespace enrolcast::cli
