#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace enrolcast::cli {

using CsvRow = std::vector<std::string>;

struct CsvTable {
  std::string manifest_hash;  // from the leading `# run_manifest_hash=` line
  CsvRow header;
  std::vector<CsvRow> rows;

  /// Column index by name; throws Error if absent.
  std::size_t column(std::string_view name) const;
};

std::string csv_field(std::string_view s);
std::string csv_line(const CsvRow& row);

/// Every table starts with the hash line, then the header.
std::string csv_document(const std::string& manifest_hash, const CsvRow& header,
                         const std::vector<CsvRow>& rows);

CsvTable parse_csv_document(std::string_view text);

}  // namespace enrolcast::cli
