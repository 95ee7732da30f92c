#pragma once

#include <string>
#include <vector>

namespace mbl {

// Numeric CSV with a header row. Lines starting with '#' before the header
// are metadata "key = value" pairs (used by trace files). LF and CRLF both
// accepted; parse errors carry the 1-based line number.
struct CsvTable {
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::size_t column_index(const std::string& name) const;  // throws when missing
};

CsvTable read_csv(const std::string& path);
void write_csv(const CsvTable& table, const std::string& path);

double parse_double(const std::string& field, std::size_t line_no);
std::string format_double(double v);  // 17 significant digits, round-trip exact

}  // namespace mbl
