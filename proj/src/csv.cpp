#include "mbl/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mbl {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

std::string strip(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

double parse_double(const std::string& field, std::size_t line_no) {
  const std::string f = strip(field);
  if (f.empty())
    throw std::runtime_error("csv: empty numeric field at line " + std::to_string(line_no));
  char* end = nullptr;
  const double v = std::strtod(f.c_str(), &end);
  if (end != f.c_str() + f.size())
    throw std::runtime_error("csv: malformed number '" + f + "' at line " +
                             std::to_string(line_no));
  return v;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::size_t CsvTable::column_index(const std::string& name) const {
  for (std::size_t j = 0; j < columns.size(); ++j)
    if (columns[j] == name) return j;
  throw std::runtime_error("csv: missing column '" + name + "'");
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("csv: cannot open '" + path + "'");
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header_seen && line[0] == '#') {
      const std::string body = strip(line.substr(1));
      const std::size_t eq = body.find('=');
      if (eq != std::string::npos)
        table.meta.emplace_back(strip(body.substr(0, eq)), strip(body.substr(eq + 1)));
      continue;
    }
    if (!header_seen) {
      for (const std::string& f : split_fields(line)) table.columns.push_back(strip(f));
      header_seen = true;
      continue;
    }
    const std::vector<std::string> fields = split_fields(line);
    if (fields.size() != table.columns.size())
      throw std::runtime_error("csv: expected " + std::to_string(table.columns.size()) +
                               " fields, got " + std::to_string(fields.size()) + " at line " +
                               std::to_string(line_no));
    std::vector<double> row(fields.size());
    for (std::size_t j = 0; j < fields.size(); ++j) row[j] = parse_double(fields[j], line_no);
    table.rows.push_back(std::move(row));
  }
  if (!header_seen) throw std::runtime_error("csv: '" + path + "' has no header row");
  return table;
}

void write_csv(const CsvTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("csv: cannot write '" + path + "'");
  for (const auto& [k, v] : table.meta) out << "# " << k << " = " << v << "\n";
  for (std::size_t j = 0; j < table.columns.size(); ++j)
    out << table.columns[j] << (j + 1 < table.columns.size() ? "," : "\n");
  for (const auto& row : table.rows)
    for (std::size_t j = 0; j < row.size(); ++j)
      out << format_double(row[j]) << (j + 1 < row.size() ? "," : "\n");
}

}  // namespace mbl
