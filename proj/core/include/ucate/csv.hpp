#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace ucate::io {

// Minimal strict CSV: comma-separated, double-quote escaping, UTF-8 passed
// through, one record per line.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based source line of each row
};

CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const CsvTable& table);

std::vector<std::string> parse_csv_line(const std::string& line, const std::string& path,
                                        std::size_t line_number);
std::string csv_field(const std::string& value);

}  // namespace ucate::io
