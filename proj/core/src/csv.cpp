#include "ucate/csv.hpp"

#include <fstream>
#include <sstream>

#include "ucate/common.hpp"

namespace ucate::io {

std::vector<std::string> parse_csv_line(const std::string& line, const std::string& path,
                                        std::size_t line_number) {
  std::vector<std::string> fields;
  std::string field;
  bool in_quotes = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      if (!field.empty()) {
        std::ostringstream msg;
        msg << path << ":" << line_number << ": stray quote inside unquoted field";
        throw input_error(msg.str());
      }
      in_quotes = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field += c;
    }
  }
  if (in_quotes) {
    std::ostringstream msg;
    msg << path << ":" << line_number << ": unterminated quoted field";
    throw input_error(msg.str());
  }
  fields.push_back(std::move(field));
  return fields;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("cannot open '" + path + "'");

  CsvTable table;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() && in.peek() == std::char_traits<char>::eof()) break;
    auto fields = parse_csv_line(line, path, line_number);
    if (line_number == 1) {
      table.header = std::move(fields);
    } else {
      if (fields.size() != table.header.size()) {
        std::ostringstream msg;
        msg << path << ":" << line_number << ": expected " << table.header.size()
            << " field(s), found " << fields.size();
        throw input_error(msg.str());
      }
      table.rows.push_back(std::move(fields));
      table.line_numbers.push_back(line_number);
    }
  }
  if (table.header.empty()) throw input_error(path + ": missing header row");
  return table;
}

std::string csv_field(const std::string& value) {
  if (value.find_first_of(",\"\n") == std::string::npos) return value;
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

void write_csv(const std::string& path, const CsvTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw input_error("cannot write '" + path + "'");
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (i > 0) out << ',';
    out << csv_field(table.header[i]);
  }
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i > 0) out << ',';
      out << csv_field(row[i]);
    }
    out << '\n';
  }
}

}  // namespace ucate::io
