#include "se3lab/csv.hpp"

#include <charconv>
#include <sstream>

#include "se3lab/error.hpp"

namespace se3lab {

std::string FormatDouble(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw Error(ErrorKind::kIO, "cannot open " + path + " for writing");
  Row(header);
}

CsvWriter::~CsvWriter() {
  if (out_.is_open()) out_.close();
}

void CsvWriter::Row(std::initializer_list<double> values) {
  Row(std::span<const double>(values.begin(), values.size()));
}

void CsvWriter::Row(std::span<const double> values) {
  std::string line;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) line += ',';
    line += FormatDouble(values[i]);
  }
  line += '\n';
  out_ << line;
  if (!out_) throw Error(ErrorKind::kIO, "write failed on " + path_);
}

void CsvWriter::Row(const std::vector<std::string>& cells) {
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) line += ',';
    line += cells[i];
  }
  line += '\n';
  out_ << line;
  if (!out_) throw Error(ErrorKind::kIO, "write failed on " + path_);
}

void CsvWriter::Close() {
  out_.close();
  if (out_.fail()) throw Error(ErrorKind::kIO, "close failed on " + path_);
}

std::size_t CsvTable::Column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw Error(ErrorKind::kParse, "missing column '" + name + "'");
}

namespace {

std::vector<std::string> SplitLine(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string Trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

}  // namespace

CsvTable ReadCsv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIO, "cannot open " + path);
  CsvTable table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = Trim(line);
    if (line.empty()) continue;
    auto cells = SplitLine(line);
    if (table.header.empty()) {
      for (auto& c : cells) table.header.push_back(Trim(c));
      continue;
    }
    if (cells.size() != table.header.size()) {
      throw Error(ErrorKind::kParse, path + ":" + std::to_string(lineno) + ": expected " +
                                         std::to_string(table.header.size()) + " fields, got " +
                                         std::to_string(cells.size()));
    }
    std::vector<double> row(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const std::string c = Trim(cells[i]);
      const auto res = std::from_chars(c.data(), c.data() + c.size(), row[i]);
      if (res.ec != std::errc() || res.ptr != c.data() + c.size()) {
        throw Error(ErrorKind::kParse, path + ":" + std::to_string(lineno) + ": field '" +
                                           table.header[i] + "' is not a number: '" + c + "'");
      }
    }
    table.rows.push_back(std::move(row));
  }
  if (table.header.empty()) throw Error(ErrorKind::kParse, path + ": empty file");
  return table;
}

}  // namespace se3lab
