#pragma once

#include <fstream>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace se3lab {

/// Shortest round-trip decimal form of a double.
std::string FormatDouble(double v);

/// Writes a header line then comma-separated rows. Throws kIO on failure.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  ~CsvWriter();

  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void Row(std::initializer_list<double> values);
  void Row(std::span<const double> values);
  void Row(const std::vector<std::string>& cells);
  void Close();

 private:
  std::string path_;
  std::ofstream out_;
};

/// A parsed CSV file: header names plus numeric rows.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Column index by name; throws kParse if missing.
  std::size_t Column(const std::string& name) const;
};

/// Numeric CSV with a header line. Throws kIO / kParse with line numbers.
CsvTable ReadCsv(const std::string& path);

}  // namespace se3lab
