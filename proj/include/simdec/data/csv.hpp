#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace simdec::data {

/// Minimal RFC 4180 reader: comma separated, double-quoted fields with "" escapes.
class CsvReader {
 public:
  explicit CsvReader(const std::filesystem::path& path);

  const std::vector<std::string>& header() const { return header_; }
  /// Index of `name` in the header, or -1.
  int column(const std::string& name) const;
  /// Reads the next record; false at end of file. `row` counts data rows from 1.
  bool next(std::vector<std::string>& fields);
  std::size_t row() const { return row_; }

 private:
  bool read_record(std::vector<std::string>& fields);

  std::ifstream stream_;
  std::vector<std::string> header_;
  std::size_t row_ = 0;
};

/// Quotes a field only when it needs it.
std::string csv_escape(const std::string& field);

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace simdec::data
