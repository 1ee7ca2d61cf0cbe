#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace patent {

// Tab- or comma-delimited text with RFC 4180 quoting. Fields that contain the
// delimiter, a quote, CR or LF are wrapped in double quotes with inner quotes
// doubled; that rule is used for both delimiters.
struct Dialect {
  char delimiter = '\t';

  static Dialect for_path(const std::filesystem::path& path);
};

class DelimitedReader {
 public:
  DelimitedReader(std::string content, Dialect dialect);
  static DelimitedReader open(const std::filesystem::path& path);
  static DelimitedReader open(const std::filesystem::path& path, Dialect dialect);

  // Reads the next record into `fields`; false at end of input.
  bool next(std::vector<std::string>& fields);
  // 1-based physical line where the last returned record started.
  std::size_t line() const { return record_line_; }

 private:
  std::string content_;
  Dialect dialect_;
  std::size_t pos_ = 0;
  std::size_t current_line_ = 1;
  std::size_t record_line_ = 0;
};

// Header-indexed view over a delimited file: the first record names columns.
class DelimitedTable {
 public:
  explicit DelimitedTable(DelimitedReader reader);

  // Schema error listing every missing column.
  void require(std::span<const std::string_view> columns) const;
  bool has(std::string_view column) const;

  bool next();
  std::size_t line() const { return reader_.line(); }
  std::size_t row_number() const { return row_number_; }

  const std::string& get(std::string_view column) const;
  std::optional<std::string_view> maybe(std::string_view column) const;

  double get_double(std::string_view column) const;
  std::optional<double> get_optional_double(std::string_view column) const;
  long long get_int(std::string_view column) const;
  std::optional<long long> get_optional_int(std::string_view column) const;
  bool get_bool(std::string_view column) const;
  std::optional<bool> get_optional_bool(std::string_view column) const;

 private:
  [[noreturn]] void bad_value(std::string_view column, std::string_view what) const;

  DelimitedReader reader_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::string> header_;
  std::vector<std::string> fields_;
  std::size_t row_number_ = 0;
};

std::string quote_field(std::string_view field, char delimiter);
void write_record(std::ostream& out, std::span<const std::string> fields, Dialect dialect);

// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

}  // namespace patent
