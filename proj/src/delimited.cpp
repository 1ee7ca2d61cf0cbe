#include "patent/delimited.hpp"

#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "patent/error.hpp"

namespace patent {

Dialect Dialect::for_path(const std::filesystem::path& path) {
  return Dialect{path.extension() == ".csv" ? ',' : '\t'};
}

DelimitedReader::DelimitedReader(std::string content, Dialect dialect)
    : content_(std::move(content)), dialect_(dialect) {
  if (content_.starts_with("\xEF\xBB\xBF")) pos_ = 3;
}

DelimitedReader DelimitedReader::open(const std::filesystem::path& path) {
  return open(path, Dialect::for_path(path));
}

DelimitedReader DelimitedReader::open(const std::filesystem::path& path, Dialect dialect) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, fmt::format("cannot open '{}'", path.string()));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return DelimitedReader(buffer.str(), dialect);
}

bool DelimitedReader::next(std::vector<std::string>& fields) {
  fields.clear();
  if (pos_ >= content_.size()) return false;
  record_line_ = current_line_;
  std::string field;
  bool quoted = false;
  bool field_was_quoted = false;
  while (pos_ < content_.size()) {
    char c = content_[pos_];
    if (quoted) {
      if (c == '"') {
        if (pos_ + 1 < content_.size() && content_[pos_ + 1] == '"') {
          field.push_back('"');
          pos_ += 2;
          continue;
        }
        quoted = false;
        ++pos_;
        continue;
      }
      if (c == '\n') ++current_line_;
      field.push_back(c);
      ++pos_;
      continue;
    }
    if (c == '"' && field.empty() && !field_was_quoted) {
      quoted = true;
      field_was_quoted = true;
      ++pos_;
      continue;
    }
    if (c == dialect_.delimiter) {
      fields.push_back(std::move(field));
      field.clear();
      field_was_quoted = false;
      ++pos_;
      continue;
    }
    if (c == '\r' && pos_ + 1 < content_.size() && content_[pos_ + 1] == '\n') {
      ++pos_;
      continue;
    }
    if (c == '\n') {
      ++pos_;
      ++current_line_;
      fields.push_back(std::move(field));
      return true;
    }
    field.push_back(c);
    ++pos_;
  }
  if (quoted) {
    fail(ErrorKind::parse, fmt::format("line {}: unterminated quoted field", record_line_));
  }
  fields.push_back(std::move(field));
  return true;
}

DelimitedTable::DelimitedTable(DelimitedReader reader) : reader_(std::move(reader)) {
  if (!reader_.next(header_)) fail(ErrorKind::schema, "missing header row");
  for (std::size_t i = 0; i < header_.size(); ++i) index_.emplace(header_[i], i);
}

void DelimitedTable::require(std::span<const std::string_view> columns) const {
  std::string missing;
  for (auto column : columns) {
    if (!has(column)) {
      if (!missing.empty()) missing += ", ";
      missing += column;
    }
  }
  if (!missing.empty()) fail(ErrorKind::schema, "missing mandatory column(s): " + missing);
}

bool DelimitedTable::has(std::string_view column) const {
  return index_.contains(std::string(column));
}

bool DelimitedTable::next() {
  while (reader_.next(fields_)) {
    // Blank trailing lines are not records.
    if (fields_.size() == 1 && fields_[0].empty()) continue;
    ++row_number_;
    if (fields_.size() != header_.size()) {
      fail(ErrorKind::parse, fmt::format("row {} (line {}): expected {} fields, found {}", row_number_,
                                         reader_.line(), header_.size(), fields_.size()));
    }
    return true;
  }
  return false;
}

const std::string& DelimitedTable::get(std::string_view column) const {
  auto it = index_.find(std::string(column));
  if (it == index_.end()) fail(ErrorKind::schema, fmt::format("unknown column '{}'", column));
  return fields_[it->second];
}

std::optional<std::string_view> DelimitedTable::maybe(std::string_view column) const {
  auto it = index_.find(std::string(column));
  if (it == index_.end()) return std::nullopt;
  return std::string_view(fields_[it->second]);
}

void DelimitedTable::bad_value(std::string_view column, std::string_view what) const {
  fail(ErrorKind::parse, fmt::format("row {} (line {}), column '{}': {} ('{}')", row_number_,
                                     reader_.line(), column, what, get(column)));
}

double DelimitedTable::get_double(std::string_view column) const {
  auto v = get_optional_double(column);
  if (!v) bad_value(column, "missing value");
  return *v;
}

std::optional<double> DelimitedTable::get_optional_double(std::string_view column) const {
  const std::string& s = get(column);
  if (s.empty()) return std::nullopt;
  double value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) bad_value(column, "not a number");
  return value;
}

long long DelimitedTable::get_int(std::string_view column) const {
  auto v = get_optional_int(column);
  if (!v) bad_value(column, "missing value");
  return *v;
}

std::optional<long long> DelimitedTable::get_optional_int(std::string_view column) const {
  const std::string& s = get(column);
  if (s.empty()) return std::nullopt;
  long long value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) bad_value(column, "not an integer");
  return value;
}

bool DelimitedTable::get_bool(std::string_view column) const {
  auto v = get_optional_bool(column);
  if (!v) bad_value(column, "missing value");
  return *v;
}

std::optional<bool> DelimitedTable::get_optional_bool(std::string_view column) const {
  const std::string& s = get(column);
  if (s.empty()) return std::nullopt;
  if (s == "1" || s == "true") return true;
  if (s == "0" || s == "false") return false;
  bad_value(column, "not a boolean");
}

std::string quote_field(std::string_view field, char delimiter) {
  bool needs = field.find_first_of(std::string{delimiter, '"', '\n', '\r'}) != std::string_view::npos;
  if (!needs) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_record(std::ostream& out, std::span<const std::string> fields, Dialect dialect) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << dialect.delimiter;
    out << quote_field(fields[i], dialect.delimiter);
  }
  out << '\n';
}

std::string format_double(double value) { return fmt::format("{}", value); }

}  // namespace patent
