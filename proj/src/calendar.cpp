#include "patent/calendar.hpp"

#include <charconv>
#include <chrono>

#include <fmt/format.h>

#include "patent/error.hpp"

namespace patent {

namespace {

int parse_digits(std::string_view text, std::string_view whole) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    fail(ErrorKind::parse, fmt::format("invalid calendar value '{}'", whole));
  }
  return value;
}

}  // namespace

Month Month::from_index(int index) {
  int year = index / 12;
  int rem = index % 12;
  if (rem < 0) {
    rem += 12;
    --year;
  }
  return {year, rem + 1};
}

Month Month::parse(std::string_view text) {
  if (text.size() != 7 || text[4] != '-') {
    fail(ErrorKind::parse, fmt::format("expected YYYY-MM, got '{}'", text));
  }
  Month m{parse_digits(text.substr(0, 4), text), parse_digits(text.substr(5, 2), text)};
  if (m.month < 1 || m.month > 12) {
    fail(ErrorKind::parse, fmt::format("month out of range in '{}'", text));
  }
  return m;
}

std::string Month::str() const { return fmt::format("{:04d}-{:02d}", year, month); }

Date Date::parse(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
    fail(ErrorKind::parse, fmt::format("expected YYYY-MM-DD, got '{}'", text));
  }
  Date d{parse_digits(text.substr(0, 4), text), parse_digits(text.substr(5, 2), text),
         parse_digits(text.substr(8, 2), text)};
  std::chrono::year_month_day ymd{std::chrono::year{d.year},
                                  std::chrono::month{static_cast<unsigned>(d.month)},
                                  std::chrono::day{static_cast<unsigned>(d.day)}};
  if (!ymd.ok()) fail(ErrorKind::parse, fmt::format("invalid date '{}'", text));
  return d;
}

std::string Date::str() const { return fmt::format("{:04d}-{:02d}-{:02d}", year, month, day); }

double years_between(Month from, Month to) {
  return static_cast<double>(to.index() - from.index()) / 12.0;
}

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config: return "config";
    case ErrorKind::schema: return "schema";
    case ErrorKind::parse: return "parse";
    case ErrorKind::domain: return "domain";
    case ErrorKind::shape: return "shape";
    case ErrorKind::usage: return "usage";
    case ErrorKind::diverged: return "training_diverged";
    case ErrorKind::singular_design: return "singular_design";
    case ErrorKind::absorbed_regressor: return "absorbed_regressor";
    case ErrorKind::degenerate: return "degenerate";
    case ErrorKind::undefined_metric: return "undefined_metric";
    case ErrorKind::missing_covariate: return "missing_covariate";
    case ErrorKind::coverage: return "coverage";
    case ErrorKind::integrity: return "integrity";
    case ErrorKind::transport: return "transport";
    case ErrorKind::http_status: return "http_status";
    case ErrorKind::dimension_mismatch: return "dimension_mismatch";
    case ErrorKind::not_ready: return "not_ready";
    case ErrorKind::dependency: return "dependency";
    case ErrorKind::not_found: return "not_found";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

}  // namespace patent
