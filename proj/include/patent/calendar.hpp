#pragma once

#include <compare>
#include <string>
#include <string_view>

namespace patent {

struct Month {
  int year = 1970;
  int month = 1;  // 1..12

  // Months since year 0; consecutive months differ by exactly one.
  int index() const { return year * 12 + (month - 1); }
  static Month from_index(int index);

  Month next() const { return from_index(index() + 1); }
  Month prev() const { return from_index(index() - 1); }

  static Month parse(std::string_view text);  // "YYYY-MM"
  std::string str() const;

  auto operator<=>(const Month&) const = default;
};

struct Date {
  int year = 1970;
  int month = 1;
  int day = 1;

  Month to_month() const { return {year, month}; }

  static Date parse(std::string_view text);  // "YYYY-MM-DD"
  std::string str() const;

  auto operator<=>(const Date&) const = default;
};

// Whole months from `from` to `to` divided by twelve.
double years_between(Month from, Month to);

}  // namespace patent
