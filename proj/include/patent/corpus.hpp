#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "patent/calendar.hpp"
#include "patent/delimited.hpp"

namespace patent {

// Top-level CPC sections in their fixed indicator order.
inline constexpr std::string_view kCpcSections = "ABCDEFGHY";

class CpcSet {
 public:
  CpcSet() = default;
  // Parses "A;C" / "AC" / "A,C"; unknown letters are a parse error.
  static CpcSet parse(std::string_view text);

  void insert(char section);
  bool contains(char section) const;
  int count() const;
  bool empty() const { return bits_ == 0; }
  // Sections joined with ';' in indicator order.
  std::string str() const;

  bool operator==(const CpcSet&) const = default;

 private:
  std::uint16_t bits_ = 0;
};

struct ApplicationRecord {
  std::string app_id;
  std::string firm_id;  // empty = unassigned
  Date filing_date;
  Date publication_date;
  std::string title;
  std::string abstract;
  CpcSet cpc;
  std::optional<int> num_claims;
  std::optional<bool> is_ai;
  bool is_ict = false;
  bool is_biotech = false;
  bool is_hightech = false;
  bool is_research_institution = false;
  int ff12_industry = 12;
  std::optional<bool> accepted;  // nullopt = pending
  std::optional<std::string> grant_title;
  std::optional<std::string> grant_abstract;
  std::optional<double> raw_value_musd;
  double market_cap_musd = 0.0;

  int publication_year() const { return publication_date.year; }
  bool has_grant_text() const { return grant_title.has_value() || grant_abstract.has_value(); }

  bool operator==(const ApplicationRecord&) const = default;
};

struct FirmRecord {
  std::string firm_id;
  Date first_listed;
  std::map<Month, double> monthly_returns;
  std::map<Month, double> monthly_market_cap_musd;

  bool operator==(const FirmRecord&) const = default;
};

struct FactorRow {
  double mkt_rf = 0, smb = 0, hml = 0, mom = 0, rmw = 0, cma = 0, rf = 0;
  bool operator==(const FactorRow&) const = default;
};

struct FactorSeries {
  std::map<Month, FactorRow> rows;

  // Coverage error unless every month in [from, to] is present.
  void require_coverage(Month from, Month to) const;
  bool operator==(const FactorSeries&) const = default;
};

// Month -> price-level deflator; real = nominal / deflator. Months not in the
// table use 1.0, so an empty table is the identity.
class Deflator {
 public:
  Deflator() = default;
  explicit Deflator(std::map<Month, double> table);
  static Deflator load(const std::filesystem::path& path);

  double at(Month month) const;
  double real(double nominal, Month month) const { return nominal / at(month); }

 private:
  std::map<Month, double> table_;
};

struct Corpus {
  std::vector<ApplicationRecord> applications;
  std::vector<FirmRecord> firms;
  FactorSeries factors;

  const FirmRecord* find_firm(std::string_view firm_id) const;
};

template <typename T>
struct ParseOutcome {
  std::vector<T> records;
  std::size_t dropped_multiple_assignees = 0;
  std::size_t dropped_unlinked = 0;
};

inline constexpr std::string_view kApplicationColumns[] = {
    "app_id",       "assignee_ids",   "firm_id",       "filing_date",
    "publication_date", "title",      "abstract",      "cpc_sections",
    "num_claims",   "is_ai",          "is_ict",        "is_biotech",
    "is_hightech",  "is_research_institution", "ff12_industry", "accepted",
    "grant_title",  "grant_abstract", "raw_value_musd", "market_cap_musd"};

inline constexpr std::string_view kFirmColumns[] = {"firm_id", "first_listed", "month", "return",
                                                    "market_cap_musd"};

inline constexpr std::string_view kFactorColumns[] = {"month", "mkt_rf", "smb", "hml",
                                                      "mom",   "rmw",    "cma", "rf"};

ParseOutcome<ApplicationRecord> parse_applications(const std::filesystem::path& path, Dialect dialect);
ParseOutcome<ApplicationRecord> parse_applications(DelimitedReader reader);
std::vector<FirmRecord> parse_firms(const std::filesystem::path& path, Dialect dialect);
FactorSeries parse_factors(const std::filesystem::path& path, Dialect dialect);

void write_applications(const std::filesystem::path& path, std::span<const ApplicationRecord> records,
                        Dialect dialect);
void write_firms(const std::filesystem::path& path, std::span<const FirmRecord> firms, Dialect dialect);
void write_factors(const std::filesystem::path& path, const FactorSeries& factors, Dialect dialect);

// Canonical form a record takes after a write/parse cycle.
ApplicationRecord normalize(ApplicationRecord record);

struct FirmCovariates {
  double size_ln = 0;
  double age_years = 0;
  std::size_t application_stock = 0;
};

// `application_months` are the firm's application filing months (any order).
// Size uses the latest market cap at or before `at_month`.
FirmCovariates firm_covariates(const FirmRecord& firm, Month at_month,
                               std::span<const Month> application_months,
                               const Deflator& deflator = {});

// firm_id -> sorted filing months of that firm's applications.
std::unordered_map<std::string, std::vector<Month>> application_months_by_firm(
    std::span<const ApplicationRecord> applications);

// Title and abstract joined by the documented single-newline separator.
std::string embedding_text(std::string_view title, std::string_view abstract);
std::string application_text(const ApplicationRecord& record);
std::optional<std::string> grant_text(const ApplicationRecord& record);

}  // namespace patent
