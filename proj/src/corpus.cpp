#include "patent/corpus.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include <fmt/format.h>

#include "patent/error.hpp"

namespace patent {

namespace {

int section_bit(char section) {
  auto pos = kCpcSections.find(section);
  return pos == std::string_view::npos ? -1 : static_cast<int>(pos);
}

std::string bool_field(bool v) { return v ? "1" : "0"; }

std::string opt_bool_field(const std::optional<bool>& v) { return v ? bool_field(*v) : ""; }

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, fmt::format("cannot write '{}'", path.string()));
  return out;
}

std::vector<std::string> split_ids(std::string_view text) {
  std::vector<std::string> ids;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find(';', start);
    if (end == std::string_view::npos) end = text.size();
    auto id = text.substr(start, end - start);
    while (!id.empty() && id.front() == ' ') id.remove_prefix(1);
    while (!id.empty() && id.back() == ' ') id.remove_suffix(1);
    if (!id.empty()) ids.emplace_back(id);
    start = end + 1;
  }
  return ids;
}

}  // namespace

CpcSet CpcSet::parse(std::string_view text) {
  CpcSet set;
  for (char c : text) {
    if (c == ';' || c == ',' || c == ' ') continue;
    if (section_bit(c) < 0) fail(ErrorKind::parse, fmt::format("unknown CPC section '{}'", c));
    set.insert(c);
  }
  return set;
}

void CpcSet::insert(char section) {
  int bit = section_bit(section);
  if (bit < 0) fail(ErrorKind::domain, fmt::format("unknown CPC section '{}'", section));
  bits_ = static_cast<std::uint16_t>(bits_ | (1u << bit));
}

bool CpcSet::contains(char section) const {
  int bit = section_bit(section);
  return bit >= 0 && (bits_ >> bit) & 1u;
}

int CpcSet::count() const { return std::popcount(bits_); }

std::string CpcSet::str() const {
  std::string out;
  for (char c : kCpcSections) {
    if (!contains(c)) continue;
    if (!out.empty()) out.push_back(';');
    out.push_back(c);
  }
  return out;
}

void FactorSeries::require_coverage(Month from, Month to) const {
  for (int i = from.index(); i <= to.index(); ++i) {
    auto m = Month::from_index(i);
    if (!rows.contains(m)) {
      fail(ErrorKind::coverage, fmt::format("factor series does not cover {} (needed {}..{})", m.str(),
                                            from.str(), to.str()));
    }
  }
}

Deflator::Deflator(std::map<Month, double> table) : table_(std::move(table)) {
  for (const auto& [m, v] : table_) {
    if (!(v > 0) || !std::isfinite(v)) {
      fail(ErrorKind::domain, fmt::format("deflator for {} must be positive", m.str()));
    }
  }
}

Deflator Deflator::load(const std::filesystem::path& path) {
  DelimitedTable table(DelimitedReader::open(path));
  constexpr std::string_view cols[] = {"month", "deflator"};
  table.require(cols);
  std::map<Month, double> values;
  while (table.next()) values[Month::parse(table.get("month"))] = table.get_double("deflator");
  return Deflator(std::move(values));
}

double Deflator::at(Month month) const {
  auto it = table_.find(month);
  return it == table_.end() ? 1.0 : it->second;
}

const FirmRecord* Corpus::find_firm(std::string_view firm_id) const {
  auto it = std::find_if(firms.begin(), firms.end(),
                         [&](const FirmRecord& f) { return f.firm_id == firm_id; });
  return it == firms.end() ? nullptr : &*it;
}

ParseOutcome<ApplicationRecord> parse_applications(const std::filesystem::path& path, Dialect dialect) {
  return parse_applications(DelimitedReader::open(path, dialect));
}

ParseOutcome<ApplicationRecord> parse_applications(DelimitedReader reader) {
  DelimitedTable table(std::move(reader));
  table.require(kApplicationColumns);

  ParseOutcome<ApplicationRecord> out;
  std::unordered_set<std::string> seen;
  while (table.next()) {
    auto row_error = [&](std::string_view column, const std::string& what) {
      throw Error(ErrorKind::parse, fmt::format("row {} (line {}), column '{}': {}", table.row_number(),
                                         table.line(), column, what));
    };
    auto parse_date = [&](std::string_view column) -> Date {
      try {
        return Date::parse(table.get(column));
      } catch (const Error& e) {
        row_error(column, e.what());
      }
      return {};
    };

    auto assignees = split_ids(table.get("assignee_ids"));
    if (assignees.size() > 1) {
      ++out.dropped_multiple_assignees;
      continue;
    }
    ApplicationRecord r;
    r.app_id = table.get("app_id");
    if (r.app_id.empty()) row_error("app_id", "empty id");
    r.firm_id = table.get("firm_id");
    if (r.firm_id.empty()) {
      ++out.dropped_unlinked;
      continue;
    }
    r.filing_date = parse_date("filing_date");
    r.publication_date = parse_date("publication_date");
    r.title = table.get("title");
    r.abstract = table.get("abstract");
    try {
      r.cpc = CpcSet::parse(table.get("cpc_sections"));
    } catch (const Error& e) {
      row_error("cpc_sections", e.what());
    }
    if (auto claims = table.get_optional_int("num_claims")) {
      if (*claims <= 0) row_error("num_claims", "must be positive");
      r.num_claims = static_cast<int>(*claims);
    }
    r.is_ai = table.get_optional_bool("is_ai");
    r.is_ict = table.get_bool("is_ict");
    r.is_biotech = table.get_bool("is_biotech");
    r.is_hightech = table.get_bool("is_hightech");
    r.is_research_institution = table.get_bool("is_research_institution");
    auto ff12 = table.get_int("ff12_industry");
    if (ff12 < 1 || ff12 > 12) row_error("ff12_industry", "must be in 1..12");
    r.ff12_industry = static_cast<int>(ff12);
    r.accepted = table.get_optional_bool("accepted");
    if (!table.get("grant_title").empty()) r.grant_title = table.get("grant_title");
    if (!table.get("grant_abstract").empty()) r.grant_abstract = table.get("grant_abstract");
    if (r.has_grant_text() && r.accepted != true) {
      row_error("accepted", "grant text present on a record that is not accepted");
    }
    r.raw_value_musd = table.get_optional_double("raw_value_musd");
    if (r.raw_value_musd && !(*r.raw_value_musd >= 0)) row_error("raw_value_musd", "must be nonnegative");
    r.market_cap_musd = table.get_double("market_cap_musd");
    if (!seen.insert(r.app_id).second) row_error("app_id", fmt::format("duplicate id '{}'", r.app_id));
    out.records.push_back(std::move(r));
  }
  return out;
}

std::vector<FirmRecord> parse_firms(const std::filesystem::path& path, Dialect dialect) {
  DelimitedTable table(DelimitedReader::open(path, dialect));
  table.require(kFirmColumns);
  std::vector<FirmRecord> firms;
  std::unordered_map<std::string, std::size_t> index;
  std::unordered_map<std::string, Month> last_month;
  while (table.next()) {
    const std::string& id = table.get("firm_id");
    auto [it, inserted] = index.emplace(id, firms.size());
    if (inserted) {
      firms.push_back(FirmRecord{id, Date::parse(table.get("first_listed")), {}, {}});
    }
    FirmRecord& firm = firms[it->second];
    Month month = Month::parse(table.get("month"));
    auto [last, first_row] = last_month.emplace(id, month);
    if (!first_row && !(month > last->second)) {
      fail(ErrorKind::parse, fmt::format("row {}: months for firm '{}' must be strictly increasing",
                                         table.row_number(), id));
    }
    last->second = month;
    if (auto ret = table.get_optional_double("return")) {
      if (!(*ret > -1.0)) {
        fail(ErrorKind::parse, fmt::format("row {}: return must exceed -1", table.row_number()));
      }
      firm.monthly_returns[month] = *ret;
    }
    if (auto cap = table.get_optional_double("market_cap_musd")) {
      if (!(*cap > 0)) {
        fail(ErrorKind::parse, fmt::format("row {}: market cap must be positive", table.row_number()));
      }
      firm.monthly_market_cap_musd[month] = *cap;
    }
  }
  return firms;
}

FactorSeries parse_factors(const std::filesystem::path& path, Dialect dialect) {
  DelimitedTable table(DelimitedReader::open(path, dialect));
  table.require(kFactorColumns);
  FactorSeries series;
  while (table.next()) {
    Month m = Month::parse(table.get("month"));
    FactorRow row{table.get_double("mkt_rf"), table.get_double("smb"), table.get_double("hml"),
                  table.get_double("mom"),    table.get_double("rmw"), table.get_double("cma"),
                  table.get_double("rf")};
    if (!series.rows.emplace(m, row).second) {
      fail(ErrorKind::parse, fmt::format("row {}: duplicate month {}", table.row_number(), m.str()));
    }
  }
  return series;
}

void write_applications(const std::filesystem::path& path, std::span<const ApplicationRecord> records,
                        Dialect dialect) {
  auto out = open_out(path);
  std::vector<std::string> fields(std::begin(kApplicationColumns), std::end(kApplicationColumns));
  write_record(out, fields, dialect);
  for (const auto& r : records) {
    fields = {r.app_id,
              r.firm_id,
              r.firm_id,
              r.filing_date.str(),
              r.publication_date.str(),
              r.title,
              r.abstract,
              r.cpc.str(),
              r.num_claims ? std::to_string(*r.num_claims) : "",
              opt_bool_field(r.is_ai),
              bool_field(r.is_ict),
              bool_field(r.is_biotech),
              bool_field(r.is_hightech),
              bool_field(r.is_research_institution),
              std::to_string(r.ff12_industry),
              opt_bool_field(r.accepted),
              r.grant_title.value_or(""),
              r.grant_abstract.value_or(""),
              r.raw_value_musd ? format_double(*r.raw_value_musd) : "",
              format_double(r.market_cap_musd)};
    write_record(out, fields, dialect);
  }
}

void write_firms(const std::filesystem::path& path, std::span<const FirmRecord> firms, Dialect dialect) {
  auto out = open_out(path);
  std::vector<std::string> fields(std::begin(kFirmColumns), std::end(kFirmColumns));
  write_record(out, fields, dialect);
  for (const auto& f : firms) {
    std::map<Month, std::pair<std::string, std::string>> rows;
    for (const auto& [m, r] : f.monthly_returns) rows[m].first = format_double(r);
    for (const auto& [m, c] : f.monthly_market_cap_musd) rows[m].second = format_double(c);
    for (const auto& [m, rc] : rows) {
      fields = {f.firm_id, f.first_listed.str(), m.str(), rc.first, rc.second};
      write_record(out, fields, dialect);
    }
  }
}

void write_factors(const std::filesystem::path& path, const FactorSeries& factors, Dialect dialect) {
  auto out = open_out(path);
  std::vector<std::string> fields(std::begin(kFactorColumns), std::end(kFactorColumns));
  write_record(out, fields, dialect);
  for (const auto& [m, r] : factors.rows) {
    fields = {m.str(),
              format_double(r.mkt_rf),
              format_double(r.smb),
              format_double(r.hml),
              format_double(r.mom),
              format_double(r.rmw),
              format_double(r.cma),
              format_double(r.rf)};
    write_record(out, fields, dialect);
  }
}

ApplicationRecord normalize(ApplicationRecord record) {
  if (record.grant_title && record.grant_title->empty()) record.grant_title.reset();
  if (record.grant_abstract && record.grant_abstract->empty()) record.grant_abstract.reset();
  return record;
}

FirmCovariates firm_covariates(const FirmRecord& firm, Month at_month,
                               std::span<const Month> application_months, const Deflator& deflator) {
  const auto& caps = firm.monthly_market_cap_musd;
  auto it = caps.upper_bound(at_month);
  if (it == caps.begin()) {
    fail(ErrorKind::missing_covariate,
         fmt::format("firm '{}' has no market cap at or before {}", firm.firm_id, at_month.str()));
  }
  --it;
  FirmCovariates cov;
  cov.size_ln = std::log(deflator.real(it->second, it->first));
  cov.age_years = years_between(firm.first_listed.to_month(), at_month);
  cov.application_stock = static_cast<std::size_t>(
      std::count_if(application_months.begin(), application_months.end(),
                    [&](const Month& m) { return m < at_month; }));
  return cov;
}

std::unordered_map<std::string, std::vector<Month>> application_months_by_firm(
    std::span<const ApplicationRecord> applications) {
  std::unordered_map<std::string, std::vector<Month>> out;
  for (const auto& a : applications) out[a.firm_id].push_back(a.filing_date.to_month());
  for (auto& [_, months] : out) std::sort(months.begin(), months.end());
  return out;
}

std::string embedding_text(std::string_view title, std::string_view abstract) {
  std::string text;
  text.reserve(title.size() + abstract.size() + 1);
  text += title;
  text += '\n';
  text += abstract;
  return text;
}

std::string application_text(const ApplicationRecord& record) {
  return embedding_text(record.title, record.abstract);
}

std::optional<std::string> grant_text(const ApplicationRecord& record) {
  if (!record.has_grant_text()) return std::nullopt;
  return embedding_text(record.grant_title.value_or(record.title),
                        record.grant_abstract.value_or(record.abstract));
}

}  // namespace patent
