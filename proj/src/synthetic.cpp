#include "patent/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "patent/error.hpp"

namespace patent {

namespace {

constexpr std::array<std::string_view, 16> kHighTokens = {
    "novel",    "efficient", "robust",   "precise",  "scalable", "adaptive", "optimized", "reliable",
    "compact",  "modular",   "accurate", "durable",  "secure",   "integrated", "lightweight", "rapid"};

constexpr std::array<std::string_view, 16> kLowTokens = {
    "generally",  "various",  "thereof",    "substantially", "comprising", "plurality", "related",
    "certain",    "aforementioned", "herein", "respective", "variant", "wherein", "optionally",
    "said",       "sundry"};

constexpr std::array<std::string_view, 48> kTopicTokens = {
    "sensor",    "battery",   "polymer",  "antenna",   "catalyst", "engine",    "valve",     "protein",
    "circuit",   "display",   "membrane", "rotor",     "compound", "lens",      "processor", "network",
    "vehicle",   "turbine",   "enzyme",   "substrate", "coating",  "laser",     "pump",      "gear",
    "antibody",  "vaccine",   "fiber",    "memory",    "router",   "camera",    "bearing",   "nozzle",
    "electrode", "peptide",   "resin",    "alloy",     "crystal",  "filter",    "actuator",  "receiver",
    "scanner",   "implant",   "cartridge", "housing",  "module",   "spindle",   "channel",   "reactor"};

constexpr std::array<std::string_view, 6> kTitleTails = {"system", "method", "apparatus",
                                                          "device", "assembly", "composition"};

constexpr int kSentences = 5;
constexpr int kQualityPerSentence = 8;

// FF12 industry -> primary CPC section weights, loosely mirroring where firms patent.
constexpr std::array<std::string_view, 12> kIndustrySections = {
    "AC", "BF", "BF", "CE", "CB", "GH", "HG", "HG", "BG", "AC", "GH", "BE"};

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct FirmState {
  double quality_effect = 0;
  double beta_mkt = 1, beta_smb = 0, beta_hml = 0;
  int industry = 1;
  double initial_ln_cap = 7;
};

std::string make_abstract(std::mt19937_64& rng, double q, std::span<const int> topics) {
  std::bernoulli_distribution high(std::clamp(q, 0.0, 1.0));
  std::uniform_int_distribution<std::size_t> pick(0, kHighTokens.size() - 1);
  auto quality_token = [&] {
    return high(rng) ? kHighTokens[pick(rng)] : kLowTokens[pick(rng)];
  };
  std::string out;
  for (int s = 0; s < kSentences; ++s) {
    std::array<std::string_view, kQualityPerSentence> qt;
    for (auto& t : qt) t = quality_token();
    out += fmt::format("The {} {} is {} {} and {} {} with {} {} {} {}.", kTopicTokens[topics[2 * s]],
                       kTopicTokens[topics[2 * s + 1]], qt[0], qt[1], qt[2], qt[3], qt[4], qt[5], qt[6],
                       qt[7]);
    if (s + 1 < kSentences) out += ' ';
  }
  return out;
}

// Year-quarter end strictly before `m`: the "nearest quarter prior" rule.
Month prior_quarter_end(Month m) {
  Month q = m.prev();
  while (q.month % 3 != 0) q = q.prev();
  return q;
}

}  // namespace

void SyntheticConfig::validate() const {
  auto bad = [](const std::string& what) { fail(ErrorKind::config, "synthetic config: " + what); };
  if (n_firms < 4) bad("n_firms must be at least 4");
  if (n_apps < 1) bad("n_apps must be positive");
  if (last_year < first_year) bad("year range is empty");
  auto unit = [&](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) bad(fmt::format("{} must be in [0,1]", name));
  };
  unit(signal_strength_text, "signal_strength_text");
  unit(signal_strength_structural, "signal_strength_structural");
  unit(rewrite_fraction, "rewrite_fraction");
  unit(pending_fraction, "pending_fraction");
  if (!(target_acceptance_rate > 0.0 && target_acceptance_rate < 1.0)) {
    bad("target_acceptance_rate must be in (0,1)");
  }
  if (!std::isfinite(planted_monthly_alpha) || std::abs(planted_monthly_alpha) > 0.1) {
    bad("planted_monthly_alpha must be finite and below 10% per month");
  }
  if (!std::isfinite(quality_size_effect)) bad("quality_size_effect must be finite");
}

SyntheticCorpus generate_synthetic(const SyntheticConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  const Month first{config.first_year - 1, 1};
  const Month last{config.last_year + 1, 12};

  SyntheticCorpus out;
  Corpus& corpus = out.corpus;

  // Factors.
  for (int i = first.index(); i <= last.index(); ++i) {
    FactorRow f;
    f.mkt_rf = 0.006 + 0.045 * normal(rng);
    f.smb = 0.002 + 0.03 * normal(rng);
    f.hml = 0.002 + 0.03 * normal(rng);
    f.mom = 0.005 + 0.04 * normal(rng);
    f.rmw = 0.003 + 0.02 * normal(rng);
    f.cma = 0.002 + 0.02 * normal(rng);
    f.rf = 0.0015 + 0.0005 * unif(rng);
    corpus.factors.rows.emplace(Month::from_index(i), f);
  }

  // Firms: log market cap follows a random walk.
  std::vector<FirmState> states(config.n_firms);
  std::vector<std::map<Month, double>> ln_caps(config.n_firms);
  corpus.firms.resize(config.n_firms);
  std::uniform_int_distribution<int> industry(1, 12);
  std::uniform_int_distribution<int> listed_year(1960, config.first_year - 2);
  std::uniform_int_distribution<int> month_of_year(1, 12);
  std::uniform_int_distribution<int> day_of_month(1, 28);
  for (std::size_t f = 0; f < config.n_firms; ++f) {
    FirmState& s = states[f];
    s.quality_effect = 0.5 * normal(rng);
    s.beta_mkt = 1.0 + 0.3 * normal(rng);
    s.beta_smb = 0.3 + 0.4 * normal(rng);
    s.beta_hml = 0.4 * normal(rng);
    s.industry = industry(rng);
    s.initial_ln_cap = 7.0 + 1.5 * normal(rng);
    FirmRecord& firm = corpus.firms[f];
    firm.firm_id = fmt::format("F{:04d}", f + 1);
    firm.first_listed = Date{listed_year(rng), month_of_year(rng), day_of_month(rng)};
    double ln_cap = s.initial_ln_cap;
    for (int i = first.index(); i <= last.index(); ++i) {
      ln_cap += 0.004 + 0.08 * normal(rng);
      ln_caps[f][Month::from_index(i)] = ln_cap;
      firm.monthly_market_cap_musd[Month::from_index(i)] = std::exp(ln_cap);
    }
  }

  // Application skeletons, sorted by publication date.
  struct Draft {
    std::size_t firm;
    Date published;
  };
  std::vector<Draft> drafts(config.n_apps);
  std::uniform_int_distribution<std::size_t> pick_firm(0, config.n_firms - 1);
  std::uniform_int_distribution<int> pick_year(config.first_year, config.last_year);
  for (auto& d : drafts) {
    d.firm = pick_firm(rng);
    d.published = Date{pick_year(rng), month_of_year(rng), day_of_month(rng)};
  }
  std::stable_sort(drafts.begin(), drafts.end(),
                   [](const Draft& a, const Draft& b) { return a.published < b.published; });

  const std::size_t n = drafts.size();
  auto& apps = corpus.applications;
  apps.resize(n);
  out.latent_quality.resize(n);
  out.structural_index.resize(n);
  out.grant_rewritten.assign(n, false);
  std::vector<double> value_index(n);
  std::vector<double> ln_cap_at(n);

  std::uniform_int_distribution<int> extra_sections(0, 2);
  std::uniform_int_distribution<int> any_section(0, static_cast<int>(kCpcSections.size()) - 1);
  std::geometric_distribution<int> claims_extra(1.0 / 17.0);
  std::uniform_int_distribution<int> topic(0, static_cast<int>(kTopicTokens.size()) - 1);
  std::uniform_int_distribution<std::size_t> tail(0, kTitleTails.size() - 1);

  // Fixed structural effects.
  constexpr std::array<double, 9> kSectionEffect = {0.3, -0.2, 0.4, -0.5, -0.3, 0.1, 0.5, 0.2, -0.4};
  std::array<double, 13> industry_effect{};
  for (int k = 1; k <= 12; ++k) industry_effect[k] = 0.5 * std::sin(1.7 * k);

  for (std::size_t i = 0; i < n; ++i) {
    const Draft& d = drafts[i];
    const FirmState& s = states[d.firm];
    ApplicationRecord& r = apps[i];
    r.app_id = fmt::format("APP{:07d}", i + 1);
    r.firm_id = corpus.firms[d.firm].firm_id;
    r.publication_date = d.published;
    Month filed = Month::from_index(d.published.to_month().index() - 18);
    r.filing_date = Date{filed.year, filed.month, d.published.day};
    r.ff12_industry = s.industry;

    std::string_view primary = kIndustrySections[s.industry - 1];
    r.cpc.insert(primary[unif(rng) < 0.7 ? 0 : 1]);
    for (int k = extra_sections(rng); k > 0; --k) r.cpc.insert(kCpcSections[any_section(rng)]);
    bool tech = r.cpc.contains('G') || r.cpc.contains('H');
    bool life = r.cpc.contains('A') || r.cpc.contains('C');
    r.is_ict = tech && unif(rng) < 0.7;
    r.is_biotech = life && unif(rng) < 0.4;
    r.is_hightech = (tech || life) && unif(rng) < 0.5;
    r.is_research_institution = unif(rng) < 0.03;
    r.is_ai = r.cpc.contains('G') && unif(rng) < 0.15;
    r.num_claims = 1 + claims_extra(rng);

    Month cap_month = prior_quarter_end(d.published.to_month());
    double ln_cap = ln_caps[d.firm].at(cap_month);
    ln_cap_at[i] = ln_cap;
    r.market_cap_musd = std::exp(ln_cap);

    double section_sum = 0;
    for (std::size_t k = 0; k < kCpcSections.size(); ++k) {
      if (r.cpc.contains(kCpcSections[k])) section_sum += kSectionEffect[k];
    }
    out.structural_index[i] = section_sum + industry_effect[s.industry] + 0.3 * r.is_ict -
                              0.2 * r.is_biotech - 0.6 * r.is_research_institution +
                              0.35 * (ln_cap - 7.0);
    value_index[i] = section_sum + 0.5 * industry_effect[s.industry] + 0.6 * std::log1p(*r.num_claims) +
                     0.5 * r.is_ai.value_or(false) + 0.3 * r.is_hightech + 0.2 * r.cpc.count();

    double z = s.quality_effect + config.quality_size_effect * (ln_cap - s.initial_ln_cap) +
               1.6 * normal(rng);
    double q = sigmoid(z);
    out.latent_quality[i] = q;

    std::array<int, 2 * kSentences + 2> topics{};
    for (auto& t : topics) t = topic(rng);
    r.title = fmt::format("{} {} {}", kTopicTokens[topics[2 * kSentences]],
                          kTopicTokens[topics[2 * kSentences + 1]], kTitleTails[tail(rng)]);
    r.abstract = make_abstract(rng, q, topics);
  }

  auto standardize = [](std::vector<double>& v) {
    double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0;
    for (double x : v) ss += (x - mean) * (x - mean);
    double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 1.0;
    if (!(sd > 0)) sd = 1.0;
    for (double& x : v) x = (x - mean) / sd;
  };
  standardize(out.structural_index);
  standardize(value_index);

  // Acceptance logits, with the intercept solved so the expected rate hits the target.
  const double text_weight = 6.0 * config.signal_strength_text;
  const double struct_weight = 1.2 * config.signal_strength_structural;
  std::vector<double> base(n);
  for (std::size_t i = 0; i < n; ++i) {
    base[i] = text_weight * (out.latent_quality[i] - 0.5) + struct_weight * out.structural_index[i];
  }
  auto mean_rate = [&](double c) {
    double sum = 0;
    for (double b : base) sum += sigmoid(b + c);
    return sum / static_cast<double>(n);
  };
  double lo = -20, hi = 20;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    (mean_rate(mid) < config.target_acceptance_rate ? lo : hi) = mid;
  }
  const double intercept = 0.5 * (lo + hi);

  std::normal_distribution<double> value_noise(0.0, 0.4);
  std::uniform_real_distribution<double> lift(0.2, 0.4);
  for (std::size_t i = 0; i < n; ++i) {
    ApplicationRecord& r = apps[i];
    if (unif(rng) < config.pending_fraction) {
      r.accepted.reset();
      continue;
    }
    bool accepted = unif(rng) < sigmoid(base[i] + intercept);
    r.accepted = accepted;
    if (!accepted) {
      r.num_claims.reset();  // claim counts exist only for granted patents
      continue;
    }
    r.grant_title = r.title;
    r.grant_abstract = r.abstract;
    if (unif(rng) < config.rewrite_fraction) {
      std::array<int, 2 * kSentences> topics{};
      // Keep the topic words; redraw the wording at a higher quality.
      std::istringstream words(r.abstract);
      std::string w;
      int t = 0;
      while (words >> w && t < 2 * kSentences) {
        auto it = std::find(kTopicTokens.begin(), kTopicTokens.end(), w);
        if (it != kTopicTokens.end()) topics[t++] = static_cast<int>(it - kTopicTokens.begin());
      }
      double q_rewrite = std::min(1.0, out.latent_quality[i] + lift(rng));
      r.grant_abstract = make_abstract(rng, q_rewrite, topics);
      out.grant_rewritten[i] = true;
    }
    double ln_ratio = -5.0 + 3.0 * config.signal_strength_text * (out.latent_quality[i] - 0.5) +
                      0.6 * config.signal_strength_structural * value_index[i] + value_noise(rng);
    r.raw_value_musd = r.market_cap_musd * std::exp(ln_ratio);
  }

  // Firm returns with the planted edge keyed on last month's latent strength.
  std::map<Month, std::vector<std::pair<std::size_t, double>>> strength_by_month;
  {
    std::map<std::pair<int, std::size_t>, std::pair<double, int>> acc;  // (month, firm) -> (sum p, n)
    std::unordered_map<std::string, std::size_t> firm_index;
    for (std::size_t f = 0; f < config.n_firms; ++f) firm_index[corpus.firms[f].firm_id] = f;
    for (std::size_t i = 0; i < n; ++i) {
      auto key = std::make_pair(apps[i].publication_date.to_month().index(), firm_index[apps[i].firm_id]);
      auto& a = acc[key];
      a.first += sigmoid(base[i] + intercept);
      a.second += 1;
    }
    for (const auto& [key, a] : acc) {
      strength_by_month[Month::from_index(key.first)].emplace_back(
          key.second, a.first / a.second * std::sqrt(static_cast<double>(a.second)));
    }
  }
  std::vector<std::vector<bool>> edge(config.n_firms);
  const int months = last.index() - first.index() + 1;
  for (auto& e : edge) e.assign(static_cast<std::size_t>(months), false);
  for (auto& [month, list] : strength_by_month) {
    if (list.size() < 2) continue;
    std::vector<std::pair<std::size_t, double>> sorted = list;
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& a, const auto& b) { return a.second < b.second || (a.second == b.second && a.first < b.first); });
    int next = month.index() + 1 - first.index();
    if (next >= months) continue;
    for (std::size_t k = sorted.size() / 2; k < sorted.size(); ++k) {
      edge[sorted[k].first][static_cast<std::size_t>(next)] = true;
    }
  }
  std::normal_distribution<double> idio(0.0, 0.06);
  for (std::size_t f = 0; f < config.n_firms; ++f) {
    const FirmState& s = states[f];
    for (int i = first.index(); i <= last.index(); ++i) {
      Month m = Month::from_index(i);
      const FactorRow& fr = corpus.factors.rows.at(m);
      double r = fr.rf + s.beta_mkt * fr.mkt_rf + s.beta_smb * fr.smb + s.beta_hml * fr.hml + idio(rng);
      if (edge[f][static_cast<std::size_t>(i - first.index())]) r += config.planted_monthly_alpha;
      corpus.firms[f].monthly_returns[m] = std::max(r, -0.95);
    }
  }
  return out;
}

double text_quality_index(std::string_view text) {
  std::size_t high = 0, low = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && !std::isalnum(static_cast<unsigned char>(text[pos]))) ++pos;
    std::size_t start = pos;
    while (pos < text.size() && std::isalnum(static_cast<unsigned char>(text[pos]))) ++pos;
    auto word = text.substr(start, pos - start);
    if (word.empty()) continue;
    if (std::find(kHighTokens.begin(), kHighTokens.end(), word) != kHighTokens.end()) ++high;
    else if (std::find(kLowTokens.begin(), kLowTokens.end(), word) != kLowTokens.end()) ++low;
  }
  if (high + low == 0) return 0.5;
  return static_cast<double>(high) / static_cast<double>(high + low);
}

std::string strengthen_text(std::string_view text, std::size_t tokens) {
  std::string out(text);
  out += " It is";
  for (std::size_t i = 0; i < tokens; ++i) {
    out += ' ';
    out += kHighTokens[i % kHighTokens.size()];
  }
  out += '.';
  return out;
}

}  // namespace patent
