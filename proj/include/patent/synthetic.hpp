#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "patent/corpus.hpp"

namespace patent {

struct SyntheticConfig {
  std::size_t n_firms = 200;
  std::size_t n_apps = 6000;
  int first_year = 2001;
  int last_year = 2008;
  std::uint64_t seed = 1;
  // Weight of latent quality on acceptance and value; the text always encodes
  // quality, this decides whether quality matters.
  double signal_strength_text = 1.0;
  double signal_strength_structural = 1.0;
  // Extra monthly return for firms whose latent application strength was above
  // the cross-sectional median in the previous month.
  double planted_monthly_alpha = 0.003;
  double target_acceptance_rate = 0.724;
  // Fraction of accepted applications whose grant text is a revised draft.
  double rewrite_fraction = 0.1;
  // Within-firm loading of latent quality on log market cap.
  double quality_size_effect = 0.3;
  double pending_fraction = 0.0;

  void validate() const;
};

struct SyntheticCorpus {
  Corpus corpus;
  // Aligned with corpus.applications.
  std::vector<double> latent_quality;
  std::vector<double> structural_index;
  std::vector<bool> grant_rewritten;
};

SyntheticCorpus generate_synthetic(const SyntheticConfig& config);

// Share of quality-bearing tokens in `text` that come from the high-quality
// list; 0.5 when the text has none. Recovers the generator's latent quality up
// to binomial noise.
double text_quality_index(std::string_view text);

// Appends high-quality tokens to an abstract, used to probe score movement.
std::string strengthen_text(std::string_view text, std::size_t tokens);

}  // namespace patent
