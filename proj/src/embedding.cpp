#include "patent/embedding.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>

#include <fmt/format.h>

#include "patent/corpus.hpp"
#include "patent/error.hpp"
#include "patent/kernels.hpp"

namespace patent {

Embedding::Embedding(std::vector<float> values) : values_(std::move(values)) {
  if (values_.size() != kEmbeddingDim) {
    fail(ErrorKind::dimension_mismatch,
         fmt::format("embedding has {} values, expected {}", values_.size(), kEmbeddingDim));
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) fail(ErrorKind::domain, fmt::format("embedding value {} is not finite", i));
  }
  if (!(norm() > 0.0)) fail(ErrorKind::domain, "embedding has zero norm");
}

double Embedding::norm() const {
  double s = 0.0;
  for (float v : values_) s += static_cast<double>(v) * static_cast<double>(v);
  return std::sqrt(s);
}

EmbedRequest::EmbedRequest(std::string text_in) : text(std::move(text_in)) {
  bool blank = std::all_of(text.begin(), text.end(),
                           [](unsigned char c) { return std::isspace(c) != 0; });
  if (blank) fail(ErrorKind::domain, "embedding request text is empty");
}

EmbedRequest EmbedRequest::from_parts(std::string_view title, std::string_view abstract) {
  return EmbedRequest(embedding_text(title, abstract));
}

double cosine_distance(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    fail(ErrorKind::dimension_mismatch, fmt::format("cosine distance of {} and {} values", a.size(), b.size()));
  }
  // Identical vectors are exactly zero apart, not 1 - (1 - rounding).
  if (std::equal(a.begin(), a.end(), b.begin())) {
    if (std::all_of(a.begin(), a.end(), [](float v) { return v == 0.0f; })) {
      fail(ErrorKind::domain, "cosine distance of a zero vector");
    }
    return 0.0;
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double x = a[i], y = b[i];
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  if (!(na > 0.0) || !(nb > 0.0)) fail(ErrorKind::domain, "cosine distance of a zero vector");
  double d = 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
  return std::clamp(d, 0.0, 2.0);
}

double cosine_distance(const Embedding& a, const Embedding& b) { return cosine_distance(a.values(), b.values()); }

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    // Bytes >= 0x80 stay inside tokens so UTF-8 words survive intact.
    if (std::isalnum(c) || c >= 0x80) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

Embedding MockEmbeddingProvider::embed(const EmbedRequest& request) {
  ++calls_;
  std::map<std::uint64_t, double> counts;
  for (const auto& token : tokenize(request.text)) counts[fnv1a64(token) % kVocabularyBuckets] += 1.0;
  if (counts.empty()) {
    // Punctuation-only text still needs a direction.
    counts[fnv1a64(request.text) % kVocabularyBuckets] = 1.0;
  }
  std::vector<std::uint64_t> buckets;
  std::vector<double> weights;
  for (const auto& [b, c] : counts) {
    buckets.push_back(b);
    weights.push_back(c);
  }
  std::vector<double> projected(kEmbeddingDim);
  kernels::project_buckets(buckets, weights, seed_, projected);
  double norm = 0.0;
  for (double v : projected) norm += v * v;
  norm = std::sqrt(norm);
  std::vector<float> values(kEmbeddingDim);
  for (std::size_t i = 0; i < kEmbeddingDim; ++i) values[i] = static_cast<float>(projected[i] / norm);
  return Embedding(std::move(values));
}

}  // namespace patent
