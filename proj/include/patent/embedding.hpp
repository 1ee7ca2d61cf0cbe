#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace patent {

inline constexpr std::size_t kEmbeddingDim = 1536;

// Fixed-length text embedding. Construction enforces length, finiteness and a
// nonzero norm, so every Embedding in flight is usable for cosine distance.
class Embedding {
 public:
  explicit Embedding(std::vector<float> values);

  std::span<const float> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  float operator[](std::size_t i) const { return values_[i]; }
  double norm() const;

  bool operator==(const Embedding&) const = default;

 private:
  std::vector<float> values_;
};

struct EmbedRequest {
  std::string text;

  // Rejects text that is empty after trimming whitespace.
  explicit EmbedRequest(std::string text);
  static EmbedRequest from_parts(std::string_view title, std::string_view abstract);
};

// 1 - cos(a, b), clamped to [0, 2]; exactly 0 for identical vectors.
double cosine_distance(const Embedding& a, const Embedding& b);
double cosine_distance(std::span<const float> a, std::span<const float> b);

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual Embedding embed(const EmbedRequest& request) = 0;
  virtual std::string name() const = 0;
};

// Hashed bag-of-tokens projected through a fixed pseudo-random matrix and
// scaled to unit norm. Stable across machines: tokenization is ASCII-lowercase,
// token hashing is FNV-1a and matrix entries come from a counter-based
// generator keyed on (seed, bucket, dimension).
class MockEmbeddingProvider final : public EmbeddingProvider {
 public:
  static constexpr std::uint64_t kDefaultSeed = 0x5EED'0A7E'17C0'FFEEull;
  static constexpr std::size_t kVocabularyBuckets = std::size_t{1} << 18;

  explicit MockEmbeddingProvider(std::uint64_t seed = kDefaultSeed) : seed_(seed) {}

  Embedding embed(const EmbedRequest& request) override;
  std::string name() const override { return "mock"; }

  std::size_t calls() const { return calls_.load(); }

 private:
  std::uint64_t seed_;
  std::atomic<std::size_t> calls_{0};
};

std::vector<std::string> tokenize(std::string_view text);
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace patent
