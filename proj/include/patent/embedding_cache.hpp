#pragma once

#include <array>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>

#include "patent/embedding.hpp"

namespace patent {

using ContentHash = std::array<std::uint8_t, 32>;

// SHA-256 of the text bytes.
ContentHash content_hash(std::string_view text);
std::string to_hex(const ContentHash& hash);

struct ContentHashHasher {
  std::size_t operator()(const ContentHash& h) const noexcept;
};

// Content-addressed embedding store.
//
// embeddings.bin: 8-byte magic, u32 dimension, then fixed-size records of
//   (32-byte SHA-256, 1536 little-endian float32).
// embeddings.idx: 8-byte magic, then (32-byte SHA-256, u64 record number).
//
// Both files are append-only. Opening verifies that the data length is a whole
// number of records and that the index agrees with the data record for record;
// any disagreement is an integrity error rather than a silent rebuild.
class EmbeddingCache {
 public:
  explicit EmbeddingCache(std::filesystem::path directory);
  ~EmbeddingCache();
  EmbeddingCache(const EmbeddingCache&) = delete;
  EmbeddingCache& operator=(const EmbeddingCache&) = delete;

  std::optional<Embedding> find(const ContentHash& key) const;
  // No-op when the key is already present.
  void insert(const ContentHash& key, const Embedding& value);

  std::size_t size() const;
  const std::filesystem::path& directory() const { return directory_; }

  // Rewrites the index from the data file after an interrupted append.
  static void rebuild_index(const std::filesystem::path& directory);

 private:
  void load();

  std::filesystem::path directory_;
  int data_fd_ = -1;
  int index_fd_ = -1;
  mutable std::shared_mutex mutex_;
  std::unordered_map<ContentHash, std::uint64_t, ContentHashHasher> index_;
};

struct EmbedLookup {
  Embedding embedding;
  bool cache_hit = false;
};

// Returns the cached vector for `text`, or calls the provider and persists it.
EmbedLookup get_or_embed(std::string_view text, EmbeddingCache& cache, EmbeddingProvider& provider);

// Provider + cache pair shared by the pipeline, screening and the service.
class CachedEmbedder {
 public:
  CachedEmbedder(EmbeddingProvider& provider, EmbeddingCache& cache) : provider_(provider), cache_(cache) {}

  EmbedLookup lookup(std::string_view text) { return get_or_embed(text, cache_, provider_); }
  Embedding embed(std::string_view text) { return lookup(text).embedding; }

  EmbeddingProvider& provider() { return provider_; }

 private:
  EmbeddingProvider& provider_;
  EmbeddingCache& cache_;
};

}  // namespace patent
