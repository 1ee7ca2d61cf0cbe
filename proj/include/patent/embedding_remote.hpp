#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <string>
#include <string_view>
#include <utility>

#include "patent/embedding.hpp"

namespace patent {

struct RemoteEmbeddingConfig {
  std::string base_url;  // scheme://host[:port]
  std::string api_key;
  std::string model = "text-embedding-ada-002";
  int max_attempts = 4;
  std::chrono::milliseconds initial_backoff{250};
  std::chrono::seconds timeout{30};
  // Texts longer than this are cut at a UTF-8 boundary before sending.
  std::size_t max_text_bytes = 24000;

  // Reads EMBED_API_URL and EMBED_API_KEY; config error if the URL is unset.
  static RemoteEmbeddingConfig from_env();
};

// Client for POST /v1/embeddings with body {"model","input"} and response
// {"data":[{"embedding":[...]}]}. Transport failures, 429 and 5xx are retried
// with exponential backoff; the last failure is rethrown as a typed error.
class RemoteEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit RemoteEmbeddingProvider(RemoteEmbeddingConfig config);

  Embedding embed(const EmbedRequest& request) override;
  std::string name() const override { return "remote:" + config_.model; }

  std::size_t truncated_requests() const { return truncated_.load(); }
  std::size_t attempts() const { return attempts_.load(); }

 private:
  RemoteEmbeddingConfig config_;
  std::atomic<std::size_t> truncated_{0};
  std::atomic<std::size_t> attempts_{0};
};

// Longest prefix of `text` within `max_bytes` that does not split a UTF-8
// sequence; second is true when anything was cut.
std::pair<std::string_view, bool> truncate_utf8(std::string_view text, std::size_t max_bytes);

}  // namespace patent
