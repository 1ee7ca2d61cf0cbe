#include "patent/embedding_remote.hpp"

#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>
#include <fmt/format.h>

#include "patent/error.hpp"

namespace patent {

RemoteEmbeddingConfig RemoteEmbeddingConfig::from_env() {
  RemoteEmbeddingConfig config;
  const char* url = std::getenv("EMBED_API_URL");
  if (url == nullptr || *url == '\0') fail(ErrorKind::config, "EMBED_API_URL is not set");
  config.base_url = url;
  if (const char* key = std::getenv("EMBED_API_KEY")) config.api_key = key;
  return config;
}

std::pair<std::string_view, bool> truncate_utf8(std::string_view text, std::size_t max_bytes) {
  if (text.size() <= max_bytes) return {text, false};
  std::size_t cut = max_bytes;
  // Step back over continuation bytes (10xxxxxx) to a sequence boundary.
  while (cut > 0 && (static_cast<unsigned char>(text[cut]) & 0xC0) == 0x80) --cut;
  return {text.substr(0, cut), true};
}

RemoteEmbeddingProvider::RemoteEmbeddingProvider(RemoteEmbeddingConfig config)
    : config_(std::move(config)) {
  if (config_.base_url.empty()) fail(ErrorKind::config, "remote embedding provider needs a base URL");
  if (config_.max_attempts < 1) fail(ErrorKind::config, "max_attempts must be at least 1");
}

Embedding RemoteEmbeddingProvider::embed(const EmbedRequest& request) {
  auto [input, cut] = truncate_utf8(request.text, config_.max_text_bytes);
  if (cut) ++truncated_;
  nlohmann::json body = {{"model", config_.model}, {"input", std::string(input)}};
  const std::string payload = body.dump();

  httplib::Client client(config_.base_url);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  client.set_write_timeout(config_.timeout);
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  auto backoff = config_.initial_backoff;
  std::string last_error;
  ErrorKind last_kind = ErrorKind::transport;
  for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
    ++attempts_;
    auto res = client.Post("/v1/embeddings", headers, payload, "application/json");
    bool retryable = true;
    if (!res) {
      last_kind = ErrorKind::transport;
      last_error = fmt::format("transport failure: {}", httplib::to_string(res.error()));
    } else if (res->status < 200 || res->status >= 300) {
      last_kind = ErrorKind::http_status;
      last_error = fmt::format("embedding endpoint returned HTTP {}", res->status);
      retryable = res->status == 429 || res->status >= 500;
    } else {
      auto doc = nlohmann::json::parse(res->body, nullptr, false);
      if (doc.is_discarded() || !doc.contains("data") || !doc["data"].is_array() || doc["data"].empty() ||
          !doc["data"][0].contains("embedding") || !doc["data"][0]["embedding"].is_array()) {
        fail(ErrorKind::parse, "embedding response is missing data[0].embedding");
      }
      const auto& values = doc["data"][0]["embedding"];
      if (values.size() != kEmbeddingDim) {
        fail(ErrorKind::dimension_mismatch,
             fmt::format("provider returned {} values, expected {}", values.size(), kEmbeddingDim));
      }
      std::vector<float> out;
      out.reserve(values.size());
      for (const auto& v : values) {
        if (!v.is_number()) fail(ErrorKind::parse, "embedding contains a non-numeric value");
        out.push_back(static_cast<float>(v.get<double>()));
      }
      return Embedding(std::move(out));
    }
    if (!retryable || attempt == config_.max_attempts) break;
    std::this_thread::sleep_for(backoff);
    backoff *= 2;
  }
  fail(last_kind, last_error);
}

}  // namespace patent
