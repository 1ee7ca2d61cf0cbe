#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "patent/embedding_cache.hpp"
#include "patent/scoring.hpp"

namespace patent {

// models/<vintage>/ holds one bundle per file below.
inline constexpr std::string_view kServiceModelFiles[] = {"acceptance_full.json", "acceptance_embedding_only.json",
                                                          "value_full.json"};

struct ModelSet {
  int vintage = 0;
  ModelBundle acceptance;
  ModelBundle quality;  // embedding-only acceptance model
  ModelBundle value;
};

// Read-only after load; safe to share across request threads.
class ModelRegistry {
 public:
  // Dependency error listing every expected file that is absent when any
  // vintage directory is incomplete or no vintage exists at all.
  static ModelRegistry load(const std::filesystem::path& directory);
  static ModelRegistry from_sets(std::vector<ModelSet> sets);

  std::vector<int> vintages() const;
  int latest() const;
  const ModelSet* find(int vintage) const;

 private:
  std::map<int, ModelSet> sets_;
};

// Writes a model set in the layout ModelRegistry::load expects.
void save_model_set(const std::filesystem::path& directory, const ModelSet& set);

// Required files missing under `directory`, as paths relative to it.
std::vector<std::string> missing_model_files(const std::filesystem::path& directory);

struct ScoreRequest {
  std::string title;
  std::string abstract;
  std::optional<int> vintage;
  StructuralInput structural;

  // Usage error naming the offending field.
  static ScoreRequest from_json(const nlohmann::json& j);
};

using TextLookup = std::function<EmbedLookup(std::string_view)>;

struct HttpReply {
  int status = 200;
  std::string body;
  std::map<std::string, std::string> headers;
};

class ScoringService {
 public:
  ScoringService(const ModelRegistry& models, TextLookup embed);

  // The body never carries the cache flag so identical requests give
  // identical bytes; the flag travels in the X-Embedding-Cache header.
  nlohmann::json score(const ScoreRequest& request, bool* cache_hit = nullptr) const;
  nlohmann::json compare(const std::string& text_a, const std::string& text_b) const;
  nlohmann::json health() const;
  nlohmann::json vintages() const;

  // Routing without sockets; the HTTP server delegates here.
  HttpReply handle(std::string_view method, std::string_view path, std::string_view body) const;

 private:
  const ModelRegistry& models_;
  TextLookup embed_;
};

HttpReply error_reply(const std::exception& e);
int http_status(ErrorKind kind);

struct ServeConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
};

// HTTP front for a ScoringService. bind() with port 0 picks a free port.
class ServiceServer {
 public:
  explicit ServiceServer(const ScoringService& service);
  ~ServiceServer();
  int bind(const std::string& host, int port);
  void listen();  // blocks until stop()
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// bind + listen; blocks until the process is stopped.
void serve(const ScoringService& service, const ServeConfig& config);

}  // namespace patent
