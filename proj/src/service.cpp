#include "patent/service.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>
#include <httplib.h>

#include "patent/error.hpp"

namespace patent {

namespace fs = std::filesystem;

std::vector<std::string> missing_model_files(const fs::path& directory) {
  std::vector<std::string> missing;
  std::error_code ec;
  if (!fs::is_directory(directory, ec)) {
    missing.push_back(fmt::format("{}/ (model directory)", directory.string()));
    return missing;
  }
  std::set<std::string> vintage_dirs;
  for (const auto& entry : fs::directory_iterator(directory)) {
    if (!entry.is_directory()) continue;
    const std::string name = entry.path().filename().string();
    if (name.size() == 4 && std::all_of(name.begin(), name.end(), ::isdigit)) vintage_dirs.insert(name);
  }
  if (vintage_dirs.empty()) {
    for (auto f : kServiceModelFiles) missing.push_back(fmt::format("<year>/{}", f));
    return missing;
  }
  for (const auto& v : vintage_dirs) {
    for (auto f : kServiceModelFiles) {
      if (!fs::exists(directory / v / f)) missing.push_back(fmt::format("{}/{}", v, f));
    }
  }
  return missing;
}

ModelRegistry ModelRegistry::load(const fs::path& directory) {
  auto missing = missing_model_files(directory);
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += "\n  missing: " + m;
    fail(ErrorKind::dependency,
         fmt::format("model directory '{}' is incomplete; each vintage needs {}, {} and {}{}", directory.string(),
                     kServiceModelFiles[0], kServiceModelFiles[1], kServiceModelFiles[2], list));
  }
  std::vector<ModelSet> sets;
  for (const auto& entry : fs::directory_iterator(directory)) {
    const std::string name = entry.path().filename().string();
    if (!entry.is_directory() || name.size() != 4 || !std::all_of(name.begin(), name.end(), ::isdigit)) continue;
    ModelSet s;
    s.vintage = std::stoi(name);
    s.acceptance = ModelBundle::load(entry.path() / kServiceModelFiles[0]);
    s.quality = ModelBundle::load(entry.path() / kServiceModelFiles[1]);
    s.value = ModelBundle::load(entry.path() / kServiceModelFiles[2]);
    sets.push_back(std::move(s));
  }
  return from_sets(std::move(sets));
}

ModelRegistry ModelRegistry::from_sets(std::vector<ModelSet> sets) {
  ModelRegistry r;
  for (auto& s : sets) {
    auto check = [&](const ModelBundle& b, PredictionTask task, Variant variant) {
      if (b.layout.task != task || b.layout.variant != variant || b.vintage != s.vintage) {
        fail(ErrorKind::schema, fmt::format("vintage {} holds a {} {} model for {} where {} {} was expected", s.vintage,
                                            to_string(b.layout.task), to_string(b.layout.variant), b.vintage,
                                            to_string(task), to_string(variant)));
      }
    };
    check(s.acceptance, PredictionTask::acceptance, Variant::full);
    check(s.quality, PredictionTask::acceptance, Variant::embedding_only);
    check(s.value, PredictionTask::value, Variant::full);
    const int v = s.vintage;
    r.sets_.emplace(v, std::move(s));
  }
  if (r.sets_.empty()) fail(ErrorKind::dependency, "no model vintages to serve");
  return r;
}

std::vector<int> ModelRegistry::vintages() const {
  std::vector<int> out;
  for (const auto& [v, s] : sets_) out.push_back(v);
  return out;
}

int ModelRegistry::latest() const { return sets_.rbegin()->first; }

const ModelSet* ModelRegistry::find(int vintage) const {
  auto it = sets_.find(vintage);
  return it == sets_.end() ? nullptr : &it->second;
}

void save_model_set(const fs::path& directory, const ModelSet& set) {
  const fs::path dir = directory / std::to_string(set.vintage);
  set.acceptance.save(dir / kServiceModelFiles[0]);
  set.quality.save(dir / kServiceModelFiles[1]);
  set.value.save(dir / kServiceModelFiles[2]);
}

namespace {

[[noreturn]] void bad_field(std::string_view field, std::string_view what) {
  fail(ErrorKind::usage, fmt::format("field '{}' {}", field, what));
}

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

}  // namespace

ScoreRequest ScoreRequest::from_json(const nlohmann::json& j) {
  if (!j.is_object()) fail(ErrorKind::usage, "request body must be a JSON object");
  static const std::set<std::string> known = {"title",      "abstract",     "vintage",     "cpc",
                                              "is_ict",     "is_biotech",   "is_hightech", "is_research_institution",
                                              "is_ai",      "ff12_industry", "num_claims", "market_cap_musd"};
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) bad_field(key, "is not a known request field");
  }
  ScoreRequest r;
  auto text = [&](const char* field, std::string& out) {
    if (!j.contains(field) || j.at(field).is_null()) return;
    if (!j.at(field).is_string()) bad_field(field, "must be a string");
    out = j.at(field).get<std::string>();
  };
  text("title", r.title);
  text("abstract", r.abstract);
  if (blank(r.title) && blank(r.abstract)) fail(ErrorKind::usage, "field 'title' or 'abstract' must be nonempty");

  auto integer = [&](const char* field) -> std::optional<int> {
    if (!j.contains(field) || j.at(field).is_null()) return std::nullopt;
    if (!j.at(field).is_number_integer()) bad_field(field, "must be an integer");
    return j.at(field).get<int>();
  };
  auto flag = [&](const char* field) -> std::optional<bool> {
    if (!j.contains(field) || j.at(field).is_null()) return std::nullopt;
    if (!j.at(field).is_boolean()) bad_field(field, "must be true or false");
    return j.at(field).get<bool>();
  };
  r.vintage = integer("vintage");
  if (j.contains("cpc") && !j.at("cpc").is_null()) {
    if (!j.at("cpc").is_string()) bad_field("cpc", "must be a string of CPC sections such as \"A;G\"");
    try {
      r.structural.cpc = CpcSet::parse(j.at("cpc").get<std::string>());
    } catch (const Error& e) {
      bad_field("cpc", e.what());
    }
  }
  r.structural.is_ict = flag("is_ict");
  r.structural.is_biotech = flag("is_biotech");
  r.structural.is_hightech = flag("is_hightech");
  r.structural.is_research_institution = flag("is_research_institution");
  r.structural.is_ai = flag("is_ai");
  r.structural.ff12_industry = integer("ff12_industry");
  if (r.structural.ff12_industry && (*r.structural.ff12_industry < 1 || *r.structural.ff12_industry > 12)) {
    bad_field("ff12_industry", "must be between 1 and 12");
  }
  r.structural.num_claims = integer("num_claims");
  if (r.structural.num_claims && *r.structural.num_claims < 0) bad_field("num_claims", "must be nonnegative");
  if (j.contains("market_cap_musd") && !j.at("market_cap_musd").is_null()) {
    const auto& v = j.at("market_cap_musd");
    if (!v.is_number() || !(v.get<double>() > 0) || !std::isfinite(v.get<double>())) {
      bad_field("market_cap_musd", "must be a positive number");
    }
    r.structural.market_cap_musd = v.get<double>();
  }
  return r;
}

ScoringService::ScoringService(const ModelRegistry& models, TextLookup embed)
    : models_(models), embed_(std::move(embed)) {}

nlohmann::json ScoringService::score(const ScoreRequest& request, bool* cache_hit) const {
  const int vintage = request.vintage.value_or(models_.latest());
  const ModelSet* set = models_.find(vintage);
  if (set == nullptr) fail(ErrorKind::not_found, fmt::format("no models for vintage {}", vintage));

  EmbedLookup e = embed_(embedding_text(request.title, request.abstract));
  if (cache_hit) *cache_hit = e.cache_hit;
  const auto& s = request.structural;
  const double acceptance = set->acceptance.predict(e.embedding.values(), s);
  const double quality = set->quality.predict(e.embedding.values(), s);
  const double value = set->value.predict(e.embedding.values(), s);

  nlohmann::json defaults = nlohmann::json::object();
  if (!s.cpc) defaults["cpc"] = "";
  if (!s.is_ict) defaults["is_ict"] = false;
  if (!s.is_biotech) defaults["is_biotech"] = false;
  if (!s.is_hightech) defaults["is_hightech"] = false;
  if (!s.is_research_institution) defaults["is_research_institution"] = false;
  if (!s.is_ai) defaults["is_ai"] = false;
  if (!s.ff12_industry) defaults["ff12_industry"] = nullptr;
  if (!s.num_claims) defaults["num_claims"] = 0;
  if (!s.market_cap_musd) defaults["ln_market_cap"] = set->acceptance.default_ln_cap;

  return {{"acceptance_prob", acceptance},
          {"quality_score", quality},
          {"value_transformed", value},
          {"value_percentile", set->value.percentile(value)},
          {"vintage", vintage},
          {"defaults", defaults}};
}

nlohmann::json ScoringService::compare(const std::string& text_a, const std::string& text_b) const {
  EmbedLookup a = embed_(text_a);
  EmbedLookup b = embed_(text_b);
  return {{"cosine_distance", cosine_distance(a.embedding, b.embedding)}};
}

nlohmann::json ScoringService::vintages() const {
  return {{"vintages", models_.vintages()}, {"latest", models_.latest()}};
}

nlohmann::json ScoringService::health() const { return {{"status", "ok"}, {"vintages", models_.vintages()}}; }

int http_status(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::usage:
    case ErrorKind::parse:
    case ErrorKind::schema:
    case ErrorKind::config:
    case ErrorKind::domain:
      return 400;
    case ErrorKind::not_found: return 404;
    case ErrorKind::not_ready: return 503;
    case ErrorKind::transport:
    case ErrorKind::http_status:
      return 502;
    default: return 500;
  }
}

HttpReply error_reply(const std::exception& e) {
  HttpReply r;
  std::string kind = "internal";
  r.status = 500;
  if (const auto* pe = dynamic_cast<const Error*>(&e)) {
    r.status = http_status(pe->kind());
    kind = std::string(to_string(pe->kind()));
  }
  r.body = nlohmann::json{{"error", {{"kind", kind}, {"message", e.what()}}}}.dump();
  return r;
}

HttpReply ScoringService::handle(std::string_view method, std::string_view path, std::string_view body) const {
  try {
    auto parse_body = [&] {
      auto j = nlohmann::json::parse(body, nullptr, false);
      if (j.is_discarded()) fail(ErrorKind::usage, "request body is not valid JSON");
      return j;
    };
    auto need = [&](std::string_view m) {
      if (method != m) fail(ErrorKind::usage, fmt::format("{} expects {}", path, m));
    };
    HttpReply r;
    if (path == "/health") {
      need("GET");
      r.body = health().dump();
    } else if (path == "/vintages") {
      need("GET");
      r.body = vintages().dump();
    } else if (path == "/score") {
      need("POST");
      bool hit = false;
      r.body = score(ScoreRequest::from_json(parse_body()), &hit).dump();
      r.headers["X-Embedding-Cache"] = hit ? "hit" : "miss";
    } else if (path == "/compare") {
      need("POST");
      auto j = parse_body();
      if (!j.is_object()) fail(ErrorKind::usage, "request body must be a JSON object");
      for (const char* f : {"text_a", "text_b"}) {
        if (!j.contains(f) || !j.at(f).is_string()) bad_field(f, "must be a string");
      }
      r.body = compare(j.at("text_a").get<std::string>(), j.at("text_b").get<std::string>()).dump();
    } else {
      fail(ErrorKind::not_found, fmt::format("no endpoint {}", path));
    }
    return r;
  } catch (const std::exception& e) {
    return error_reply(e);
  }
}

struct ServiceServer::Impl {
  httplib::Server server;
};

ServiceServer::ServiceServer(const ScoringService& service) : impl_(std::make_unique<Impl>()) {
  auto route = [&service](const httplib::Request& req, httplib::Response& res) {
    HttpReply r = service.handle(req.method, req.path, req.body);
    res.status = r.status;
    for (const auto& [k, v] : r.headers) res.set_header(k, v);
    res.set_content(r.body, "application/json");
  };
  impl_->server.Get(".*", route);
  impl_->server.Post(".*", route);
}

ServiceServer::~ServiceServer() = default;

int ServiceServer::bind(const std::string& host, int port) {
  int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) fail(ErrorKind::io, fmt::format("cannot bind {}:{}", host, port));
  return bound;
}

void ServiceServer::listen() {
  if (!impl_->server.listen_after_bind()) fail(ErrorKind::io, "HTTP server stopped with an error");
}

void ServiceServer::stop() { impl_->server.stop(); }

void serve(const ScoringService& service, const ServeConfig& config) {
  ServiceServer server(service);
  server.bind(config.host, config.port);
  server.listen();
}

}  // namespace patent
