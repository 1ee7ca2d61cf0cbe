#include "patent/workflow.hpp"

#include <set>
#include <sstream>

#include <fmt/format.h>

#include "patent/embedding_cache.hpp"
#include "patent/embedding_remote.hpp"
#include "patent/error.hpp"
#include "patent/report.hpp"
#include "patent/service.hpp"

namespace patent {

namespace fs = std::filesystem;

namespace {

void reject_unknown(const nlohmann::json& j, std::string_view where, std::initializer_list<std::string_view> keys) {
  if (!j.is_object()) fail(ErrorKind::config, fmt::format("'{}' must be a JSON object", where));
  for (const auto& [k, v] : j.items()) {
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
      fail(ErrorKind::config, fmt::format("unknown key '{}' in '{}'", k, where));
    }
  }
}

std::string run_name(const RunSpec& r) { return fmt::format("{}_{}", to_string(r.task), to_string(r.variant)); }

std::string variant_label(Variant v) {
  switch (v) {
    case Variant::full: return "Full Model";
    case Variant::no_embedding: return "No Embedding";
    case Variant::embedding_only: return "Embedding Only";
  }
  return "";
}

}  // namespace

nlohmann::json synthetic_to_json(const SyntheticConfig& c) {
  return {{"n_firms", c.n_firms},
          {"n_apps", c.n_apps},
          {"first_year", c.first_year},
          {"last_year", c.last_year},
          {"signal_strength_text", c.signal_strength_text},
          {"signal_strength_structural", c.signal_strength_structural},
          {"planted_monthly_alpha", c.planted_monthly_alpha},
          {"target_acceptance_rate", c.target_acceptance_rate},
          {"rewrite_fraction", c.rewrite_fraction},
          {"quality_size_effect", c.quality_size_effect},
          {"pending_fraction", c.pending_fraction}};
}

SyntheticConfig synthetic_from_json(const nlohmann::json& j) {
  reject_unknown(j, "synthetic",
                 {"n_firms", "n_apps", "first_year", "last_year", "signal_strength_text", "signal_strength_structural",
                  "planted_monthly_alpha", "target_acceptance_rate", "rewrite_fraction", "quality_size_effect",
                  "pending_fraction"});
  SyntheticConfig c;
  c.n_firms = j.value("n_firms", c.n_firms);
  c.n_apps = j.value("n_apps", c.n_apps);
  c.first_year = j.value("first_year", c.first_year);
  c.last_year = j.value("last_year", c.last_year);
  c.signal_strength_text = j.value("signal_strength_text", c.signal_strength_text);
  c.signal_strength_structural = j.value("signal_strength_structural", c.signal_strength_structural);
  c.planted_monthly_alpha = j.value("planted_monthly_alpha", c.planted_monthly_alpha);
  c.target_acceptance_rate = j.value("target_acceptance_rate", c.target_acceptance_rate);
  c.rewrite_fraction = j.value("rewrite_fraction", c.rewrite_fraction);
  c.quality_size_effect = j.value("quality_size_effect", c.quality_size_effect);
  c.pending_fraction = j.value("pending_fraction", c.pending_fraction);
  c.validate();
  return c;
}

WorkflowConfig WorkflowConfig::from_json(const nlohmann::json& j) {
  reject_unknown(j, "manifest",
                 {"seed", "out_dir", "synthetic", "applications", "firms", "factors", "deflator", "embedding_provider",
                  "rolling", "screening", "valuation", "portfolio"});
  WorkflowConfig c;
  try {
    c.seed = j.value("seed", c.seed);
    c.out_dir = j.value("out_dir", c.out_dir.string());
    if (j.contains("synthetic")) c.synthetic = synthetic_from_json(j.at("synthetic"));
    for (auto [key, slot] : {std::pair{"applications", &c.applications}, std::pair{"firms", &c.firms},
                             std::pair{"factors", &c.factors}, std::pair{"deflator", &c.deflator}}) {
      if (j.contains(key)) *slot = fs::path(j.at(key).get<std::string>());
    }
    c.embedding_provider = j.value("embedding_provider", c.embedding_provider);
    if (c.embedding_provider != "mock" && c.embedding_provider != "remote") {
      fail(ErrorKind::config, fmt::format("embedding_provider must be 'mock' or 'remote', got '{}'", c.embedding_provider));
    }
    if (j.contains("rolling")) {
      const auto& r = j.at("rolling");
      reject_unknown(r, "rolling",
                     {"first_test_year", "last_test_year", "window_years", "model", "transform", "value_text",
                      "threshold", "min_train_records"});
      if (r.contains("model")) {
        const auto& m = r.at("model");
        reject_unknown(m, "rolling.model",
                       {"input_dim", "hidden_dims", "dropout_rate", "task", "activation", "adam", "epochs",
                        "batch_size", "seed"});
        if (m.contains("adam")) reject_unknown(m.at("adam"), "rolling.model.adam", {"learning_rate", "beta1", "beta2", "epsilon"});
      }
      c.rolling = RollingConfig::from_json(r);
    }
    if (j.contains("screening")) {
      const auto& s = j.at("screening");
      reject_unknown(s, "screening", {"worst_k", "thresholds"});
      c.screening.worst_k = s.value("worst_k", c.screening.worst_k);
      c.screening_thresholds = s.value("thresholds", c.screening_thresholds);
      if (c.screening_thresholds.empty()) fail(ErrorKind::config, "screening.thresholds is empty");
    }
    if (j.contains("valuation")) {
      const auto& v = j.at("valuation");
      reject_unknown(v, "valuation", {"kpss_p", "adjusted_p", "winsor_pct"});
      c.valuation.kpss_p = v.value("kpss_p", c.valuation.kpss_p);
      c.valuation.adjusted_p = v.value("adjusted_p", c.valuation.adjusted_p);
      c.valuation.winsor_pct = v.value("winsor_pct", c.valuation.winsor_pct);
    }
    if (j.contains("portfolio")) {
      const auto& p = j.at("portfolio");
      reject_unknown(p, "portfolio", {"min_firms"});
      c.portfolio.min_firms = p.value("min_firms", c.portfolio.min_firms);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::config, fmt::format("manifest has a value of the wrong type: {}", e.what()));
  }
  c.synthetic.seed = c.seed;
  c.rolling.model.seed = c.seed;
  return c;
}

WorkflowConfig WorkflowConfig::load(const fs::path& path) {
  auto j = nlohmann::json::parse(read_text_file(path), nullptr, false);
  if (j.is_discarded()) fail(ErrorKind::config, fmt::format("'{}' is not valid JSON", path.string()));
  return from_json(j);
}

nlohmann::json WorkflowConfig::to_json() const {
  nlohmann::json j = {{"seed", seed},
                      {"out_dir", out_dir.string()},
                      {"synthetic", synthetic_to_json(synthetic)},
                      {"embedding_provider", embedding_provider},
                      {"rolling", rolling.to_json()},
                      {"screening", {{"worst_k", screening.worst_k}, {"thresholds", screening_thresholds}}},
                      {"valuation",
                       {{"kpss_p", valuation.kpss_p},
                        {"adjusted_p", valuation.adjusted_p},
                        {"winsor_pct", valuation.winsor_pct}}},
                      {"portfolio", {{"min_firms", portfolio.min_firms}}}};
  j["rolling"].erase("task");
  j["rolling"].erase("variant");
  for (auto [key, slot] : {std::pair{"applications", &applications}, std::pair{"firms", &firms},
                           std::pair{"factors", &factors}, std::pair{"deflator", &deflator}}) {
    if (*slot) j[key] = slot->value().string();
  }
  return j;
}

std::vector<RunSpec> workflow_runs() {
  return {{PredictionTask::acceptance, Variant::full},
          {PredictionTask::acceptance, Variant::no_embedding},
          {PredictionTask::acceptance, Variant::embedding_only},
          {PredictionTask::value, Variant::full},
          {PredictionTask::value, Variant::no_embedding}};
}

std::unique_ptr<EmbeddingProvider> make_provider(const std::string& name) {
  if (name == "mock") return std::make_unique<MockEmbeddingProvider>();
  if (name == "remote") return std::make_unique<RemoteEmbeddingProvider>(RemoteEmbeddingConfig::from_env());
  fail(ErrorKind::config, fmt::format("unknown embedding provider '{}'", name));
}

Workflow::Workflow(WorkflowConfig config) : config_(std::move(config)) {}

fs::path Workflow::corpus_dir() const { return config_.out_dir / "corpus"; }
fs::path Workflow::cache_dir() const { return config_.out_dir / "embeddings"; }
fs::path Workflow::runs_dir() const { return config_.out_dir / "runs"; }
fs::path Workflow::models_dir() const { return config_.out_dir / "models"; }
fs::path Workflow::reports_dir() const { return config_.out_dir / "reports"; }

fs::path Workflow::write(StepResult& r, const fs::path& rel, const std::string& content) const {
  fs::path p = config_.out_dir / rel;
  write_text_file(p, content);
  r.written.push_back(rel);
  return p;
}

StepResult Workflow::synth() {
  StepResult r{"synth", {}};
  SyntheticCorpus s = generate_synthetic(config_.synthetic);
  const Dialect tab{'\t'};
  fs::create_directories(corpus_dir());
  write_applications(corpus_dir() / "applications.tsv", s.corpus.applications, tab);
  write_firms(corpus_dir() / "firms.tsv", s.corpus.firms, tab);
  write_factors(corpus_dir() / "factors.tsv", s.corpus.factors, tab);
  r.written = {"corpus/applications.tsv", "corpus/firms.tsv", "corpus/factors.tsv"};
  r.summary = {{"applications", s.corpus.applications.size()}, {"firms", s.corpus.firms.size()}};
  return r;
}

StepResult Workflow::ingest() {
  StepResult r{"ingest", {}};
  const fs::path apps = config_.applications.value_or(corpus_dir() / "applications.tsv");
  const fs::path firms = config_.firms.value_or(corpus_dir() / "firms.tsv");
  const fs::path factors = config_.factors.value_or(corpus_dir() / "factors.tsv");
  for (const auto& p : {apps, firms, factors}) {
    if (!fs::exists(p)) fail(ErrorKind::dependency, fmt::format("missing input '{}' (run 'synth' or set the path in the manifest)", p.string()));
  }
  auto parsed = parse_applications(apps, Dialect::for_path(apps));
  Corpus corpus;
  corpus.applications = std::move(parsed.records);
  corpus.firms = parse_firms(firms, Dialect::for_path(firms));
  corpus.factors = parse_factors(factors, Dialect::for_path(factors));

  std::size_t pending = 0, accepted = 0, with_value = 0, with_grant = 0;
  std::map<int, std::size_t> by_year;
  for (const auto& a : corpus.applications) {
    if (!a.accepted) ++pending;
    else if (*a.accepted) ++accepted;
    if (a.raw_value_musd) ++with_value;
    if (a.has_grant_text()) ++with_grant;
    ++by_year[a.publication_year()];
  }
  TextTable t;
  t.header = {"Item", "Count"};
  t.rows = {{"Applications", std::to_string(corpus.applications.size())},
            {"Dropped: multiple assignees", std::to_string(parsed.dropped_multiple_assignees)},
            {"Dropped: unlinked to a firm", std::to_string(parsed.dropped_unlinked)},
            {"Pending", std::to_string(pending)},
            {"Accepted", std::to_string(accepted)},
            {"With raw value", std::to_string(with_value)},
            {"With grant text", std::to_string(with_grant)},
            {"Firms", std::to_string(corpus.firms.size())},
            {"Factor months", std::to_string(corpus.factors.rows.size())}};
  for (const auto& [y, n] : by_year) t.rows.push_back({fmt::format("Published {}", y), std::to_string(n)});
  write(r, "reports/ingest.txt", t.render());

  // External inputs are copied in canonical form so later steps read one place.
  if (config_.applications || config_.firms || config_.factors) {
    const Dialect tab{'\t'};
    fs::create_directories(corpus_dir());
    write_applications(corpus_dir() / "applications.tsv", corpus.applications, tab);
    write_firms(corpus_dir() / "firms.tsv", corpus.firms, tab);
    write_factors(corpus_dir() / "factors.tsv", corpus.factors, tab);
    r.written.insert(r.written.end(), {"corpus/applications.tsv", "corpus/firms.tsv", "corpus/factors.tsv"});
  }
  r.summary = {{"applications", corpus.applications.size()},
               {"dropped_multiple_assignees", parsed.dropped_multiple_assignees},
               {"dropped_unlinked", parsed.dropped_unlinked}};
  return r;
}

Corpus Workflow::load_corpus() const {
  const fs::path apps = corpus_dir() / "applications.tsv";
  if (!fs::exists(apps)) fail(ErrorKind::dependency, fmt::format("missing corpus '{}' (run 'synth' or 'ingest' first)", apps.string()));
  Corpus c;
  c.applications = parse_applications(apps, Dialect{'\t'}).records;
  c.firms = parse_firms(corpus_dir() / "firms.tsv", Dialect{'\t'});
  c.factors = parse_factors(corpus_dir() / "factors.tsv", Dialect{'\t'});
  return c;
}

StepResult Workflow::embed() {
  StepResult r{"embed", {}};
  Corpus corpus = load_corpus();
  auto provider = make_provider(config_.embedding_provider);
  EmbeddingCache cache(cache_dir());
  std::size_t hits = 0, misses = 0;
  auto one = [&](const std::string& text) {
    (get_or_embed(text, cache, *provider).cache_hit ? hits : misses)++;
  };
  for (const auto& a : corpus.applications) {
    one(application_text(a));
    if (auto g = grant_text(a)) one(*g);
  }
  r.summary = {{"texts", hits + misses}, {"cache_hits", hits}, {"embedded", misses}, {"cache_size", cache.size()},
               {"provider", provider->name()}};
  return r;
}

EmbeddingTable Workflow::load_embeddings(const Corpus& corpus) const {
  if (!fs::exists(cache_dir())) {
    fail(ErrorKind::dependency, fmt::format("missing embedding cache '{}' (run 'embed' first)", cache_dir().string()));
  }
  EmbeddingCache cache(cache_dir());
  TextEmbedder lookup = [&](const std::string& text) {
    if (auto e = cache.find(content_hash(text))) return std::move(*e);
    fail(ErrorKind::dependency, fmt::format("embedding cache '{}' lacks a corpus text (run 'embed' first)",
                                            cache_dir().string()));
  };
  return EmbeddingTable::build(corpus.applications, lookup, true);
}

StepResult Workflow::train() {
  StepResult r{"train", {}};
  Corpus corpus = load_corpus();
  EmbeddingTable emb = load_embeddings(corpus);
  for (const auto& spec : workflow_runs()) {
    RollingConfig rc = config_.rolling;
    rc.task = spec.task;
    rc.variant = spec.variant;
    RollingResult run = rolling_run(corpus, emb, rc);
    const std::string name = run.name();
    write(r, fs::path("runs") / name / "manifest.json", run.manifest().dump(2) + "\n");
    write(r, fs::path("runs") / name / "predictions.tsv", predictions_tsv(run.predictions));
    for (const auto& b : run.models) {
      write(r, fs::path("models") / std::to_string(b.vintage) / b.file_name(), b.to_json().dump() + "\n");
    }
    r.summary[name] = {{"years", run.evaluations.size()}, {"skipped", run.skipped.size()}};
  }
  return r;
}

nlohmann::json Workflow::load_manifest(const std::string& run) const {
  const fs::path p = runs_dir() / run / "manifest.json";
  if (!fs::exists(p)) fail(ErrorKind::dependency, fmt::format("missing manifest '{}' (run 'train' first)", p.string()));
  auto j = nlohmann::json::parse(read_text_file(p), nullptr, false);
  if (j.is_discarded()) fail(ErrorKind::parse, fmt::format("'{}' is not valid JSON", p.string()));
  return j;
}

std::vector<Prediction> Workflow::load_predictions(const std::string& run) const {
  load_manifest(run);  // a prediction file without its manifest is not trusted
  const fs::path p = runs_dir() / run / "predictions.tsv";
  if (!fs::exists(p)) fail(ErrorKind::dependency, fmt::format("missing predictions '{}' (run 'train' first)", p.string()));
  return parse_predictions(read_text_file(p));
}

StepResult Workflow::evaluate() {
  StepResult r{"evaluate", {}};
  auto table_files = [&](const std::string& stem, const TextTable& t) {
    write(r, fs::path("reports") / (stem + ".txt"), t.render());
    write(r, fs::path("reports") / (stem + ".tsv"), t.tsv());
  };

  // Acceptance.
  std::vector<std::pair<std::string, std::vector<ClassificationReport>>> acc;
  for (Variant v : {Variant::full, Variant::no_embedding, Variant::embedding_only}) {
    auto rows = classification_rows(load_manifest(run_name({PredictionTask::acceptance, v})));
    if (v == Variant::full) table_files("table1_acceptance", classification_table(rows));
    std::vector<ClassificationReport> reps;
    for (const auto& row : rows) reps.push_back(row.report);
    acc.emplace_back(variant_label(v), std::move(reps));
  }
  table_files("table2_acceptance_comparison", classification_comparison(acc));

  auto full = load_predictions("acceptance_full");
  auto bench = load_predictions("acceptance_no_embedding");
  table_files("table3_buckets", bucket_table(bucket_analysis(full), bucket_analysis(bench)));

  // Quality regressions.
  {
    Corpus corpus = load_corpus();
    std::map<std::string, double> quality;
    for (const auto& p : load_predictions("acceptance_embedding_only")) quality[p.app_id] = p.prediction;
    Deflator deflator = config_.deflator ? Deflator::load(*config_.deflator) : Deflator{};
    QualityPanel panel = build_quality_panel(corpus, quality, deflator);
    try {
      QualityRegressions regs = quality_regressions(panel);
      TextTable t = quality_table(regs);
      std::string text = t.render();
      if (!regs.dropped_controls.empty()) {
        std::string names;
        for (const auto& n : regs.dropped_controls) names += (names.empty() ? "" : ", ") + n;
        text += fmt::format("Controls without within-firm variation, dropped: {}\n", names);
      }
      if (panel.dropped_missing_cap > 0) {
        text += fmt::format("Applications without firm size at filing, dropped: {}\n", panel.dropped_missing_cap);
      }
      write(r, "reports/table4_quality.txt", text);
      write(r, "reports/table4_quality.tsv", t.tsv());
    } catch (const Error& e) {
      write(r, "reports/table4_quality.txt", fmt::format("not estimable ({}): {}\n", to_string(e.kind()), e.what()));
    }
  }

  // Value.
  std::vector<std::pair<std::string, std::vector<RegressionReport>>> val;
  for (Variant v : {Variant::full, Variant::no_embedding}) {
    auto rows = regression_rows(load_manifest(run_name({PredictionTask::value, v})));
    if (v == Variant::full) table_files("table5_value", regression_table(rows));
    std::vector<RegressionReport> reps;
    for (const auto& row : rows) reps.push_back(row.report);
    val.emplace_back(variant_label(v), std::move(reps));
  }
  table_files("table6_value_comparison", regression_comparison(val));

  // What each run left out and why.
  std::ostringstream notes;
  for (const auto& spec : workflow_runs()) {
    const std::string name = run_name(spec);
    auto m = load_manifest(name);
    notes << name << "\n";
    for (const auto& [reason, n] : m.at("exclusions").items()) notes << "  excluded " << reason << ": " << n << "\n";
    for (const auto& s : m.at("skipped")) {
      notes << "  skipped " << s.at("year").get<int>() << ": " << s.at("reason").get<std::string>() << "\n";
    }
  }
  write(r, "reports/run_notes.txt", notes.str());
  return r;
}

StepResult Workflow::screen() {
  StepResult r{"screen", {}};
  Corpus corpus = load_corpus();
  EmbeddingTable emb = load_embeddings(corpus);
  auto preds = load_predictions("acceptance_full");
  auto manifest = load_manifest("acceptance_full");
  std::vector<ModelBundle> models;
  for (const auto& e : manifest.at("evaluations")) {
    const fs::path p = models_dir() / std::to_string(e.at("year").get<int>()) /
                       ModelBundle::file_name(PredictionTask::acceptance, Variant::full);
    if (!fs::exists(p)) fail(ErrorKind::dependency, fmt::format("missing model '{}' (run 'train' first)", p.string()));
    models.push_back(ModelBundle::load(p));
  }
  ScreeningIndex index(corpus, emb);
  std::string table7, cohorts_text;
  const char panel_names[] = "ABCDEFGH";
  for (std::size_t k = 0; k < config_.screening_thresholds.size(); ++k) {
    ScreeningConfig sc = config_.screening;
    sc.threshold = config_.screening_thresholds[k];
    auto cohorts = build_cohorts(preds, index, sc);
    auto analysis = improvement_analysis(rescore_changed(cohorts, corpus, emb, index, models));
    const std::string label = fmt::format("Panel {}: minimum cosine distance {}", panel_names[k % 8], sc.threshold);
    table7 += label + "\n" + improvement_table(analysis).render();
    if (!analysis.note.empty()) table7 += "Note: " + analysis.note + "\n";
    table7 += "\n";
    cohorts_text += label + "\n" + cohort_table(cohorts).render() + "\n";
    write(r, fmt::format("reports/table7_rows_{}.tsv", format_double(sc.threshold)), improvement_rows_tsv(analysis.rows));
    r.summary[format_double(sc.threshold)] = {{"changed", analysis.rows.size()}};
  }
  write(r, "reports/table7_screening.txt", table7);
  write(r, "reports/screening_cohorts.txt", cohorts_text);
  return r;
}

StepResult Workflow::revalue() {
  StepResult r{"revalue", {}};
  Corpus corpus = load_corpus();
  std::unordered_map<std::string, const ApplicationRecord*> apps;
  for (const auto& a : corpus.applications) apps.emplace(a.app_id, &a);
  std::vector<ValuationInput> inputs;
  for (const auto& p : load_predictions("acceptance_full")) {
    ValuationInput in{p.app_id, p.prediction, std::nullopt};
    const ApplicationRecord* a = apps.at(p.app_id);
    // The corpus value is a published KPSS value; the constant factor is undone.
    if (a->accepted.value_or(false) && a->raw_value_musd) {
      in.raw_reaction_musd = raw_reaction_from_kpss(*a->raw_value_musd, config_.valuation.kpss_p);
    }
    inputs.push_back(std::move(in));
  }
  ValuationResult v = patent::revalue(inputs, config_.valuation);
  std::string text = v.table().render();
  if (v.empty) text += "Note: no predictions to revalue\n";
  std::size_t clamped = 0;
  for (const auto& rec : v.records) clamped += rec.clamped;
  text += fmt::format("Predictions clamped to [{}, {}]: {}\n", kMinPHat, kMaxPHat, clamped);
  write(r, "reports/table8_valuation.txt", text);
  write(r, "reports/table8_valuation.tsv", v.table().tsv());
  write(r, "reports/valuation_records.tsv", v.records_tsv());
  r.summary = {{"records", v.records.size()}, {"clamped", clamped}};
  return r;
}

StepResult Workflow::backtest() {
  StepResult r{"backtest", {}};
  Corpus corpus = load_corpus();
  auto panel = build_panel(load_predictions("acceptance_full"), corpus);
  BacktestResult b = patent::backtest(panel, corpus.factors, config_.portfolio);
  std::string text = alpha_table(b).render();
  const auto& ls = b.alphas[2];
  for (const auto& a : ls) {
    text += fmt::format("{} long-short alpha annualized: {:.2f}%\n", to_string(a.model), 100.0 * a.annualized);
  }
  for (const auto& [m, why] : b.series.skipped) text += fmt::format("Skipped {}: {}\n", m.str(), why);
  write(r, "reports/table9_portfolio.txt", text);
  write(r, "reports/table9_portfolio.tsv", alpha_table(b).tsv());
  write(r, "reports/portfolio_series.tsv", series_tsv(b.series));
  write(r, "reports/portfolio_panel.tsv", panel_tsv(panel));
  r.summary = {{"months", b.series.months.size()}, {"skipped_months", b.series.skipped.size()}};
  return r;
}

}  // namespace patent
