// patentctl: command-line front end for the patent analytics workflow.
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "patent/embedding_cache.hpp"
#include "patent/error.hpp"
#include "patent/report.hpp"
#include "patent/service.hpp"
#include "patent/workflow.hpp"

using namespace patent;

namespace {

void print_error(std::string_view kind, std::string_view message) {
  std::cerr << nlohmann::json{{"error", {{"kind", kind}, {"message", message}}}}.dump() << "\n";
}

void print_step(const StepResult& r) {
  nlohmann::json files = nlohmann::json::array();
  for (const auto& p : r.written) files.push_back(p.generic_string());
  std::cout << nlohmann::json{{"step", r.step}, {"written", files}, {"summary", r.summary}}.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Patent application analytics: rolling models, screening, revaluation and backtests"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_path, "JSON manifest")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "overrides the manifest seed");
  app.add_option("--out-dir", out_dir, "overrides the manifest out_dir");

  struct Step {
    const char* name;
    const char* help;
    StepResult (Workflow::*run)();
  };
  const Step steps[] = {{"synth", "generate a synthetic corpus", &Workflow::synth},
                        {"ingest", "parse and validate the corpus", &Workflow::ingest},
                        {"embed", "populate the embedding cache", &Workflow::embed},
                        {"train", "rolling-window training for every model variant", &Workflow::train},
                        {"evaluate", "acceptance, bucket, quality and value reports", &Workflow::evaluate},
                        {"screen", "screening cohorts and improvement report", &Workflow::screen},
                        {"revalue", "AI-adjusted valuation report", &Workflow::revalue},
                        {"backtest", "application-strength portfolio report", &Workflow::backtest}};
  std::vector<std::pair<CLI::App*, const Step*>> step_cmds;
  for (const auto& s : steps) step_cmds.emplace_back(app.add_subcommand(s.name, s.help), &s);
  CLI::App* all = app.add_subcommand("all", "synth (unless external data is configured) through backtest");

  std::string host = "127.0.0.1";
  int port = 8080;
  CLI::App* serve_cmd = app.add_subcommand("serve", "HTTP scoring service over the trained models");
  serve_cmd->add_option("--host", host);
  serve_cmd->add_option("--port", port);

  std::string input, output;
  CLI::App* score_cmd = app.add_subcommand("score", "score JSON-lines requests with the service code path");
  score_cmd->add_option("--input", input, "one request object per line")->required()->check(CLI::ExistingFile);
  score_cmd->add_option("--output", output, "defaults to stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    WorkflowConfig cfg = config_path.empty() ? WorkflowConfig{} : WorkflowConfig::load(config_path);
    if (seed) {
      cfg.seed = *seed;
      cfg.synthetic.seed = *seed;
      cfg.rolling.model.seed = *seed;
    }
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    Workflow wf(cfg);

    for (const auto& [cmd, step] : step_cmds) {
      if (cmd->parsed()) print_step((wf.*(step->run))());
    }
    if (all->parsed()) {
      const bool external = cfg.applications.has_value();
      for (const auto& s : steps) {
        if (external && std::string_view(s.name) == "synth") continue;
        print_step((wf.*(s.run))());
      }
    }
    if (serve_cmd->parsed() || score_cmd->parsed()) {
      ModelRegistry models = ModelRegistry::load(wf.models_dir());
      auto provider = make_provider(cfg.embedding_provider);
      EmbeddingCache cache(wf.cache_dir());
      ScoringService service(models, [&](std::string_view text) { return get_or_embed(text, cache, *provider); });
      if (serve_cmd->parsed()) {
        std::cerr << "serving vintages " << service.vintages().dump() << " on " << host << ":" << port << "\n";
        serve(service, {host, port});
      } else {
        std::ifstream in(input);
        std::ofstream file;
        if (!output.empty()) file.open(output);
        std::ostream& out = output.empty() ? std::cout : file;
        std::string line;
        std::size_t n = 0;
        while (std::getline(in, line)) {
          ++n;
          if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
          auto j = nlohmann::json::parse(line, nullptr, false);
          if (j.is_discarded()) fail(ErrorKind::parse, fmt::format("line {} of '{}' is not valid JSON", n, input));
          out << service.score(ScoreRequest::from_json(j)).dump() << "\n";
        }
      }
    }
  } catch (const Error& e) {
    print_error(to_string(e.kind()), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return 1;
  }
  return 0;
}
