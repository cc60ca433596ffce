// cloze_probe: generate -> score -> evaluate -> report, driven by a JSON config.
//
// Exit codes: 0 success, 1 invalid input, 2 runtime failure, 3 model backend
// unavailable.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cloze/config.hpp"
#include "cloze/error.hpp"
#include "cloze/pipeline.hpp"
#include "cloze/records.hpp"

namespace {

enum Exit { kOk = 0, kInvalid = 1, kRuntime = 2, kBackend = 3 };

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> scorers;
  std::optional<int> workers;
  std::string items_per_cell;
  std::string manifest;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON config document")->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "Generation seed (nonnegative integer)");
  cmd->add_option("--out", f.out, "Run directory");
  cmd->add_option("--scorer", f.scorers,
                  "Scorer as family:model, e.g. mock:oracle, causal:gpt2, masked:bert-base-uncased "
                  "(repeatable; replaces the config's list)");
  cmd->add_option("--workers", f.workers, "Scoring threads")->check(CLI::Range(1, 256));
  cmd->add_option("--items-per-cell", f.items_per_cell,
                  "Attractor combinations per condition and base item, or 'exhaustive'");
}

cloze::RunConfig build_config(const Flags& f) {
  auto config = cloze::default_config();
  if (!f.config.empty()) {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(cloze::read_file(f.config));
    } catch (const nlohmann::json::parse_error& e) {
      throw cloze::ParseError(f.config + ": " + e.what());
    }
    config = cloze::apply_config(doc, config);
  }
  std::vector<std::string> errors;
  if (f.seed) config.seed = *f.seed;
  if (!f.out.empty()) config.output_dir = f.out;
  if (f.workers) config.workers = *f.workers;
  if (!f.items_per_cell.empty()) {
    if (f.items_per_cell == "exhaustive") {
      config.items_per_cell = cloze::kExhaustive;
    } else {
      try {
        std::size_t used = 0;
        const auto v = std::stoull(f.items_per_cell, &used);
        if (used != f.items_per_cell.size() || v == 0) throw std::invalid_argument("");
        config.items_per_cell = static_cast<std::size_t>(v);
      } catch (const std::exception&) {
        errors.push_back("--items-per-cell: expected a positive integer or 'exhaustive', got '" +
                         f.items_per_cell + "'");
      }
    }
  }
  if (!f.scorers.empty()) {
    config.scorers.clear();
    for (const auto& s : f.scorers) {
      try {
        config.scorers.push_back(cloze::parse_scorer_spec(s));
      } catch (const cloze::ValidationError& e) {
        errors.insert(errors.end(), e.violations().begin(), e.violations().end());
      }
    }
  }
  auto rest = cloze::config_violations(config);
  errors.insert(errors.end(), rest.begin(), rest.end());
  if (!errors.empty()) throw cloze::ValidationError(std::move(errors));
  return config;
}

int report_error(const std::string& kind, const std::exception& e, int code) {
  std::cerr << "cloze_probe: " << kind << ": " << e.what() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cloze probes with attractor distractors: generate, score, evaluate, report."};
  app.require_subcommand(1);
  Flags f;

  auto* gen = app.add_subcommand("generate", "Write manifest.json and items.jsonl");
  auto* score = app.add_subcommand("score", "Score items.jsonl into scores.jsonl");
  auto* eval = app.add_subcommand("evaluate", "Compute metrics.jsonl from items and scores");
  auto* report = app.add_subcommand("report", "Write tables/ and plots/ from metrics.jsonl");
  auto* run = app.add_subcommand("run", "All stages in order");
  for (auto* cmd : {gen, score, eval, report, run}) add_common(cmd, f);
  run->add_option("--manifest", f.manifest, "Re-run the configuration recorded in a manifest")
      ->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }

  try {
    if (!f.manifest.empty()) {
      if (!f.config.empty() || f.seed || !f.scorers.empty() || !f.items_per_cell.empty()) {
        throw cloze::ValidationError(
            {"--manifest fixes the configuration; only --out and --workers may accompany it"});
      }
      if (f.out.empty()) throw cloze::ValidationError({"--manifest requires --out"});
      const auto manifest = cloze::read_manifest(f.manifest);
      auto config = cloze::config_from_manifest(manifest, f.out);
      if (f.workers) config.workers = *f.workers;
      const auto m = cloze::run_all(config, manifest);
      std::cerr << "run " << m.run_id << " reproduced in " << config.output_dir.string() << "\n";
      return kOk;
    }

    const auto config = build_config(f);
    const cloze::RunLayout layout{config.output_dir};
    if (gen->parsed()) {
      const auto m = cloze::stage_generate(config);
      std::cerr << "run " << m.run_id << ": items -> " << layout.items().string() << "\n";
    } else if (score->parsed()) {
      const auto scored = cloze::stage_score(config);
      std::cerr << scored.size() << " scored items -> " << layout.scores().string() << "\n";
    } else if (eval->parsed()) {
      const auto records = cloze::stage_evaluate(config);
      std::cerr << records.size() << " metric records -> " << layout.metrics().string() << "\n";
    } else if (report->parsed()) {
      cloze::stage_report(config);
      std::cerr << "tables and plots -> " << layout.dir.string() << "\n";
    } else if (run->parsed()) {
      const auto m = cloze::run_all(config);
      std::cerr << "run " << m.run_id << " complete in " << layout.dir.string() << "\n";
    }
    return kOk;
  } catch (const cloze::ValidationError& e) {
    std::cerr << "cloze_probe: invalid input:\n";
    for (const auto& v : e.violations()) std::cerr << "  - " << v << "\n";
    return kInvalid;
  } catch (const cloze::ParseError& e) {
    return report_error("invalid input", e, kInvalid);
  } catch (const cloze::BackendUnavailable& e) {
    return report_error("backend unavailable", e, kBackend);
  } catch (const std::exception& e) {
    return report_error("error", e, kRuntime);
  }
}
