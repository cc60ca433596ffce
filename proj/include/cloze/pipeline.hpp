#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "cloze/config.hpp"
#include "cloze/itembank.hpp"
#include "cloze/report.hpp"

// The four run stages. Each reads its inputs from the run directory, writes
// its own outputs atomically, and leaves earlier stages' files untouched.

namespace cloze {

struct RunLayout {
  std::filesystem::path dir;

  std::filesystem::path manifest() const { return dir / "manifest.json"; }
  std::filesystem::path items() const { return dir / "items.jsonl"; }
  std::filesystem::path scores() const { return dir / "scores.jsonl"; }
  std::filesystem::path metrics() const { return dir / "metrics.jsonl"; }
};

/// The bank a config names, or the bundled one.
ItemBank load_bank(const RunConfig& config);

/// Throws ValidationError listing every problem with the config.
void validate(const RunConfig& config);

/// Writes manifest.json and items.jsonl. When `identity` is given (re-running a
/// manifest) its run_id and timestamp are kept; otherwise an existing manifest
/// for the same configuration keeps its identity, so re-running is a no-op.
RunManifest stage_generate(const RunConfig& config, const std::optional<RunManifest>& identity = {});

/// Scores every item with every configured scorer, writing scores.jsonl.
/// Items are split across `config.workers` threads, each with its own scorer
/// clone; output order does not depend on the worker count.
std::vector<ScoredItem> stage_score(const RunConfig& config);

/// Joins items and scores into metrics.jsonl.
std::vector<MetricRecord> stage_evaluate(const RunConfig& config);

/// Writes tables/ and plots/ from metrics.jsonl.
void stage_report(const RunConfig& config);

/// All four stages in order.
RunManifest run_all(const RunConfig& config, const std::optional<RunManifest>& identity = {});

RunManifest read_manifest(const std::filesystem::path& path);

/// The configuration recorded in a manifest, writing to `output_dir`. Throws
/// ValidationError when the bank it names no longer matches the recorded
/// checksum.
RunConfig config_from_manifest(const RunManifest& manifest, const std::filesystem::path& output_dir);

}  // namespace cloze
