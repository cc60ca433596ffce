#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cloze/condition.hpp"
#include "cloze/generator.hpp"
#include "cloze/metrics.hpp"
#include "cloze/scoring.hpp"

namespace cloze {

/// Everything a run needs. Precedence when building one: command-line flags,
/// then the config document, then these defaults.
struct RunConfig {
  /// nullopt selects the bundled item bank.
  std::optional<std::filesystem::path> itembank;
  /// Condition-space blocks as written; each field is a value or a list and a
  /// block expands to the product of its fields.
  nlohmann::json condition_space;
  std::uint64_t seed = 0;
  ItemsPerCell items_per_cell = std::size_t{12};
  std::vector<ScorerSpec> scorers;
  std::filesystem::path output_dir = "runs/latest";
  int workers = 1;
  /// Statistic used for relative-probability summaries outside the tables
  /// (the tables carry both mean and median).
  Statistic ratio_statistic = Statistic::kMedian;
};

/// The default condition space: related and unrelated attractors, 0-3 of them,
/// both entity settings, 0-2 fillers, after the fact; plus related-attractor
/// BETWEEN and LATE_ENTITY blocks without fillers.
nlohmann::json default_condition_space();
RunConfig default_config();

/// Applies a config document on top of `base`. Unknown keys and every invalid
/// value are collected into one ValidationError.
RunConfig apply_config(const nlohmann::json& doc, RunConfig base = default_config());

/// Expands condition-space blocks in order, dropping combinations that are not
/// valid conditions (e.g. LATE_ENTITY with SINGLE) and repeats of earlier ones.
/// Problems with the blocks themselves are appended to `errors`.
std::vector<Condition> expand_condition_space(const nlohmann::json& blocks,
                                              std::vector<std::string>& errors);
std::vector<Condition> expand_condition_space(const nlohmann::json& blocks);

/// Checks that need the filesystem or cross-field context: the item bank path
/// exists, at least one scorer, workers >= 1, a non-empty condition space.
std::vector<std::string> config_violations(const RunConfig& config);

/// Snapshot for manifests. The output directory and worker count are left
/// out: neither changes any output byte.
nlohmann::json config_snapshot(const RunConfig& config);

}  // namespace cloze
