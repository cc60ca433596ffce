#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cloze/metrics.hpp"

namespace cloze {

/// Shortest decimal that round-trips; "" for NaN. Tables and plots both print
/// values through this, so a plot point's data-value equals its CSV cell.
std::string format_value(double v);

/// Attractor classes reported separately. "related" merges B- and T-type.
enum class ReportClass { kRelated, kBType, kTType, kUnrelated };
std::string to_string(ReportClass c);  // "related", "b_type", ...
bool in_class(const MetricRecord& r, ReportClass c);

/// A reported quantity: accuracy, or relative probability under a statistic.
struct ReportMetric {
  MetricField field = MetricField::kAccuracy;
  Statistic statistic = Statistic::kMean;

  std::string name() const;  // "accuracy", "relative_probability_median", ...
};

/// Records of one (class, position) panel group. LATE_ENTITY has no
/// zero-attractor cell of its own, so its n = 0 row borrows the AFTER_FACT
/// multi-entity zero-attractor records.
std::vector<MetricRecord> select_records(const std::vector<MetricRecord>& records, ReportClass cls,
                                         PositionVariant position);

struct TableRow {
  std::string model;
  int n_attractors = 0;
  double value = 0.0;
  std::size_t count = 0;
  std::size_t excluded = 0;
};

struct Table {
  std::string name;  // file stem, e.g. "accuracy__related__multi__after_fact"
  std::vector<TableRow> rows;
};

/// Splits aggregate rows grouped by (scorer, entity_setting, n_attractors)
/// into one table per entity setting. Throws std::invalid_argument naming any
/// missing grouping key.
std::vector<Table> tables_from_rows(const std::vector<AggregateRow>& rows,
                                    const std::vector<std::string>& keys, const std::string& stem,
                                    PositionVariant position);

/// "model,n_attractors,value,count" plus one line per row.
std::string to_csv(const Table& table);

/// Two-panel (multiple-entity, single-entity) line plot, one line per model.
/// Relative probability switches to a log axis when positive values span more
/// than one decade and none is zero. Same key requirements as
/// tables_from_rows().
std::string render_plot(const std::vector<AggregateRow>& rows, const std::vector<std::string>& keys,
                        const ReportMetric& metric, const std::string& title);

/// Writes tables/*.csv and plots/*.svg for every class and position present
/// in `records`, plus base-competence and ratio-exclusion tables.
void emit_report(const std::vector<MetricRecord>& records, const std::filesystem::path& run_dir);

struct RunManifest {
  std::string run_id;
  nlohmann::json config;  // snapshot, without the output directory
  std::string bank_checksum;
  std::uint64_t seed = 0;
  std::vector<nlohmann::json> scorers;
  std::string created_at;  // UTC, ISO 8601

  bool operator==(const RunManifest&) const = default;
};

void to_json(nlohmann::json& j, const RunManifest& m);
void from_json(const nlohmann::json& j, RunManifest& m);

/// Current UTC time, or SOURCE_DATE_EPOCH when that is set.
std::string utc_timestamp();

/// "run-<compact timestamp>-<first 8 hex digits of the config digest>".
std::string make_run_id(const nlohmann::json& config, const std::string& created_at);

}  // namespace cloze
