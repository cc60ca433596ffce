#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cloze/condition.hpp"
#include "cloze/generator.hpp"
#include "cloze/scoring.hpp"

namespace cloze {

/// 1 iff `target` scores strictly above every other candidate; ties lose.
/// Throws std::invalid_argument when the target was not scored.
int accuracy(const std::vector<CandidateScore>& scores, std::string_view target);

/// p_attr / p_base, or nullopt when p_base is zero (the record is then left
/// out of ratio aggregates).
std::optional<double> relative_probability(double p_attr, double p_base);

/// The same ratio from natural-log probabilities, exp(lp_attr - lp_base),
/// which stays finite where the probabilities themselves would underflow.
std::optional<double> relative_probability_from_logs(double lp_attr, double lp_base);

struct MetricRecord {
  std::string item_id;
  std::string scorer;
  int accuracy = 0;
  /// Accuracy of the same candidates on the base context.
  int base_accuracy = 0;
  double target_prob_attr = 0.0;
  double target_prob_base = 0.0;
  std::optional<double> relative_prob;

  std::string set_id;
  std::string target_word;
  Condition condition;

  bool operator==(const MetricRecord&) const = default;
};

void to_json(nlohmann::json& j, const MetricRecord& r);
void from_json(const nlohmann::json& j, MetricRecord& r);

/// Throws std::invalid_argument when the scored item does not belong to
/// `item` or misses its target.
MetricRecord evaluate(const ProbeItem& item, const ScoredItem& scored);

enum class MetricField { kAccuracy, kBaseAccuracy, kRelativeProbability };
enum class Statistic { kMean, kMedian };

std::string to_string(MetricField f);
std::string to_string(Statistic s);
std::optional<Statistic> parse_statistic(std::string_view s);

/// Grouping keys accepted by aggregate().
const std::vector<std::string>& aggregate_keys();

/// Value of grouping key `key` for a record; "attractor_class" is RELATED or
/// UNRELATED. Throws std::invalid_argument for an unknown key.
std::string group_value(const MetricRecord& r, std::string_view key);

struct AggregateRow {
  std::vector<std::string> group;  // values, in the order of the requested keys
  /// NaN when every record of the group was excluded.
  double value = 0.0;
  std::size_t count = 0;     // records contributing to value
  std::size_t excluded = 0;  // records dropped for an undefined ratio
  bool empty() const { return count == 0; }

  bool operator==(const AggregateRow&) const = default;
};

/// One row per group present in `records`, ordered by group values (numeric
/// keys compare numerically). Result bits do not depend on record order.
/// Throws std::invalid_argument for an unknown key.
std::vector<AggregateRow> aggregate(const std::vector<MetricRecord>& records,
                                    const std::vector<std::string>& keys, MetricField field,
                                    Statistic statistic);

/// Mean or median of a sample; the values are sorted first so the result is
/// independent of input order. NaN for an empty sample.
double summarize(std::vector<double> values, Statistic statistic);

}  // namespace cloze
