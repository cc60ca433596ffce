#include "cloze/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include "cloze/records.hpp"

using nlohmann::json;

namespace cloze {

namespace {

const CandidateScore* find_score(const std::vector<CandidateScore>& scores, std::string_view c) {
  for (const auto& s : scores) {
    if (s.candidate == c) return &s;
  }
  return nullptr;
}

std::optional<long long> as_integer(const std::string& s) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

bool group_less(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == b[i]) continue;
    const auto x = as_integer(a[i]);
    const auto y = as_integer(b[i]);
    if (x && y) return *x < *y;
    return a[i] < b[i];
  }
  return false;
}

}  // namespace

int accuracy(const std::vector<CandidateScore>& scores, std::string_view target) {
  const auto* t = find_score(scores, target);
  if (t == nullptr) throw std::invalid_argument("target '" + std::string(target) + "' was not scored");
  for (const auto& s : scores) {
    if (s.candidate != target && !(t->log_prob > s.log_prob)) return 0;
  }
  return is_impossible(t->log_prob) ? 0 : 1;
}

std::optional<double> relative_probability(double p_attr, double p_base) {
  if (!(p_base > 0.0)) return std::nullopt;
  return p_attr / p_base;
}

std::optional<double> relative_probability_from_logs(double lp_attr, double lp_base) {
  if (is_impossible(lp_base)) return std::nullopt;
  if (is_impossible(lp_attr)) return 0.0;
  return std::exp(lp_attr - lp_base);
}

void to_json(json& j, const MetricRecord& r) {
  j = json{{"item_id", r.item_id},
           {"scorer", r.scorer},
           {"accuracy", r.accuracy},
           {"base_accuracy", r.base_accuracy},
           {"target_prob_attr", r.target_prob_attr},
           {"target_prob_base", r.target_prob_base},
           {"relative_prob", r.relative_prob ? json(*r.relative_prob) : json(nullptr)},
           {"set_id", r.set_id},
           {"target_word", r.target_word},
           {"attractor_class", attractor_class(r.condition.attractor_kind)}};
  const json condition = r.condition;
  for (const auto& [k, v] : condition.items()) j[k] = v;
}

void from_json(const json& j, MetricRecord& r) {
  j.at("item_id").get_to(r.item_id);
  j.at("scorer").get_to(r.scorer);
  j.at("accuracy").get_to(r.accuracy);
  j.at("base_accuracy").get_to(r.base_accuracy);
  j.at("target_prob_attr").get_to(r.target_prob_attr);
  j.at("target_prob_base").get_to(r.target_prob_base);
  const auto& rel = j.at("relative_prob");
  r.relative_prob = rel.is_null() ? std::nullopt : std::optional(rel.get<double>());
  j.at("set_id").get_to(r.set_id);
  j.at("target_word").get_to(r.target_word);
  j.get_to(r.condition);
}

MetricRecord evaluate(const ProbeItem& item, const ScoredItem& scored) {
  if (scored.item_id != item.item_id) {
    throw std::invalid_argument("scores for " + scored.item_id + " paired with item " + item.item_id);
  }
  MetricRecord r;
  r.item_id = item.item_id;
  r.scorer = scored.scorer.id();
  r.accuracy = accuracy(scored.scores, item.target_word);
  r.base_accuracy = accuracy(scored.base_scores, item.target_word);
  const double lp_attr = find_score(scored.scores, item.target_word)->log_prob;
  const double lp_base = find_score(scored.base_scores, item.target_word)->log_prob;
  r.target_prob_attr = std::exp(lp_attr);
  r.target_prob_base = std::exp(lp_base);
  r.relative_prob = relative_probability_from_logs(lp_attr, lp_base);
  r.set_id = item.set_id;
  r.target_word = item.target_word;
  r.condition = item.condition;
  return r;
}

std::string to_string(MetricField f) {
  switch (f) {
    case MetricField::kAccuracy: return "accuracy";
    case MetricField::kBaseAccuracy: return "base_accuracy";
    case MetricField::kRelativeProbability: return "relative_probability";
  }
  return "?";
}

std::string to_string(Statistic s) { return s == Statistic::kMean ? "mean" : "median"; }

std::optional<Statistic> parse_statistic(std::string_view s) {
  if (s == "mean") return Statistic::kMean;
  if (s == "median") return Statistic::kMedian;
  return std::nullopt;
}

const std::vector<std::string>& aggregate_keys() {
  static const std::vector<std::string> keys = {
      "scorer",         "set_id",           "attractor_kind", "attractor_class",
      "n_attractors",   "entity_setting",   "position_variant", "n_fillers"};
  return keys;
}

std::string group_value(const MetricRecord& r, std::string_view key) {
  const auto& c = r.condition;
  if (key == "scorer") return r.scorer;
  if (key == "set_id") return r.set_id;
  if (key == "attractor_kind") return to_string(c.attractor_kind);
  if (key == "attractor_class") return attractor_class(c.attractor_kind);
  if (key == "n_attractors") return std::to_string(c.n_attractors);
  if (key == "entity_setting") return to_string(c.entity_setting);
  if (key == "position_variant") return to_string(c.position_variant);
  if (key == "n_fillers") return std::to_string(c.n_fillers);
  throw std::invalid_argument("unknown grouping key '" + std::string(key) + "'");
}

double summarize(std::vector<double> values, Statistic statistic) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (statistic == Statistic::kMean) {
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
  }
  return n % 2 == 1 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

std::vector<AggregateRow> aggregate(const std::vector<MetricRecord>& records,
                                    const std::vector<std::string>& keys, MetricField field,
                                    Statistic statistic) {
  for (const auto& k : keys) {
    if (std::find(aggregate_keys().begin(), aggregate_keys().end(), k) == aggregate_keys().end()) {
      throw std::invalid_argument("unknown grouping key '" + k + "'");
    }
  }
  struct Group {
    std::vector<double> values;
    std::size_t excluded = 0;
  };
  std::map<std::vector<std::string>, Group> groups;
  for (const auto& r : records) {
    std::vector<std::string> g;
    for (const auto& k : keys) g.push_back(group_value(r, k));
    auto& group = groups[g];
    switch (field) {
      case MetricField::kAccuracy: group.values.push_back(r.accuracy); break;
      case MetricField::kBaseAccuracy: group.values.push_back(r.base_accuracy); break;
      case MetricField::kRelativeProbability:
        if (r.relative_prob) {
          group.values.push_back(*r.relative_prob);
        } else {
          ++group.excluded;
        }
        break;
    }
  }
  std::vector<AggregateRow> rows;
  for (auto& [g, group] : groups) {
    const std::size_t count = group.values.size();
    rows.push_back({g, summarize(std::move(group.values), statistic), count, group.excluded});
  }
  std::sort(rows.begin(), rows.end(),
            [](const AggregateRow& a, const AggregateRow& b) { return group_less(a.group, b.group); });
  return rows;
}

}  // namespace cloze
