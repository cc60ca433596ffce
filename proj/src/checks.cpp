#include "cloze/checks.hpp"

#include <cstdio>
#include <map>
#include <set>
#include <tuple>

#include "cloze/report.hpp"

namespace cloze {

namespace {

// LATE_ENTITY has no zero-attractor cell; it shares the multiple-entity one.
bool matches(const MetricRecord& r, const std::string& scorer, bool related, PositionVariant position,
             int n, std::optional<EntitySetting> setting) {
  const auto& c = r.condition;
  if (r.scorer != scorer || c.related() != related || c.n_attractors != n) return false;
  if (position == PositionVariant::kLateEntity && n == 0) {
    return c.position_variant == PositionVariant::kAfterFact && c.entity_setting == EntitySetting::kMulti;
  }
  return c.position_variant == position && (!setting || c.entity_setting == *setting);
}

std::string pct(std::optional<double> v) {
  if (!v) return "n/a";
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.1f%%", *v * 100.0);
  return buf;
}

std::string num(std::optional<double> v) { return v ? format_value(*v) : "n/a"; }

}  // namespace

std::vector<Competence> base_competence(const std::vector<MetricRecord>& records) {
  std::map<std::string, Competence> by_scorer;
  std::set<std::tuple<std::string, std::string, std::string>> seen;
  for (const auto& r : records) {
    if (!seen.insert({r.scorer, r.set_id, r.target_word}).second) continue;
    auto& c = by_scorer[r.scorer];
    c.scorer = r.scorer;
    ++c.total;
    c.correct += r.base_accuracy;
    if (r.base_accuracy == 0) c.failures.push_back(r.set_id + "/" + r.target_word);
  }
  std::vector<Competence> out;
  for (auto& [_, c] : by_scorer) out.push_back(std::move(c));
  return out;
}

std::optional<double> cell_accuracy(const std::vector<MetricRecord>& records, const std::string& scorer,
                                    bool related, PositionVariant position, int n_attractors,
                                    std::optional<EntitySetting> entity_setting) {
  std::vector<double> values;
  for (const auto& r : records) {
    if (matches(r, scorer, related, position, n_attractors, entity_setting)) values.push_back(r.accuracy);
  }
  if (values.empty()) return std::nullopt;
  return summarize(std::move(values), Statistic::kMean);
}

std::optional<double> cell_median_ratio(const std::vector<MetricRecord>& records, const std::string& scorer,
                                        bool related, PositionVariant position, int n_attractors) {
  std::vector<double> values;
  for (const auto& r : records) {
    if (matches(r, scorer, related, position, n_attractors, std::nullopt) && r.relative_prob) {
      values.push_back(*r.relative_prob);
    }
  }
  if (values.empty()) return std::nullopt;
  return summarize(std::move(values), Statistic::kMedian);
}

std::vector<CheckResult> qualitative_checks(const std::vector<MetricRecord>& records, const std::string& scorer,
                                            bool check_late_entity) {
  using P = PositionVariant;
  std::vector<CheckResult> out;

  {
    const auto a0 = cell_accuracy(records, scorer, true, P::kAfterFact, 0);
    const auto a1 = cell_accuracy(records, scorer, true, P::kAfterFact, 1);
    CheckResult r{"first_attractor_drop", a0 && a1 && *a0 - *a1 >= kMinFirstAttractorDrop,
                  "related accuracy n=0 " + pct(a0) + ", n=1 " + pct(a1)};
    out.push_back(std::move(r));
  }
  {
    bool ok = true;
    std::string detail;
    for (int n = 1; n <= kMaxAttractors; ++n) {
      const auto u = cell_accuracy(records, scorer, false, P::kAfterFact, n);
      const auto rel = cell_accuracy(records, scorer, true, P::kAfterFact, n);
      ok = ok && u && rel && *u > *rel;
      detail += (n > 1 ? "; " : "") + std::string("n=") + std::to_string(n) + " unrelated " + pct(u) +
                " vs related " + pct(rel);
    }
    out.push_back({"unrelated_above_related", ok, detail});
  }
  {
    const auto rel = cell_median_ratio(records, scorer, true, P::kAfterFact, 1);
    const auto u = cell_median_ratio(records, scorer, false, P::kAfterFact, 1);
    out.push_back({"related_ratio_below_unrelated", rel && u && *rel < *u,
                   "median relative probability n=1 related " + num(rel) + " vs unrelated " + num(u)});
  }
  if (check_late_entity) {
    const auto m = EntitySetting::kMulti;
    const auto d0 = cell_accuracy(records, scorer, true, P::kAfterFact, 0, m);
    const auto d1 = cell_accuracy(records, scorer, true, P::kAfterFact, 1, m);
    const auto l0 = cell_accuracy(records, scorer, true, P::kLateEntity, 0);
    const auto l1 = cell_accuracy(records, scorer, true, P::kLateEntity, 1);
    const bool have = d0 && d1 && l0 && l1;
    out.push_back({"late_entity_smaller_drop", have && (*l0 - *l1) < (*d0 - *d1),
                   "n=0 to n=1 accuracy, after the fact " + pct(d0) + " -> " + pct(d1) + ", key entity last " +
                       pct(l0) + " -> " + pct(l1)});
  }
  return out;
}

}  // namespace cloze
