#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cloze/metrics.hpp"

// Directional checks on a real-model run. The published figures carry no
// numbers, so these compare cells against each other rather than against
// reference values.

namespace cloze {

struct Competence {
  std::string scorer;
  int correct = 0;
  int total = 0;
  std::vector<std::string> failures;  // "set_id/target_word"
};

/// Base-context accuracy per scorer, one vote per (set, target) base item.
std::vector<Competence> base_competence(const std::vector<MetricRecord>& records);

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Mean accuracy over records matching the filter; nullopt when none match.
/// `entity_setting` nullopt pools both settings.
std::optional<double> cell_accuracy(const std::vector<MetricRecord>& records, const std::string& scorer,
                                    bool related, PositionVariant position, int n_attractors,
                                    std::optional<EntitySetting> entity_setting = std::nullopt);

/// Median relative probability over the matching records with a defined ratio.
std::optional<double> cell_median_ratio(const std::vector<MetricRecord>& records, const std::string& scorer,
                                        bool related, PositionVariant position, int n_attractors);

/// Minimum drop in accuracy from zero to one related attractor.
inline constexpr double kMinFirstAttractorDrop = 0.15;

/// The four directional patterns for one scorer:
///   first_attractor_drop  related n=1 accuracy at least 15 points below n=0
///   unrelated_above_related  unrelated accuracy above related at n = 1..3
///   related_ratio_below_unrelated  median ratio at n=1, related below unrelated
///   late_entity_smaller_drop  n=1 drop smaller when the key entity comes last
///                             (only evaluated when `check_late_entity`)
/// Accuracy comparisons pool both entity settings after the fact; the
/// late-entity comparison is against the multiple-entity setting, the only one
/// where the key entity can come last.
std::vector<CheckResult> qualitative_checks(const std::vector<MetricRecord>& records, const std::string& scorer,
                                            bool check_late_entity);

}  // namespace cloze
