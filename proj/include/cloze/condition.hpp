#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cloze {

enum class AttractorKind { kBType, kTType, kUnrelated };
enum class EntitySetting { kSingle, kMulti };
enum class PositionVariant {
  kAfterFact,   // attractors follow the critical fact
  kBetween,     // attractors intervene between key entity and critical fact
  kLateEntity,  // key entity's fact is the last clause; attractor entities precede it
};

inline constexpr int kMaxAttractors = 3;

struct Condition {
  AttractorKind attractor_kind = AttractorKind::kBType;
  int n_attractors = 0;
  EntitySetting entity_setting = EntitySetting::kSingle;
  PositionVariant position_variant = PositionVariant::kAfterFact;
  int n_fillers = 0;

  bool related() const { return attractor_kind != AttractorKind::kUnrelated; }
  bool operator==(const Condition&) const = default;
};

/// Invariant violations of a single condition; empty when valid.
std::vector<std::string> condition_violations(const Condition& c);
bool is_valid(const Condition& c);

std::string to_string(AttractorKind k);
std::string to_string(EntitySetting s);
std::string to_string(PositionVariant p);
/// Compact label, e.g. "B_TYPE/n=2/MULTI/AFTER_FACT/f=1".
std::string to_string(const Condition& c);

std::optional<AttractorKind> parse_attractor_kind(std::string_view s);
std::optional<EntitySetting> parse_entity_setting(std::string_view s);
std::optional<PositionVariant> parse_position_variant(std::string_view s);

/// "RELATED" for B/T-type kinds, "UNRELATED" otherwise.
std::string attractor_class(AttractorKind k);

}  // namespace cloze
