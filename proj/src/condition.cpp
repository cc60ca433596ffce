#include "cloze/condition.hpp"

#include "cloze/text.hpp"

namespace cloze {

std::vector<std::string> condition_violations(const Condition& c) {
  std::vector<std::string> out;
  if (c.n_attractors < 0 || c.n_attractors > kMaxAttractors) {
    out.push_back("n_attractors must be in 0..3, got " + std::to_string(c.n_attractors));
  }
  if (c.n_fillers < 0) out.push_back("n_fillers must be >= 0");
  if (c.position_variant == PositionVariant::kLateEntity) {
    if (c.entity_setting != EntitySetting::kMulti) {
      out.push_back("LATE_ENTITY requires entity_setting MULTI");
    }
    if (c.n_attractors < 1) out.push_back("LATE_ENTITY requires n_attractors >= 1");
  }
  return out;
}

bool is_valid(const Condition& c) { return condition_violations(c).empty(); }

std::string to_string(AttractorKind k) {
  switch (k) {
    case AttractorKind::kBType:
      return "B_TYPE";
    case AttractorKind::kTType:
      return "T_TYPE";
    case AttractorKind::kUnrelated:
      return "UNRELATED";
  }
  return "?";
}

std::string to_string(EntitySetting s) {
  return s == EntitySetting::kSingle ? "SINGLE" : "MULTI";
}

std::string to_string(PositionVariant p) {
  switch (p) {
    case PositionVariant::kAfterFact:
      return "AFTER_FACT";
    case PositionVariant::kBetween:
      return "BETWEEN";
    case PositionVariant::kLateEntity:
      return "LATE_ENTITY";
  }
  return "?";
}

std::string to_string(const Condition& c) {
  return to_string(c.attractor_kind) + "/n=" + std::to_string(c.n_attractors) + "/" +
         to_string(c.entity_setting) + "/" + to_string(c.position_variant) +
         "/f=" + std::to_string(c.n_fillers);
}

std::optional<AttractorKind> parse_attractor_kind(std::string_view s) {
  for (auto k : {AttractorKind::kBType, AttractorKind::kTType, AttractorKind::kUnrelated}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

std::optional<EntitySetting> parse_entity_setting(std::string_view s) {
  for (auto k : {EntitySetting::kSingle, EntitySetting::kMulti}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

std::optional<PositionVariant> parse_position_variant(std::string_view s) {
  for (auto k : {PositionVariant::kAfterFact, PositionVariant::kBetween,
                 PositionVariant::kLateEntity}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

std::string attractor_class(AttractorKind k) {
  return k == AttractorKind::kUnrelated ? "UNRELATED" : "RELATED";
}

}  // namespace cloze
