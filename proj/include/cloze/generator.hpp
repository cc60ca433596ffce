#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cloze/condition.hpp"
#include "cloze/itembank.hpp"

namespace cloze {

/// Everything render_context() needs to produce one context string. The
/// attractor kind, setting and position are taken from `condition`; the number
/// of attractors is the size of `attractor_words`.
struct RenderParts {
  std::string key_entity;
  std::string background;
  AttractorKind kind = AttractorKind::kBType;
  EntitySetting setting = EntitySetting::kSingle;
  PositionVariant position = PositionVariant::kAfterFact;
  std::vector<std::string> attractor_words;     // words, or phrases for UNRELATED
  std::vector<std::string> attractor_entities;  // one per attractor in MULTI
  std::vector<std::string> filler_phrases;
};

/// Renders "<fact sentence>. <query with ___>".
///
/// Related attractors are joined to the fact with a serial comma even for two
/// clauses ("X, and Y"); unrelated phrases use a plain list ("X and Y") until
/// three items. Fillers are coordinated between the key entity and its first
/// verb phrase. BETWEEN places attractors before the critical fact using the
/// set's between_fact phrasing; LATE_ENTITY lists the attractor entities first
/// and the key entity's fact last.
std::string render_context(const BaseTemplate& templ, const RenderParts& parts,
                           const ArticleTable& articles);

struct ProbeItem {
  std::string item_id;
  std::string set_id;
  Condition condition;
  std::string key_entity;
  std::string background_word;
  std::string target_word;
  std::vector<std::string> attractor_words;
  std::vector<std::string> attractor_entities;
  std::vector<std::string> filler_phrases;
  std::string context;
  std::vector<std::string> candidate_targets;
  /// {seed, condition code, base index, combination rank}; see regenerate().
  std::vector<std::uint64_t> seed_trace;
  /// Zero-attractor, zero-filler context for the same pair and key entity; the
  /// denominator context of relative probability.
  std::string base_context;

  bool operator==(const ProbeItem&) const = default;
};

/// nullopt enumerates every attractor combination.
using ItemsPerCell = std::optional<std::size_t>;
inline constexpr ItemsPerCell kExhaustive = std::nullopt;

/// Expands conditions into items, cell by cell in the given order, base items
/// in bank order within a cell. `items_per_cell` caps the number of attractor
/// combinations drawn per (condition, base item); draws are uniform without
/// replacement. Fillers depend only on (seed, base item, n_fillers) so every
/// attractor item shares them with its zero-attractor counterpart.
///
/// Throws std::invalid_argument for invalid conditions and GenerationError when
/// a set cannot supply enough attractors or fillers.
std::vector<ProbeItem> generate(const ItemBank& bank, const std::vector<Condition>& conditions,
                                std::uint64_t seed, ItemsPerCell items_per_cell);

/// Exact number of items generate() emits for one condition.
std::size_t cell_count(const ItemBank& bank, const Condition& condition,
                       ItemsPerCell items_per_cell);

/// Rebuilds a single item from its seed_trace.
ProbeItem regenerate(const ItemBank& bank, const std::vector<std::uint64_t>& seed_trace);

/// The zero-attractor condition whose items share fillers and phrasing with
/// items of `c` (LATE_ENTITY maps to AFTER_FACT).
Condition counterpart_condition(const Condition& c);

/// Invariant violations of a generated item against its bank; empty if valid.
std::vector<std::string> item_violations(const ProbeItem& item, const ItemBank& bank);

std::uint64_t condition_code(const Condition& c);
Condition condition_from_code(std::uint64_t code);

/// n choose k, saturating at UINT64_MAX.
std::uint64_t binomial(std::uint64_t n, std::uint64_t k);
/// Lexicographic rank -> ascending k-subset of [0, n).
std::vector<std::size_t> unrank_combination(std::size_t n, std::size_t k, std::uint64_t rank);

}  // namespace cloze
