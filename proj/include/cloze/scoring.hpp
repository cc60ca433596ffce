#pragma once

#include <cstddef>
#include <filesystem>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cloze/generator.hpp"
#include "cloze/itembank.hpp"

namespace cloze {

enum class ScorerFamily { kMasked, kCausal, kMock };
enum class LengthNormalization { kSum, kMean };
enum class MockKind { kOracle, kRecency, kUniform };

/// Log-probability of a candidate the scorer rules out entirely (probability 0).
inline constexpr double kImpossible = -std::numeric_limits<double>::infinity();

inline bool is_impossible(double log_prob) { return log_prob == kImpossible; }

/// Which scorer to build. Recognized options:
///   mock_kind            ORACLE | RECENCY | UNIFORM (required for MOCK)
///   length_normalization SUM (default) | MEAN
///   lowercase            true | false (default: follow the tokenizer)
///   dtype                float32 (default) | float64
///   device               accepted and ignored
struct ScorerSpec {
  ScorerFamily family = ScorerFamily::kMock;
  std::string model_id;
  std::map<std::string, std::string> options;

  /// Stable label used in records and tables, e.g. "mock:oracle",
  /// "causal:gpt2", "masked:bert-base-uncased[length_normalization=MEAN]".
  std::string id() const;

  LengthNormalization length_normalization() const;
  std::optional<MockKind> mock_kind() const;

  bool operator==(const ScorerSpec&) const = default;
};

std::string to_string(ScorerFamily f);
std::string to_string(MockKind k);
std::optional<ScorerFamily> parse_scorer_family(std::string_view s);
std::optional<MockKind> parse_mock_kind(std::string_view s);

std::vector<std::string> scorer_spec_violations(const ScorerSpec& spec);

/// Parses the compact "family:model" form used on the command line:
/// "mock:oracle", "causal:gpt2", "masked:/path/to/checkpoint". Throws
/// ValidationError.
ScorerSpec parse_scorer_spec(std::string_view text);

struct CandidateScore {
  std::string candidate;
  double log_prob = kImpossible;
  int n_subtokens = 1;
  /// Set when this candidate alone could not be scored (e.g. it tokenizes to
  /// nothing); log_prob is then kImpossible.
  std::optional<std::string> error;

  bool operator==(const CandidateScore&) const = default;
};

/// Item knowledge only the heuristic mocks consult.
struct MockHints {
  std::string target;
  /// candidate -> words whose presence before the blank cues it.
  std::map<std::string, std::vector<std::string>> cues;
};

/// Hints for an item: each candidate is cued by its paired background word
/// and by itself (T-type attractors name the candidate directly).
MockHints mock_hints(const ProbeItem& item, const ItemBank& bank);

class Scorer {
 public:
  virtual ~Scorer() = default;

  const ScorerSpec& spec() const { return spec_; }

  /// Scores every candidate for the single blank in `context`. Throws
  /// std::invalid_argument when the context does not hold exactly one blank or
  /// candidates are empty or repeated.
  std::vector<CandidateScore> score(std::string_view context,
                                    const std::vector<std::string>& candidates,
                                    const MockHints* hints = nullptr) const;

  /// Independent instance for another worker; model weights are shared.
  virtual std::unique_ptr<Scorer> clone() const = 0;

 protected:
  explicit Scorer(ScorerSpec spec) : spec_(std::move(spec)) {}

  virtual std::vector<CandidateScore> score_impl(std::string_view context,
                                                 const std::vector<std::string>& candidates,
                                                 const MockHints* hints) const = 0;

 private:
  ScorerSpec spec_;
};

/// Builds a scorer. Throws ValidationError for a bad spec and
/// BackendUnavailable when a model cannot be resolved or loaded.
std::unique_ptr<Scorer> make_scorer(const ScorerSpec& spec);

std::vector<CandidateScore> score_candidates(const ScorerSpec& spec, std::string_view context,
                                             const std::vector<std::string>& candidates,
                                             const MockHints* hints = nullptr);

/// Negative word distance from the blank back to the end of the nearest
/// preceding cue; kImpossible when no cue precedes the blank.
std::vector<CandidateScore> mock_recency(std::string_view context,
                                         const std::vector<std::string>& candidates,
                                         const std::map<std::string, std::vector<std::string>>& cues);

/// Local checkpoint directory for a model id: an existing directory, or a
/// snapshot in the Hugging Face hub cache. Throws BackendUnavailable listing
/// the places searched.
std::filesystem::path resolve_checkpoint(std::string_view model_id);

struct ScoredItem {
  std::string item_id;
  std::string context;
  std::vector<CandidateScore> scores;
  /// The same candidates scored on the item's base context.
  std::vector<CandidateScore> base_scores;
  ScorerSpec scorer;

  bool operator==(const ScoredItem&) const = default;
};

/// Violations of the coverage invariant: every candidate scored exactly once.
std::vector<std::string> scored_item_violations(const ScoredItem& scored,
                                                const std::vector<std::string>& candidates);

}  // namespace cloze
