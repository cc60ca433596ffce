#include "cloze/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "cloze/error.hpp"
#include "cloze/text.hpp"
#include "lm/lm_scorers.hpp"

namespace cloze {

namespace {

const std::set<std::string, std::less<>> kKnownOptions = {
    "mock_kind", "length_normalization", "lowercase", "dtype", "device"};

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

std::string to_string(ScorerFamily f) {
  switch (f) {
    case ScorerFamily::kMasked: return "MASKED";
    case ScorerFamily::kCausal: return "CAUSAL";
    case ScorerFamily::kMock: return "MOCK";
  }
  return "?";
}

std::string to_string(MockKind k) {
  switch (k) {
    case MockKind::kOracle: return "ORACLE";
    case MockKind::kRecency: return "RECENCY";
    case MockKind::kUniform: return "UNIFORM";
  }
  return "?";
}

std::optional<ScorerFamily> parse_scorer_family(std::string_view s) {
  const auto u = upper(s);
  if (u == "MASKED") return ScorerFamily::kMasked;
  if (u == "CAUSAL") return ScorerFamily::kCausal;
  if (u == "MOCK") return ScorerFamily::kMock;
  return std::nullopt;
}

std::optional<MockKind> parse_mock_kind(std::string_view s) {
  const auto u = upper(s);
  if (u == "ORACLE") return MockKind::kOracle;
  if (u == "RECENCY") return MockKind::kRecency;
  if (u == "UNIFORM") return MockKind::kUniform;
  return std::nullopt;
}

std::string ScorerSpec::id() const {
  std::string out = to_lower(to_string(family)) + ":" + model_id;
  std::vector<std::string> extra;
  for (const auto& [k, v] : options) {
    if (k == "mock_kind" || k == "device") continue;
    if (k == "length_normalization" && upper(v) == "SUM") continue;
    if (k == "dtype" && v == "float32") continue;
    extra.push_back(k + "=" + v);
  }
  if (!extra.empty()) out += "[" + join(extra, ",") + "]";
  return out;
}

LengthNormalization ScorerSpec::length_normalization() const {
  const auto it = options.find("length_normalization");
  if (it != options.end() && upper(it->second) == "MEAN") return LengthNormalization::kMean;
  return LengthNormalization::kSum;
}

std::optional<MockKind> ScorerSpec::mock_kind() const {
  const auto it = options.find("mock_kind");
  if (it == options.end()) return std::nullopt;
  return parse_mock_kind(it->second);
}

std::vector<std::string> scorer_spec_violations(const ScorerSpec& spec) {
  std::vector<std::string> v;
  const std::string where = "scorer '" + spec.id() + "'";
  if (spec.model_id.empty()) v.push_back(where + ": model_id is empty");
  for (const auto& [key, value] : spec.options) {
    if (!kKnownOptions.contains(key)) {
      v.push_back(where + ": unknown option '" + key + "'");
    } else if (key == "length_normalization" && upper(value) != "SUM" && upper(value) != "MEAN") {
      v.push_back(where + ": length_normalization must be SUM or MEAN, got '" + value + "'");
    } else if (key == "lowercase" && value != "true" && value != "false") {
      v.push_back(where + ": lowercase must be true or false, got '" + value + "'");
    } else if (key == "dtype" && value != "float32" && value != "float64") {
      v.push_back(where + ": dtype must be float32 or float64, got '" + value + "'");
    }
  }
  const auto kind_it = spec.options.find("mock_kind");
  if (spec.family == ScorerFamily::kMock) {
    if (kind_it == spec.options.end()) {
      v.push_back(where + ": MOCK scorers require a mock_kind option");
    } else if (!parse_mock_kind(kind_it->second)) {
      v.push_back(where + ": mock_kind must be ORACLE, RECENCY or UNIFORM, got '" +
                  kind_it->second + "'");
    }
  } else if (kind_it != spec.options.end()) {
    v.push_back(where + ": mock_kind only applies to MOCK scorers");
  }
  return v;
}

ScorerSpec parse_scorer_spec(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw ValidationError({"scorer '" + std::string(text) +
                           "': expected family:model, e.g. mock:oracle or causal:gpt2"});
  }
  const auto family = parse_scorer_family(text.substr(0, colon));
  if (!family) {
    throw ValidationError({"scorer '" + std::string(text) + "': unknown family '" +
                           std::string(text.substr(0, colon)) + "'"});
  }
  ScorerSpec spec;
  spec.family = *family;
  spec.model_id = std::string(text.substr(colon + 1));
  if (spec.family == ScorerFamily::kMock) {
    spec.options["mock_kind"] = upper(spec.model_id);
    spec.model_id = to_lower(spec.model_id);
  }
  if (auto v = scorer_spec_violations(spec); !v.empty()) throw ValidationError(std::move(v));
  return spec;
}

MockHints mock_hints(const ProbeItem& item, const ItemBank& bank) {
  MockHints hints;
  hints.target = item.target_word;
  for (const auto& pair : bank.set(item.set_id).pairs) {
    hints.cues[pair.target] = {pair.background, pair.target};
  }
  return hints;
}

std::vector<CandidateScore> Scorer::score(std::string_view context,
                                          const std::vector<std::string>& candidates,
                                          const MockHints* hints) const {
  if (count_occurrences(context, kBlank) != 1) {
    throw std::invalid_argument("context must contain exactly one blank: \"" +
                                std::string(context) + "\"");
  }
  if (candidates.empty()) throw std::invalid_argument("no candidates to score");
  std::set<std::string_view> seen;
  for (const auto& c : candidates) {
    if (!seen.insert(c).second) throw std::invalid_argument("duplicate candidate '" + c + "'");
  }
  return score_impl(context, candidates, hints);
}

namespace {

class MockScorer final : public Scorer {
 public:
  explicit MockScorer(ScorerSpec spec) : Scorer(std::move(spec)), kind_(*this->spec().mock_kind()) {}

  std::unique_ptr<Scorer> clone() const override { return std::make_unique<MockScorer>(*this); }

 protected:
  std::vector<CandidateScore> score_impl(std::string_view context,
                                         const std::vector<std::string>& candidates,
                                         const MockHints* hints) const override {
    std::vector<CandidateScore> out;
    switch (kind_) {
      case MockKind::kUniform: {
        const double lp = -std::log(static_cast<double>(candidates.size()));
        for (const auto& c : candidates) out.push_back({c, lp, 1, std::nullopt});
        return out;
      }
      case MockKind::kOracle: {
        if (!hints) throw ScorerError("the oracle mock needs the item's target");
        for (const auto& c : candidates) {
          out.push_back({c, c == hints->target ? 0.0 : kImpossible, 1, std::nullopt});
        }
        return out;
      }
      case MockKind::kRecency:
        if (!hints) throw ScorerError("the recency mock needs the item's cue words");
        return mock_recency(context, candidates, hints->cues);
    }
    return out;
  }

 private:
  MockKind kind_;
};

}  // namespace

std::vector<CandidateScore> mock_recency(std::string_view context,
                                         const std::vector<std::string>& candidates,
                                         const std::map<std::string, std::vector<std::string>>& cues) {
  const auto blank = context.find(kBlank);
  if (blank == std::string_view::npos) throw std::invalid_argument("context has no blank");
  const auto words = words_of(context.substr(0, blank));
  const std::size_t n = words.size();

  std::vector<CandidateScore> out;
  for (const auto& c : candidates) {
    double best = kImpossible;
    const auto it = cues.find(c);
    if (it != cues.end()) {
      for (const auto& cue : it->second) {
        const auto cw = words_of(cue);
        if (cw.empty() || cw.size() > n) continue;
        // Latest end position wins; scan backwards.
        for (std::size_t end = n; end >= cw.size(); --end) {
          if (std::equal(cw.begin(), cw.end(), words.begin() + (end - cw.size()))) {
            best = std::max(best, -static_cast<double>(n - end + 1));
            break;
          }
        }
      }
    }
    out.push_back({c, best, 1, std::nullopt});
  }
  return out;
}

std::unique_ptr<Scorer> make_scorer(const ScorerSpec& spec) {
  if (auto v = scorer_spec_violations(spec); !v.empty()) throw ValidationError(std::move(v));
  if (spec.family == ScorerFamily::kMock) return std::make_unique<MockScorer>(spec);
  return lm::make_lm_scorer(spec);
}

std::vector<CandidateScore> score_candidates(const ScorerSpec& spec, std::string_view context,
                                             const std::vector<std::string>& candidates,
                                             const MockHints* hints) {
  return make_scorer(spec)->score(context, candidates, hints);
}

std::vector<std::string> scored_item_violations(const ScoredItem& scored,
                                                const std::vector<std::string>& candidates) {
  std::vector<std::string> v;
  const std::string where = "scored item " + scored.item_id;
  auto check = [&](const std::vector<CandidateScore>& scores, const std::string& label) {
    std::map<std::string, int> seen;
    for (const auto& s : scores) {
      ++seen[s.candidate];
      if (s.log_prob > 0) v.push_back(where + ": " + label + " log_prob > 0 for " + s.candidate);
      if (std::isnan(s.log_prob)) v.push_back(where + ": " + label + " log_prob is NaN for " + s.candidate);
      if (s.n_subtokens < 1) v.push_back(where + ": " + label + " n_subtokens < 1 for " + s.candidate);
    }
    for (const auto& c : candidates) {
      const auto it = seen.find(c);
      if (it == seen.end()) {
        v.push_back(where + ": " + label + " missing candidate " + c);
      } else if (it->second > 1) {
        v.push_back(where + ": " + label + " scores candidate " + c + " more than once");
      }
    }
    for (const auto& [c, count] : seen) {
      if (std::find(candidates.begin(), candidates.end(), c) == candidates.end()) {
        v.push_back(where + ": " + label + " scores unknown candidate " + c);
      }
    }
  };
  check(scored.scores, "scores");
  check(scored.base_scores, "base_scores");
  return v;
}

}  // namespace cloze
