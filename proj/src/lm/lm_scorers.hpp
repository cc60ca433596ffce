#pragma once

#include <memory>

#include "cloze/scoring.hpp"

namespace cloze::lm {

/// MASKED or CAUSAL scorer backed by a local checkpoint.
std::unique_ptr<Scorer> make_lm_scorer(const ScorerSpec& spec);

}  // namespace cloze::lm
