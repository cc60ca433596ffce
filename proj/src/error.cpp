#include "cloze/error.hpp"

#include "cloze/text.hpp"

namespace cloze {

ValidationError::ValidationError(std::vector<std::string> violations)
    : std::runtime_error("validation failed: " + join(violations, "; ")),
      violations_(std::move(violations)) {}

}  // namespace cloze
