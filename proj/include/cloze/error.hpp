#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace cloze {

/// Malformed structured input (JSON syntax, wrong value types).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One or more invariant violations. Every violation is kept so callers can
/// report them all at once.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<std::string> violations);

  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

/// A condition cannot be realized from the bank (e.g. too few set members).
class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ScorerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The requested model backend or checkpoint could not be resolved.
class BackendUnavailable : public ScorerError {
 public:
  using ScorerError::ScorerError;
};

}  // namespace cloze
