#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cloze {

inline constexpr std::string_view kBlank = "___";

enum class ListStyle {
  kSerialComma,  // 2 items -> "X, and Y"
  kPlain,        // 2 items -> "X and Y"
};

/// Joins items with the English conjunction "and". Three or more items always
/// use a serial comma: "X, Y, and Z".
std::string join_and(const std::vector<std::string>& items, ListStyle style);

std::string join(const std::vector<std::string>& items, std::string_view sep);

/// Replaces every "{name}" in `pattern` with `values[name]`. Throws
/// std::invalid_argument on a slot with no value.
std::string fill(std::string_view pattern,
                 const std::map<std::string, std::string>& values);

/// Names of the "{...}" slots in `pattern`, in order of first appearance.
std::vector<std::string> slots_of(std::string_view pattern);

std::size_t count_occurrences(std::string_view haystack, std::string_view needle);

/// Whitespace-separated words with surrounding punctuation trimmed. Inner
/// apostrophes are kept ("Sebastian's").
std::vector<std::string> words_of(std::string_view text);

/// Number of whole-word occurrences of a (possibly multi-word) phrase.
std::size_t count_whole_phrase(std::string_view text, std::string_view phrase);

std::string to_lower(std::string_view s);

/// Maps an English word to "a"/"an": the override table wins, otherwise a
/// vowel-initial heuristic.
class ArticleTable {
 public:
  ArticleTable() = default;
  explicit ArticleTable(std::map<std::string, std::string> overrides)
      : overrides_(std::move(overrides)) {}

  std::string article_for(std::string_view word) const;
  const std::map<std::string, std::string>& overrides() const { return overrides_; }

 private:
  std::map<std::string, std::string> overrides_;
};

}  // namespace cloze
