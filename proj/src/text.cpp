#include "cloze/text.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace cloze {

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += sep;
    out += items[i];
  }
  return out;
}

std::string join_and(const std::vector<std::string>& items, ListStyle style) {
  switch (items.size()) {
    case 0:
      return {};
    case 1:
      return items[0];
    case 2:
      return items[0] + (style == ListStyle::kSerialComma ? ", and " : " and ") +
             items[1];
    default: {
      std::string out;
      for (std::size_t i = 0; i + 1 < items.size(); ++i) out += items[i] + ", ";
      return out + "and " + items.back();
    }
  }
}

std::vector<std::string> slots_of(std::string_view pattern) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while ((pos = pattern.find('{', pos)) != std::string_view::npos) {
    const auto close = pattern.find('}', pos);
    if (close == std::string_view::npos) break;
    std::string name(pattern.substr(pos + 1, close - pos - 1));
    if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
    pos = close + 1;
  }
  return out;
}

std::string fill(std::string_view pattern,
                 const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(pattern.size() + 32);
  std::size_t pos = 0;
  while (pos < pattern.size()) {
    const auto open = pattern.find('{', pos);
    if (open == std::string_view::npos) {
      out.append(pattern.substr(pos));
      break;
    }
    const auto close = pattern.find('}', open);
    if (close == std::string_view::npos) {
      out.append(pattern.substr(pos));
      break;
    }
    out.append(pattern.substr(pos, open - pos));
    const std::string name(pattern.substr(open + 1, close - open - 1));
    const auto it = values.find(name);
    if (it == values.end()) {
      throw std::invalid_argument("no value for slot {" + name + "} in \"" +
                                  std::string(pattern) + "\"");
    }
    out += it->second;
    pos = close + 1;
  }
  return out;
}

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  if (needle.empty()) return 0;
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

namespace {

bool is_trim_char(unsigned char c) {
  return std::ispunct(c) && c != '_' && c != '\'';
}

}  // namespace

std::vector<std::string> words_of(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) {
      std::size_t b = i, e = j;
      while (b < e && is_trim_char(static_cast<unsigned char>(text[b]))) ++b;
      while (e > b && is_trim_char(static_cast<unsigned char>(text[e - 1]))) --e;
      if (e > b) out.emplace_back(text.substr(b, e - b));
    }
    i = j;
  }
  return out;
}

std::size_t count_whole_phrase(std::string_view text, std::string_view phrase) {
  const auto words = words_of(text);
  const auto needle = words_of(phrase);
  if (needle.empty() || needle.size() > words.size()) return 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i + needle.size() <= words.size(); ++i) {
    if (std::equal(needle.begin(), needle.end(), words.begin() + i)) ++n;
  }
  return n;
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string ArticleTable::article_for(std::string_view word) const {
  const auto key = to_lower(word);
  if (const auto it = overrides_.find(key); it != overrides_.end()) return it->second;
  if (key.empty()) return "a";
  return std::string_view("aeiou").find(key.front()) != std::string_view::npos ? "an"
                                                                                : "a";
}

}  // namespace cloze
