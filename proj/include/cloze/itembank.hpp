#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cloze/text.hpp"

namespace cloze {

struct WordPair {
  std::string background;
  std::string target;
  /// Key entity used for this pair's published base context.
  std::string entity;

  bool operator==(const WordPair&) const = default;
};

/// A relation whose pairs compete with each other: every target in the set is
/// a candidate completion for every item built from the set.
struct SemanticSet {
  std::string id;
  std::string relation;
  std::vector<WordPair> pairs;

  std::vector<std::string> backgrounds() const;
  std::vector<std::string> targets() const;

  bool operator==(const SemanticSet&) const = default;
};

/// Single-entity attractor phrasing: `frame` holds a {words} slot that receives
/// the conjoined list of `word`-rendered attractors.
struct SingleFrame {
  std::string frame;
  std::string word;

  bool operator==(const SingleFrame&) const = default;
};

struct BaseTemplate {
  std::string set_id;
  std::string fact;          // "{entity} lives in {background}"
  std::string query;         // "The capital of {entity}'s country is ___"
  std::string between_fact;  // fact phrasing after intervening attractors
  SingleFrame single_b;
  SingleFrame single_t;
  std::string multi_b;  // "{entity2} lives in {word}"
  std::string multi_t;

  bool operator==(const BaseTemplate&) const = default;
};

struct BaseItem {
  std::string set_id;
  std::size_t set_index = 0;
  std::size_t pair_index = 0;
  std::string entity;
  std::string background;
  std::string target;
  std::string context;
};

/// Immutable linguistic inventory: semantic sets, per-set phrasing templates,
/// entity names and filler phrases. Construct through load_itembank() or
/// ItemBank::validated(), which enforce every invariant.
class ItemBank {
 public:
  static ItemBank validated(std::vector<SemanticSet> sets,
                            std::map<std::string, BaseTemplate> templates,
                            std::vector<std::string> names,
                            std::vector<std::string> aliases,
                            std::vector<std::string> fillers, ArticleTable articles);

  const std::vector<SemanticSet>& sets() const { return sets_; }
  const SemanticSet& set(std::string_view id) const;
  const BaseTemplate& templ(std::string_view set_id) const;
  const std::map<std::string, BaseTemplate>& templates() const { return templates_; }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<std::string>& aliases() const { return aliases_; }
  const std::vector<std::string>& fillers() const { return fillers_; }
  const ArticleTable& articles() const { return articles_; }

  std::size_t base_item_count() const;

  nlohmann::json to_json() const;
  /// Hex SHA-256 of the canonical JSON serialization.
  std::string checksum() const;

  bool operator==(const ItemBank& other) const;

 private:
  ItemBank() = default;

  std::vector<SemanticSet> sets_;
  std::map<std::string, BaseTemplate> templates_;
  std::vector<std::string> names_;
  std::vector<std::string> aliases_;
  std::vector<std::string> fillers_;
  ArticleTable articles_;
};

/// Parses and validates an item bank document. Throws ParseError on malformed
/// JSON or wrong value types and ValidationError listing every violation.
ItemBank load_itembank(std::string_view document);
ItemBank load_itembank_file(const std::filesystem::path& path);
ItemBank default_itembank();
std::string_view default_itembank_document();

/// One base item per pair, in set order, with the published entity.
std::vector<BaseItem> base_items(const ItemBank& bank);

}  // namespace cloze
