#include "cloze/itembank.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cloze/digest.hpp"
#include "cloze/error.hpp"
#include "cloze/generator.hpp"

namespace cloze {

using nlohmann::json;

std::vector<std::string> SemanticSet::backgrounds() const {
  std::vector<std::string> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(p.background);
  return out;
}

std::vector<std::string> SemanticSet::targets() const {
  std::vector<std::string> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(p.target);
  return out;
}

namespace {

// Checks that `pattern` uses every slot in `required` and nothing outside
// `required` + `optional`.
void check_slots(std::vector<std::string>& errors, const std::string& where,
                 const std::string& pattern, const std::set<std::string>& required,
                 const std::set<std::string>& optional = {}) {
  if (pattern.empty()) {
    errors.push_back(where + ": empty frame");
    return;
  }
  const auto used = slots_of(pattern);
  for (const auto& r : required) {
    if (std::find(used.begin(), used.end(), r) == used.end()) {
      errors.push_back(where + ": missing slot {" + r + "}");
    }
  }
  for (const auto& u : used) {
    if (!required.contains(u) && !optional.contains(u)) {
      errors.push_back(where + ": unexpected slot {" + u + "}");
    }
  }
}

template <typename Range>
bool has_duplicates(const Range& r) {
  std::set<std::string> seen;
  for (const auto& x : r) {
    if (!seen.insert(x).second) return true;
  }
  return false;
}

}  // namespace

ItemBank ItemBank::validated(std::vector<SemanticSet> sets,
                             std::map<std::string, BaseTemplate> templates,
                             std::vector<std::string> names,
                             std::vector<std::string> aliases,
                             std::vector<std::string> fillers, ArticleTable articles) {
  std::vector<std::string> errors;

  if (sets.empty()) errors.push_back("sets: at least one semantic set is required");

  std::set<std::string> known_names(names.begin(), names.end());
  known_names.insert(aliases.begin(), aliases.end());

  std::set<std::string> set_ids;
  std::set<std::string> set_words;
  for (const auto& s : sets) {
    const std::string where = "set '" + s.id + "'";
    if (s.id.empty()) errors.push_back("sets: set with empty id");
    if (!set_ids.insert(s.id).second) errors.push_back(where + ": duplicate set id");
    if (s.pairs.size() < 2) {
      errors.push_back(where + ": needs at least 2 pairs for within-set competition, has " +
                       std::to_string(s.pairs.size()));
    }
    for (std::size_t i = 0; i < s.pairs.size(); ++i) {
      const auto& p = s.pairs[i];
      const std::string pw = where + " pair " + std::to_string(i);
      if (p.background.empty()) errors.push_back(pw + ": empty background word");
      if (p.target.empty()) errors.push_back(pw + ": empty target word");
      if (p.entity.empty()) {
        errors.push_back(pw + ": empty entity");
      } else if (!known_names.contains(p.entity)) {
        errors.push_back(pw + ": entity '" + p.entity + "' is not in names or aliases");
      }
      for (const auto& w : words_of(p.background)) set_words.insert(to_lower(w));
      for (const auto& w : words_of(p.target)) set_words.insert(to_lower(w));
    }
    if (has_duplicates(s.backgrounds())) errors.push_back(where + ": duplicate background word");
    if (has_duplicates(s.targets())) errors.push_back(where + ": duplicate target word");
  }

  for (const auto& s : sets) {
    if (!templates.contains(s.id)) errors.push_back("templates: no template for set '" + s.id + "'");
  }
  for (auto& [id, t] : templates) {
    const std::string where = "templates '" + id + "'";
    if (!set_ids.contains(id)) errors.push_back(where + ": refers to unknown set");
    t.set_id = id;
    check_slots(errors, where + ".fact", t.fact, {"entity", "background"}, {"article"});
    if (t.fact.rfind("{entity} ", 0) != 0) {
      errors.push_back(where + ".fact: must begin with \"{entity} \"");
    }
    check_slots(errors, where + ".query", t.query, {"entity"});
    if (count_occurrences(t.query, kBlank) != 1) {
      errors.push_back(where + ".query: must contain exactly one blank marker ___");
    }
    check_slots(errors, where + ".between_fact", t.between_fact, {"background"}, {"article"});
    check_slots(errors, where + ".single.b_type.frame", t.single_b.frame, {"words"});
    check_slots(errors, where + ".single.t_type.frame", t.single_t.frame, {"words"});
    check_slots(errors, where + ".single.b_type.word", t.single_b.word, {"word"}, {"article"});
    check_slots(errors, where + ".single.t_type.word", t.single_t.word, {"word"}, {"article"});
    check_slots(errors, where + ".multi.b_type", t.multi_b, {"entity2", "word"}, {"article"});
    check_slots(errors, where + ".multi.t_type", t.multi_t, {"entity2", "word"}, {"article"});
  }

  if (names.size() != 6) {
    errors.push_back("names: exactly 6 entity names required, got " +
                     std::to_string(names.size()));
  }
  if (has_duplicates(names)) errors.push_back("names: duplicate entity name");
  for (const auto& n : names) {
    if (n.empty()) errors.push_back("names: empty entity name");
  }
  for (const auto& a : aliases) {
    if (std::find(names.begin(), names.end(), a) != names.end()) {
      errors.push_back("aliases: '" + a + "' duplicates a name");
    }
  }

  if (has_duplicates(fillers)) errors.push_back("fillers: duplicate filler phrase");
  for (const auto& f : fillers) {
    if (f.empty()) {
      errors.push_back("fillers: empty filler phrase");
      continue;
    }
    for (const auto& w : words_of(f)) {
      if (set_words.contains(to_lower(w))) {
        errors.push_back("fillers: '" + f + "' contains set word '" + w + "'");
      }
      if (known_names.contains(w)) {
        errors.push_back("fillers: '" + f + "' contains entity name '" + w + "'");
      }
    }
  }

  if (!errors.empty()) throw ValidationError(std::move(errors));

  ItemBank bank;
  bank.sets_ = std::move(sets);
  bank.templates_ = std::move(templates);
  bank.names_ = std::move(names);
  bank.aliases_ = std::move(aliases);
  bank.fillers_ = std::move(fillers);
  bank.articles_ = std::move(articles);
  return bank;
}

const SemanticSet& ItemBank::set(std::string_view id) const {
  for (const auto& s : sets_) {
    if (s.id == id) return s;
  }
  throw std::out_of_range("unknown set id '" + std::string(id) + "'");
}

const BaseTemplate& ItemBank::templ(std::string_view set_id) const {
  const auto it = templates_.find(std::string(set_id));
  if (it == templates_.end()) {
    throw std::out_of_range("no template for set '" + std::string(set_id) + "'");
  }
  return it->second;
}

std::size_t ItemBank::base_item_count() const {
  std::size_t n = 0;
  for (const auto& s : sets_) n += s.pairs.size();
  return n;
}

bool ItemBank::operator==(const ItemBank& other) const {
  return sets_ == other.sets_ && templates_ == other.templates_ &&
         names_ == other.names_ && aliases_ == other.aliases_ &&
         fillers_ == other.fillers_ && articles_.overrides() == other.articles_.overrides();
}

json ItemBank::to_json() const {
  json doc;
  doc["sets"] = json::array();
  for (const auto& s : sets_) {
    json js{{"id", s.id}, {"relation", s.relation}, {"pairs", json::array()}};
    for (const auto& p : s.pairs) {
      js["pairs"].push_back(
          {{"background", p.background}, {"target", p.target}, {"entity", p.entity}});
    }
    doc["sets"].push_back(std::move(js));
  }
  doc["templates"] = json::object();
  for (const auto& [id, t] : templates_) {
    doc["templates"][id] = {
        {"fact", t.fact},
        {"query", t.query},
        {"between_fact", t.between_fact},
        {"single",
         {{"b_type", {{"frame", t.single_b.frame}, {"word", t.single_b.word}}},
          {"t_type", {{"frame", t.single_t.frame}, {"word", t.single_t.word}}}}},
        {"multi", {{"b_type", t.multi_b}, {"t_type", t.multi_t}}},
    };
  }
  doc["names"] = names_;
  doc["aliases"] = aliases_;
  doc["fillers"] = fillers_;
  doc["articles"] = articles_.overrides();
  return doc;
}

std::string ItemBank::checksum() const { return sha256_hex(to_json().dump()); }

namespace {

const std::set<std::string> kTopLevelKeys = {"sets",  "templates", "names",
                                             "aliases", "fillers", "articles"};

std::string get_string(const json& j, const char* key) {
  if (!j.contains(key)) return {};
  return j.at(key).get<std::string>();
}

SingleFrame parse_single(const json& j) {
  return SingleFrame{get_string(j, "frame"), get_string(j, "word")};
}

}  // namespace

ItemBank load_itembank(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("itembank: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("itembank: top level must be an object");

  std::vector<std::string> errors;
  for (const auto& [key, _] : doc.items()) {
    if (!kTopLevelKeys.contains(key)) errors.push_back("unknown top-level key '" + key + "'");
  }
  for (const char* required : {"sets", "templates", "names", "fillers"}) {
    if (!doc.contains(required)) errors.push_back(std::string("missing key '") + required + "'");
  }
  if (!errors.empty()) throw ValidationError(std::move(errors));

  try {
    std::vector<SemanticSet> sets;
    for (const auto& js : doc.at("sets")) {
      SemanticSet s;
      s.id = get_string(js, "id");
      s.relation = get_string(js, "relation");
      for (const auto& jp : js.at("pairs")) {
        s.pairs.push_back(WordPair{get_string(jp, "background"), get_string(jp, "target"),
                                   get_string(jp, "entity")});
      }
      sets.push_back(std::move(s));
    }
    std::map<std::string, BaseTemplate> templates;
    for (const auto& [id, jt] : doc.at("templates").items()) {
      BaseTemplate t;
      t.set_id = id;
      t.fact = get_string(jt, "fact");
      t.query = get_string(jt, "query");
      t.between_fact = get_string(jt, "between_fact");
      if (jt.contains("single")) {
        const auto& js = jt.at("single");
        if (js.contains("b_type")) t.single_b = parse_single(js.at("b_type"));
        if (js.contains("t_type")) t.single_t = parse_single(js.at("t_type"));
      }
      if (jt.contains("multi")) {
        t.multi_b = get_string(jt.at("multi"), "b_type");
        t.multi_t = get_string(jt.at("multi"), "t_type");
      }
      templates.emplace(id, std::move(t));
    }
    auto names = doc.at("names").get<std::vector<std::string>>();
    auto aliases = doc.value("aliases", std::vector<std::string>{});
    auto fillers = doc.at("fillers").get<std::vector<std::string>>();
    auto articles = doc.value("articles", std::map<std::string, std::string>{});
    return ItemBank::validated(std::move(sets), std::move(templates), std::move(names),
                               std::move(aliases), std::move(fillers),
                               ArticleTable(std::move(articles)));
  } catch (const json::exception& e) {
    throw ParseError(std::string("itembank: ") + e.what());
  }
}

ItemBank load_itembank_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("itembank: cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_itembank(ss.str());
}

ItemBank default_itembank() {
  static const ItemBank bank = load_itembank(default_itembank_document());
  return bank;
}

std::vector<BaseItem> base_items(const ItemBank& bank) {
  std::vector<BaseItem> out;
  out.reserve(bank.base_item_count());
  for (std::size_t si = 0; si < bank.sets().size(); ++si) {
    const auto& s = bank.sets()[si];
    const auto& t = bank.templ(s.id);
    for (std::size_t pi = 0; pi < s.pairs.size(); ++pi) {
      const auto& p = s.pairs[pi];
      RenderParts parts;
      parts.key_entity = p.entity;
      parts.background = p.background;
      out.push_back(BaseItem{s.id, si, pi, p.entity, p.background, p.target,
                             render_context(t, parts, bank.articles())});
    }
  }
  return out;
}

}  // namespace cloze
