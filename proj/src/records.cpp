#include "cloze/records.hpp"

#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <system_error>

#include <unistd.h>

#include "cloze/error.hpp"

using nlohmann::json;

namespace cloze {

namespace {

template <typename T>
T parse_enum(const json& j, const char* field, std::optional<T> (*parse)(std::string_view)) {
  const auto s = j.at(field).get<std::string>();
  const auto v = parse(s);
  if (!v) throw ParseError(std::string(field) + ": unknown value '" + s + "'");
  return *v;
}

}  // namespace

void to_json(json& j, const Condition& c) {
  j = json{{"attractor_kind", to_string(c.attractor_kind)},
           {"n_attractors", c.n_attractors},
           {"entity_setting", to_string(c.entity_setting)},
           {"position_variant", to_string(c.position_variant)},
           {"n_fillers", c.n_fillers}};
}

void from_json(const json& j, Condition& c) {
  c.attractor_kind = parse_enum(j, "attractor_kind", &parse_attractor_kind);
  c.n_attractors = j.at("n_attractors").get<int>();
  c.entity_setting = parse_enum(j, "entity_setting", &parse_entity_setting);
  c.position_variant = parse_enum(j, "position_variant", &parse_position_variant);
  c.n_fillers = j.at("n_fillers").get<int>();
}

void to_json(json& j, const ProbeItem& item) {
  j = json{{"item_id", item.item_id},
           {"set_id", item.set_id},
           {"condition", item.condition},
           {"key_entity", item.key_entity},
           {"background_word", item.background_word},
           {"target_word", item.target_word},
           {"attractor_words", item.attractor_words},
           {"attractor_entities", item.attractor_entities},
           {"filler_phrases", item.filler_phrases},
           {"context", item.context},
           {"candidate_targets", item.candidate_targets},
           {"seed_trace", item.seed_trace},
           {"base_context", item.base_context}};
}

void from_json(const json& j, ProbeItem& item) {
  j.at("item_id").get_to(item.item_id);
  j.at("set_id").get_to(item.set_id);
  j.at("condition").get_to(item.condition);
  j.at("key_entity").get_to(item.key_entity);
  j.at("background_word").get_to(item.background_word);
  j.at("target_word").get_to(item.target_word);
  j.at("attractor_words").get_to(item.attractor_words);
  j.at("attractor_entities").get_to(item.attractor_entities);
  j.at("filler_phrases").get_to(item.filler_phrases);
  j.at("context").get_to(item.context);
  j.at("candidate_targets").get_to(item.candidate_targets);
  j.at("seed_trace").get_to(item.seed_trace);
  j.at("base_context").get_to(item.base_context);
}

void to_json(json& j, const ScorerSpec& spec) {
  j = json{{"family", to_string(spec.family)}, {"model_id", spec.model_id}, {"options", spec.options}};
}

void from_json(const json& j, ScorerSpec& spec) {
  spec.family = parse_enum(j, "family", &parse_scorer_family);
  j.at("model_id").get_to(spec.model_id);
  spec.options.clear();
  if (j.contains("options")) {
    for (const auto& [k, v] : j.at("options").items()) {
      spec.options[k] = v.is_string() ? v.get<std::string>() : v.dump();
    }
  }
}

void to_json(json& j, const CandidateScore& s) {
  j = json{{"candidate", s.candidate},
           {"log_prob", is_impossible(s.log_prob) ? json(nullptr) : json(s.log_prob)},
           {"n_subtokens", s.n_subtokens}};
  if (s.error) j["error"] = *s.error;
}

void from_json(const json& j, CandidateScore& s) {
  j.at("candidate").get_to(s.candidate);
  const auto& lp = j.at("log_prob");
  s.log_prob = lp.is_null() ? kImpossible : lp.get<double>();
  j.at("n_subtokens").get_to(s.n_subtokens);
  s.error = j.contains("error") ? std::optional(j.at("error").get<std::string>()) : std::nullopt;
}

void to_json(json& j, const ScoredItem& s) {
  j = json{{"item_id", s.item_id},
           {"context", s.context},
           {"scores", s.scores},
           {"base_scores", s.base_scores},
           {"scorer", s.scorer}};
}

void from_json(const json& j, ScoredItem& s) {
  j.at("item_id").get_to(s.item_id);
  j.at("context").get_to(s.context);
  j.at("scores").get_to(s.scores);
  j.at("base_scores").get_to(s.base_scores);
  j.at("scorer").get_to(s.scorer);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw std::runtime_error("cannot create " + path.parent_path().string() + ": " + ec.message());
  auto tmp = path;
  tmp += ".tmp-" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string() + ": " + std::strerror(errno));
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw std::runtime_error("cannot write " + tmp.string() + ": " + std::strerror(errno));
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot replace " + path.string() + ": " + ec.message());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string() + ": " + std::strerror(errno));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<json> read_jsonl(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<json> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw_record_error(path, n, e.what());
    }
  }
  return out;
}

void throw_record_error(const std::filesystem::path& path, std::size_t line, std::string_view what) {
  throw ParseError(path.string() + ":" + std::to_string(line) + ": " + std::string(what));
}

}  // namespace cloze
