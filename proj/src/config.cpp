#include "cloze/config.hpp"

#include <algorithm>
#include <set>

#include "cloze/error.hpp"
#include "cloze/records.hpp"

using nlohmann::json;

namespace cloze {

namespace {

const std::set<std::string> kConfigKeys = {"itembank", "conditions", "seed",    "items_per_cell",
                                           "scorers",  "output_dir", "workers", "metrics"};
const std::set<std::string> kBlockKeys = {"attractor_kind", "n_attractors", "entity_setting",
                                          "position_variant", "n_fillers"};

std::vector<json> as_list(const json& v) {
  if (v.is_array()) return v.get<std::vector<json>>();
  return {v};
}

template <typename T>
std::vector<T> enum_values(const json& block, const char* key, std::optional<T> (*parse)(std::string_view),
                           const std::string& where, std::vector<std::string>& errors) {
  std::vector<T> out;
  for (const auto& v : as_list(block.at(key))) {
    std::optional<T> parsed;
    if (v.is_string()) parsed = parse(v.get<std::string>());
    if (!parsed) {
      errors.push_back(where + "." + key + ": unknown value " + v.dump());
    } else {
      out.push_back(*parsed);
    }
  }
  return out;
}

std::vector<int> int_values(const json& block, const char* key, int lo, int hi, const std::string& where,
                            std::vector<std::string>& errors) {
  std::vector<int> out;
  for (const auto& v : as_list(block.at(key))) {
    if (!v.is_number_integer() || v.get<long long>() < lo || v.get<long long>() > hi) {
      errors.push_back(where + "." + key + ": expected an integer in [" + std::to_string(lo) + ", " +
                       std::to_string(hi) + "], got " + v.dump());
    } else {
      out.push_back(v.get<int>());
    }
  }
  return out;
}

json block(std::vector<std::string> kinds, std::vector<int> ns, std::vector<std::string> settings,
           std::string position, std::vector<int> fillers) {
  return json{{"attractor_kind", kinds},
              {"n_attractors", ns},
              {"entity_setting", settings},
              {"position_variant", position},
              {"n_fillers", fillers}};
}

}  // namespace

json default_condition_space() {
  return json::array({
      block({"B_TYPE", "T_TYPE", "UNRELATED"}, {0, 1, 2, 3}, {"MULTI", "SINGLE"}, "AFTER_FACT", {0, 1, 2}),
      block({"B_TYPE", "T_TYPE"}, {0, 1, 2, 3}, {"MULTI", "SINGLE"}, "BETWEEN", {0}),
      block({"B_TYPE", "T_TYPE"}, {1, 2, 3}, {"MULTI"}, "LATE_ENTITY", {0}),
  });
}

RunConfig default_config() {
  RunConfig c;
  c.condition_space = default_condition_space();
  c.scorers = {parse_scorer_spec("mock:oracle")};
  return c;
}

std::vector<Condition> expand_condition_space(const json& blocks, std::vector<std::string>& errors) {
  std::vector<Condition> out;
  if (!blocks.is_array()) {
    errors.push_back("conditions: expected a list of blocks");
    return out;
  }
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const std::string where = "conditions[" + std::to_string(b) + "]";
    const auto& blk = blocks[b];
    if (!blk.is_object()) {
      errors.push_back(where + ": expected an object");
      continue;
    }
    bool complete = true;
    for (const auto& [k, v] : blk.items()) {
      if (!kBlockKeys.contains(k)) errors.push_back(where + ": unknown key '" + k + "'");
    }
    for (const auto& k : kBlockKeys) {
      if (!blk.contains(k) && k != "n_fillers" && k != "position_variant") {
        errors.push_back(where + ": missing '" + k + "'");
        complete = false;
      }
    }
    if (!complete) continue;
    json full = blk;
    if (!full.contains("n_fillers")) full["n_fillers"] = 0;
    if (!full.contains("position_variant")) full["position_variant"] = "AFTER_FACT";

    const std::size_t before = errors.size();
    const auto kinds = enum_values(full, "attractor_kind", &parse_attractor_kind, where, errors);
    const auto ns = int_values(full, "n_attractors", 0, kMaxAttractors, where, errors);
    const auto settings = enum_values(full, "entity_setting", &parse_entity_setting, where, errors);
    const auto positions = enum_values(full, "position_variant", &parse_position_variant, where, errors);
    const auto fillers = int_values(full, "n_fillers", 0, 1000, where, errors);
    if (errors.size() != before) continue;

    std::size_t added = 0;
    for (const auto k : kinds) {
      for (const int n : ns) {
        for (const auto s : settings) {
          for (const auto p : positions) {
            for (const int f : fillers) {
              const Condition c{k, n, s, p, f};
              if (!is_valid(c)) continue;
              ++added;
              if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
            }
          }
        }
      }
    }
    if (added == 0) errors.push_back(where + ": yields no valid conditions");
  }
  return out;
}

std::vector<Condition> expand_condition_space(const json& blocks) {
  std::vector<std::string> errors;
  auto out = expand_condition_space(blocks, errors);
  if (!errors.empty()) throw ValidationError(std::move(errors));
  return out;
}

RunConfig apply_config(const json& doc, RunConfig base) {
  std::vector<std::string> errors;
  if (!doc.is_object()) throw ValidationError({"config: top level must be an object"});
  RunConfig c = std::move(base);
  for (const auto& [key, value] : doc.items()) {
    if (!kConfigKeys.contains(key)) {
      errors.push_back("config: unknown key '" + key + "'");
      continue;
    }
    if (key == "itembank") {
      if (value.is_null()) {
        c.itembank.reset();
      } else if (value.is_string()) {
        c.itembank = value.get<std::string>();
      } else {
        errors.push_back("itembank: expected a path or null");
      }
    } else if (key == "conditions") {
      c.condition_space = value;
      expand_condition_space(value, errors);
    } else if (key == "seed") {
      if (value.is_number_unsigned() || (value.is_number_integer() && value.get<std::int64_t>() >= 0)) {
        c.seed = value.get<std::uint64_t>();
      } else {
        errors.push_back("seed: expected a nonnegative integer, got " + value.dump());
      }
    } else if (key == "items_per_cell") {
      if (value == "exhaustive") {
        c.items_per_cell = kExhaustive;
      } else if (value.is_number_integer() &&
                 (value.is_number_unsigned() ? value.get<std::uint64_t>() > 0 : value.get<std::int64_t>() > 0)) {
        c.items_per_cell = value.get<std::size_t>();
      } else {
        errors.push_back("items_per_cell: expected a positive integer or \"exhaustive\", got " + value.dump());
      }
    } else if (key == "scorers") {
      if (!value.is_array()) {
        errors.push_back("scorers: expected a list");
        continue;
      }
      c.scorers.clear();
      for (std::size_t i = 0; i < value.size(); ++i) {
        const std::string where = "scorers[" + std::to_string(i) + "]";
        try {
          if (value[i].is_string()) {
            c.scorers.push_back(parse_scorer_spec(value[i].get<std::string>()));
            continue;
          }
          if (!value[i].is_object()) {
            errors.push_back(where + ": expected \"family:model\" or an object");
            continue;
          }
          for (const auto& [k, v] : value[i].items()) {
            if (k != "family" && k != "model_id" && k != "options") {
              errors.push_back(where + ": unknown key '" + k + "'");
            }
          }
          auto spec = value[i].get<ScorerSpec>();
          for (auto& v : scorer_spec_violations(spec)) errors.push_back(where + ": " + v);
          c.scorers.push_back(std::move(spec));
        } catch (const ValidationError& e) {
          for (const auto& v : e.violations()) errors.push_back(where + ": " + v);
        } catch (const std::exception& e) {
          errors.push_back(where + ": " + e.what());
        }
      }
    } else if (key == "output_dir") {
      if (value.is_string() && !value.get<std::string>().empty()) {
        c.output_dir = value.get<std::string>();
      } else {
        errors.push_back("output_dir: expected a nonempty path");
      }
    } else if (key == "workers") {
      if (value.is_number_integer() && value.get<long long>() >= 1 && value.get<long long>() <= 256) {
        c.workers = value.get<int>();
      } else {
        errors.push_back("workers: expected an integer in [1, 256], got " + value.dump());
      }
    } else if (key == "metrics") {
      if (!value.is_object()) {
        errors.push_back("metrics: expected an object");
        continue;
      }
      for (const auto& [k, v] : value.items()) {
        if (k != "ratio_statistic") {
          errors.push_back("metrics: unknown key '" + k + "'");
        } else if (const auto s = v.is_string() ? parse_statistic(v.get<std::string>()) : std::nullopt) {
          c.ratio_statistic = *s;
        } else {
          errors.push_back("metrics.ratio_statistic: expected \"mean\" or \"median\", got " + v.dump());
        }
      }
    }
  }
  if (!errors.empty()) throw ValidationError(std::move(errors));
  return c;
}

std::vector<std::string> config_violations(const RunConfig& c) {
  std::vector<std::string> v;
  if (c.itembank && !std::filesystem::exists(*c.itembank)) {
    v.push_back("itembank: " + c.itembank->string() + " does not exist");
  }
  if (c.scorers.empty()) v.push_back("scorers: at least one scorer is required");
  std::set<std::string> ids;
  for (const auto& s : c.scorers) {
    for (auto& e : scorer_spec_violations(s)) v.push_back("scorers: " + e);
    if (!ids.insert(s.id()).second) v.push_back("scorers: '" + s.id() + "' listed twice");
  }
  if (c.workers < 1) v.push_back("workers: must be at least 1");
  if (c.items_per_cell && *c.items_per_cell == 0) v.push_back("items_per_cell: must be positive");
  if (c.output_dir.empty()) v.push_back("output_dir: must not be empty");
  std::vector<std::string> space_errors;
  const auto conditions = expand_condition_space(c.condition_space, space_errors);
  v.insert(v.end(), space_errors.begin(), space_errors.end());
  if (space_errors.empty() && conditions.empty()) v.push_back("conditions: no conditions to generate");
  return v;
}

json config_snapshot(const RunConfig& c) {
  json scorers = json::array();
  for (const auto& s : c.scorers) scorers.push_back(s);
  return json{{"itembank", c.itembank ? json(c.itembank->string()) : json(nullptr)},
              {"conditions", c.condition_space},
              {"seed", c.seed},
              {"items_per_cell", c.items_per_cell ? json(*c.items_per_cell) : json("exhaustive")},
              {"scorers", scorers},
              {"metrics", {{"ratio_statistic", to_string(c.ratio_statistic)}}}};
}

}  // namespace cloze
