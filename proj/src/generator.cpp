#include "cloze/generator.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <stdexcept>

#include "cloze/error.hpp"
#include "cloze/rng.hpp"
#include "cloze/text.hpp"

namespace cloze {

namespace {

constexpr std::string_view kEntityPrefix = "{entity} ";

// Stream tags keep filler, cell and item randomness independent.
constexpr std::uint64_t kFillerStream = 0xF1;
constexpr std::uint64_t kCellStream = 0xCE;

std::map<std::string, std::string> word_values(const std::string& word,
                                               const ArticleTable& articles) {
  return {{"word", word}, {"article", articles.article_for(word)}};
}

std::string single_vp(const BaseTemplate& t, AttractorKind kind,
                      const std::vector<std::string>& words,
                      const ArticleTable& articles) {
  const SingleFrame& frame = kind == AttractorKind::kBType ? t.single_b : t.single_t;
  std::vector<std::string> rendered;
  rendered.reserve(words.size());
  for (const auto& w : words) rendered.push_back(fill(frame.word, word_values(w, articles)));
  return fill(frame.frame, {{"words", join_and(rendered, ListStyle::kPlain)}});
}

std::vector<std::string> multi_clauses(const BaseTemplate& t, const RenderParts& parts,
                                       const ArticleTable& articles) {
  if (parts.attractor_entities.size() != parts.attractor_words.size()) {
    throw std::invalid_argument("MULTI setting needs one entity per attractor");
  }
  std::vector<std::string> out;
  for (std::size_t i = 0; i < parts.attractor_words.size(); ++i) {
    const auto& e = parts.attractor_entities[i];
    const auto& w = parts.attractor_words[i];
    if (parts.kind == AttractorKind::kUnrelated) {
      out.push_back(e + " " + w);
    } else {
      auto values = word_values(w, articles);
      values["entity2"] = e;
      out.push_back(fill(parts.kind == AttractorKind::kBType ? t.multi_b : t.multi_t, values));
    }
  }
  return out;
}

}  // namespace

std::string render_context(const BaseTemplate& t, const RenderParts& parts,
                           const ArticleTable& articles) {
  const std::map<std::string, std::string> fact_values = {
      {"entity", parts.key_entity},
      {"background", parts.background},
      {"article", articles.article_for(parts.background)},
  };
  const std::string fact_vp = fill(std::string_view(t.fact).substr(kEntityPrefix.size()), fact_values);

  auto key_clause = [&](const std::string& vp) {
    if (parts.filler_phrases.empty()) return parts.key_entity + " " + vp;
    auto vps = parts.filler_phrases;
    vps.push_back(vp);
    return parts.key_entity + " " + join_and(vps, ListStyle::kPlain);
  };

  const bool related = parts.kind != AttractorKind::kUnrelated;
  const ListStyle clause_style = related ? ListStyle::kSerialComma : ListStyle::kPlain;
  const bool multi = parts.setting == EntitySetting::kMulti;

  std::string sentence;
  if (parts.attractor_words.empty()) {
    sentence = key_clause(fact_vp);
  } else {
    switch (parts.position) {
      case PositionVariant::kAfterFact: {
        std::vector<std::string> clauses{key_clause(fact_vp)};
        if (multi) {
          for (auto& c : multi_clauses(t, parts, articles)) clauses.push_back(std::move(c));
        } else if (related) {
          clauses.push_back(single_vp(t, parts.kind, parts.attractor_words, articles));
        } else {
          clauses.insert(clauses.end(), parts.attractor_words.begin(),
                         parts.attractor_words.end());
        }
        sentence = join_and(clauses, clause_style);
        break;
      }
      case PositionVariant::kBetween: {
        const std::string between = fill(t.between_fact, fact_values);
        std::string vp;
        if (multi) {
          vp = "knows that " + join(multi_clauses(t, parts, articles), " and ");
        } else if (related) {
          vp = single_vp(t, parts.kind, parts.attractor_words, articles);
        } else {
          vp = join_and(parts.attractor_words, ListStyle::kPlain);
        }
        sentence = key_clause(vp + " and " + between);
        break;
      }
      case PositionVariant::kLateEntity: {
        if (!multi) throw std::invalid_argument("LATE_ENTITY requires the MULTI setting");
        auto clauses = multi_clauses(t, parts, articles);
        clauses.push_back(key_clause(fact_vp));
        sentence = join_and(clauses, clause_style);
        break;
      }
    }
  }
  return sentence + ". " + fill(t.query, {{"entity", parts.key_entity}});
}

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    const std::uint64_t num = n - k + i;
    if (r > std::numeric_limits<std::uint64_t>::max() / num) {
      return std::numeric_limits<std::uint64_t>::max();
    }
    r = r * num / i;
  }
  return r;
}

std::vector<std::size_t> unrank_combination(std::size_t n, std::size_t k, std::uint64_t rank) {
  std::vector<std::size_t> out;
  out.reserve(k);
  std::size_t next = 0;
  for (std::size_t slot = 0; slot < k; ++slot) {
    for (std::size_t x = next; x < n; ++x) {
      const std::uint64_t with_x = binomial(n - x - 1, k - slot - 1);
      if (rank < with_x) {
        out.push_back(x);
        next = x + 1;
        break;
      }
      rank -= with_x;
    }
  }
  if (out.size() != k) throw std::out_of_range("combination rank out of range");
  return out;
}

std::uint64_t condition_code(const Condition& c) {
  return static_cast<std::uint64_t>(c.attractor_kind) * 100000 +
         static_cast<std::uint64_t>(c.n_attractors) * 10000 +
         static_cast<std::uint64_t>(c.entity_setting) * 1000 +
         static_cast<std::uint64_t>(c.position_variant) * 100 +
         static_cast<std::uint64_t>(c.n_fillers);
}

Condition condition_from_code(std::uint64_t code) {
  Condition c;
  c.attractor_kind = static_cast<AttractorKind>(code / 100000);
  c.n_attractors = static_cast<int>(code / 10000 % 10);
  c.entity_setting = static_cast<EntitySetting>(code / 1000 % 10);
  c.position_variant = static_cast<PositionVariant>(code / 100 % 10);
  c.n_fillers = static_cast<int>(code % 100);
  return c;
}

Condition counterpart_condition(const Condition& c) {
  Condition out = c;
  out.n_attractors = 0;
  if (out.position_variant == PositionVariant::kLateEntity) {
    out.position_variant = PositionVariant::kAfterFact;
  }
  return out;
}

namespace {

struct BaseRef {
  std::size_t index;  // global base item index
  const SemanticSet* set;
  const WordPair* pair;
};

std::vector<BaseRef> base_refs(const ItemBank& bank) {
  std::vector<BaseRef> out;
  for (const auto& s : bank.sets()) {
    for (const auto& p : s.pairs) out.push_back(BaseRef{out.size(), &s, &p});
  }
  return out;
}

std::vector<std::string> frame_fillers(const ItemBank& bank, std::uint64_t seed,
                                       std::size_t base_index, int n_fillers) {
  if (static_cast<std::size_t>(n_fillers) > bank.fillers().size()) {
    throw GenerationError("requested " + std::to_string(n_fillers) +
                          " fillers but the bank has only " +
                          std::to_string(bank.fillers().size()));
  }
  std::mt19937_64 rng(mix_seed(seed, kFillerStream, base_index, n_fillers));
  std::vector<std::string> out;
  for (auto i : sample_sorted(bank.fillers().size(), n_fillers, rng)) {
    out.push_back(bank.fillers()[i]);
  }
  shuffle_in_place(out, rng);
  return out;
}

std::vector<std::string> attractor_pool(const ItemBank& bank, const BaseRef& base,
                                        AttractorKind kind,
                                        const std::vector<std::string>& fillers) {
  std::vector<std::string> pool;
  switch (kind) {
    case AttractorKind::kBType:
      for (const auto& p : base.set->pairs) {
        if (&p != base.pair) pool.push_back(p.background);
      }
      break;
    case AttractorKind::kTType:
      for (const auto& p : base.set->pairs) {
        if (&p != base.pair) pool.push_back(p.target);
      }
      break;
    case AttractorKind::kUnrelated:
      for (const auto& f : bank.fillers()) {
        if (std::find(fillers.begin(), fillers.end(), f) == fillers.end()) pool.push_back(f);
      }
      break;
  }
  return pool;
}

std::size_t pool_size(const ItemBank& bank, const BaseRef& base, const Condition& c) {
  if (c.attractor_kind == AttractorKind::kUnrelated) {
    const auto f = bank.fillers().size();
    const auto nf = static_cast<std::size_t>(c.n_fillers);
    return f >= nf ? f - nf : 0;
  }
  return base.set->pairs.size() - 1;
}

std::string item_id(std::uint64_t cell, std::size_t base, std::uint64_t rank) {
  return "c" + std::to_string(cell) + "-b" + std::to_string(base) + "-r" + std::to_string(rank);
}

ProbeItem build_item(const ItemBank& bank, const BaseRef& base, const Condition& c,
                     std::uint64_t seed, std::uint64_t rank,
                     const std::vector<std::string>& fillers,
                     const std::vector<std::string>& pool) {
  const auto& t = bank.templ(base.set->id);
  const std::uint64_t code = condition_code(c);
  std::mt19937_64 rng(mix_seed(seed, code, base.index, rank));

  ProbeItem item;
  item.set_id = base.set->id;
  item.condition = c;
  item.key_entity = base.pair->entity;
  item.background_word = base.pair->background;
  item.target_word = base.pair->target;
  item.filler_phrases = fillers;
  item.candidate_targets = base.set->targets();
  item.seed_trace = {seed, code, base.index, rank};

  for (auto i : unrank_combination(pool.size(), c.n_attractors, rank)) {
    item.attractor_words.push_back(pool[i]);
  }
  shuffle_in_place(item.attractor_words, rng);

  if (c.entity_setting == EntitySetting::kMulti && c.n_attractors > 0) {
    std::vector<std::string> others;
    for (const auto& n : bank.names()) {
      if (n != item.key_entity) others.push_back(n);
    }
    if (others.size() < static_cast<std::size_t>(c.n_attractors)) {
      throw GenerationError("not enough entity names for " + std::to_string(c.n_attractors) +
                            " attractor entities");
    }
    const auto offset = uniform_index(rng, others.size());
    for (int i = 0; i < c.n_attractors; ++i) {
      item.attractor_entities.push_back(others[(offset + i) % others.size()]);
    }
  }

  RenderParts parts{item.key_entity,       item.background_word, c.attractor_kind,
                    c.entity_setting,      c.position_variant,   item.attractor_words,
                    item.attractor_entities, item.filler_phrases};
  item.context = render_context(t, parts, bank.articles());
  RenderParts base_parts;
  base_parts.key_entity = item.key_entity;
  base_parts.background = item.background_word;
  item.base_context = render_context(t, base_parts, bank.articles());
  return item;
}

void require_valid(const Condition& c) {
  const auto v = condition_violations(c);
  if (!v.empty()) throw std::invalid_argument(to_string(c) + ": " + join(v, "; "));
}

}  // namespace

std::size_t cell_count(const ItemBank& bank, const Condition& condition,
                       ItemsPerCell items_per_cell) {
  std::size_t total = 0;
  for (const auto& base : base_refs(bank)) {
    const auto combos = binomial(pool_size(bank, base, condition), condition.n_attractors);
    total += items_per_cell ? std::min<std::uint64_t>(combos, *items_per_cell) : combos;
  }
  return total;
}

std::vector<ProbeItem> generate(const ItemBank& bank, const std::vector<Condition>& conditions,
                                std::uint64_t seed, ItemsPerCell items_per_cell) {
  for (const auto& c : conditions) require_valid(c);

  const auto bases = base_refs(bank);
  std::vector<ProbeItem> out;
  for (std::size_t ci = 0; ci < conditions.size(); ++ci) {
    const auto& c = conditions[ci];
    const std::uint64_t code = condition_code(c);
    for (const auto& base : bases) {
      const auto fillers = frame_fillers(bank, seed, base.index, c.n_fillers);
      const auto pool = attractor_pool(bank, base, c.attractor_kind, fillers);
      if (pool.size() < static_cast<std::size_t>(c.n_attractors)) {
        throw GenerationError("set '" + base.set->id + "' offers only " +
                              std::to_string(pool.size()) + " " +
                              to_string(c.attractor_kind) + " attractors for '" +
                              base.pair->background + "', condition " + to_string(c) +
                              " needs " + std::to_string(c.n_attractors));
      }
      const auto combos = binomial(pool.size(), c.n_attractors);
      std::vector<std::uint64_t> ranks;
      if (items_per_cell && *items_per_cell < combos) {
        std::mt19937_64 rng(mix_seed(seed, kCellStream, code, base.index));
        ranks = sample_sorted(combos, *items_per_cell, rng);
      } else {
        ranks.resize(combos);
        for (std::uint64_t r = 0; r < combos; ++r) ranks[r] = r;
      }
      for (auto rank : ranks) {
        auto item = build_item(bank, base, c, seed, rank, fillers, pool);
        item.item_id = item_id(ci, base.index, rank);
        out.push_back(std::move(item));
      }
    }
  }
  return out;
}

ProbeItem regenerate(const ItemBank& bank, const std::vector<std::uint64_t>& seed_trace) {
  if (seed_trace.size() != 4) throw std::invalid_argument("seed_trace must have 4 entries");
  const auto seed = seed_trace[0];
  const auto c = condition_from_code(seed_trace[1]);
  require_valid(c);
  const auto bases = base_refs(bank);
  if (seed_trace[2] >= bases.size()) throw std::out_of_range("seed_trace base index out of range");
  const auto& base = bases[seed_trace[2]];
  const auto fillers = frame_fillers(bank, seed, base.index, c.n_fillers);
  const auto pool = attractor_pool(bank, base, c.attractor_kind, fillers);
  return build_item(bank, base, c, seed, seed_trace[3], fillers, pool);
}

std::vector<std::string> item_violations(const ProbeItem& item, const ItemBank& bank) {
  std::vector<std::string> v;
  const std::string where = "item " + item.item_id + ": ";
  const SemanticSet* set = nullptr;
  try {
    set = &bank.set(item.set_id);
  } catch (const std::out_of_range&) {
    return {where + "unknown set '" + item.set_id + "'"};
  }
  const auto targets = set->targets();
  const auto backgrounds = set->backgrounds();
  const auto& cand = item.candidate_targets;
  if (std::find(cand.begin(), cand.end(), item.target_word) == cand.end()) {
    v.push_back(where + "target not among candidates");
  }
  if (std::set<std::string>(cand.begin(), cand.end()).size() != cand.size()) {
    v.push_back(where + "duplicate candidates");
  }
  const auto& aw = item.attractor_words;
  if (static_cast<int>(aw.size()) != item.condition.n_attractors) {
    v.push_back(where + "attractor count does not match condition");
  }
  if (std::set<std::string>(aw.begin(), aw.end()).size() != aw.size()) {
    v.push_back(where + "duplicate attractors");
  }
  for (const auto& w : aw) {
    if (w == item.background_word || w == item.target_word) {
      v.push_back(where + "attractor equals critical word '" + w + "'");
    }
    const auto& column = item.condition.attractor_kind == AttractorKind::kBType ? backgrounds
                         : item.condition.attractor_kind == AttractorKind::kTType
                             ? targets
                             : bank.fillers();
    if (std::find(column.begin(), column.end(), w) == column.end()) {
      v.push_back(where + "attractor '" + w + "' not drawn from its pool");
    }
    if (std::find(item.filler_phrases.begin(), item.filler_phrases.end(), w) !=
        item.filler_phrases.end()) {
      v.push_back(where + "attractor '" + w + "' repeats a filler");
    }
  }
  const auto& ents = item.attractor_entities;
  if (item.condition.entity_setting == EntitySetting::kMulti) {
    if (ents.size() != aw.size()) v.push_back(where + "one entity per attractor required");
    if (std::set<std::string>(ents.begin(), ents.end()).size() != ents.size()) {
      v.push_back(where + "duplicate attractor entities");
    }
    if (std::find(ents.begin(), ents.end(), item.key_entity) != ents.end()) {
      v.push_back(where + "attractor entity equals key entity");
    }
  } else if (!ents.empty()) {
    v.push_back(where + "SINGLE setting has attractor entities");
  }
  if (count_occurrences(item.context, kBlank) != 1) {
    v.push_back(where + "context must contain exactly one blank");
  }
  const auto query_start = item.context.rfind(". ");
  if (query_start == std::string::npos ||
      count_whole_phrase(std::string_view(item.context).substr(query_start),
                         item.key_entity + "'s") +
              count_whole_phrase(std::string_view(item.context).substr(query_start),
                                 item.key_entity) ==
          0) {
    v.push_back(where + "query does not mention the key entity");
  }
  return v;
}

}  // namespace cloze
