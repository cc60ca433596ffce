#include "cloze/pipeline.hpp"

#include <exception>
#include <map>
#include <mutex>
#include <thread>

#include "cloze/error.hpp"
#include "cloze/records.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace cloze {

namespace {

// Runs fn(worker, i) for i in [0, n), handing each worker a contiguous chunk.
template <typename F>
void parallel_for(std::size_t n, int workers, F&& fn) {
  const std::size_t w = std::max<std::size_t>(1, std::min<std::size_t>(static_cast<std::size_t>(workers), n));
  if (w <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(0, i);
    return;
  }
  std::exception_ptr failure;
  std::mutex mu;
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < w; ++t) {
    threads.emplace_back([&, t] {
      const std::size_t lo = n * t / w, hi = n * (t + 1) / w;
      try {
        for (std::size_t i = lo; i < hi; ++i) fn(t, i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& th : threads) th.join();
  if (failure) std::rethrow_exception(failure);
}

void require_file(const fs::path& p, const char* stage) {
  if (!fs::exists(p)) {
    throw std::runtime_error(std::string(stage) + ": missing input " + p.string() +
                             " (run the earlier stage first)");
  }
}

}  // namespace

ItemBank load_bank(const RunConfig& config) {
  return config.itembank ? load_itembank_file(*config.itembank) : default_itembank();
}

void validate(const RunConfig& config) {
  if (auto v = config_violations(config); !v.empty()) throw ValidationError(std::move(v));
}

RunManifest read_manifest(const fs::path& path) {
  try {
    return json::parse(read_file(path)).get<RunManifest>();
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

RunManifest stage_generate(const RunConfig& config, const std::optional<RunManifest>& identity) {
  validate(config);
  const RunLayout layout{config.output_dir};
  const auto bank = load_bank(config);
  const auto items = generate(bank, expand_condition_space(config.condition_space), config.seed,
                              config.items_per_cell);

  RunManifest m;
  m.config = config_snapshot(config);
  m.bank_checksum = bank.checksum();
  m.seed = config.seed;
  for (const auto& s : config.scorers) m.scorers.emplace_back(s);
  if (identity) {
    m.run_id = identity->run_id;
    m.created_at = identity->created_at;
  } else if (fs::exists(layout.manifest())) {
    const auto prior = read_manifest(layout.manifest());
    if (prior.config == m.config && prior.bank_checksum == m.bank_checksum) {
      m.run_id = prior.run_id;
      m.created_at = prior.created_at;
    }
  }
  if (m.run_id.empty()) {
    m.created_at = utc_timestamp();
    m.run_id = make_run_id(m.config, m.created_at);
  }
  write_file_atomic(layout.items(), to_jsonl(items));
  write_file_atomic(layout.manifest(), json(m).dump(2) + "\n");
  return m;
}

std::vector<ScoredItem> stage_score(const RunConfig& config) {
  validate(config);
  const RunLayout layout{config.output_dir};
  require_file(layout.items(), "score");
  const auto items = read_records<ProbeItem>(layout.items());
  const auto bank = load_bank(config);

  std::vector<MockHints> hints;
  hints.reserve(items.size());
  for (const auto& item : items) hints.push_back(mock_hints(item, bank));

  // Base contexts repeat across items; score each once.
  std::vector<std::size_t> base_owner;
  std::map<std::string, std::size_t> base_index;
  std::vector<std::size_t> base_of(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto [it, inserted] = base_index.emplace(items[i].base_context, base_owner.size());
    if (inserted) base_owner.push_back(i);
    base_of[i] = it->second;
  }

  // Build every scorer before any work so a missing backend fails fast.
  std::vector<std::unique_ptr<Scorer>> prototypes;
  for (const auto& spec : config.scorers) prototypes.push_back(make_scorer(spec));

  std::vector<ScoredItem> out;
  out.reserve(items.size() * prototypes.size());
  for (const auto& proto : prototypes) {
    std::vector<std::unique_ptr<Scorer>> scorers;
    for (int w = 0; w < config.workers; ++w) scorers.push_back(proto->clone());

    std::vector<std::vector<CandidateScore>> base_scores(base_owner.size());
    parallel_for(base_owner.size(), config.workers, [&](std::size_t w, std::size_t b) {
      const auto& item = items[base_owner[b]];
      base_scores[b] = scorers[w]->score(item.base_context, item.candidate_targets, &hints[base_owner[b]]);
    });
    std::vector<ScoredItem> scored(items.size());
    parallel_for(items.size(), config.workers, [&](std::size_t w, std::size_t i) {
      const auto& item = items[i];
      scored[i] = {item.item_id, item.context,
                   scorers[w]->score(item.context, item.candidate_targets, &hints[i]),
                   base_scores[base_of[i]], proto->spec()};
    });
    std::move(scored.begin(), scored.end(), std::back_inserter(out));
  }
  write_file_atomic(layout.scores(), to_jsonl(out));
  return out;
}

std::vector<MetricRecord> stage_evaluate(const RunConfig& config) {
  const RunLayout layout{config.output_dir};
  require_file(layout.items(), "evaluate");
  require_file(layout.scores(), "evaluate");
  const auto items = read_records<ProbeItem>(layout.items());
  const auto scored = read_records<ScoredItem>(layout.scores());
  std::map<std::string, const ProbeItem*> by_id;
  for (const auto& item : items) by_id[item.item_id] = &item;

  std::vector<MetricRecord> records;
  records.reserve(scored.size());
  for (const auto& s : scored) {
    const auto it = by_id.find(s.item_id);
    if (it == by_id.end()) {
      throw std::runtime_error("evaluate: scores reference unknown item " + s.item_id);
    }
    if (auto v = scored_item_violations(s, it->second->candidate_targets); !v.empty()) {
      throw std::runtime_error("evaluate: " + join(v, "; "));
    }
    records.push_back(evaluate(*it->second, s));
  }
  write_file_atomic(layout.metrics(), to_jsonl(records));
  return records;
}

void stage_report(const RunConfig& config) {
  const RunLayout layout{config.output_dir};
  require_file(layout.metrics(), "report");
  emit_report(read_records<MetricRecord>(layout.metrics()), layout.dir);
}

RunManifest run_all(const RunConfig& config, const std::optional<RunManifest>& identity) {
  auto m = stage_generate(config, identity);
  stage_score(config);
  stage_evaluate(config);
  stage_report(config);
  return m;
}

RunConfig config_from_manifest(const RunManifest& manifest, const fs::path& output_dir) {
  auto config = apply_config(manifest.config);
  config.output_dir = output_dir;
  validate(config);
  const auto checksum = load_bank(config).checksum();
  if (checksum != manifest.bank_checksum) {
    throw ValidationError({"manifest " + manifest.run_id + ": item bank checksum " + checksum +
                           " does not match recorded " + manifest.bank_checksum});
  }
  return config;
}

}  // namespace cloze
