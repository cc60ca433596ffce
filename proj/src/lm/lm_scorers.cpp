#include "lm/lm_scorers.hpp"

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <variant>

#include <json.hpp>

#include "cloze/error.hpp"
#include "cloze/lm/models.hpp"
#include "cloze/lm/ops.hpp"
#include "cloze/lm/tokenizers.hpp"
#include "cloze/text.hpp"

namespace fs = std::filesystem;

namespace cloze {

namespace {

std::vector<fs::path> hub_roots() {
  std::vector<fs::path> roots;
  auto env = [](const char* name) -> std::optional<std::string> {
    const char* v = std::getenv(name);
    if (v == nullptr || *v == '\0') return std::nullopt;
    return std::string(v);
  };
  if (auto v = env("HF_HUB_CACHE")) roots.emplace_back(*v);
  if (auto v = env("HUGGINGFACE_HUB_CACHE")) roots.emplace_back(*v);
  if (auto v = env("HF_HOME")) roots.push_back(fs::path(*v) / "hub");
  if (auto v = env("XDG_CACHE_HOME")) roots.push_back(fs::path(*v) / "huggingface" / "hub");
  if (auto v = env("HOME")) roots.push_back(fs::path(*v) / ".cache" / "huggingface" / "hub");
  return roots;
}

std::optional<fs::path> snapshot_in(const fs::path& repo) {
  const auto snapshots = repo / "snapshots";
  if (!fs::is_directory(snapshots)) return std::nullopt;
  if (std::ifstream ref(repo / "refs" / "main"); ref) {
    std::string hash;
    ref >> hash;
    if (fs::exists(snapshots / hash / "config.json")) return snapshots / hash;
  }
  std::vector<fs::path> found;
  for (const auto& entry : fs::directory_iterator(snapshots)) {
    if (fs::exists(entry.path() / "config.json")) found.push_back(entry.path());
  }
  if (found.empty()) return std::nullopt;
  std::sort(found.begin(), found.end());
  return found.front();
}

}  // namespace

fs::path resolve_checkpoint(std::string_view model_id) {
  const fs::path direct{std::string(model_id)};
  if (fs::is_directory(direct)) {
    if (!fs::exists(direct / "config.json")) {
      throw BackendUnavailable("checkpoint directory " + direct.string() + " has no config.json");
    }
    return direct;
  }
  std::string repo = "models--" + std::string(model_id);
  for (std::size_t pos = 0; (pos = repo.find('/', pos)) != std::string::npos;) {
    repo.replace(pos, 1, "--");
  }
  std::vector<std::string> searched{direct.string()};
  for (const auto& root : hub_roots()) {
    searched.push_back((root / repo).string());
    if (auto snap = snapshot_in(root / repo)) return *snap;
  }
  throw BackendUnavailable("model '" + std::string(model_id) + "' not found locally; searched " +
                           join(searched, ", "));
}

}  // namespace cloze

namespace cloze::lm {

namespace {

nlohmann::json read_config(const fs::path& dir) {
  std::ifstream in(dir / "config.json");
  if (!in) throw BackendUnavailable("cannot read " + (dir / "config.json").string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw BackendUnavailable("malformed " + (dir / "config.json").string() + ": " + e.what());
  }
}

std::string rstrip(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

bool is_blank_text(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

double reduce(double sum, int k, LengthNormalization ln) {
  return ln == LengthNormalization::kMean ? sum / k : sum;
}

std::optional<bool> lowercase_option(const ScorerSpec& spec) {
  const auto it = spec.options.find("lowercase");
  if (it == spec.options.end()) return std::nullopt;
  return it->second == "true";
}

CandidateScore untokenizable(const std::string& c) {
  return {c, kImpossible, 1, "candidate '" + c + "' is empty after tokenization"};
}

// Keeps the better of several tokenization variants; ties keep the first.
struct Best {
  std::optional<std::pair<double, int>> value;
  void offer(double v, int k) {
    if (!value || v > value->first) value = {v, k};
  }
};

template <typename Scalar>
class CausalScorer final : public Scorer {
 public:
  struct Model {
    Gpt2<Scalar> net;
    BpeTokenizer tokenizer;
    bool lowercase = false;
  };

  CausalScorer(ScorerSpec spec, std::shared_ptr<const Model> model)
      : Scorer(std::move(spec)), model_(std::move(model)) {}

  std::unique_ptr<Scorer> clone() const override { return std::make_unique<CausalScorer>(*this); }

 protected:
  // TODO: reuse the prefix's key/value states across candidates instead of
  // re-running the whole sequence per variant.
  std::vector<CandidateScore> score_impl(std::string_view context,
                                         const std::vector<std::string>& candidates,
                                         const MockHints*) const override {
    const auto& net = model_->net;
    std::vector<int> prefix{net.config().bos_token_id};
    const auto body = model_->tokenizer.encode(rstrip(context.substr(0, context.find(kBlank))));
    prefix.insert(prefix.end(), body.begin(), body.end());
    const auto ln = spec().length_normalization();

    std::vector<CandidateScore> out;
    for (const auto& c : candidates) {
      const std::string cand = model_->lowercase ? to_lower(c) : c;
      Best best;
      for (const auto& variant : {" " + cand, cand}) {
        const auto cids = model_->tokenizer.encode(variant);
        if (cids.empty()) continue;
        std::vector<int> ids = prefix;
        ids.insert(ids.end(), cids.begin(), cids.end());
        if (static_cast<int>(ids.size()) > net.config().n_positions) {
          throw ScorerError("context exceeds the model's " +
                            std::to_string(net.config().n_positions) + " positions");
        }
        std::vector<int> positions;
        for (std::size_t j = 0; j < cids.size(); ++j) {
          positions.push_back(static_cast<int>(prefix.size() - 1 + j));
        }
        const auto logits = net.logits_at(ids, positions);
        double sum = 0.0;
        for (std::size_t j = 0; j < cids.size(); ++j) {
          sum += log_softmax(logits.row(static_cast<Eigen::Index>(j)))(cids[j]);
        }
        const int k = static_cast<int>(cids.size());
        best.offer(reduce(sum, k, ln), k);
      }
      if (!best.value) {
        out.push_back(untokenizable(c));
      } else {
        out.push_back({c, best.value->first, best.value->second, std::nullopt});
      }
    }
    return out;
  }

 private:
  std::shared_ptr<const Model> model_;
};

template <typename Scalar>
class MaskedScorer final : public Scorer {
 public:
  struct Model {
    MaskedEncoder<Scalar> net;
    std::variant<WordPieceTokenizer, BpeTokenizer> tokenizer;
    int start = 0, sep = 0, mask = 0;
    bool lowercase = false;

    bool roberta() const { return net.config().flavor == EncoderFlavor::kRoberta; }
    std::vector<int> encode(std::string_view text) const {
      return std::visit([&](const auto& t) { return t.encode(text); }, tokenizer);
    }
  };

  MaskedScorer(ScorerSpec spec, std::shared_ptr<const Model> model)
      : Scorer(std::move(spec)), model_(std::move(model)) {}

  std::unique_ptr<Scorer> clone() const override { return std::make_unique<MaskedScorer>(*this); }

 protected:
  std::vector<CandidateScore> score_impl(std::string_view context,
                                         const std::vector<std::string>& candidates,
                                         const MockHints*) const override {
    const auto& m = *model_;
    const auto blank = context.find(kBlank);
    const std::string prefix = rstrip(context.substr(0, blank));
    const std::string_view suffix = context.substr(blank + kBlank.size());

    // The fact sentence and the query become the two segments.
    std::vector<int> head{m.start};
    std::vector<int> types;
    std::string query = prefix;
    if (const auto cut = prefix.rfind(". "); cut != std::string::npos) {
      const auto first = m.encode(std::string_view(prefix).substr(0, cut + 1));
      head.insert(head.end(), first.begin(), first.end());
      head.push_back(m.sep);
      if (m.roberta()) head.push_back(m.sep);
      query = prefix.substr(cut + 2);
    }
    const int type_b = m.roberta() || head.size() == 1 ? 0 : 1;
    types.assign(head.size(), 0);
    const auto query_ids = m.encode(query);
    head.insert(head.end(), query_ids.begin(), query_ids.end());
    types.resize(head.size(), type_b);
    std::vector<int> tail;
    if (!is_blank_text(suffix)) tail = m.encode(suffix);
    tail.push_back(m.sep);

    // Every tokenization form of every candidate, in offer order; forms with
    // the same length share one forward pass.
    struct Variant {
      std::size_t candidate;
      std::vector<int> ids;
      double value = 0.0;
    };
    std::vector<Variant> variants;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      const std::string cand = m.lowercase ? to_lower(candidates[i]) : candidates[i];
      std::vector<std::string> forms{cand};
      if (m.roberta()) forms = {" " + cand, cand};
      for (const auto& f : forms) {
        if (auto ids = m.encode(f); !ids.empty()) variants.push_back({i, std::move(ids)});
      }
    }
    std::map<std::size_t, std::vector<std::size_t>> by_length;
    for (std::size_t v = 0; v < variants.size(); ++v) by_length[variants[v].ids.size()].push_back(v);

    const auto ln = spec().length_normalization();
    for (const auto& [k, members] : by_length) {
      std::vector<int> ids = head;
      std::vector<int> tt = types;
      std::vector<int> positions;
      for (std::size_t j = 0; j < k; ++j) {
        positions.push_back(static_cast<int>(ids.size()));
        ids.push_back(m.mask);
      }
      ids.insert(ids.end(), tail.begin(), tail.end());
      tt.resize(ids.size(), type_b);
      const int offset = m.roberta() ? m.net.config().pad_token_id + 1 : 0;
      if (static_cast<int>(ids.size()) + offset > m.net.config().max_position_embeddings) {
        throw ScorerError("context exceeds the model's position limit");
      }
      const auto logits = m.net.logits_at(ids, tt, positions);
      std::vector<Eigen::RowVectorXd> lp;
      for (std::size_t j = 0; j < k; ++j) {
        lp.push_back(log_softmax(logits.row(static_cast<Eigen::Index>(j))));
      }
      for (const auto v : members) {
        double sum = 0.0;
        for (std::size_t j = 0; j < k; ++j) sum += lp[j](variants[v].ids[j]);
        variants[v].value = reduce(sum, static_cast<int>(k), ln);
      }
    }

    std::vector<Best> best(candidates.size());
    for (const auto& v : variants) best[v.candidate].offer(v.value, static_cast<int>(v.ids.size()));
    std::vector<CandidateScore> out;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (!best[i].value) {
        out.push_back(untokenizable(candidates[i]));
      } else {
        out.push_back({candidates[i], best[i].value->first, best[i].value->second, std::nullopt});
      }
    }
    return out;
  }

 private:
  std::shared_ptr<const Model> model_;
};

template <typename Scalar>
std::unique_ptr<Scorer> build_causal(const ScorerSpec& spec, const fs::path& dir,
                                     const nlohmann::json& cfg) {
  const auto st = SafeTensors::open(dir / "model.safetensors");
  auto model = std::make_shared<typename CausalScorer<Scalar>::Model>(typename CausalScorer<Scalar>::Model{
      Gpt2<Scalar>::load(st, Gpt2Config::from_json(cfg)), BpeTokenizer::from_directory(dir),
      lowercase_option(spec).value_or(false)});
  return std::make_unique<CausalScorer<Scalar>>(spec, std::move(model));
}

template <typename Scalar>
std::unique_ptr<Scorer> build_masked(const ScorerSpec& spec, const fs::path& dir,
                                     const nlohmann::json& cfg) {
  const auto config = EncoderConfig::from_json(cfg);
  const auto st = SafeTensors::open(dir / "model.safetensors");
  using Model = typename MaskedScorer<Scalar>::Model;
  auto require = [&](auto id, std::string_view token) {
    if (!id) throw BackendUnavailable("tokenizer in " + dir.string() + " has no " + std::string(token));
    return *id;
  };
  std::shared_ptr<Model> model;
  if (config.flavor == EncoderFlavor::kRoberta) {
    auto tok = BpeTokenizer::from_directory(dir);
    const int start = require(tok.token_id("<s>"), "<s>");
    const int sep = require(tok.token_id("</s>"), "</s>");
    const int mask = require(tok.token_id("<mask>"), "<mask>");
    model = std::make_shared<Model>(Model{MaskedEncoder<Scalar>::load(st, config), std::move(tok), start,
                                          sep, mask, lowercase_option(spec).value_or(false)});
  } else {
    auto tok = WordPieceTokenizer::from_directory(dir);
    const int start = require(tok.token_id("[CLS]"), "[CLS]");
    const int sep = require(tok.token_id("[SEP]"), "[SEP]");
    const int mask = require(tok.token_id("[MASK]"), "[MASK]");
    const bool lower = lowercase_option(spec).value_or(tok.lowercase());
    model = std::make_shared<Model>(Model{MaskedEncoder<Scalar>::load(st, config), std::move(tok), start,
                                          sep, mask, lower});
  }
  return std::make_unique<MaskedScorer<Scalar>>(spec, std::move(model));
}

}  // namespace

std::unique_ptr<Scorer> make_lm_scorer(const ScorerSpec& spec) {
  const auto dir = resolve_checkpoint(spec.model_id);
  const auto cfg = read_config(dir);
  const std::string type = cfg.value("model_type", "");
  if (!fs::exists(dir / "model.safetensors")) {
    throw BackendUnavailable("no model.safetensors in " + dir.string());
  }
  const bool f64 = spec.options.contains("dtype") && spec.options.at("dtype") == "float64";
  try {
    if (spec.family == ScorerFamily::kCausal) {
      if (type != "gpt2") {
        throw BackendUnavailable("causal scoring supports gpt2 checkpoints; " + dir.string() +
                                 " is '" + type + "'");
      }
      return f64 ? build_causal<double>(spec, dir, cfg) : build_causal<float>(spec, dir, cfg);
    }
    if (type != "bert" && type != "roberta") {
      throw BackendUnavailable("masked scoring supports bert and roberta checkpoints; " +
                               dir.string() + " is '" + type + "'");
    }
    return f64 ? build_masked<double>(spec, dir, cfg) : build_masked<float>(spec, dir, cfg);
  } catch (const BackendUnavailable&) {
    throw;
  } catch (const std::exception& e) {
    throw BackendUnavailable("cannot load " + dir.string() + ": " + e.what());
  }
}

}  // namespace cloze::lm
