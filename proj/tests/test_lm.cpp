#include <fstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "cloze/error.hpp"
#include "cloze/lm/models.hpp"
#include "cloze/lm/safetensors.hpp"
#include "cloze/lm/tokenizers.hpp"
#include "cloze/scoring.hpp"

namespace fs = std::filesystem;
using cloze::lm::BpeTokenizer;
using cloze::lm::WordPieceTokenizer;
using nlohmann::json;

namespace {

const fs::path kFixtures = CLOZE_TEST_FIXTURES;

const json& expected() {
  static const json j = [] {
    std::ifstream in(kFixtures / "lm_expected.json");
    return json::parse(in);
  }();
  return j;
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

template <typename Model>
void expect_logits(const Model& logits, const json& want, double tol) {
  ASSERT_EQ(logits.rows(), want["rows"].get<int>());
  ASSERT_EQ(logits.cols(), want["cols"].get<int>());
  const auto& flat = want["logits"];
  double worst = 0.0;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
      const double w = flat[r * logits.cols() + c].template get<double>();
      worst = std::max(worst, std::abs(static_cast<double>(logits(r, c)) - w));
    }
  }
  EXPECT_LT(worst, tol);
}

void expect_scores(const cloze::ScorerSpec& spec, const json& cases, double tol) {
  const auto scorer = cloze::make_scorer(spec);
  for (const auto& c : cases) {
    std::vector<std::string> cands;
    for (const auto& s : c["scores"]) cands.push_back(s["candidate"].get<std::string>());
    const auto got = scorer->score(c["context"].get<std::string>(), cands);
    ASSERT_EQ(got.size(), cands.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      SCOPED_TRACE(c["context"].get<std::string>() + " / " + cands[i]);
      EXPECT_EQ(got[i].candidate, cands[i]);
      EXPECT_NEAR(got[i].log_prob, c["scores"][i]["log_prob"].get<double>(), tol);
      EXPECT_EQ(got[i].n_subtokens, c["scores"][i]["n_subtokens"].get<int>());
      EXPECT_FALSE(got[i].error.has_value());
    }
  }
}

cloze::ScorerSpec spec(cloze::ScorerFamily family, const std::string& dir,
                       std::map<std::string, std::string> options = {}) {
  return {family, (kFixtures / dir).string(), std::move(options)};
}

}  // namespace

TEST(BpeTokenizer, SplitFollowsGpt2Pattern) {
  using V = std::vector<std::string>;
  EXPECT_EQ(BpeTokenizer::split("Sebastian's car"), (V{"Sebastian", "'s", " car"}));
  EXPECT_EQ(BpeTokenizer::split("  spaced   out  "), (V{" ", " spaced", "  ", " out", "  "}));
  EXPECT_EQ(BpeTokenizer::split("don't 123!"), (V{"don", "'t", " 123", "!"}));
  EXPECT_EQ(BpeTokenizer::split("a\n\nb"), (V{"a", "\n", "\n", "b"}));
}

TEST(BpeTokenizer, MatchesReferenceIds) {
  for (const char* model : {"gpt2", "roberta"}) {
    const auto tok = BpeTokenizer::from_directory(kFixtures / ("tiny-" + std::string(model)));
    for (const auto& c : expected()[model]["tokenize"]) {
      EXPECT_EQ(tok.encode(c["text"].get<std::string>()), c["ids"].get<std::vector<int>>())
          << model << ": \"" << c["text"].get<std::string>() << "\"";
    }
  }
}

TEST(WordPieceTokenizer, MatchesReferenceIds) {
  const auto tok = WordPieceTokenizer::from_directory(kFixtures / "tiny-bert");
  EXPECT_TRUE(tok.lowercase());
  for (const auto& c : expected()["bert"]["tokenize"]) {
    EXPECT_EQ(tok.encode(c["text"].get<std::string>()), c["ids"].get<std::vector<int>>())
        << "\"" << c["text"].get<std::string>() << "\"";
  }
}

TEST(WordPieceTokenizer, BasicSplitStripsAccentsAndSplitsPunctuation) {
  using V = std::vector<std::string>;
  EXPECT_EQ(WordPieceTokenizer::basic_split("Café, Sebastian's!", true),
            (V{"cafe", ",", "sebastian", "'", "s", "!"}));
  EXPECT_EQ(WordPieceTokenizer::basic_split("Café", false), (V{"Café"}));
}

TEST(SafeTensors, DecodesHalfPrecision) {
  EXPECT_EQ(cloze::lm::half_to_float(0x3C00), 1.0f);
  EXPECT_EQ(cloze::lm::half_to_float(0xC000), -2.0f);
  EXPECT_EQ(cloze::lm::half_to_float(0x0001), std::ldexp(1.0f, -24));
  EXPECT_TRUE(std::isinf(cloze::lm::half_to_float(0x7C00)));
  EXPECT_EQ(cloze::lm::bfloat16_to_float(0x3F80), 1.0f);
}

TEST(Gpt2, LogitsMatchReference) {
  const auto dir = kFixtures / "tiny-gpt2";
  const auto st = cloze::lm::SafeTensors::open(dir / "model.safetensors");
  const auto cfg = cloze::lm::Gpt2Config::from_json(read_json(dir / "config.json"));
  const auto& want = expected()["gpt2"]["logits"];
  const auto ids = want["ids"].get<std::vector<int>>();
  expect_logits(cloze::lm::Gpt2<double>::load(st, cfg).logits(ids), want, 1e-5);
  expect_logits(cloze::lm::Gpt2<float>::load(st, cfg).logits(ids), want, 1e-3);
}

TEST(Gpt2, HalfPrecisionCheckpointMatchesReference) {
  const auto dir = kFixtures / "tiny-gpt2-f16";
  const auto st = cloze::lm::SafeTensors::open(dir / "model.safetensors");
  EXPECT_EQ(st.info("transformer.wte.weight").dtype, cloze::lm::DType::kF16);
  const auto cfg = cloze::lm::Gpt2Config::from_json(read_json(dir / "config.json"));
  const auto& want = expected()["gpt2_f16"]["logits"];
  expect_logits(cloze::lm::Gpt2<double>::load(st, cfg).logits(want["ids"].get<std::vector<int>>()),
                want, 1e-3);
}

TEST(MaskedEncoder, LogitsMatchReference) {
  for (const char* model : {"bert", "roberta"}) {
    SCOPED_TRACE(model);
    const auto dir = kFixtures / ("tiny-" + std::string(model));
    const auto st = cloze::lm::SafeTensors::open(dir / "model.safetensors");
    const auto cfg = cloze::lm::EncoderConfig::from_json(read_json(dir / "config.json"));
    const auto& want = expected()[model]["logits"];
    const auto ids = want["ids"].get<std::vector<int>>();
    const auto types = want["types"].get<std::vector<int>>();
    expect_logits(cloze::lm::MaskedEncoder<double>::load(st, cfg).logits(ids, types), want, 1e-5);
  }
}

TEST(CausalScorer, MatchesReferenceScores) {
  expect_scores(spec(cloze::ScorerFamily::kCausal, "tiny-gpt2", {{"dtype", "float64"}}),
                expected()["gpt2"]["scores"], 1e-6);
  expect_scores(spec(cloze::ScorerFamily::kCausal, "tiny-gpt2"), expected()["gpt2"]["scores"], 1e-3);
}

TEST(MaskedScorer, MatchesReferenceScores) {
  expect_scores(spec(cloze::ScorerFamily::kMasked, "tiny-bert", {{"dtype", "float64"}}),
                expected()["bert"]["scores"], 1e-6);
  expect_scores(spec(cloze::ScorerFamily::kMasked, "tiny-roberta", {{"dtype", "float64"}}),
                expected()["roberta"]["scores"], 1e-6);
  expect_scores(spec(cloze::ScorerFamily::kMasked, "tiny-roberta"), expected()["roberta"]["scores"],
                1e-3);
}

TEST(MaskedScorer, SingleSubtokenEqualsMaskFill) {
  // k = 1 scoring is the plain mask-fill distribution read at the mask.
  const auto dir = kFixtures / "tiny-bert";
  const auto st = cloze::lm::SafeTensors::open(dir / "model.safetensors");
  const auto net = cloze::lm::MaskedEncoder<double>::load(
      st, cloze::lm::EncoderConfig::from_json(read_json(dir / "config.json")));
  const auto& want = expected()["bert"]["logits"];
  const auto ids = want["ids"].get<std::vector<int>>();
  const auto types = want["types"].get<std::vector<int>>();
  const int mask_pos = static_cast<int>(ids.size()) - 2;
  const auto row = cloze::lm::log_softmax(net.logits(ids, types).row(mask_pos));

  const auto tok = WordPieceTokenizer::from_directory(dir);
  const auto scorer = cloze::make_scorer(spec(cloze::ScorerFamily::kMasked, "tiny-bert", {{"dtype", "float64"}}));
  const std::vector<std::string> cands{"Paris", "Santiago", "Beijing"};
  const auto got = scorer->score("Sebastian lives in France. The capital of Sebastian's country is ___", cands);
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const auto piece = tok.encode(cands[i]);
    if (piece.size() != 1) continue;
    EXPECT_NEAR(got[i].log_prob, row(piece[0]), 1e-9) << cands[i];
  }
}

TEST(LmScorer, IsPureAcrossCallsAndClones) {
  const auto scorer = cloze::make_scorer(spec(cloze::ScorerFamily::kCausal, "tiny-gpt2"));
  const std::string ctx = "Jack played football. In his game, Jack scored a ___";
  const std::vector<std::string> cands{"touchdown", "run", "goal", "century"};
  const auto a = scorer->score(ctx, cands);
  const auto b = scorer->score(ctx, cands);
  const auto c = scorer->clone()->score(ctx, cands);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);
  for (const auto& s : a) EXPECT_LE(s.log_prob, 0.0);
}

TEST(LmScorer, MeanNormalizationDividesBySubtokens) {
  const std::string ctx = "Rowan lives in Finland. The capital of Rowan's country is ___";
  const std::vector<std::string> cands{"Helsinki", "Paris"};
  const auto sum = cloze::make_scorer(spec(cloze::ScorerFamily::kMasked, "tiny-bert"))->score(ctx, cands);
  const auto mean = cloze::make_scorer(spec(cloze::ScorerFamily::kMasked, "tiny-bert",
                                            {{"length_normalization", "MEAN"}}))
                        ->score(ctx, cands);
  for (std::size_t i = 0; i < cands.size(); ++i) {
    EXPECT_EQ(sum[i].n_subtokens, mean[i].n_subtokens);
    EXPECT_NEAR(mean[i].log_prob, sum[i].log_prob / sum[i].n_subtokens, 1e-6);
  }
}

TEST(LmScorer, UntokenizableCandidateIsFlaggedNotFatal) {
  const auto scorer = cloze::make_scorer(spec(cloze::ScorerFamily::kMasked, "tiny-bert"));
  const auto got = scorer->score("Jack played football. In his game, Jack scored a ___", {"goal", "\x01"});
  EXPECT_FALSE(got[0].error.has_value());
  ASSERT_TRUE(got[1].error.has_value());
  EXPECT_TRUE(cloze::is_impossible(got[1].log_prob));
}

TEST(LmScorer, WrongFamilyForCheckpointIsUnavailable) {
  EXPECT_THROW(cloze::make_scorer(spec(cloze::ScorerFamily::kCausal, "tiny-bert")),
               cloze::BackendUnavailable);
  EXPECT_THROW(cloze::make_scorer(spec(cloze::ScorerFamily::kMasked, "tiny-gpt2")),
               cloze::BackendUnavailable);
}

TEST(ResolveCheckpoint, FindsHubCacheSnapshot) {
  const auto root = fs::temp_directory_path() / "cloze_hub_test";
  fs::remove_all(root);
  const auto snap = root / "models--org--tiny" / "snapshots" / "abc123";
  fs::create_directories(snap);
  fs::create_directories(root / "models--org--tiny" / "refs");
  std::ofstream(snap / "config.json") << "{}";
  std::ofstream(root / "models--org--tiny" / "refs" / "main") << "abc123";
  ::setenv("HF_HUB_CACHE", root.c_str(), 1);
  EXPECT_EQ(cloze::resolve_checkpoint("org/tiny"), snap);
  EXPECT_THROW(cloze::resolve_checkpoint("org/absent"), cloze::BackendUnavailable);
  ::unsetenv("HF_HUB_CACHE");
  fs::remove_all(root);
}
