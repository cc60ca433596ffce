#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>

#include "cloze/metrics.hpp"
#include "cloze/records.hpp"

using namespace cloze;

namespace {

CandidateScore cs(std::string c, double lp) { return {std::move(c), lp, 1, std::nullopt}; }

MetricRecord record(std::string scorer, AttractorKind k, int n, EntitySetting s, std::optional<double> rel,
                    int acc = 1) {
  MetricRecord r;
  r.item_id = "i";
  r.scorer = std::move(scorer);
  r.accuracy = acc;
  r.base_accuracy = 1;
  r.relative_prob = rel;
  r.set_id = "countries";
  r.target_word = "Paris";
  r.condition = Condition{k, n, s, PositionVariant::kAfterFact, 0};
  return r;
}

bool same_bits(double a, double b) {
  if (std::isnan(a) && std::isnan(b)) return true;
  return std::memcmp(&a, &b, sizeof a) == 0;
}

}  // namespace

TEST(Accuracy, StrictlyAboveEveryOtherCandidate) {
  EXPECT_EQ(accuracy({cs("a", -1.0), cs("b", -2.0), cs("c", -3.0)}, "a"), 1);
  EXPECT_EQ(accuracy({cs("a", -2.0), cs("b", -1.0)}, "a"), 0);
  EXPECT_EQ(accuracy({cs("a", -1.0), cs("b", -1.0)}, "a"), 0);  // ties lose
  EXPECT_EQ(accuracy({cs("a", kImpossible), cs("b", kImpossible)}, "a"), 0);
  EXPECT_EQ(accuracy({cs("a", -50.0), cs("b", kImpossible)}, "a"), 1);
  EXPECT_EQ(accuracy({cs("a", -0.1)}, "a"), 1);
  EXPECT_THROW(accuracy({cs("a", -1.0)}, "z"), std::invalid_argument);
}

TEST(RelativeProbability, RatioAndExclusion) {
  EXPECT_DOUBLE_EQ(*relative_probability(0.2, 0.4), 0.5);
  EXPECT_DOUBLE_EQ(*relative_probability(0.0, 0.4), 0.0);
  EXPECT_FALSE(relative_probability(0.3, 0.0));
  EXPECT_FALSE(relative_probability_from_logs(-1.0, kImpossible));
  EXPECT_EQ(*relative_probability_from_logs(kImpossible, -1.0), 0.0);
  // Finite even where both probabilities underflow a double.
  EXPECT_NEAR(*relative_probability_from_logs(-800.0, -801.0), std::exp(1.0), 1e-12);
}

TEST(RelativeProbability, LogFormAgreesWithRatio) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(1e-6, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double pa = u(rng), pb = u(rng);
    const double direct = *relative_probability(pa, pb);
    EXPECT_NEAR(*relative_probability_from_logs(std::log(pa), std::log(pb)), direct, 1e-12 * std::max(1.0, direct));
  }
}

TEST(Evaluate, JoinsItemAndScores) {
  ProbeItem item;
  item.item_id = "c0-b0-r0";
  item.set_id = "countries";
  item.target_word = "Paris";
  item.condition = Condition{AttractorKind::kBType, 1, EntitySetting::kSingle, PositionVariant::kAfterFact, 0};
  ScoredItem scored{"c0-b0-r0", "ctx ___", {cs("Paris", std::log(0.1)), cs("Rome", std::log(0.6))},
                    {cs("Paris", std::log(0.4)), cs("Rome", std::log(0.3))}, ScorerSpec{ScorerFamily::kMock, "uniform", {{"mock_kind", "UNIFORM"}}}};
  const auto r = evaluate(item, scored);
  EXPECT_EQ(r.accuracy, 0);
  EXPECT_EQ(r.base_accuracy, 1);
  EXPECT_NEAR(r.target_prob_attr, 0.1, 1e-15);
  EXPECT_NEAR(r.target_prob_base, 0.4, 1e-15);
  EXPECT_NEAR(*r.relative_prob, 0.25, 1e-15);
  EXPECT_EQ(r.scorer, "mock:uniform");

  scored.item_id = "other";
  EXPECT_THROW(evaluate(item, scored), std::invalid_argument);
}

TEST(MetricRecordJson, RoundTripsWithNullRatio) {
  auto r = record("mock:oracle", AttractorKind::kTType, 2, EntitySetting::kMulti, std::nullopt, 0);
  const nlohmann::json j = r;
  EXPECT_TRUE(j.at("relative_prob").is_null());
  EXPECT_EQ(j.at("attractor_class"), "RELATED");
  EXPECT_EQ(j.at("n_attractors"), 2);
  EXPECT_EQ(j.get<MetricRecord>(), r);
  r.relative_prob = 0.125;
  EXPECT_EQ(nlohmann::json(r).get<MetricRecord>(), r);
}

TEST(Summarize, MeanAndMedian) {
  EXPECT_DOUBLE_EQ(summarize({3, 1, 2}, Statistic::kMedian), 2.0);
  EXPECT_DOUBLE_EQ(summarize({4, 1, 3, 2}, Statistic::kMedian), 2.5);
  EXPECT_DOUBLE_EQ(summarize({4, 1, 3, 2}, Statistic::kMean), 2.5);
  EXPECT_TRUE(std::isnan(summarize({}, Statistic::kMean)));
}

TEST(Aggregate, GroupsCountsAndExclusions) {
  std::vector<MetricRecord> rs = {
      record("m", AttractorKind::kBType, 1, EntitySetting::kSingle, 0.5, 1),
      record("m", AttractorKind::kTType, 1, EntitySetting::kSingle, std::nullopt, 0),
      record("m", AttractorKind::kBType, 0, EntitySetting::kSingle, 1.0, 1),
      record("m", AttractorKind::kUnrelated, 1, EntitySetting::kSingle, 0.9, 0),
  };
  const auto acc = aggregate(rs, {"attractor_class", "n_attractors"}, MetricField::kAccuracy, Statistic::kMean);
  ASSERT_EQ(acc.size(), 3u);
  EXPECT_EQ(acc[0].group, (std::vector<std::string>{"RELATED", "0"}));
  EXPECT_EQ(acc[1].group, (std::vector<std::string>{"RELATED", "1"}));
  EXPECT_DOUBLE_EQ(acc[1].value, 0.5);
  EXPECT_EQ(acc[1].count, 2u);

  const auto rel = aggregate(rs, {"attractor_kind", "n_attractors"}, MetricField::kRelativeProbability, Statistic::kMean);
  const auto t = std::find_if(rel.begin(), rel.end(), [](const AggregateRow& r) { return r.group[0] == "T_TYPE"; });
  ASSERT_NE(t, rel.end());
  EXPECT_TRUE(t->empty());
  EXPECT_EQ(t->excluded, 1u);
  EXPECT_TRUE(std::isnan(t->value));

  EXPECT_THROW(aggregate(rs, {"colour"}, MetricField::kAccuracy, Statistic::kMean), std::invalid_argument);
}

TEST(Aggregate, NumericKeysSortNumerically) {
  auto a = record("m", AttractorKind::kBType, 0, EntitySetting::kSingle, 1.0);
  auto b = a;
  a.condition.n_fillers = 10;
  b.condition.n_fillers = 2;
  const auto rows = aggregate({a, b}, {"n_fillers"}, MetricField::kAccuracy, Statistic::kMean);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].group[0], "2");
  EXPECT_EQ(rows[1].group[0], "10");
}

// Summaries are bit-identical under any permutation of the input records.
TEST(AggregateProperty, PermutationInvariant) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<MetricRecord> rs;
    for (int i = 0; i < 200; ++i) {
      const auto k = static_cast<AttractorKind>(rng() % 3);
      const int n = static_cast<int>(rng() % 4);
      const auto s = static_cast<EntitySetting>(rng() % 2);
      const std::optional<double> rel = rng() % 10 == 0 ? std::nullopt : std::optional(u(rng) * 1e-3 + u(rng));
      rs.push_back(record(rng() % 2 ? "a" : "b", k, n, s, rel, static_cast<int>(rng() % 2)));
    }
    auto shuffled = rs;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const std::vector<std::string> keys = {"scorer", "entity_setting", "n_attractors"};
    for (const auto field : {MetricField::kAccuracy, MetricField::kRelativeProbability}) {
      for (const auto stat : {Statistic::kMean, Statistic::kMedian}) {
        const auto x = aggregate(rs, keys, field, stat);
        const auto y = aggregate(shuffled, keys, field, stat);
        ASSERT_EQ(x.size(), y.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
          EXPECT_EQ(x[i].group, y[i].group);
          EXPECT_TRUE(same_bits(x[i].value, y[i].value));
          EXPECT_EQ(x[i].count, y[i].count);
          EXPECT_EQ(x[i].excluded, y[i].excluded);
        }
      }
    }
  }
}
