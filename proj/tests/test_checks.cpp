#include <gtest/gtest.h>

#include "cloze/checks.hpp"

using namespace cloze;

namespace {

using K = AttractorKind;
using P = PositionVariant;
using S = EntitySetting;

MetricRecord rec(K k, int n, S s, P p, int acc, std::optional<double> ratio = 1.0, std::string target = "Paris") {
  MetricRecord r;
  r.scorer = "m";
  r.accuracy = acc;
  r.base_accuracy = 1;
  r.relative_prob = ratio;
  r.set_id = "countries";
  r.target_word = std::move(target);
  r.condition = Condition{k, n, s, p, 0};
  return r;
}

// A run shaped like the published patterns: related attractors hurt, unrelated
// ones barely do, and a late key entity softens the first-attractor dip.
std::vector<MetricRecord> patterned_run() {
  std::vector<MetricRecord> rs;
  for (S s : {S::kMulti, S::kSingle}) {
    for (int i = 0; i < 4; ++i) {
      rs.push_back(rec(K::kBType, 0, s, P::kAfterFact, 1));
      rs.push_back(rec(K::kUnrelated, 0, s, P::kAfterFact, 1));
      for (int n = 1; n <= 3; ++n) {
        rs.push_back(rec(K::kBType, n, s, P::kAfterFact, i == 0, 0.2));
        rs.push_back(rec(K::kTType, n, s, P::kAfterFact, 0, 0.1));
        rs.push_back(rec(K::kUnrelated, n, s, P::kAfterFact, 1, 0.9));
      }
    }
  }
  for (int i = 0; i < 4; ++i) rs.push_back(rec(K::kTType, 1, S::kMulti, P::kLateEntity, i < 3));
  return rs;
}

}  // namespace

TEST(Checks, PatternedRunPassesEveryCheck) {
  const auto results = qualitative_checks(patterned_run(), "m", true);
  ASSERT_EQ(results.size(), 4u);
  for (const auto& r : results) EXPECT_TRUE(r.passed) << r.name << ": " << r.detail;
  EXPECT_EQ(results[0].detail, "related accuracy n=0 100.0%, n=1 12.5%");
}

TEST(Checks, CellAccuracyBorrowsZeroForLateEntity) {
  auto rs = patterned_run();
  rs.push_back(rec(K::kBType, 0, S::kSingle, P::kAfterFact, 0));
  EXPECT_DOUBLE_EQ(*cell_accuracy(rs, "m", true, P::kLateEntity, 0), 1.0);
  EXPECT_LT(*cell_accuracy(rs, "m", true, P::kAfterFact, 0), 1.0);
  EXPECT_FALSE(cell_accuracy(rs, "other", true, P::kAfterFact, 0));
  EXPECT_DOUBLE_EQ(*cell_median_ratio(rs, "m", false, P::kAfterFact, 1), 0.9);
}

TEST(Checks, EachCheckCanFail) {
  std::vector<MetricRecord> rs;
  for (S s : {S::kMulti, S::kSingle}) {
    rs.push_back(rec(K::kBType, 0, s, P::kAfterFact, 1));
    for (int n = 1; n <= 3; ++n) {
      rs.push_back(rec(K::kBType, n, s, P::kAfterFact, 1, 0.95));  // no drop
      rs.push_back(rec(K::kUnrelated, n, s, P::kAfterFact, 1, 0.5));  // tie on accuracy
    }
  }
  rs.push_back(rec(K::kBType, 1, S::kMulti, P::kLateEntity, 1));  // drop 0 is not smaller than 0
  for (const auto& r : qualitative_checks(rs, "m", true)) EXPECT_FALSE(r.passed) << r.name;
}

TEST(Checks, MissingCellsFail) {
  const auto results = qualitative_checks({}, "m", false);
  ASSERT_EQ(results.size(), 3u);
  for (const auto& r : results) {
    EXPECT_FALSE(r.passed);
    EXPECT_NE(r.detail.find("n/a"), std::string::npos);
  }
}

TEST(Checks, BaseCompetenceCountsEachBaseItemOnce) {
  std::vector<MetricRecord> rs = {rec(K::kBType, 1, S::kMulti, P::kAfterFact, 0),
                                  rec(K::kTType, 2, S::kSingle, P::kAfterFact, 1)};
  auto miss = rec(K::kBType, 1, S::kMulti, P::kAfterFact, 0, 1.0, "Warsaw");
  miss.base_accuracy = 0;
  rs.push_back(miss);
  const auto c = base_competence(rs);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].correct, 1);
  EXPECT_EQ(c[0].total, 2);
  EXPECT_EQ(c[0].failures, (std::vector<std::string>{"countries/Warsaw"}));
}
