#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <regex>
#include <sstream>

#include "cloze/records.hpp"
#include "cloze/report.hpp"

using namespace cloze;
namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kKeys = {"scorer", "entity_setting", "n_attractors"};

AggregateRow row(std::string scorer, std::string setting, int n, double v, std::size_t count = 4) {
  return {{std::move(scorer), std::move(setting), std::to_string(n)}, v, count, 0};
}

MetricRecord record(AttractorKind k, int n, EntitySetting s, PositionVariant p, int acc) {
  MetricRecord r;
  r.item_id = "i" + std::to_string(n);
  r.scorer = "mock:test";
  r.accuracy = acc;
  r.base_accuracy = 1;
  r.relative_prob = acc ? 1.0 : 0.25;
  r.target_prob_attr = 0.5;
  r.target_prob_base = 0.5;
  r.set_id = "countries";
  r.target_word = "Paris";
  r.condition = Condition{k, n, s, p, 0};
  return r;
}

fs::path temp_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("cloze_report_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST(FormatValue, ShortestRoundTrip) {
  EXPECT_EQ(format_value(0.5), "0.5");
  EXPECT_EQ(format_value(1.0), "1");
  EXPECT_EQ(format_value(0.1 + 0.2), "0.30000000000000004");
  EXPECT_EQ(format_value(NAN), "");
  for (const double v : {1.0 / 3.0, 2.5e-9, 123456.789}) {
    EXPECT_EQ(std::stod(format_value(v)), v);
  }
}

TEST(Tables, SplitBySettingAndRenderCsv) {
  const std::vector<AggregateRow> rows = {row("mock:a", "MULTI", 0, 1.0), row("mock:a", "MULTI", 1, 0.25),
                                          row("mock:a", "SINGLE", 0, 1.0), row("mock:b", "SINGLE", 0, 0.5, 2)};
  const auto tables = tables_from_rows(rows, kKeys, "accuracy__related", PositionVariant::kAfterFact);
  ASSERT_EQ(tables.size(), 2u);
  EXPECT_EQ(tables[0].name, "accuracy__related__multi__after_fact");
  EXPECT_EQ(tables[1].name, "accuracy__related__single__after_fact");
  EXPECT_EQ(to_csv(tables[0]), "model,n_attractors,value,count\nmock:a,0,1,4\nmock:a,1,0.25,4\n");
  EXPECT_EQ(to_csv(tables[1]), "model,n_attractors,value,count\nmock:a,0,1,4\nmock:b,0,0.5,2\n");
}

TEST(Tables, EmptyInputGivesHeaderOnly) {
  const auto tables = tables_from_rows({}, kKeys, "accuracy__related", PositionVariant::kBetween);
  ASSERT_EQ(tables.size(), 2u);
  EXPECT_EQ(to_csv(tables[0]), "model,n_attractors,value,count\n");
}

TEST(Tables, ModelNamesWithCommasAreQuoted) {
  Table t{"x", {{"masked:m[a=1,b=2]", 0, 0.5, 1, 0}}};
  EXPECT_EQ(to_csv(t), "model,n_attractors,value,count\n\"masked:m[a=1,b=2]\",0,0.5,1\n");
}

TEST(Tables, MissingGroupingKeyIsNamed) {
  try {
    tables_from_rows({}, {"scorer", "n_attractors"}, "s", PositionVariant::kAfterFact);
    FAIL() << "accepted keys without entity_setting";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("entity_setting"), std::string::npos);
  }
  EXPECT_THROW(render_plot({}, {"scorer"}, {}, "t"), std::invalid_argument);
}

// Every plotted point carries the same value string as its CSV cell.
TEST(Plot, PointValuesEqualTableCells) {
  const std::vector<AggregateRow> rows = {row("mock:a", "MULTI", 0, 1.0), row("mock:a", "MULTI", 1, 1.0 / 3.0),
                                          row("mock:a", "SINGLE", 2, 0.1 + 0.2), row("mock:b", "SINGLE", 3, 0.0)};
  const std::string svg = render_plot(rows, kKeys, {MetricField::kAccuracy, Statistic::kMean}, "acc");
  std::map<std::pair<std::string, std::string>, std::string> csv;
  for (const auto& t : tables_from_rows(rows, kKeys, "s", PositionVariant::kAfterFact)) {
    std::istringstream in(to_csv(t));
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      std::istringstream f(line);
      std::string model, n, value;
      std::getline(f, model, ',');
      std::getline(f, n, ',');
      std::getline(f, value, ',');
      csv[{t.name.find("multi") != std::string::npos ? "MULTI" : "SINGLE", model + "/" + n}] = value;
    }
  }
  EXPECT_NE(svg.find("Multiple entities"), std::string::npos);
  EXPECT_NE(svg.find("Single entity"), std::string::npos);
  const std::regex point("data-setting=\"(\\w+)\"|data-model=\"([^\"]+)\" data-n=\"(\\d)\" data-value=\"([^\"]*)\"");
  std::string setting;
  std::size_t points = 0;
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), point); it != std::sregex_iterator(); ++it) {
    if ((*it)[1].matched) {
      setting = (*it)[1];
      continue;
    }
    ++points;
    const auto key = std::make_pair(setting, std::string((*it)[2]) + "/" + std::string((*it)[3]));
    ASSERT_TRUE(csv.contains(key)) << key.first << " " << key.second;
    EXPECT_EQ(csv[key], (*it)[4]);
  }
  EXPECT_EQ(points, rows.size());
}

TEST(Plot, LogAxisOnlyForWideStrictlyPositiveRatios) {
  const ReportMetric ratio{MetricField::kRelativeProbability, Statistic::kMedian};
  const auto wide = render_plot({row("m", "MULTI", 0, 1.0), row("m", "MULTI", 1, 0.001)}, kKeys, ratio, "t");
  EXPECT_NE(wide.find("log scale"), std::string::npos);
  const auto zero = render_plot({row("m", "MULTI", 0, 1.0), row("m", "MULTI", 1, 0.0)}, kKeys, ratio, "t");
  EXPECT_EQ(zero.find("log scale"), std::string::npos);
  const auto narrow = render_plot({row("m", "MULTI", 0, 1.0), row("m", "MULTI", 1, 0.5)}, kKeys, ratio, "t");
  EXPECT_EQ(narrow.find("log scale"), std::string::npos);
}

TEST(Report, LateEntityBorrowsZeroAttractorRows) {
  const std::vector<MetricRecord> rs = {
      record(AttractorKind::kBType, 0, EntitySetting::kMulti, PositionVariant::kAfterFact, 1),
      record(AttractorKind::kBType, 0, EntitySetting::kSingle, PositionVariant::kAfterFact, 1),
      record(AttractorKind::kBType, 1, EntitySetting::kMulti, PositionVariant::kLateEntity, 0),
      record(AttractorKind::kBType, 1, EntitySetting::kMulti, PositionVariant::kAfterFact, 0)};
  const auto late = select_records(rs, ReportClass::kRelated, PositionVariant::kLateEntity);
  ASSERT_EQ(late.size(), 2u);
  EXPECT_EQ(late[0].condition.n_attractors, 0);
  EXPECT_EQ(late[0].condition.entity_setting, EntitySetting::kMulti);
  EXPECT_EQ(late[1].condition.position_variant, PositionVariant::kLateEntity);
  EXPECT_TRUE(select_records(rs, ReportClass::kUnrelated, PositionVariant::kAfterFact).empty());
}

TEST(Report, EmitsTablesPlotsAndCompetence) {
  const auto dir = temp_dir("emit");
  fs::create_directories(dir / "tables");
  write_file_atomic(dir / "tables" / "stale.csv", "old\n");
  std::vector<MetricRecord> rs;
  for (int n = 0; n <= 3; ++n) {
    rs.push_back(record(AttractorKind::kBType, n, EntitySetting::kMulti, PositionVariant::kAfterFact, n == 0));
    rs.push_back(record(AttractorKind::kBType, n, EntitySetting::kSingle, PositionVariant::kAfterFact, n == 0));
  }
  emit_report(rs, dir);
  EXPECT_FALSE(fs::exists(dir / "tables" / "stale.csv"));
  EXPECT_EQ(read_file(dir / "tables" / "accuracy__related__multi__after_fact.csv"),
            "model,n_attractors,value,count\nmock:test,0,1,1\nmock:test,1,0,1\nmock:test,2,0,1\nmock:test,3,0,1\n");
  EXPECT_EQ(read_file(dir / "tables" / "relative_probability_median__b_type__single__after_fact.csv"),
            "model,n_attractors,value,count\nmock:test,0,1,1\nmock:test,1,0.25,1\nmock:test,2,0.25,1\nmock:test,3,0.25,1\n");
  EXPECT_TRUE(fs::exists(dir / "tables" / "relative_probability_mean__related__multi__after_fact.csv"));
  EXPECT_FALSE(fs::exists(dir / "tables" / "accuracy__unrelated__multi__after_fact.csv"));
  EXPECT_TRUE(fs::exists(dir / "plots" / "accuracy__related__after_fact.svg"));
  EXPECT_EQ(read_file(dir / "tables" / "base_competence_summary.csv"), "model,correct,total\nmock:test,1,1\n");
  EXPECT_EQ(read_file(dir / "tables" / "ratio_exclusions.csv"), "model,table,n_attractors,excluded\n");
  fs::remove_all(dir);
}

TEST(Manifest, TimestampAndRunId) {
  ::setenv("SOURCE_DATE_EPOCH", "86400", 1);
  EXPECT_EQ(utc_timestamp(), "1970-01-02T00:00:00Z");
  ::unsetenv("SOURCE_DATE_EPOCH");
  const nlohmann::json config = {{"seed", 1}};
  const auto id = make_run_id(config, "2026-10-17T08:30:00Z");
  EXPECT_TRUE(std::regex_match(id, std::regex("run-20261017T083000Z-[0-9a-f]{8}"))) << id;
  EXPECT_EQ(id, make_run_id(config, "2026-10-17T08:30:00Z"));
  EXPECT_NE(id, make_run_id({{"seed", 2}}, "2026-10-17T08:30:00Z"));

  RunManifest m{id, config, std::string(64, 'a'), 1, {nlohmann::json("mock:oracle")}, "2026-10-17T08:30:00Z"};
  EXPECT_EQ(nlohmann::json(m).get<RunManifest>(), m);
}
