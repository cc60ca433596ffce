#include "cloze/report.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <ctime>
#include <map>
#include <set>
#include <stdexcept>
#include <tuple>

#include "cloze/digest.hpp"
#include "cloze/records.hpp"
#include "cloze/text.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace cloze {

namespace {

const std::vector<std::string> kPlotKeys = {"scorer", "entity_setting", "n_attractors"};

std::size_t key_index(const std::vector<std::string>& keys, const std::string& key) {
  const auto it = std::find(keys.begin(), keys.end(), key);
  if (it == keys.end()) throw std::invalid_argument("missing grouping key '" + key + "'");
  return static_cast<std::size_t>(it - keys.begin());
}

std::string lower_label(const std::string& s) { return to_lower(s); }

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

constexpr std::array<const char*, 8> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                 "#9467bd", "#8c564b", "#e377c2", "#17becf"};

}  // namespace

std::string format_value(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::string to_string(ReportClass c) {
  switch (c) {
    case ReportClass::kRelated: return "related";
    case ReportClass::kBType: return "b_type";
    case ReportClass::kTType: return "t_type";
    case ReportClass::kUnrelated: return "unrelated";
  }
  return "?";
}

bool in_class(const MetricRecord& r, ReportClass c) {
  const auto k = r.condition.attractor_kind;
  switch (c) {
    case ReportClass::kRelated: return k != AttractorKind::kUnrelated;
    case ReportClass::kBType: return k == AttractorKind::kBType;
    case ReportClass::kTType: return k == AttractorKind::kTType;
    case ReportClass::kUnrelated: return k == AttractorKind::kUnrelated;
  }
  return false;
}

std::string ReportMetric::name() const {
  if (field == MetricField::kRelativeProbability) return to_string(field) + "_" + to_string(statistic);
  return to_string(field);
}

std::vector<MetricRecord> select_records(const std::vector<MetricRecord>& records, ReportClass cls,
                                         PositionVariant position) {
  std::vector<MetricRecord> out;
  for (const auto& r : records) {
    if (!in_class(r, cls)) continue;
    const auto& c = r.condition;
    const bool borrowed = position == PositionVariant::kLateEntity && c.n_attractors == 0 &&
                          c.position_variant == PositionVariant::kAfterFact &&
                          c.entity_setting == EntitySetting::kMulti;
    if (c.position_variant == position || borrowed) out.push_back(r);
  }
  return out;
}

std::vector<Table> tables_from_rows(const std::vector<AggregateRow>& rows,
                                    const std::vector<std::string>& keys, const std::string& stem,
                                    PositionVariant position) {
  const auto si = key_index(keys, "scorer");
  const auto ei = key_index(keys, "entity_setting");
  const auto ni = key_index(keys, "n_attractors");
  std::vector<Table> tables;
  for (const auto setting : {EntitySetting::kMulti, EntitySetting::kSingle}) {
    Table t{stem + "__" + lower_label(to_string(setting)) + "__" + lower_label(to_string(position)), {}};
    for (const auto& r : rows) {
      if (r.group[ei] != to_string(setting)) continue;
      t.rows.push_back({r.group[si], std::stoi(r.group[ni]), r.value, r.count, r.excluded});
    }
    tables.push_back(std::move(t));
  }
  return tables;
}

std::string to_csv(const Table& table) {
  std::string out = "model,n_attractors,value,count\n";
  for (const auto& r : table.rows) {
    std::string model = r.model;
    if (model.find_first_of(",\"\n") != std::string::npos) {
      std::string quoted = "\"";
      for (char c : model) quoted += c == '"' ? std::string("\"\"") : std::string(1, c);
      model = quoted + "\"";
    }
    out += model + "," + std::to_string(r.n_attractors) + "," + format_value(r.value) + "," +
           std::to_string(r.count) + "\n";
  }
  return out;
}

std::string render_plot(const std::vector<AggregateRow>& rows, const std::vector<std::string>& keys,
                        const ReportMetric& metric, const std::string& title) {
  const auto si = key_index(keys, "scorer");
  const auto ei = key_index(keys, "entity_setting");
  const auto ni = key_index(keys, "n_attractors");

  std::vector<std::string> models;
  for (const auto& r : rows) {
    if (std::find(models.begin(), models.end(), r.group[si]) == models.end()) models.push_back(r.group[si]);
  }
  std::sort(models.begin(), models.end());

  // Vertical scale.
  const bool ratio = metric.field == MetricField::kRelativeProbability;
  double lo = 0.0, hi = 1.0;
  bool log_axis = false;
  if (ratio) {
    double vmin = std::numeric_limits<double>::infinity(), vmax = 0.0;
    bool any_zero = false;
    for (const auto& r : rows) {
      if (r.empty()) continue;
      if (r.value <= 0.0) any_zero = true;
      else vmin = std::min(vmin, r.value);
      vmax = std::max(vmax, r.value);
    }
    if (!any_zero && std::isfinite(vmin) && vmax / vmin > 10.0) {
      log_axis = true;
      lo = std::floor(std::log10(vmin));
      hi = std::ceil(std::log10(vmax));
    } else {
      hi = std::max(1.0, vmax) * 1.05;
    }
  }

  constexpr double kPanelW = 300, kPanelH = 220, kLeft = 60, kTop = 50, kGap = 70;
  const double width = kLeft + 2 * kPanelW + kGap + 30;
  const double legend_top = kTop + kPanelH + 50;
  const double height = legend_top + 18.0 * static_cast<double>(models.size()) + 20;

  auto y_of = [&](double v) {
    const double t = log_axis ? (std::log10(v) - lo) / (hi - lo) : (v - lo) / (hi - lo);
    return kTop + kPanelH * (1.0 - t);
  };
  auto x_of = [&](double panel_x, int n) { return panel_x + kPanelW * n / kMaxAttractors; };

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed(width) +
                    "\" height=\"" + fixed(height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg += "<text x=\"" + fixed(width / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" +
         xml_escape(title) + "</text>\n";
  const std::string y_label = metric.name() + (log_axis ? " (log scale)" : "");

  const std::vector<std::pair<EntitySetting, std::string>> panels = {
      {EntitySetting::kMulti, "Multiple entities"}, {EntitySetting::kSingle, "Single entity"}};
  for (std::size_t p = 0; p < panels.size(); ++p) {
    const double px = kLeft + static_cast<double>(p) * (kPanelW + kGap);
    const auto setting = to_string(panels[p].first);
    svg += "<g class=\"panel\" data-setting=\"" + setting + "\">\n";
    svg += "<text x=\"" + fixed(px + kPanelW / 2) + "\" y=\"" + fixed(kTop - 10) +
           "\" text-anchor=\"middle\">" + panels[p].second + "</text>\n";
    svg += "<rect x=\"" + fixed(px) + "\" y=\"" + fixed(kTop) + "\" width=\"" + fixed(kPanelW) +
           "\" height=\"" + fixed(kPanelH) + "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (int n = 0; n <= kMaxAttractors; ++n) {
      svg += "<text x=\"" + fixed(x_of(px, n)) + "\" y=\"" + fixed(kTop + kPanelH + 16) +
             "\" text-anchor=\"middle\">" + std::to_string(n) + "</text>\n";
    }
    svg += "<text x=\"" + fixed(px + kPanelW / 2) + "\" y=\"" + fixed(kTop + kPanelH + 34) +
           "\" text-anchor=\"middle\">number of attractors</text>\n";
    // Y ticks: decades on a log axis, five steps otherwise.
    std::vector<double> ticks;
    if (log_axis) {
      for (double e = lo; e <= hi; e += 1.0) ticks.push_back(std::pow(10.0, e));
    } else {
      for (int i = 0; i <= 4; ++i) ticks.push_back(lo + (hi - lo) * i / 4.0);
    }
    for (const double t : ticks) {
      char label[32];
      std::snprintf(label, sizeof label, log_axis ? "%g" : "%.2f", t);
      svg += "<text x=\"" + fixed(px - 6) + "\" y=\"" + fixed(y_of(t) + 4) +
             "\" text-anchor=\"end\">" + label + "</text>\n";
    }
    svg += "<text transform=\"rotate(-90)\" x=\"" + fixed(-(kTop + kPanelH / 2)) + "\" y=\"" +
           fixed(px - 44) + "\" text-anchor=\"middle\">" + xml_escape(y_label) + "</text>\n";

    for (std::size_t m = 0; m < models.size(); ++m) {
      const std::string color = kPalette[m % kPalette.size()];
      std::vector<std::pair<int, const AggregateRow*>> pts;
      for (const auto& r : rows) {
        if (r.group[si] == models[m] && r.group[ei] == setting && !r.empty()) {
          pts.emplace_back(std::stoi(r.group[ni]), &r);
        }
      }
      std::sort(pts.begin(), pts.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      if (pts.empty()) continue;
      std::string line;
      for (const auto& [n, r] : pts) {
        line += (line.empty() ? "" : " ") + fixed(x_of(px, n)) + "," + fixed(y_of(r->value));
      }
      svg += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"2\" points=\"" + line + "\"/>\n";
      for (const auto& [n, r] : pts) {
        svg += "<circle cx=\"" + fixed(x_of(px, n)) + "\" cy=\"" + fixed(y_of(r->value)) +
               "\" r=\"3\" fill=\"" + color + "\" data-model=\"" + xml_escape(models[m]) +
               "\" data-n=\"" + std::to_string(n) + "\" data-value=\"" + format_value(r->value) +
               "\" data-count=\"" + std::to_string(r->count) + "\"/>\n";
      }
    }
    svg += "</g>\n";
  }
  for (std::size_t m = 0; m < models.size(); ++m) {
    const double y = legend_top + 18.0 * static_cast<double>(m);
    svg += "<rect x=\"" + fixed(kLeft) + "\" y=\"" + fixed(y - 9) + "\" width=\"12\" height=\"12\" fill=\"" +
           kPalette[m % kPalette.size()] + "\"/>\n";
    svg += "<text x=\"" + fixed(kLeft + 18) + "\" y=\"" + fixed(y + 1) + "\">" + xml_escape(models[m]) +
           "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

void emit_report(const std::vector<MetricRecord>& records, const fs::path& run_dir) {
  const auto tables_dir = run_dir / "tables";
  const auto plots_dir = run_dir / "plots";
  std::error_code ec;
  for (const auto& d : {tables_dir, plots_dir}) {
    fs::remove_all(d, ec);
    if (ec) throw std::runtime_error("cannot clear " + d.string() + ": " + ec.message());
  }
  fs::create_directories(tables_dir);
  fs::create_directories(plots_dir);

  const std::vector<ReportMetric> metrics = {
      {MetricField::kAccuracy, Statistic::kMean},
      {MetricField::kRelativeProbability, Statistic::kMedian},
      {MetricField::kRelativeProbability, Statistic::kMean}};
  std::string exclusions = "model,table,n_attractors,excluded\n";

  for (const auto cls : {ReportClass::kRelated, ReportClass::kBType, ReportClass::kTType,
                         ReportClass::kUnrelated}) {
    for (const auto pos : {PositionVariant::kAfterFact, PositionVariant::kBetween,
                           PositionVariant::kLateEntity}) {
      const bool present = std::any_of(records.begin(), records.end(), [&](const MetricRecord& r) {
        return in_class(r, cls) && r.condition.position_variant == pos;
      });
      if (!present) continue;
      const auto selected = select_records(records, cls, pos);
      for (const auto& metric : metrics) {
        const auto rows = aggregate(selected, kPlotKeys, metric.field, metric.statistic);
        const std::string stem = metric.name() + "__" + to_string(cls);
        for (const auto& t : tables_from_rows(rows, kPlotKeys, stem, pos)) {
          write_file_atomic(tables_dir / (t.name + ".csv"), to_csv(t));
          if (metric.field != MetricField::kRelativeProbability) continue;
          for (const auto& r : t.rows) {
            if (r.excluded > 0) {
              exclusions += r.model + "," + t.name + "," + std::to_string(r.n_attractors) + "," +
                            std::to_string(r.excluded) + "\n";
            }
          }
        }
        const std::string plot_name = stem + "__" + to_lower(to_string(pos));
        const std::string title = metric.name() + " by number of attractors (" + to_string(cls) +
                                  ", " + to_lower(to_string(pos)) + ")";
        write_file_atomic(plots_dir / (plot_name + ".svg"), render_plot(rows, kPlotKeys, metric, title));
      }
    }
  }
  write_file_atomic(tables_dir / "ratio_exclusions.csv", exclusions);

  // Base competence: one row per (model, base item), failures included.
  std::string base = "model,set_id,target_word,correct\n";
  std::map<std::string, std::pair<int, int>> totals;
  std::set<std::tuple<std::string, std::string, std::string>> seen;
  for (const auto& r : records) {
    if (!seen.insert({r.scorer, r.set_id, r.target_word}).second) continue;
    base += r.scorer + "," + r.set_id + "," + r.target_word + "," + std::to_string(r.base_accuracy) + "\n";
    auto& [correct, total] = totals[r.scorer];
    correct += r.base_accuracy;
    ++total;
  }
  write_file_atomic(tables_dir / "base_competence.csv", base);
  std::string summary = "model,correct,total\n";
  for (const auto& [model, t] : totals) {
    summary += model + "," + std::to_string(t.first) + "," + std::to_string(t.second) + "\n";
  }
  write_file_atomic(tables_dir / "base_competence_summary.csv", summary);
}

void to_json(json& j, const RunManifest& m) {
  j = json{{"run_id", m.run_id},       {"config", m.config},     {"bank_checksum", m.bank_checksum},
           {"seed", m.seed},           {"scorers", m.scorers},   {"created_at", m.created_at}};
}

void from_json(const json& j, RunManifest& m) {
  j.at("run_id").get_to(m.run_id);
  m.config = j.at("config");
  j.at("bank_checksum").get_to(m.bank_checksum);
  j.at("seed").get_to(m.seed);
  m.scorers = j.at("scorers").get<std::vector<json>>();
  j.at("created_at").get_to(m.created_at);
}

std::string utc_timestamp() {
  std::time_t t = 0;
  const char* epoch = std::getenv("SOURCE_DATE_EPOCH");
  long long parsed = 0;
  if (epoch != nullptr && *epoch != '\0' &&
      std::from_chars(epoch, epoch + std::strlen(epoch), parsed).ec == std::errc()) {
    t = static_cast<std::time_t>(parsed);
  } else {
    t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string make_run_id(const json& config, const std::string& created_at) {
  std::string compact;
  for (char c : created_at) {
    if (std::isdigit(static_cast<unsigned char>(c)) || c == 'T' || c == 'Z') compact += c;
  }
  return "run-" + compact + "-" + sha256_hex(config.dump()).substr(0, 8);
}

}  // namespace cloze
