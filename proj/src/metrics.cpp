#include "adcofe/metrics.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "adcofe/errors.hpp"

#ifndef ADCOFE_DATA_DIR
#define ADCOFE_DATA_DIR "data"
#endif

namespace adcofe {

namespace {

using nlohmann::json;

double safe_div(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

std::string fixed2(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << v;
  return os.str();
}

void append_row(std::string& out, const std::string& name, const std::string& acc,
                const std::string& f1, const std::string& note) {
  std::ostringstream os;
  os << "  " << std::left << std::setw(26) << name << std::right << std::setw(8) << acc
     << std::setw(8) << f1;
  if (!note.empty()) os << "  " << note;
  out += os.str();
  out += '\n';
}

ReferenceRow parse_reference_row(const json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("name"))
    throw DataError(where + ": reference row needs a name");
  ReferenceRow row;
  row.name = j.at("name").get<std::string>();
  if (j.contains("accuracy")) row.accuracy = j.at("accuracy").get<double>();
  if (j.contains("f1")) row.f1 = j.at("f1").get<double>();
  return row;
}

}  // namespace

std::int64_t ConfusionMatrix::total() const {
  std::int64_t t = 0;
  for (const auto& row : counts)
    for (std::int64_t c : row) t += c;
  return t;
}

std::int64_t ConfusionMatrix::trace() const {
  std::int64_t t = 0;
  for (int i = 0; i < kNumEmotions; ++i) t += counts[i][i];
  return t;
}

std::int64_t ConfusionMatrix::row_total(int gold) const {
  std::int64_t t = 0;
  for (std::int64_t c : counts[gold]) t += c;
  return t;
}

std::int64_t ConfusionMatrix::col_total(int pred) const {
  std::int64_t t = 0;
  for (const auto& row : counts) t += row[pred];
  return t;
}

ConfusionMatrix confusion(const std::vector<EmotionLabel>& golds,
                          const std::vector<EmotionLabel>& preds) {
  if (golds.empty()) throw UsageError("confusion: empty input");
  if (golds.size() != preds.size())
    throw UsageError("confusion: " + std::to_string(golds.size()) + " golds vs " +
                     std::to_string(preds.size()) + " predictions");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < golds.size(); ++i)
    ++cm.counts[static_cast<int>(golds[i])][static_cast<int>(preds[i])];
  return cm;
}

MetricsReport per_class_metrics(const ConfusionMatrix& cm) {
  const std::int64_t total = cm.total();
  if (total <= 0) throw UsageError("per_class_metrics: empty confusion matrix");
  MetricsReport report;
  double weighted = 0.0;
  for (int c = 0; c < kNumEmotions; ++c) {
    ClassMetrics m;
    m.label = static_cast<EmotionLabel>(c);
    m.support = cm.row_total(c);
    const double diag = static_cast<double>(cm.counts[c][c]);
    m.accuracy = safe_div(diag, static_cast<double>(m.support));
    m.precision = safe_div(diag, static_cast<double>(cm.col_total(c)));
    m.f1 = safe_div(2.0 * m.precision * m.accuracy, m.precision + m.accuracy);
    weighted += static_cast<double>(m.support) / static_cast<double>(total) * m.f1;
    report.per_class.push_back(m);
  }
  report.overall_accuracy = static_cast<double>(cm.trace()) / static_cast<double>(total);
  report.weighted_f1 = weighted;
  return report;
}

ReferenceTables load_reference_tables(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open reference tables: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw DataError(path + ": invalid JSON: " + e.what());
  }
  if (!j.is_object()) throw DataError(path + ": reference tables must be a JSON object");
  ReferenceTables tables;
  for (const json& row : j.value("baselines", json::array()))
    tables.baselines.push_back(parse_reference_row(row, path));
  for (const json& row : j.value("f1_only_baselines", json::array()))
    tables.f1_only_baselines.push_back(parse_reference_row(row, path));
  for (const json& row : j.value("variants", json::array()))
    tables.variants.push_back(parse_reference_row(row, path));
  tables.footnote = j.value("footnote", std::string());
  return tables;
}

std::string render_comparison(const MetricsReport& report, bool include_reference_rows,
                              const ReferenceTables& refs) {
  std::string out;
  out += "Per-class results (this run)\n";
  append_row(out, "class", "Acc", "F1", "");
  for (const ClassMetrics& m : report.per_class) {
    append_row(out, to_string(m.label), fixed2(100.0 * m.accuracy), fixed2(100.0 * m.f1),
               "support " + std::to_string(m.support));
  }
  append_row(out, "average", fixed2(100.0 * report.overall_accuracy),
             fixed2(100.0 * report.weighted_f1), "");

  if (include_reference_rows) {
    const std::string mark = "paper-reported, not reproduced";
    out += "\nPublished averages\n";
    append_row(out, "model", "Acc", "F1", "");
    for (const ReferenceRow& r : refs.baselines)
      append_row(out, r.name, fixed2(r.accuracy), fixed2(r.f1), mark);
    for (const ReferenceRow& r : refs.f1_only_baselines)
      append_row(out, r.name, "-", fixed2(r.f1), mark);
    out += "\nPublished model variants\n";
    for (const ReferenceRow& r : refs.variants)
      append_row(out, r.name, fixed2(r.accuracy), fixed2(r.f1), mark);
    if (!refs.footnote.empty()) out += "\nNote: " + refs.footnote + "\n";
  }
  return out;
}

std::string render_comparison(const MetricsReport& report, bool include_reference_rows) {
  if (!include_reference_rows) return render_comparison(report, false, ReferenceTables{});
  return render_comparison(report, true,
                           load_reference_tables(bundled_data_path("reference_results.json")));
}

std::string report_to_json(const MetricsReport& report, const ConfusionMatrix& cm) {
  json per_class = json::array();
  for (const ClassMetrics& m : report.per_class) {
    per_class.push_back({{"accuracy", m.accuracy},
                         {"f1", m.f1},
                         {"label", to_string(m.label)},
                         {"precision", m.precision},
                         {"support", m.support}});
  }
  json matrix = json::array();
  for (const auto& row : cm.counts) matrix.push_back(row);
  json j = {{"confusion_matrix", matrix},
            {"overall_accuracy", report.overall_accuracy},
            {"per_class", per_class},
            {"weighted_f1", report.weighted_f1}};
  return j.dump(2) + "\n";
}

std::string bundled_data_path(const std::string& filename) {
  return std::string(ADCOFE_DATA_DIR) + "/" + filename;
}

}  // namespace adcofe
