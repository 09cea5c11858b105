#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "adcofe/corpus.hpp"

namespace adcofe {

// rows = gold, cols = predicted
struct ConfusionMatrix {
  std::array<std::array<std::int64_t, kNumEmotions>, kNumEmotions> counts{};

  std::int64_t total() const;
  std::int64_t trace() const;
  std::int64_t row_total(int gold) const;
  std::int64_t col_total(int pred) const;
};

ConfusionMatrix confusion(const std::vector<EmotionLabel>& golds,
                          const std::vector<EmotionLabel>& preds);

struct ClassMetrics {
  EmotionLabel label = EmotionLabel::Happy;
  double accuracy = 0.0;  // per-class accuracy a.k.a. recall
  double precision = 0.0;
  double f1 = 0.0;
  std::int64_t support = 0;
};

struct MetricsReport {
  std::vector<ClassMetrics> per_class;  // one entry per emotion, code order
  double overall_accuracy = 0.0;
  double weighted_f1 = 0.0;
};

// 0/0 ratios are 0; zero-support classes get weight 0 in the weighted F1.
MetricsReport per_class_metrics(const ConfusionMatrix& cm);

struct ReferenceRow {
  std::string name;
  double accuracy = -1.0;  // < 0 when the source reports F1 only
  double f1 = -1.0;
};

// Published numbers we compare against but never reproduce at desk scale.
struct ReferenceTables {
  std::vector<ReferenceRow> baselines;
  std::vector<ReferenceRow> f1_only_baselines;
  std::vector<ReferenceRow> variants;
  std::string footnote;
};

ReferenceTables load_reference_tables(const std::string& path);

// Aligned-column text table of this run's metrics; with include_reference_rows
// the published rows follow, each marked "paper-reported, not reproduced".
std::string render_comparison(const MetricsReport& report, bool include_reference_rows,
                              const ReferenceTables& refs);
std::string render_comparison(const MetricsReport& report, bool include_reference_rows);

// Deterministic JSON: per-class metrics, overall accuracy/weighted F1, and the
// full confusion matrix.
std::string report_to_json(const MetricsReport& report, const ConfusionMatrix& cm);

// Resolves a file shipped in the source tree's data/ directory.
std::string bundled_data_path(const std::string& filename);

}  // namespace adcofe
