#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "adcofe/classify.hpp"
#include "adcofe/corpus.hpp"
#include "adcofe/kgclient.hpp"
#include "adcofe/metrics.hpp"

namespace adcofe {

struct PipelineConfig {
  std::string corpus_path;
  std::string out_dir = "out";

  KgSource kg_mode = KgSource::Fixture;
  std::string kg_url = "http://api.conceptnet.io";
  std::string kg_fixture;
  std::string kg_cache;  // empty: ADCOFE_CACHE_DIR, else out_dir (http/cache modes)
  int k = 3;
  int variants = 3;

  std::string lexicon_path;    // empty: bundled starter lexicon
  double threshold = 0.05;
  bool sentiment = true;
  std::string stopwords_path;  // empty: bundled list

  double split_fraction = 0.2;
  std::uint64_t seed = 0;

  EncoderConfig encoder;
  TrainConfig train;
  bool sop_warm_start = false;

  int synth_per_class = 50;
};

// Flat "key = value" file with [section] headers; unknown keys are errors.
// CLI flags override whatever the file set.
PipelineConfig load_pipeline_config(const std::string& path);
void apply_config_line(PipelineConfig& cfg, const std::string& section, const std::string& key,
                       const std::string& value, const std::string& where);

// keeps kg/split/train seeds in step with the global seed
void reseed(PipelineConfig& cfg, std::uint64_t seed);

std::string enriched_to_jsonl(const std::vector<EnrichedSample>& samples);
std::vector<EnrichedSample> enriched_from_jsonl_file(const std::string& path);

struct IngestSummary {
  std::size_t conversations = 0;
  std::size_t utterances = 0;
  std::size_t dropped_records = 0;
  std::size_t unlabeled = 0;
  std::map<EmotionLabel, std::size_t> label_counts;
};

IngestSummary run_ingest(const PipelineConfig& cfg);
std::string format_ingest(const IngestSummary& summary, bool as_json);

struct EnrichArtifacts {
  std::string train_path;  // augmented + feature-tagged training samples
  std::string test_path;   // held-out originals, feature-tagged only
  std::string meta_path;
  std::size_t train_samples = 0;
  std::size_t test_samples = 0;
  std::size_t failed_fetches = 0;
};

EnrichArtifacts run_enrich(const PipelineConfig& cfg);

struct TrainArtifacts {
  std::string model_path;
  std::string vocab_path;
  std::string log_path;
  std::vector<double> epoch_mean_loss;
};

TrainArtifacts run_train(const PipelineConfig& cfg);

struct EvalArtifacts {
  std::string report_json_path;
  std::string report_text_path;
  MetricsReport report;
};

EvalArtifacts run_eval(const PipelineConfig& cfg, bool include_reference_rows);

// renders a stored report.json
std::string run_report(const PipelineConfig& cfg, bool include_reference_rows, bool as_json);

void run_synth(const PipelineConfig& cfg);

}  // namespace adcofe
