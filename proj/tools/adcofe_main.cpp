#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "adcofe/errors.hpp"
#include "adcofe/pipeline.hpp"

namespace {

using adcofe::PipelineConfig;

int dispatch(const std::string& command, PipelineConfig& cfg, bool include_reference_rows,
             bool as_json) {
  using namespace adcofe;
  if (command == "ingest") {
    std::cout << format_ingest(run_ingest(cfg), as_json);
  } else if (command == "enrich") {
    const EnrichArtifacts a = run_enrich(cfg);
    if (as_json) {
      const nlohmann::json j = {{"failed_fetches", a.failed_fetches},
                                {"test_path", a.test_path},
                                {"test_samples", a.test_samples},
                                {"train_path", a.train_path},
                                {"train_samples", a.train_samples}};
      std::cout << j.dump(2) << "\n";
    } else {
      std::cout << "train: " << a.train_path << " (" << a.train_samples << " samples)\n"
                << "test:  " << a.test_path << " (" << a.test_samples << " samples)\n";
      if (a.failed_fetches > 0)
        std::cout << "warning: " << a.failed_fetches << " knowledge-graph fetches failed\n";
    }
  } else if (command == "train") {
    const TrainArtifacts a = run_train(cfg);
    if (as_json) {
      const nlohmann::json j = {{"epoch_mean_loss", a.epoch_mean_loss},
                                {"log_path", a.log_path},
                                {"model_path", a.model_path},
                                {"vocab_path", a.vocab_path}};
      std::cout << j.dump(2) << "\n";
    } else {
      std::cout << "model: " << a.model_path << "\n";
      for (std::size_t e = 0; e < a.epoch_mean_loss.size(); ++e)
        std::cout << "epoch " << e + 1 << " mean loss " << a.epoch_mean_loss[e] << "\n";
    }
  } else if (command == "eval") {
    run_eval(cfg, include_reference_rows);
    std::cout << run_report(cfg, include_reference_rows, as_json);
  } else if (command == "report") {
    std::cout << run_report(cfg, include_reference_rows, as_json);
  } else if (command == "synth") {
    run_synth(cfg);
    std::cout << "synthetic corpus written under " << cfg.out_dir << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"emotion recognition over dyadic conversations"};
  app.require_subcommand(1);

  std::string config_path, out_dir, format = "text", corpus;
  std::uint64_t seed = 0;
  app.add_option("--config", config_path, "pipeline config file");
  auto* seed_opt = app.add_option("--seed", seed, "master seed for every stage");
  auto* out_opt = app.add_option("--out", out_dir, "artifact directory");
  app.add_option("--format", format, "output format")
      ->check(CLI::IsMember({"text", "json"}));

  CLI::App* ingest = app.add_subcommand("ingest", "load and summarize a corpus");
  ingest->fallthrough();
  auto* ingest_corpus = ingest->add_option("corpus", corpus, "corpus file (.csv or .jsonl)");

  CLI::App* enrich = app.add_subcommand(
      "enrich", "split the corpus, augment training data, add sentiment features");
  enrich->fallthrough();
  auto* enrich_corpus = enrich->add_option("corpus", corpus, "corpus file (.csv or .jsonl)");
  std::string kg_mode, kg_url, lexicon, stopwords, fixture;
  int k = 0, variants = 0;
  double threshold = 0.0, split_fraction = 0.0;
  auto* kg_mode_opt = enrich->add_option("--kg-mode", kg_mode, "knowledge-graph source")
                          ->check(CLI::IsMember({"http", "fixture", "cache"}));
  auto* kg_url_opt = enrich->add_option("--kg-url", kg_url, "knowledge-graph base URL");
  auto* fixture_opt = enrich->add_option("--kg-fixture", fixture, "fixture JSON file");
  auto* k_opt = enrich->add_option("--k", k, "related terms per token");
  auto* variants_opt = enrich->add_option("--variants", variants, "augmented variants per sentence");
  auto* lexicon_opt = enrich->add_option("--lexicon", lexicon, "valence lexicon file");
  auto* threshold_opt = enrich->add_option("--threshold", threshold, "sentiment class threshold");
  auto* stopwords_opt = enrich->add_option("--stopwords", stopwords, "stopword list file");
  auto* split_opt = enrich->add_option("--split", split_fraction, "held-out fraction");
  auto* no_sentiment = enrich->add_flag("--no-sentiment", "skip sentiment feature tokens");

  CLI::App* train = app.add_subcommand("train", "train the classifier on enriched data");
  train->fallthrough();
  auto* sop_flag = train->add_flag("--sop", "warm-start the encoder on sentence order");

  bool include_reference_rows = false;
  CLI::App* eval = app.add_subcommand("eval", "score the held-out split");
  eval->fallthrough();
  eval->add_flag("--include-paper-rows", include_reference_rows,
                 "append published reference rows");
  CLI::App* report = app.add_subcommand("report", "render a stored report");
  report->fallthrough();
  report->add_flag("--include-paper-rows", include_reference_rows,
                   "append published reference rows");

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic desk-scale corpus");
  synth->fallthrough();
  int per_class = 0;
  auto* per_class_opt = synth->add_option("--per-class", per_class, "utterances per emotion");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    PipelineConfig cfg;
    if (!config_path.empty()) cfg = adcofe::load_pipeline_config(config_path);
    if (seed_opt->count() > 0) adcofe::reseed(cfg, seed);
    if (out_opt->count() > 0) cfg.out_dir = out_dir;
    if (ingest_corpus->count() > 0 || enrich_corpus->count() > 0) cfg.corpus_path = corpus;
    if (kg_mode_opt->count() > 0) cfg.kg_mode = *adcofe::kg_source_from_string(kg_mode);
    if (kg_url_opt->count() > 0) cfg.kg_url = kg_url;
    if (fixture_opt->count() > 0) cfg.kg_fixture = fixture;
    if (k_opt->count() > 0) cfg.k = k;
    if (variants_opt->count() > 0) cfg.variants = variants;
    if (lexicon_opt->count() > 0) cfg.lexicon_path = lexicon;
    if (threshold_opt->count() > 0) cfg.threshold = threshold;
    if (stopwords_opt->count() > 0) cfg.stopwords_path = stopwords;
    if (split_opt->count() > 0) cfg.split_fraction = split_fraction;
    if (no_sentiment->count() > 0) cfg.sentiment = false;
    if (sop_flag->count() > 0) cfg.sop_warm_start = true;
    if (per_class_opt->count() > 0) cfg.synth_per_class = per_class;

    const std::string command = app.get_subcommands().front()->get_name();
    return dispatch(command, cfg, include_reference_rows, format == "json");
  } catch (const adcofe::UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const adcofe::NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const adcofe::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
