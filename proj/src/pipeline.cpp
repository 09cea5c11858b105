#include "adcofe/pipeline.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "adcofe/errors.hpp"
#include "adcofe/rng.hpp"
#include "adcofe/sentlex.hpp"
#include "adcofe/synth.hpp"
#include "adcofe/textprep.hpp"

namespace adcofe {

namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
  const std::size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const std::size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

int to_int(const std::string& value, const std::string& where) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw UsageError(where + ": expected an integer, got '" + value + "'");
  }
}

std::uint64_t to_u64(const std::string& value, const std::string& where) {
  try {
    // stoull would wrap "-1" around instead of rejecting it
    if (value.find('-') != std::string::npos) throw std::invalid_argument("negative");
    std::size_t used = 0;
    const std::uint64_t v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw UsageError(where + ": expected a nonnegative integer, got '" + value + "'");
  }
}

double to_double(const std::string& value, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw UsageError(where + ": expected a number, got '" + value + "'");
  }
}

bool to_bool(const std::string& value, const std::string& where) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw UsageError(where + ": expected true or false, got '" + value + "'");
}

std::string provenance_name(Provenance p) {
  return p == Provenance::Original ? "original" : "kg_augmented";
}

std::string resolve_cache_path(const PipelineConfig& cfg) {
  if (!cfg.kg_cache.empty()) return cfg.kg_cache;
  if (const char* dir = std::getenv("ADCOFE_CACHE_DIR"); dir != nullptr && *dir != '\0')
    return std::string(dir) + "/kg_cache.jsonl";
  return cfg.out_dir + "/kg_cache.jsonl";
}

std::string stopwords_path(const PipelineConfig& cfg) {
  return cfg.stopwords_path.empty() ? bundled_data_path("stopwords.txt") : cfg.stopwords_path;
}

std::string lexicon_path(const PipelineConfig& cfg) {
  return cfg.lexicon_path.empty() ? bundled_data_path("starter_lexicon.txt") : cfg.lexicon_path;
}

std::vector<Utterance> flatten(const std::vector<Conversation>& convs) {
  std::vector<Utterance> out;
  for (const Conversation& c : convs)
    out.insert(out.end(), c.utterances.begin(), c.utterances.end());
  return out;
}

std::vector<EnrichedSample> as_originals(const std::vector<Utterance>& utterances) {
  std::vector<EnrichedSample> out;
  out.reserve(utterances.size());
  for (const Utterance& u : utterances) {
    EnrichedSample s;
    s.conversation_id = u.conversation_id;
    s.turn_index = u.turn_index;
    s.speaker = u.speaker;
    s.text = u.text;
    s.label = u.label;
    s.provenance = Provenance::Original;
    out.push_back(std::move(s));
  }
  return out;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << content;
  if (!out) throw DataError("write failed: " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// conversations rebuilt from the original samples, in sample order
std::vector<Conversation> conversations_of(const std::vector<EnrichedSample>& samples) {
  std::vector<Conversation> convs;
  for (const EnrichedSample& s : samples) {
    if (s.provenance != Provenance::Original) continue;
    if (convs.empty() || convs.back().id != s.conversation_id) {
      Conversation c;
      c.id = s.conversation_id;
      convs.push_back(std::move(c));
    }
    Utterance u;
    u.conversation_id = s.conversation_id;
    u.turn_index = s.turn_index;
    u.speaker = s.speaker;
    u.text = s.text;
    u.label = s.label;
    convs.back().utterances.push_back(std::move(u));
  }
  return convs;
}

}  // namespace

void reseed(PipelineConfig& cfg, std::uint64_t seed) {
  cfg.seed = seed;
  cfg.encoder.seed = mix_seed(seed, 101);
  cfg.train.seed = mix_seed(seed, 202);
}

void apply_config_line(PipelineConfig& cfg, const std::string& section, const std::string& key,
                       const std::string& value, const std::string& where) {
  const std::string id = section.empty() ? key : section + "." + key;
  if (id == "corpus") {
    cfg.corpus_path = value;
  } else if (id == "out") {
    cfg.out_dir = value;
  } else if (id == "seed") {
    reseed(cfg, to_u64(value, where));
  } else if (id == "split.fraction") {
    cfg.split_fraction = to_double(value, where);
  } else if (id == "kg.mode") {
    const auto mode = kg_source_from_string(value);
    if (!mode) throw UsageError(where + ": unknown kg mode '" + value + "'");
    cfg.kg_mode = *mode;
  } else if (id == "kg.url") {
    cfg.kg_url = value;
  } else if (id == "kg.fixture") {
    cfg.kg_fixture = value;
  } else if (id == "kg.cache") {
    cfg.kg_cache = value;
  } else if (id == "kg.k") {
    cfg.k = to_int(value, where);
  } else if (id == "kg.variants") {
    cfg.variants = to_int(value, where);
  } else if (id == "kg.stopwords") {
    cfg.stopwords_path = value;
  } else if (id == "sentiment.lexicon") {
    cfg.lexicon_path = value;
  } else if (id == "sentiment.threshold") {
    cfg.threshold = to_double(value, where);
  } else if (id == "sentiment.enabled") {
    cfg.sentiment = to_bool(value, where);
  } else if (id == "encoder.vocab_size") {
    cfg.encoder.vocab_size = to_int(value, where);
  } else if (id == "encoder.embed_dim") {
    cfg.encoder.embed_dim = to_int(value, where);
  } else if (id == "encoder.hidden_dim") {
    cfg.encoder.hidden_dim = to_int(value, where);
  } else if (id == "encoder.layers") {
    cfg.encoder.layers = to_int(value, where);
  } else if (id == "encoder.heads") {
    cfg.encoder.heads = to_int(value, where);
  } else if (id == "encoder.groups") {
    cfg.encoder.groups = to_int(value, where);
  } else if (id == "encoder.ff_dim") {
    cfg.encoder.ff_dim = to_int(value, where);
  } else if (id == "encoder.max_positions") {
    cfg.encoder.max_positions = to_int(value, where);
  } else if (id == "train.epochs") {
    cfg.train.epochs = to_int(value, where);
  } else if (id == "train.batch_size") {
    cfg.train.batch_size = to_int(value, where);
  } else if (id == "train.learning_rate") {
    cfg.train.learning_rate = to_double(value, where);
  } else if (id == "train.optimizer") {
    if (value == "adam") {
      cfg.train.optimizer = Optimizer::Adam;
    } else if (value == "sgd") {
      cfg.train.optimizer = Optimizer::Sgd;
    } else {
      throw UsageError(where + ": unknown optimizer '" + value + "'");
    }
  } else if (id == "train.sop") {
    cfg.sop_warm_start = to_bool(value, where);
  } else if (id == "synth.per_class") {
    cfg.synth_per_class = to_int(value, where);
  } else {
    throw UsageError(where + ": unknown config key '" + id + "'");
  }
}

PipelineConfig load_pipeline_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file: " + path);
  PipelineConfig cfg;
  std::string line, section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const std::string where = path + ":" + std::to_string(line_no);
    if (stripped.front() == '[') {
      if (stripped.back() != ']') throw UsageError(where + ": unterminated section header");
      section = trim(stripped.substr(1, stripped.size() - 2));
      continue;
    }
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) throw UsageError(where + ": expected key = value");
    apply_config_line(cfg, section, trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)),
                      where);
  }
  return cfg;
}

std::string enriched_to_jsonl(const std::vector<EnrichedSample>& samples) {
  std::string out;
  for (const EnrichedSample& s : samples) {
    json j = {{"conversation_id", s.conversation_id},
              {"label", s.label.has_value() ? json(to_string(*s.label)) : json(nullptr)},
              {"provenance", provenance_name(s.provenance)},
              {"speaker", to_string(s.speaker)},
              {"text", s.text},
              {"turn_index", s.turn_index},
              {"variant", s.variant}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<EnrichedSample> enriched_from_jsonl_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::vector<EnrichedSample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(where + ": " + e.what());
    }
    EnrichedSample s;
    try {
      s.conversation_id = j.at("conversation_id").get<std::string>();
      s.turn_index = j.at("turn_index").get<int>();
      const auto speaker = speaker_from_string(j.at("speaker").get<std::string>());
      if (!speaker) throw DataError(where + ": bad speaker");
      s.speaker = *speaker;
      s.text = j.at("text").get<std::string>();
      if (!j.at("label").is_null()) {
        const auto label = emotion_from_string(j.at("label").get<std::string>());
        if (!label) throw DataError(where + ": bad label");
        s.label = *label;
      }
      const std::string prov = j.at("provenance").get<std::string>();
      if (prov == "original") {
        s.provenance = Provenance::Original;
      } else if (prov == "kg_augmented") {
        s.provenance = Provenance::KgAugmented;
      } else {
        throw DataError(where + ": bad provenance '" + prov + "'");
      }
      s.variant = j.at("variant").get<int>();
    } catch (const json::exception& e) {
      throw DataError(where + ": " + e.what());
    }
    out.push_back(std::move(s));
  }
  return out;
}

IngestSummary run_ingest(const PipelineConfig& cfg) {
  if (cfg.corpus_path.empty()) throw UsageError("no corpus path given");
  const LoadResult loaded = load_corpus(cfg.corpus_path, corpus_format_from_path(cfg.corpus_path));
  IngestSummary summary;
  summary.conversations = loaded.conversations.size();
  summary.dropped_records = loaded.dropped_records;
  for (const Conversation& c : loaded.conversations) {
    summary.utterances += c.utterances.size();
    for (const Utterance& u : c.utterances) {
      if (u.label.has_value()) {
        ++summary.label_counts[*u.label];
      } else {
        ++summary.unlabeled;
      }
    }
  }
  return summary;
}

std::string format_ingest(const IngestSummary& summary, bool as_json) {
  if (as_json) {
    json counts = json::object();
    for (const auto& [label, n] : summary.label_counts) counts[to_string(label)] = n;
    const json j = {{"conversations", summary.conversations},
                    {"dropped_records", summary.dropped_records},
                    {"label_counts", counts},
                    {"unlabeled", summary.unlabeled},
                    {"utterances", summary.utterances}};
    return j.dump(2) + "\n";
  }
  std::ostringstream os;
  os << "conversations: " << summary.conversations << "\n"
     << "utterances:    " << summary.utterances << "\n"
     << "dropped:       " << summary.dropped_records << "\n"
     << "unlabeled:     " << summary.unlabeled << "\n";
  for (const auto& [label, n] : summary.label_counts)
    os << "  " << to_string(label) << ": " << n << "\n";
  return os.str();
}

EnrichArtifacts run_enrich(const PipelineConfig& cfg) {
  if (cfg.corpus_path.empty()) throw UsageError("no corpus path given");
  if (cfg.k < 1) throw UsageError("k must be >= 1");
  if (cfg.variants < 0) throw UsageError("variants must be >= 0");

  const LoadResult loaded = load_corpus(cfg.corpus_path, corpus_format_from_path(cfg.corpus_path));
  const SplitResult split = split_corpus(loaded.conversations, cfg.split_fraction, cfg.seed);

  KgOptions opts;
  opts.source = cfg.kg_mode;
  opts.base_url = cfg.kg_url;
  if (cfg.kg_mode == KgSource::Fixture) {
    if (cfg.kg_fixture.empty()) throw UsageError("fixture mode needs a fixture path");
    opts.fixture_path = cfg.kg_fixture;
  } else {
    opts.cache_path = resolve_cache_path(cfg);
  }
  KgClient client(opts);

  const auto stoplist = load_stopwords(stopwords_path(cfg));
  std::vector<EnrichedSample> train =
      enrich_corpus(client, flatten(split.train), stoplist, cfg.k, cfg.variants);
  std::vector<EnrichedSample> test = as_originals(flatten(split.test));
  if (cfg.sentiment) {
    const Lexicon lex = Lexicon::load(lexicon_path(cfg));
    train = add_sentiment_features(train, lex, cfg.threshold);
    test = add_sentiment_features(test, lex, cfg.threshold);
  }

  std::filesystem::create_directories(cfg.out_dir);
  EnrichArtifacts artifacts;
  artifacts.train_path = cfg.out_dir + "/train_enriched.jsonl";
  artifacts.test_path = cfg.out_dir + "/test.jsonl";
  artifacts.meta_path = cfg.out_dir + "/enrich_meta.json";
  artifacts.train_samples = train.size();
  artifacts.test_samples = test.size();
  artifacts.failed_fetches = client.failed_fetches();
  write_file(artifacts.train_path, enriched_to_jsonl(train));
  write_file(artifacts.test_path, enriched_to_jsonl(test));

  const json meta = {{"failed_fetches", artifacts.failed_fetches},
                     {"k", cfg.k},
                     {"kg_mode", to_string(cfg.kg_mode)},
                     {"seed", cfg.seed},
                     {"sentiment", cfg.sentiment},
                     {"split_fraction", cfg.split_fraction},
                     {"test_samples", test.size()},
                     {"threshold", cfg.threshold},
                     {"train_samples", train.size()},
                     {"variants", cfg.variants}};
  write_file(artifacts.meta_path, meta.dump(2) + "\n");
  return artifacts;
}

TrainArtifacts run_train(const PipelineConfig& cfg) {
  const std::string train_path = cfg.out_dir + "/train_enriched.jsonl";
  const std::vector<EnrichedSample> samples = enriched_from_jsonl_file(train_path);
  if (samples.empty()) throw DataError(train_path + ": no training samples");

  std::vector<std::string> texts;
  texts.reserve(samples.size());
  for (const EnrichedSample& s : samples) texts.push_back(s.text);
  const Vocab vocab = Vocab::build(texts, static_cast<std::size_t>(cfg.encoder.vocab_size));

  EncoderParams warm;
  const EncoderParams* warm_ptr = nullptr;
  if (cfg.sop_warm_start) {
    warm = sop_pretrain(conversations_of(samples), vocab, cfg.encoder, cfg.train);
    warm_ptr = &warm;
  }
  const TrainResult trained = train(samples, vocab, cfg.encoder, cfg.train, warm_ptr);

  std::filesystem::create_directories(cfg.out_dir);
  TrainArtifacts artifacts;
  artifacts.model_path = cfg.out_dir + "/model.ckpt";
  artifacts.vocab_path = cfg.out_dir + "/vocab.txt";
  artifacts.log_path = cfg.out_dir + "/train_log.jsonl";
  artifacts.epoch_mean_loss = trained.epoch_mean_loss;
  save_model(artifacts.model_path, cfg.encoder, trained.encoder, trained.head);
  vocab.save(artifacts.vocab_path);

  std::string log;
  for (std::size_t e = 0; e < trained.epoch_mean_loss.size(); ++e) {
    const json entry = {{"epoch", e + 1},
                        {"mean_loss", trained.epoch_mean_loss[e]},
                        {"seed", cfg.seed},
                        {"wall_ms", trained.epoch_wall_ms[e]}};
    log += entry.dump();
    log += '\n';
  }
  write_file(artifacts.log_path, log);
  return artifacts;
}

EvalArtifacts run_eval(const PipelineConfig& cfg, bool include_reference_rows) {
  const LoadedModel model = load_model(cfg.out_dir + "/model.ckpt");
  const Vocab vocab = Vocab::load(cfg.out_dir + "/vocab.txt");
  const std::string test_path = cfg.out_dir + "/test.jsonl";
  const std::vector<EnrichedSample> test = enriched_from_jsonl_file(test_path);
  if (test.empty()) throw DataError(test_path + ": empty test split");

  std::vector<EmotionLabel> golds;
  for (const EnrichedSample& s : test) {
    if (!s.label.has_value())
      throw DataError(test_path + ": unlabeled test sample, conversation " + s.conversation_id +
                      " turn " + std::to_string(s.turn_index));
    golds.push_back(*s.label);
  }
  const std::vector<Prediction> preds = predict(test, vocab, model.cfg, model.encoder, model.head);
  std::vector<EmotionLabel> pred_labels;
  pred_labels.reserve(preds.size());
  for (const Prediction& p : preds) pred_labels.push_back(p.label);

  const ConfusionMatrix cm = confusion(golds, pred_labels);
  EvalArtifacts artifacts;
  artifacts.report = per_class_metrics(cm);

  json j = json::parse(report_to_json(artifacts.report, cm));
  j["seed"] = cfg.seed;
  artifacts.report_json_path = cfg.out_dir + "/report.json";
  artifacts.report_text_path = cfg.out_dir + "/report.txt";
  write_file(artifacts.report_json_path, j.dump(2) + "\n");
  write_file(artifacts.report_text_path,
             render_comparison(artifacts.report, include_reference_rows));
  return artifacts;
}

std::string run_report(const PipelineConfig& cfg, bool include_reference_rows, bool as_json) {
  const std::string path = cfg.out_dir + "/report.json";
  const std::string text = read_file(path);
  if (as_json) return text;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(path + ": " + e.what());
  }
  MetricsReport report;
  try {
    report.overall_accuracy = j.at("overall_accuracy").get<double>();
    report.weighted_f1 = j.at("weighted_f1").get<double>();
    for (const json& row : j.at("per_class")) {
      ClassMetrics m;
      const auto label = emotion_from_string(row.at("label").get<std::string>());
      if (!label) throw DataError(path + ": bad label in per_class");
      m.label = *label;
      m.accuracy = row.at("accuracy").get<double>();
      m.precision = row.at("precision").get<double>();
      m.f1 = row.at("f1").get<double>();
      m.support = row.at("support").get<std::int64_t>();
      report.per_class.push_back(m);
    }
  } catch (const json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  return render_comparison(report, include_reference_rows);
}

void run_synth(const PipelineConfig& cfg) {
  SynthConfig synth_cfg;
  synth_cfg.per_class = cfg.synth_per_class;
  synth_cfg.seed = cfg.seed;
  write_synthetic(generate_synthetic(synth_cfg), cfg.out_dir);
}

}  // namespace adcofe
