// Acceptance gates for the whole pipeline. Each criterion prints exactly one
// PASS/FAIL line with the measured numbers; the exit code is the number of
// failures. These run the real training loops at desk scale, so the binary
// takes minutes, not seconds.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "adcofe/classify.hpp"
#include "adcofe/corpus.hpp"
#include "adcofe/encoder.hpp"
#include "adcofe/kgclient.hpp"
#include "adcofe/metrics.hpp"
#include "adcofe/pipeline.hpp"
#include "adcofe/rng.hpp"
#include "adcofe/sentlex.hpp"
#include "adcofe/synth.hpp"
#include "adcofe/textprep.hpp"

using namespace adcofe;

namespace {

int failures = 0;

void verdict(int criterion, bool pass, const std::string& detail) {
  std::printf("%s criterion %2d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "adcofe_acceptance" / name;
  std::filesystem::create_directories(dir);
  return dir.string();
}

std::string write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  out << content;
  return path;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return buf;
}

double median5(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

// ---------------------------------------------------------------------------
// 1: per-class metrics against an independent recomputation

void check_metric_oracle() {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(20240814);
  double worst = 0.0;
  bool ok = true;
  for (int trial = 0; trial < 1000 && ok; ++trial) {
    ConfusionMatrix cm;
    for (int g = 0; g < kNumEmotions; ++g) {
      const bool empty_row = rng.next_below(6) == 0;
      for (int p = 0; p < kNumEmotions; ++p)
        cm.counts[g][p] = empty_row ? 0 : static_cast<std::int64_t>(rng.next_below(400));
    }
    if (cm.total() == 0) cm.counts[1][4] = 3;

    const MetricsReport report = per_class_metrics(cm);
    double weighted = 0.0;
    double support = 0.0;
    double correct = 0.0;
    for (int c = 0; c < kNumEmotions; ++c) {
      const double tp = static_cast<double>(cm.counts[c][c]);
      const double row = static_cast<double>(cm.row_total(c));
      const double col = static_cast<double>(cm.col_total(c));
      const double recall = row > 0 ? tp / row : 0.0;
      const double precision = col > 0 ? tp / col : 0.0;
      const double f1 =
          precision + recall > 0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
      correct += tp;
      weighted += row * f1;
      support += row;
      const ClassMetrics& m = report.per_class[static_cast<std::size_t>(c)];
      worst = std::max({worst, std::abs(m.accuracy - recall), std::abs(m.precision - precision),
                        std::abs(m.f1 - f1)});
    }
    worst = std::max({worst, std::abs(report.weighted_f1 - weighted / support),
                      std::abs(report.overall_accuracy - correct / static_cast<double>(cm.total()))});
    ok = worst < 1e-9;
  }
  const double elapsed = seconds_since(start);
  verdict(1, ok && elapsed < 10.0,
          fmt("metrics vs. oracle on 1000 random matrices, worst |diff| %.2e, %.2fs (budget 10s)",
              worst, elapsed));
}

// ---------------------------------------------------------------------------
// 2: end-to-end gradient check through encoder and head

void check_gradients() {
  const auto start = std::chrono::steady_clock::now();

  EncoderConfig cfg;
  cfg.vocab_size = 32;
  cfg.embed_dim = 8;
  cfg.hidden_dim = 16;
  cfg.layers = 2;
  cfg.heads = 2;
  cfg.ff_dim = 24;
  cfg.max_positions = 8;
  cfg.seed = 5;

  EncodedSequence seq;
  seq.input_ids = {2, 7, 9, 11, 3};  // [CLS] w w w [SEP]
  seq.mask = {1, 1, 1, 1, 1};
  seq.segment_ids = {0, 0, 0, 1, 1};

  EncoderParams params = init_params(cfg);
  HeadParams head = init_head(cfg.hidden_dim, kNumEmotions, 77);
  const int gold = 4;

  const auto loss_now = [&] {
    const ForwardTape tape = forward(params, cfg, seq);
    return loss_xent(head_apply(head, tape.pooled).probs, gold);
  };

  EncoderParams enc_grads = zeros_like(params);
  HeadParams head_grads = zeros_like(head);
  {
    const ForwardTape tape = forward(params, cfg, seq);
    const VectorXd dpooled = head_backward(head, head_apply(head, tape.pooled), gold, head_grads);
    backward(params, cfg, tape, dpooled, enc_grads);
  }

  const double eps = 1e-5;
  Rng rng(42);
  double worst_rel = 0.0;
  std::string worst_name = "-";
  std::size_t checked = 0;

  const auto probe_tensor = [&](const char* name, auto& tensor, const auto& grad_tensor) {
    std::vector<Eigen::Index> coords(static_cast<std::size_t>(tensor.size()));
    std::iota(coords.begin(), coords.end(), 0);
    rng.shuffle(coords);
    const std::size_t n = std::min<std::size_t>(coords.size(), 100);
    for (std::size_t i = 0; i < n; ++i) {
      const Eigen::Index idx = coords[i];
      const double saved = tensor.data()[idx];
      tensor.data()[idx] = saved + eps;
      const double up = loss_now();
      tensor.data()[idx] = saved - eps;
      const double down = loss_now();
      tensor.data()[idx] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double analytic = grad_tensor.data()[idx];
      const double rel =
          std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6});
      if (rel > worst_rel) {
        worst_rel = rel;
        worst_name = name;
      }
      ++checked;
    }
  };

  visit_tensors(params, [&](const char* name, auto& tensor) {
    visit_tensors(enc_grads, [&](const char* gname, auto& grad) {
      if (std::string(name) == gname) probe_tensor(name, tensor, grad);
    });
  });
  visit_head_tensors(head, [&](const char* name, auto& tensor) {
    visit_head_tensors(head_grads, [&](const char* gname, auto& grad) {
      if (std::string(name) == gname) probe_tensor(name, tensor, grad);
    });
  });

  const double elapsed = seconds_since(start);
  verdict(2, worst_rel < 1e-4 && elapsed < 60.0,
          fmt("finite differences over %zu coordinates, worst rel err %.2e at %s, %.1fs "
              "(budget 60s)",
              checked, worst_rel, worst_name.c_str(), elapsed));
}

// ---------------------------------------------------------------------------
// 3: factorized embeddings at the published scale

void check_embedding_counts() {
  const EncoderConfig full = full_scale_config();
  const std::int64_t factorized = embedding_param_count(full);
  const std::int64_t untied = untied_embedding_param_count(full);
  const bool ok = factorized == 3'938'304 && untied == 23'040'000;
  verdict(3, ok,
          fmt("embedding parameters %lld factorized vs %lld untied (want 3938304 vs 23040000)",
              static_cast<long long>(factorized), static_cast<long long>(untied)));
}

// ---------------------------------------------------------------------------
// 4: layer reuse: depth changes outputs but not checkpoint size

void check_shared_layer_checkpoint() {
  EncoderConfig shallow;
  shallow.vocab_size = 128;
  shallow.embed_dim = 16;
  shallow.hidden_dim = 32;
  shallow.layers = 4;
  shallow.heads = 4;
  shallow.ff_dim = 64;
  shallow.max_positions = 32;
  shallow.seed = 9;
  EncoderConfig deep = shallow;
  deep.layers = 12;

  const EncoderParams params_shallow = init_params(shallow);
  const EncoderParams params_deep = init_params(deep);
  const HeadParams head = init_head(shallow.hidden_dim, kNumEmotions, 1);

  const std::string dir = scratch_dir("ckpt");
  save_model(dir + "/l4.ckpt", shallow, params_shallow, head);
  save_model(dir + "/l12.ckpt", deep, params_deep, head);
  const auto size4 = std::filesystem::file_size(dir + "/l4.ckpt");
  const auto size12 = std::filesystem::file_size(dir + "/l12.ckpt");

  EncodedSequence seq;
  seq.input_ids = {2, 5, 9, 3};
  seq.mask = {1, 1, 1, 1};
  seq.segment_ids = {0, 0, 0, 0};
  const VectorXd out4 = forward(params_shallow, shallow, seq).pooled;
  const VectorXd out12 = forward(params_deep, deep, seq).pooled;
  const double diff = (out4 - out12).norm();

  verdict(4, size4 == size12 && diff > 1e-9,
          fmt("checkpoint bytes %llu (L=4) vs %llu (L=12), pooled-output distance %.3f",
              static_cast<unsigned long long>(size4), static_cast<unsigned long long>(size12),
              diff));
}

// ---------------------------------------------------------------------------
// 5: golden knowledge-graph augmentation

void check_golden_augmentation() {
  KgOptions opts;
  opts.source = KgSource::Fixture;
  opts.fixture_path = std::string(ADCOFE_TEST_DATA_DIR) + "/weather_fixture.json";
  KgClient client(opts);

  const auto stoplist = load_stopwords(bundled_data_path("stopwords.txt"));
  const std::string original = "This weather is the best!";
  const auto tokens = extract_content_tokens(original, stoplist);
  const auto variants = client.augment_sentence(original, tokens, 3, 1);

  const bool ok = variants.size() == 1 && variants[0] == "This weathers is the bests!";
  verdict(5, ok,
          fmt("\"%s\" -> \"%s\"", original.c_str(),
              variants.empty() ? "<none>" : variants[0].c_str()));
}

// ---------------------------------------------------------------------------
// 6: sentiment compound properties

void check_sentiment() {
  bool ok = std::abs(compound_from_raw(2.4) - 0.5267) < 1e-4;

  Rng rng(55);
  double prev_raw = -2e6;
  double prev_c = compound_from_raw(prev_raw);
  for (int i = 0; i < 1'000'000 && ok; ++i) {
    const double raw = rng.next_symmetric(1e6);
    const double c = compound_from_raw(raw);
    ok = c > -1.0 && c < 1.0 && (raw == prev_raw || ((raw > prev_raw) == (c > prev_c)));
    prev_raw = raw;
    prev_c = c;
  }

  const Lexicon lex = Lexicon::from_entries(
      {{"fine", 1.2}, {"vile", -2.6}, {"warm", 0.7}, {"cold", -0.9}, {"super", 3.0}});
  const std::vector<std::string> words = {"fine", "vile", "warm", "cold",  "super",
                                          "not",  "very", "and",  "thing", "SUPER"};
  double worst_sum = 0.0;
  for (int trial = 0; trial < 1000 && ok; ++trial) {
    std::string text;
    const std::size_t len = 1 + rng.next_below(9);
    for (std::size_t i = 0; i < len; ++i) {
      if (i > 0) text += ' ';
      text += words[rng.next_below(words.size())];
    }
    const SentimentScores s = score_sentence(text, lex);
    worst_sum = std::max(worst_sum, std::abs(s.pos + s.neg + s.neu - 1.0));
    ok = worst_sum < 1e-9 && s.pos >= 0.0 && s.neg >= 0.0 && s.neu >= 0.0;
  }
  verdict(6, ok,
          fmt("compound(2.4)=%.5f, bounded+monotone over 1e6 sums, share drift %.1e",
              compound_from_raw(2.4), worst_sum));
}

// ---------------------------------------------------------------------------
// 7: ablation ladder: encoder-only <= +graph augmentation <= +sentiment

double ablation_f1(const SynthCorpus& corpus, const std::string& dir, std::uint64_t seed,
                   int variants, bool sentiment) {
  const SplitResult split = split_corpus(corpus.conversations, 0.2, seed);

  KgOptions kopt;
  kopt.source = KgSource::Fixture;
  kopt.fixture_path = dir + "/fixture.json";
  KgClient client(kopt);

  std::vector<Utterance> train_utts, test_utts;
  for (const Conversation& c : split.train)
    for (const Utterance& u : c.utterances) train_utts.push_back(u);
  for (const Conversation& c : split.test)
    for (const Utterance& u : c.utterances) test_utts.push_back(u);

  const std::unordered_set<std::string> stop;
  std::vector<EnrichedSample> train_set = enrich_corpus(client, train_utts, stop, 3, variants);
  std::vector<EnrichedSample> test_set;
  for (const Utterance& u : test_utts) {
    EnrichedSample s;
    s.conversation_id = u.conversation_id;
    s.turn_index = u.turn_index;
    s.speaker = u.speaker;
    s.text = u.text;
    s.label = u.label;
    test_set.push_back(std::move(s));
  }
  if (sentiment) {
    const Lexicon lex = Lexicon::load(dir + "/lexicon.txt");
    train_set = add_sentiment_features(train_set, lex, 0.05);
    test_set = add_sentiment_features(test_set, lex, 0.05);
  }

  std::vector<std::string> texts;
  texts.reserve(train_set.size());
  for (const EnrichedSample& s : train_set) texts.push_back(s.text);
  const Vocab vocab = Vocab::build(texts, 2000);

  EncoderConfig ecfg;
  ecfg.seed = mix_seed(seed, 101);
  TrainConfig tcfg;
  tcfg.seed = mix_seed(seed, 202);
  tcfg.epochs = 4;
  tcfg.learning_rate = 1e-4;

  const TrainResult model = train(train_set, vocab, ecfg, tcfg);
  const auto preds = predict(test_set, vocab, ecfg, model.encoder, model.head);
  std::vector<EmotionLabel> golds, guesses;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    golds.push_back(*test_set[i].label);
    guesses.push_back(preds[i].label);
  }
  return per_class_metrics(confusion(golds, guesses)).weighted_f1;
}

void check_ablation() {
  const auto start = std::chrono::steady_clock::now();
  const std::string dir = scratch_dir("ablation");

  double medians[3] = {};
  for (int variant = 0; variant < 3; ++variant) {
    std::vector<double> f1s;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      SynthConfig scfg;
      scfg.per_class = 50;
      scfg.seed = seed;
      const SynthCorpus corpus = generate_synthetic(scfg);
      write_file(dir + "/fixture.json", corpus.fixture_json);
      write_file(dir + "/lexicon.txt", corpus.lexicon_text);
      f1s.push_back(ablation_f1(corpus, dir, seed, variant == 0 ? 0 : 3, variant == 2));
    }
    medians[variant] = median5(f1s);
  }

  const bool ordered = medians[0] <= medians[1] && medians[1] <= medians[2];
  const double gap = medians[2] - medians[0];
  const double elapsed = seconds_since(start);
  verdict(7, ordered && gap >= 0.03 && elapsed < 1800.0,
          fmt("median F1 %.4f (encoder) <= %.4f (+graph) <= %.4f (+sentiment), gap %.1f points, "
              "%.0fs (budget 30min)",
              medians[0], medians[1], medians[2], 100.0 * gap, elapsed));
}

// ---------------------------------------------------------------------------
// 8: a four-epoch run memorizes its own training data

void check_memorization() {
  const auto start = std::chrono::steady_clock::now();
  const std::string dir = scratch_dir("memorize");

  SynthConfig scfg;
  scfg.per_class = 50;
  scfg.seed = 1;
  const SynthCorpus corpus = generate_synthetic(scfg);
  write_file(dir + "/fixture.json", corpus.fixture_json);
  write_file(dir + "/lexicon.txt", corpus.lexicon_text);

  KgOptions kopt;
  kopt.source = KgSource::Fixture;
  kopt.fixture_path = dir + "/fixture.json";
  KgClient client(kopt);

  std::vector<Utterance> utts;
  for (const Conversation& c : corpus.conversations)
    for (const Utterance& u : c.utterances) utts.push_back(u);
  const std::unordered_set<std::string> stop;
  std::vector<EnrichedSample> samples = enrich_corpus(client, utts, stop, 3, 3);
  const Lexicon lex = Lexicon::load(dir + "/lexicon.txt");
  samples = add_sentiment_features(samples, lex, 0.05);

  std::vector<std::string> texts;
  for (const EnrichedSample& s : samples) texts.push_back(s.text);
  const Vocab vocab = Vocab::build(texts, 2000);

  EncoderConfig ecfg;
  ecfg.seed = mix_seed(1, 101);
  TrainConfig tcfg;
  tcfg.seed = mix_seed(1, 202);
  tcfg.epochs = 4;
  tcfg.learning_rate = 5e-4;

  const TrainResult model = train(samples, vocab, ecfg, tcfg);
  const auto preds = predict(samples, vocab, ecfg, model.encoder, model.head);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i)
    if (preds[i].label == *samples[i].label) ++correct;
  const double accuracy = static_cast<double>(correct) / static_cast<double>(preds.size());

  const double first = model.epoch_mean_loss.front();
  const double last = model.epoch_mean_loss.back();
  const double elapsed = seconds_since(start);
  verdict(8, last < 0.5 * first && accuracy >= 0.95,
          fmt("loss %.4f -> %.4f over 4 epochs, train-set accuracy %.3f (%zu samples), %.0fs",
              first, last, accuracy, preds.size(), elapsed));
}

// ---------------------------------------------------------------------------
// 9: identical runs produce byte-identical reports

void check_rerun_determinism() {
  const auto run = [](const std::string& dir) {
    PipelineConfig cfg;
    cfg.out_dir = dir;
    reseed(cfg, 12);
    cfg.synth_per_class = 6;
    run_synth(cfg);
    cfg.corpus_path = dir + "/corpus.csv";
    cfg.kg_mode = KgSource::Fixture;
    cfg.kg_fixture = dir + "/kg_fixture.json";
    cfg.lexicon_path = dir + "/lexicon.txt";
    cfg.variants = 2;
    cfg.split_fraction = 0.25;
    cfg.encoder.vocab_size = 512;
    cfg.encoder.embed_dim = 16;
    cfg.encoder.hidden_dim = 32;
    cfg.encoder.layers = 2;
    cfg.encoder.heads = 4;
    cfg.encoder.ff_dim = 48;
    cfg.encoder.max_positions = 48;
    cfg.train.epochs = 2;
    (void)run_enrich(cfg);
    (void)run_train(cfg);
    (void)run_eval(cfg, false);
    return read_file(dir + "/report.json");
  };

  const std::string first = run(scratch_dir("rerun_a"));
  const std::string second = run(scratch_dir("rerun_b"));
  verdict(9, !first.empty() && first == second,
          fmt("two full runs, report.json %zu bytes, %s", first.size(),
              first == second ? "byte-identical" : "DIFFER"));
}

// ---------------------------------------------------------------------------
// 10: sentence-order objective beats chance decisively

void check_order_objective() {
  const auto start = std::chrono::steady_clock::now();
  std::vector<double> accs;
  long min_pairs = -1;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SynthConfig scfg;
    scfg.per_class = 50;
    scfg.seed = seed;
    const SynthCorpus corpus = generate_synthetic(scfg);

    std::vector<std::string> texts;
    long pairs = 0;
    for (const Conversation& c : corpus.conversations) {
      for (const Utterance& u : c.utterances) texts.push_back(u.text);
      if (c.utterances.size() >= 2) pairs += 2 * static_cast<long>(c.utterances.size() - 1);
    }
    if (min_pairs < 0 || pairs < min_pairs) min_pairs = pairs;
    const Vocab vocab = Vocab::build(texts, 2000);

    EncoderConfig ecfg;
    ecfg.seed = mix_seed(seed, 101);
    TrainConfig tcfg;
    tcfg.seed = mix_seed(seed, 202);
    tcfg.epochs = 6;
    tcfg.learning_rate = 2e-4;

    const SopResult model = sop_train(corpus.conversations, vocab, ecfg, tcfg);
    accs.push_back(sop_accuracy(model, corpus.conversations, vocab, ecfg));
  }

  const double median = median5(accs);
  const double sigma = std::sqrt(0.25 / static_cast<double>(min_pairs));
  const double threshold = 0.5 + 3.0 * sigma;
  const double elapsed = seconds_since(start);
  verdict(10, median > threshold,
          fmt("median order accuracy %.4f over 5 seeds vs chance+3sigma %.4f (%ld pairs), %.0fs",
              median, threshold, min_pairs, elapsed));
}

}  // namespace

int main() {
  check_metric_oracle();
  check_gradients();
  check_embedding_counts();
  check_shared_layer_checkpoint();
  check_golden_augmentation();
  check_sentiment();
  check_ablation();
  check_memorization();
  check_rerun_determinism();
  check_order_objective();
  if (failures > 0) std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
