#include "adcofe/classify.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <utility>

#include <nlohmann/json.hpp>

#include "adcofe/checkpoint.hpp"
#include "adcofe/errors.hpp"
#include "adcofe/rng.hpp"

namespace adcofe {

namespace {

using nlohmann::json;

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

// Head-only warmup schedule for the order objective; see sop_train.
constexpr int kSopWarmupEpochs = 100;
constexpr double kSopWarmupLr = 1e-3;

// He-style bounds: the ReLU stack keeps its activation scale, so the class
// logits carry input signal from the first step instead of collapsing into
// the output bias.
void fill_uniform_relu(MatrixXd& m, Rng& rng, int fan_in) {
  const double scale = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = rng.next_symmetric(scale);
}

using Span = std::pair<double*, std::ptrdiff_t>;

void collect_spans(EncoderParams& p, HeadParams& h, std::vector<Span>& out) {
  visit_tensors(p, [&](const char*, auto& t) { out.emplace_back(t.data(), t.size()); });
  visit_head_tensors(h, [&](const char*, auto& t) { out.emplace_back(t.data(), t.size()); });
}

void zero_all(EncoderParams& p, HeadParams& h) {
  visit_tensors(p, [](const char*, auto& t) { t.setZero(); });
  visit_head_tensors(h, [](const char*, auto& t) { t.setZero(); });
}

// One optimizer over the concatenation of encoder and head coordinates.
struct Optim {
  std::vector<Span> params, grads, m, v;
  Optimizer kind = Optimizer::Adam;
  double lr = 1e-3;
  std::int64_t step_count = 0;

  void step() {
    ++step_count;
    const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(step_count));
    const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(step_count));
    for (std::size_t s = 0; s < params.size(); ++s) {
      double* p = params[s].first;
      const double* g = grads[s].first;
      const auto n = params[s].second;
      if (kind == Optimizer::Sgd) {
        for (std::ptrdiff_t i = 0; i < n; ++i) p[i] -= lr * g[i];
        continue;
      }
      double* mm = m[s].first;
      double* vv = v[s].first;
      for (std::ptrdiff_t i = 0; i < n; ++i) {
        mm[i] = kAdamBeta1 * mm[i] + (1.0 - kAdamBeta1) * g[i];
        vv[i] = kAdamBeta2 * vv[i] + (1.0 - kAdamBeta2) * g[i] * g[i];
        p[i] -= lr * (mm[i] / bc1) / (std::sqrt(vv[i] / bc2) + kAdamEps);
      }
    }
  }
};

struct Step {
  EncodedSequence seq;
  int gold = 0;
  std::string where;  // diagnostic coordinates
};

// The common loop under both objectives: per-epoch shuffled groups of steps,
// gradient accumulation of batch_size steps per optimizer update.
std::vector<double> run_epochs(std::vector<std::vector<Step>>& groups, const EncoderConfig& enc_cfg,
                               const TrainConfig& tcfg, EncoderParams& encoder, HeadParams& head,
                               std::vector<double>* wall_ms) {
  EncoderParams enc_grads = zeros_like(encoder);
  HeadParams head_grads = zeros_like(head);
  EncoderParams enc_m = zeros_like(encoder), enc_v = zeros_like(encoder);
  HeadParams head_m = zeros_like(head), head_v = zeros_like(head);

  Optim optim;
  optim.kind = tcfg.optimizer;
  optim.lr = tcfg.learning_rate;
  collect_spans(encoder, head, optim.params);
  collect_spans(enc_grads, head_grads, optim.grads);
  collect_spans(enc_m, head_m, optim.m);
  collect_spans(enc_v, head_v, optim.v);

  std::vector<double> epoch_mean_loss;
  std::vector<std::size_t> order(groups.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < tcfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(mix_seed(tcfg.seed, static_cast<std::uint64_t>(epoch)));
    rng.shuffle(order);

    double loss_sum = 0.0;
    std::size_t n_steps = 0;
    int accumulated = 0;
    zero_all(enc_grads, head_grads);
    auto flush = [&] {
      if (accumulated == 0) return;
      if (accumulated > 1) {
        const double inv = 1.0 / accumulated;
        visit_tensors(enc_grads, [&](const char*, auto& t) { t *= inv; });
        visit_head_tensors(head_grads, [&](const char*, auto& t) { t *= inv; });
      }
      optim.step();
      zero_all(enc_grads, head_grads);
      accumulated = 0;
    };
    for (std::size_t gi : order) {
      for (const Step& step : groups[gi]) {
        const ForwardTape tape = forward(encoder, enc_cfg, step.seq);
        const HeadTape head_tape = head_apply(head, tape.pooled);
        const double loss = loss_xent(head_tape.probs, step.gold);
        if (!std::isfinite(loss))
          throw NumericError("non-finite loss at epoch " + std::to_string(epoch + 1) + ", " +
                             step.where);
        loss_sum += loss;
        ++n_steps;
        const VectorXd grad_pooled = head_backward(head, head_tape, step.gold, head_grads);
        backward(encoder, enc_cfg, tape, grad_pooled, enc_grads);
        if (++accumulated >= tcfg.batch_size) flush();
      }
    }
    flush();
    epoch_mean_loss.push_back(n_steps == 0 ? 0.0 : loss_sum / static_cast<double>(n_steps));
    if (wall_ms != nullptr) {
      const auto t1 = std::chrono::steady_clock::now();
      wall_ms->push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
  }
  return epoch_mean_loss;
}

}  // namespace

HeadParams init_head(int hidden_dim, int classes, std::uint64_t seed) {
  if (hidden_dim < 1) throw UsageError("head hidden_dim must be >= 1");
  if (classes < 2) throw UsageError("head needs at least 2 classes");
  HeadParams h;
  h.dense1.resize(hidden_dim, kHeadWidth);
  h.dense2.resize(kHeadWidth, kHeadWidth);
  h.dense3.resize(kHeadWidth, kHeadWidth);
  h.out.resize(kHeadWidth, classes);
  // Streams offset away from the encoder's so a shared seed still decorrelates.
  std::uint64_t stream = 1000;
  for (MatrixXd* w : {&h.dense1, &h.dense2, &h.dense3, &h.out}) {
    Rng rng(mix_seed(seed, stream++));
    fill_uniform_relu(*w, rng, static_cast<int>(w->rows()));
  }
  h.bias1 = VectorXd::Zero(kHeadWidth);
  h.bias2 = VectorXd::Zero(kHeadWidth);
  h.bias3 = VectorXd::Zero(kHeadWidth);
  h.bias_out = VectorXd::Zero(classes);
  return h;
}

HeadParams zeros_like(const HeadParams& head) {
  HeadParams z = head;
  visit_head_tensors(z, [](const char*, auto& t) { t.setZero(); });
  return z;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw UsageError("epochs must be >= 1");
  if (batch_size < 1) throw UsageError("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw UsageError("learning_rate must be > 0");
}

VectorXd stable_softmax(const VectorXd& logits) {
  const double m = logits.maxCoeff();
  VectorXd e = (logits.array() - m).exp().matrix();
  return e / e.sum();
}

int argmax_index(const VectorXd& probs) {
  int best = 0;
  for (int i = 1; i < probs.size(); ++i)
    if (probs[i] > probs[best]) best = i;
  return best;
}

HeadTape head_apply(const HeadParams& head, const VectorXd& pooled) {
  if (pooled.size() != head.dense1.rows())
    throw UsageError("pooled size " + std::to_string(pooled.size()) + " does not match head (" +
                     std::to_string(head.dense1.rows()) + ")");
  HeadTape tape;
  tape.input = pooled;
  tape.h1 = (head.dense1.transpose() * pooled + head.bias1).cwiseMax(0.0);
  tape.h2 = (head.dense2.transpose() * tape.h1 + head.bias2).cwiseMax(0.0);
  tape.h3 = (head.dense3.transpose() * tape.h2 + head.bias3).cwiseMax(0.0);
  tape.probs = stable_softmax(head.out.transpose() * tape.h3 + head.bias_out);
  return tape;
}

Prediction head_forward(const HeadParams& head, const VectorXd& pooled) {
  if (head.classes() != kNumEmotions)
    throw UsageError("emotion head must have " + std::to_string(kNumEmotions) + " classes");
  Prediction pred;
  pred.probs = head_apply(head, pooled).probs;
  pred.label = static_cast<EmotionLabel>(argmax_index(pred.probs));
  return pred;
}

double loss_xent(const VectorXd& probs, int gold) {
  if (gold < 0 || gold >= probs.size()) throw UsageError("gold class out of range");
  return -std::log(std::max(probs[gold], 1e-12));
}

VectorXd head_backward(const HeadParams& head, const HeadTape& tape, int gold,
                       HeadParams& head_grads) {
  VectorXd d_logits = tape.probs;
  d_logits[gold] -= 1.0;

  head_grads.out.noalias() += tape.h3 * d_logits.transpose();
  head_grads.bias_out.noalias() += d_logits;
  VectorXd d_h3 = head.out * d_logits;
  d_h3 = (d_h3.array() * (tape.h3.array() > 0.0).cast<double>()).matrix();

  head_grads.dense3.noalias() += tape.h2 * d_h3.transpose();
  head_grads.bias3.noalias() += d_h3;
  VectorXd d_h2 = head.dense3 * d_h3;
  d_h2 = (d_h2.array() * (tape.h2.array() > 0.0).cast<double>()).matrix();

  head_grads.dense2.noalias() += tape.h1 * d_h2.transpose();
  head_grads.bias2.noalias() += d_h2;
  VectorXd d_h1 = head.dense2 * d_h2;
  d_h1 = (d_h1.array() * (tape.h1.array() > 0.0).cast<double>()).matrix();

  head_grads.dense1.noalias() += tape.input * d_h1.transpose();
  head_grads.bias1.noalias() += d_h1;
  return head.dense1 * d_h1;
}

TrainResult train(const std::vector<EnrichedSample>& samples, const Vocab& vocab,
                  const EncoderConfig& enc_cfg, const TrainConfig& tcfg,
                  const EncoderParams* warm_start) {
  enc_cfg.validate();
  tcfg.validate();
  if (samples.empty()) throw DataError("nothing to train on");
  for (const EnrichedSample& s : samples) {
    if (!s.label.has_value())
      throw DataError("unlabeled training sample: conversation " + s.conversation_id + " turn " +
                      std::to_string(s.turn_index));
  }

  // Speaker batches: maximal runs of one speaker within one conversation.
  // Padding is dropped up front; attention masking makes it irrelevant to the
  // outputs, and skipping pad positions is what keeps desk-scale training fast.
  std::vector<std::vector<Step>> batches;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const EnrichedSample& s = samples[i];
    Step step;
    step.seq = trim_padding(
        encode_sequence({s.text}, vocab, static_cast<std::size_t>(enc_cfg.max_positions)));
    step.gold = static_cast<int>(*s.label);
    step.where = "conversation " + s.conversation_id + " turn " + std::to_string(s.turn_index);
    if (i > 0 && s.conversation_id == samples[i - 1].conversation_id &&
        s.speaker == samples[i - 1].speaker) {
      batches.back().push_back(std::move(step));
    } else {
      batches.push_back({std::move(step)});
    }
  }

  TrainResult result;
  result.encoder = warm_start != nullptr ? *warm_start : init_params(enc_cfg);
  result.head = init_head(enc_cfg.hidden_dim, kNumEmotions, tcfg.seed);
  result.epoch_mean_loss =
      run_epochs(batches, enc_cfg, tcfg, result.encoder, result.head, &result.epoch_wall_ms);
  return result;
}

std::vector<Prediction> predict(const std::vector<EnrichedSample>& samples, const Vocab& vocab,
                                const EncoderConfig& enc_cfg, const EncoderParams& encoder,
                                const HeadParams& head) {
  std::vector<Prediction> out;
  out.reserve(samples.size());
  for (const EnrichedSample& s : samples) {
    const EncodedSequence seq = trim_padding(
        encode_sequence({s.text}, vocab, static_cast<std::size_t>(enc_cfg.max_positions)));
    out.push_back(head_forward(head, forward(encoder, enc_cfg, seq).pooled));
  }
  return out;
}

std::vector<SopPair> sop_pairs(const Conversation& conv) {
  std::vector<SopPair> pairs;
  for (std::size_t i = 0; i + 1 < conv.utterances.size(); ++i) {
    pairs.push_back({conv.utterances[i].text, conv.utterances[i + 1].text, 1});
    pairs.push_back({conv.utterances[i + 1].text, conv.utterances[i].text, 0});
  }
  return pairs;
}

SopResult sop_train(const std::vector<Conversation>& convs, const Vocab& vocab,
                    const EncoderConfig& enc_cfg, const TrainConfig& tcfg) {
  enc_cfg.validate();
  tcfg.validate();
  SopResult result;
  result.encoder = init_params(enc_cfg);
  result.head = init_head(enc_cfg.hidden_dim, 2, tcfg.seed);

  std::vector<std::vector<Step>> groups;
  for (const Conversation& conv : convs) {
    for (const SopPair& pair : sop_pairs(conv)) {
      Step step;
      step.seq = trim_padding(encode_sequence({pair.first, pair.second}, vocab,
                                              static_cast<std::size_t>(enc_cfg.max_positions)));
      step.gold = pair.label;
      step.where = "order pair in conversation " + conv.id;
      groups.push_back({std::move(step)});
    }
  }
  if (groups.empty()) return result;  // nothing to learn from

  // A pair and its swap are near-identical inputs with opposite labels. Under
  // joint training from scratch the encoder reshuffles its features faster
  // than the head can fit them and both settle on the coin-flip optimum, so
  // the head is first fit against the frozen initial encoder and only then
  // trained jointly under the caller's schedule.
  {
    std::vector<VectorXd> pooled;
    std::vector<int> golds;
    pooled.reserve(groups.size());
    golds.reserve(groups.size());
    for (const auto& group : groups) {
      pooled.push_back(forward(result.encoder, enc_cfg, group.front().seq).pooled);
      golds.push_back(group.front().gold);
    }

    HeadParams grads = zeros_like(result.head);
    HeadParams m = zeros_like(result.head), v = zeros_like(result.head);
    Optim optim;
    optim.lr = kSopWarmupLr;
    auto spans = [](HeadParams& h, std::vector<Span>& out) {
      visit_head_tensors(h, [&](const char*, auto& t) { out.emplace_back(t.data(), t.size()); });
    };
    spans(result.head, optim.params);
    spans(grads, optim.grads);
    spans(m, optim.m);
    spans(v, optim.v);

    std::vector<std::size_t> order(pooled.size());
    std::iota(order.begin(), order.end(), 0);
    for (int epoch = 0; epoch < kSopWarmupEpochs; ++epoch) {
      // Shuffle stream offset past any plausible joint epoch count.
      Rng rng(mix_seed(tcfg.seed, static_cast<std::uint64_t>(10000 + epoch)));
      rng.shuffle(order);
      for (std::size_t idx : order) {
        const HeadTape tape = head_apply(result.head, pooled[idx]);
        head_backward(result.head, tape, golds[idx], grads);
        optim.step();
        visit_head_tensors(grads, [](const char*, auto& t) { t.setZero(); });
      }
    }
  }

  result.epoch_mean_loss = run_epochs(groups, enc_cfg, tcfg, result.encoder, result.head, nullptr);
  return result;
}

double sop_accuracy(const SopResult& model, const std::vector<Conversation>& convs,
                    const Vocab& vocab, const EncoderConfig& enc_cfg) {
  std::size_t correct = 0, total = 0;
  for (const Conversation& conv : convs) {
    for (const SopPair& pair : sop_pairs(conv)) {
      const EncodedSequence seq = trim_padding(encode_sequence(
          {pair.first, pair.second}, vocab, static_cast<std::size_t>(enc_cfg.max_positions)));
      const HeadTape tape = head_apply(model.head, forward(model.encoder, enc_cfg, seq).pooled);
      if (argmax_index(tape.probs) == pair.label) ++correct;
      ++total;
    }
  }
  if (total == 0) throw UsageError("no sentence pairs to score");
  return static_cast<double>(correct) / static_cast<double>(total);
}

EncoderParams sop_pretrain(const std::vector<Conversation>& convs, const Vocab& vocab,
                           const EncoderConfig& enc_cfg, const TrainConfig& tcfg) {
  return sop_train(convs, vocab, enc_cfg, tcfg).encoder;
}

std::string encoder_config_to_json(const EncoderConfig& cfg) {
  const json j = {{"embed_dim", cfg.embed_dim},     {"ff_dim", cfg.ff_dim},
                  {"groups", cfg.groups},           {"heads", cfg.heads},
                  {"hidden_dim", cfg.hidden_dim},   {"layers", cfg.layers},
                  {"max_positions", cfg.max_positions}, {"seed", cfg.seed},
                  {"vocab_size", cfg.vocab_size}};
  return j.dump();
}

EncoderConfig encoder_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("invalid encoder config JSON: ") + e.what());
  }
  EncoderConfig cfg;
  try {
    cfg.vocab_size = j.at("vocab_size").get<int>();
    cfg.embed_dim = j.at("embed_dim").get<int>();
    cfg.hidden_dim = j.at("hidden_dim").get<int>();
    cfg.layers = j.at("layers").get<int>();
    cfg.heads = j.at("heads").get<int>();
    cfg.groups = j.at("groups").get<int>();
    cfg.ff_dim = j.at("ff_dim").get<int>();
    cfg.max_positions = j.at("max_positions").get<int>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw DataError(std::string("incomplete encoder config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

namespace {

void assign_tensor(MatrixXd& dst, const MatrixXd& src, const std::string& name) {
  if (dst.rows() != src.rows() || dst.cols() != src.cols())
    throw DataError("checkpoint tensor " + name + " has shape " + std::to_string(src.rows()) +
                    "x" + std::to_string(src.cols()) + ", expected " + std::to_string(dst.rows()) +
                    "x" + std::to_string(dst.cols()));
  dst = src;
}

void assign_tensor(VectorXd& dst, const MatrixXd& src, const std::string& name) {
  if (src.cols() != 1 || dst.size() != src.rows())
    throw DataError("checkpoint tensor " + name + " is not a length-" + std::to_string(dst.size()) +
                    " vector");
  dst = src.col(0);
}

}  // namespace

void save_model(const std::string& path, const EncoderConfig& cfg, const EncoderParams& encoder,
                const HeadParams& head) {
  Checkpoint ckpt;
  ckpt.set_config(encoder_config_to_json(cfg));
  visit_tensors(encoder, [&](const char* name, const auto& t) { ckpt.add(name, MatrixXd(t)); });
  visit_head_tensors(head, [&](const char* name, const auto& t) { ckpt.add(name, MatrixXd(t)); });
  ckpt.save(path);
}

LoadedModel load_model(const std::string& path) {
  const Checkpoint ckpt = Checkpoint::load(path);
  LoadedModel model;
  model.cfg = encoder_config_from_json(ckpt.config_json());

  const MatrixXd* out_w = ckpt.find("head.out.w");
  if (out_w == nullptr) throw DataError(path + ": checkpoint has no classification head");
  const int classes = static_cast<int>(out_w->cols());
  model.encoder = init_params(model.cfg);
  model.head = init_head(model.cfg.hidden_dim, classes, 0);

  auto fill = [&](const char* name, auto& t) {
    const MatrixXd* src = ckpt.find(name);
    if (src == nullptr) throw DataError(path + ": checkpoint is missing tensor " + name);
    assign_tensor(t, *src, name);
  };
  visit_tensors(model.encoder, fill);
  visit_head_tensors(model.head, fill);
  return model;
}

}  // namespace adcofe
