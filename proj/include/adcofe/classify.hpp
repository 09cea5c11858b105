#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adcofe/corpus.hpp"
#include "adcofe/encoder.hpp"
#include "adcofe/kgclient.hpp"

namespace adcofe {

inline constexpr int kHeadWidth = 100;

// Three ReLU layers of width 100 feeding a softmax output (6-way for
// emotions, 2-way for sentence-order prediction).
struct HeadParams {
  MatrixXd dense1;  // H x 100
  VectorXd bias1;
  MatrixXd dense2;  // 100 x 100
  VectorXd bias2;
  MatrixXd dense3;  // 100 x 100
  VectorXd bias3;
  MatrixXd out;  // 100 x classes
  VectorXd bias_out;

  int classes() const { return static_cast<int>(out.cols()); }
};

template <typename Params, typename Fn>
void visit_head_tensors(Params& p, Fn&& fn) {
  fn("head.dense1.w", p.dense1);
  fn("head.dense1.b", p.bias1);
  fn("head.dense2.w", p.dense2);
  fn("head.dense2.b", p.bias2);
  fn("head.dense3.w", p.dense3);
  fn("head.dense3.b", p.bias3);
  fn("head.out.w", p.out);
  fn("head.out.b", p.bias_out);
}

HeadParams init_head(int hidden_dim, int classes, std::uint64_t seed);
HeadParams zeros_like(const HeadParams& head);

enum class Optimizer { Adam, Sgd };

struct TrainConfig {
  int epochs = 4;
  int batch_size = 1;
  double learning_rate = 1e-3;
  Optimizer optimizer = Optimizer::Adam;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Prediction {
  VectorXd probs;  // nonnegative, sums to 1
  EmotionLabel label = EmotionLabel::Happy;  // argmax, ties to the lowest code
};

struct HeadTape {
  VectorXd input;
  VectorXd h1, h2, h3;  // post-ReLU activations
  VectorXd probs;
};

// Max-subtracted softmax; argmax ties resolve to the lowest index.
VectorXd stable_softmax(const VectorXd& logits);
int argmax_index(const VectorXd& probs);

HeadTape head_apply(const HeadParams& head, const VectorXd& pooled);
// 6-way wrapper over head_apply
Prediction head_forward(const HeadParams& head, const VectorXd& pooled);

// -log(probs[gold]) with the probability clamped to >= 1e-12
double loss_xent(const VectorXd& probs, int gold);

// Cross-entropy gradients; accumulates into head_grads, returns d(pooled).
VectorXd head_backward(const HeadParams& head, const HeadTape& tape, int gold,
                       HeadParams& head_grads);

struct TrainResult {
  EncoderParams encoder;
  HeadParams head;
  std::vector<double> epoch_mean_loss;
  std::vector<double> epoch_wall_ms;
};

// Seed-shuffled speaker batches, one utterance per optimization step.
TrainResult train(const std::vector<EnrichedSample>& samples, const Vocab& vocab,
                  const EncoderConfig& enc_cfg, const TrainConfig& tcfg,
                  const EncoderParams* warm_start = nullptr);

std::vector<Prediction> predict(const std::vector<EnrichedSample>& samples, const Vocab& vocab,
                                const EncoderConfig& enc_cfg, const EncoderParams& encoder,
                                const HeadParams& head);

struct SopPair {
  std::string first;
  std::string second;
  int label = 1;  // 1 = in order, 0 = swapped
};

// One in-order and one swapped pair per consecutive utterance pair; empty for
// conversations shorter than 2.
std::vector<SopPair> sop_pairs(const Conversation& conv);

struct SopResult {
  EncoderParams encoder;
  HeadParams head;  // 2-way
  std::vector<double> epoch_mean_loss;
};

SopResult sop_train(const std::vector<Conversation>& convs, const Vocab& vocab,
                    const EncoderConfig& enc_cfg, const TrainConfig& tcfg);

double sop_accuracy(const SopResult& model, const std::vector<Conversation>& convs,
                    const Vocab& vocab, const EncoderConfig& enc_cfg);

// Encoder warm-start from the order objective; the 2-way head is dropped.
// Pair-free corpora are a no-op returning freshly initialized params.
EncoderParams sop_pretrain(const std::vector<Conversation>& convs, const Vocab& vocab,
                           const EncoderConfig& enc_cfg, const TrainConfig& tcfg);

void save_model(const std::string& path, const EncoderConfig& cfg, const EncoderParams& encoder,
                const HeadParams& head);

struct LoadedModel {
  EncoderConfig cfg;
  EncoderParams encoder;
  HeadParams head;
};

LoadedModel load_model(const std::string& path);

std::string encoder_config_to_json(const EncoderConfig& cfg);
EncoderConfig encoder_config_from_json(const std::string& text);

}  // namespace adcofe
