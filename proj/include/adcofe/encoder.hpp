#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "adcofe/textprep.hpp"

namespace adcofe {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct EncoderConfig {
  int vocab_size = 2000;    // V
  int embed_dim = 32;       // E, factorized token-embedding width
  int hidden_dim = 64;      // H
  int layers = 4;           // L, applications of the one shared layer
  int heads = 4;            // A
  int groups = 1;           // only a single shared parameter group is supported
  int ff_dim = 128;         // F
  int max_positions = 128;  // P
  std::uint64_t seed = 0;

  int head_dim() const { return hidden_dim / heads; }
  void validate() const;  // throws naming the violated constraint
};

// The configuration of the full-size architecture; constructible for
// parameter-count checks, far too large to train here.
EncoderConfig full_scale_config();

struct SharedLayerParams {
  MatrixXd wq, wk, wv, wo;      // H x H
  VectorXd bq, bk, bv, bo;      // H
  MatrixXd w1;                  // H x F
  VectorXd b1;                  // F
  MatrixXd w2;                  // F x H
  VectorXd b2;                  // H
  VectorXd ln1_gain, ln1_bias;  // H, pre-attention norm
  VectorXd ln2_gain, ln2_bias;  // H, pre-feedforward norm
};

struct EncoderParams {
  MatrixXd token_embed;     // V x E
  MatrixXd embed_proj;      // E x H
  MatrixXd position_embed;  // P x H
  MatrixXd segment_embed;   // 2 x H
  SharedLayerParams layer;  // reused for every one of the L applications
  VectorXd final_ln_gain;   // H, norm over the residual stream before pooling
  VectorXd final_ln_bias;   // H
  MatrixXd pooler_w;        // H x H
  VectorXd pooler_b;        // H
};

// Every tensor under a stable name; the one traversal used by init, Adam,
// checkpointing, and gradient checking.
template <typename Params, typename Fn>
void visit_tensors(Params& p, Fn&& fn) {
  fn("token_embed", p.token_embed);
  fn("embed_proj", p.embed_proj);
  fn("position_embed", p.position_embed);
  fn("segment_embed", p.segment_embed);
  fn("layer.wq", p.layer.wq);
  fn("layer.bq", p.layer.bq);
  fn("layer.wk", p.layer.wk);
  fn("layer.bk", p.layer.bk);
  fn("layer.wv", p.layer.wv);
  fn("layer.bv", p.layer.bv);
  fn("layer.wo", p.layer.wo);
  fn("layer.bo", p.layer.bo);
  fn("layer.w1", p.layer.w1);
  fn("layer.b1", p.layer.b1);
  fn("layer.w2", p.layer.w2);
  fn("layer.b2", p.layer.b2);
  fn("layer.ln1_gain", p.layer.ln1_gain);
  fn("layer.ln1_bias", p.layer.ln1_bias);
  fn("layer.ln2_gain", p.layer.ln2_gain);
  fn("layer.ln2_bias", p.layer.ln2_bias);
  fn("final_ln.gain", p.final_ln_gain);
  fn("final_ln.bias", p.final_ln_bias);
  fn("pooler.w", p.pooler_w);
  fn("pooler.b", p.pooler_b);
}

EncoderParams init_params(const EncoderConfig& cfg);
EncoderParams zeros_like(const EncoderParams& params);

std::int64_t count_params(const EncoderConfig& cfg);
// V*E + E*H for the factorized block, vs V*H had embeddings been tied to H
std::int64_t embedding_param_count(const EncoderConfig& cfg);
std::int64_t untied_embedding_param_count(const EncoderConfig& cfg);

struct LayerTape {
  MatrixXd input;               // T x H
  MatrixXd ln1_xhat;            // T x H
  VectorXd ln1_invstd;          // T
  MatrixXd ln1_out;             // T x H
  MatrixXd q, k, v;             // T x H, heads packed along columns
  std::vector<MatrixXd> probs;  // per head, T x T attention rows
  MatrixXd ctx;                 // T x H merged head outputs
  MatrixXd after_attn;          // T x H
  MatrixXd ln2_xhat;            // T x H
  VectorXd ln2_invstd;          // T
  MatrixXd ln2_out;             // T x H
  MatrixXd ff_pre;              // T x F
  MatrixXd ff_act;              // T x F
};

struct ForwardTape {
  EncodedSequence seq;
  MatrixXd embedded;             // T x H
  std::vector<LayerTape> layers; // length L
  MatrixXd final_xhat;           // T x H
  VectorXd final_invstd;         // T
  MatrixXd hidden;               // T x H, residual stream after the final norm
  VectorXd pooled;               // H, tanh of the pooler over position 0
};

ForwardTape forward(const EncoderParams& params, const EncoderConfig& cfg,
                    const EncodedSequence& seq);

// Accumulates into grads, which must be params-shaped (zeros_like). The shared
// layer's gradients sum the contributions of all L applications.
void backward(const EncoderParams& params, const EncoderConfig& cfg, const ForwardTape& tape,
              const VectorXd& grad_pooled, EncoderParams& grads);

// 0.5 x (1 + erf(x / sqrt 2)) and its exact derivative
double gelu(double x);
double gelu_grad(double x);

}  // namespace adcofe
