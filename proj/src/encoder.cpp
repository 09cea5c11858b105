#include "adcofe/encoder.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "adcofe/errors.hpp"
#include "adcofe/rng.hpp"

namespace adcofe {

namespace {

constexpr double kLnEps = 1e-12;

void require(bool ok, const std::string& message) {
  if (!ok) throw UsageError(message);
}

// Sequence problems are corpus problems, not caller mistakes.
void require_data(bool ok, const std::string& message) {
  if (!ok) throw DataError(message);
}

void fill_uniform(MatrixXd& m, Rng& rng, int fan_in) {
  // uniform on +-sqrt(3)/sqrt(fan_in): RMS exactly 1/sqrt(fan_in)
  const double scale = std::sqrt(3.0 / static_cast<double>(fan_in));
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = rng.next_symmetric(scale);
}

// Row-wise layer normalization; xhat and invstd are what backward needs.
void layer_norm(const MatrixXd& x, const VectorXd& gain, const VectorXd& bias, MatrixXd& xhat,
                VectorXd& invstd, MatrixXd& out) {
  const VectorXd mean = x.rowwise().mean();
  const MatrixXd centered = x.colwise() - mean;
  const VectorXd var = centered.array().square().rowwise().mean().matrix();
  invstd = (var.array() + kLnEps).rsqrt().matrix();
  xhat = (centered.array().colwise() * invstd.array()).matrix();
  out = ((xhat.array().rowwise() * gain.transpose().array()).rowwise() +
         bias.transpose().array())
            .matrix();
}

// dx for y = xhat * gain + bias given d(ln_out); accumulates into dx.
void layer_norm_backward(const MatrixXd& d_out, const MatrixXd& xhat, const VectorXd& invstd,
                         const VectorXd& gain, VectorXd& d_gain, VectorXd& d_bias, MatrixXd& dx) {
  d_gain.noalias() += (d_out.array() * xhat.array()).matrix().colwise().sum().transpose();
  d_bias.noalias() += d_out.colwise().sum().transpose();
  const MatrixXd dxhat = (d_out.array().rowwise() * gain.transpose().array()).matrix();
  const VectorXd row_mean = dxhat.rowwise().mean();
  const VectorXd row_dot = (dxhat.array() * xhat.array()).rowwise().mean().matrix();
  dx.array() += ((dxhat.colwise() - row_mean).array() - xhat.array().colwise() * row_dot.array())
                    .colwise() *
                invstd.array();
}

}  // namespace

void EncoderConfig::validate() const {
  require(vocab_size >= 4, "vocab_size must be >= 4 to cover the reserved ids");
  require(embed_dim >= 1, "embed_dim must be >= 1");
  require(hidden_dim >= 1, "hidden_dim must be >= 1");
  require(layers >= 1, "layers must be >= 1");
  require(heads >= 1, "heads must be >= 1");
  require(ff_dim >= 1, "ff_dim must be >= 1");
  require(max_positions >= 1, "max_positions must be >= 1");
  require(hidden_dim % heads == 0, "hidden_dim (" + std::to_string(hidden_dim) +
                                       ") not divisible by heads (" + std::to_string(heads) + ")");
  require(embed_dim <= hidden_dim, "embed_dim must not exceed hidden_dim");
  require(groups == 1, "only groups == 1 is supported");
}

EncoderConfig full_scale_config() {
  EncoderConfig cfg;
  cfg.vocab_size = 30000;
  cfg.embed_dim = 128;
  cfg.hidden_dim = 768;
  cfg.layers = 12;
  cfg.heads = 12;
  cfg.ff_dim = 3072;
  cfg.max_positions = 512;
  return cfg;
}

EncoderParams init_params(const EncoderConfig& cfg) {
  cfg.validate();
  const int V = cfg.vocab_size, E = cfg.embed_dim, H = cfg.hidden_dim, F = cfg.ff_dim,
            P = cfg.max_positions;
  EncoderParams p;
  p.token_embed.resize(V, E);
  p.embed_proj.resize(E, H);
  p.position_embed.resize(P, H);
  p.segment_embed.resize(2, H);
  p.layer.wq.resize(H, H);
  p.layer.wk.resize(H, H);
  p.layer.wv.resize(H, H);
  p.layer.wo.resize(H, H);
  p.layer.w1.resize(H, F);
  p.layer.w2.resize(F, H);
  p.pooler_w.resize(H, H);

  std::uint64_t stream = 0;
  auto next_rng = [&] { return Rng(mix_seed(cfg.seed, stream++)); };
  // Embedding rows live in the residual stream: scale by their own width.
  {
    Rng r = next_rng();
    fill_uniform(p.token_embed, r, E);
  }
  {
    Rng r = next_rng();
    fill_uniform(p.embed_proj, r, E);
  }
  {
    Rng r = next_rng();
    fill_uniform(p.position_embed, r, H);
  }
  {
    Rng r = next_rng();
    fill_uniform(p.segment_embed, r, H);
  }
  for (MatrixXd* w : {&p.layer.wq, &p.layer.wk, &p.layer.wv, &p.layer.wo, &p.layer.w1}) {
    Rng r = next_rng();
    fill_uniform(*w, r, H);
  }
  {
    Rng r = next_rng();
    fill_uniform(p.layer.w2, r, F);
  }
  {
    Rng r = next_rng();
    fill_uniform(p.pooler_w, r, H);
  }

  p.layer.bq = VectorXd::Zero(H);
  p.layer.bk = VectorXd::Zero(H);
  p.layer.bv = VectorXd::Zero(H);
  p.layer.bo = VectorXd::Zero(H);
  p.layer.b1 = VectorXd::Zero(F);
  p.layer.b2 = VectorXd::Zero(H);
  p.layer.ln1_gain = VectorXd::Ones(H);
  p.layer.ln1_bias = VectorXd::Zero(H);
  p.layer.ln2_gain = VectorXd::Ones(H);
  p.layer.ln2_bias = VectorXd::Zero(H);
  p.final_ln_gain = VectorXd::Ones(H);
  p.final_ln_bias = VectorXd::Zero(H);
  p.pooler_b = VectorXd::Zero(H);
  return p;
}

EncoderParams zeros_like(const EncoderParams& params) {
  EncoderParams z = params;
  visit_tensors(z, [](const char*, auto& t) { t.setZero(); });
  return z;
}

std::int64_t count_params(const EncoderConfig& cfg) {
  cfg.validate();
  EncoderParams p = init_params(cfg);
  std::int64_t n = 0;
  visit_tensors(p, [&](const char*, const auto& t) { n += static_cast<std::int64_t>(t.size()); });
  return n;
}

std::int64_t embedding_param_count(const EncoderConfig& cfg) {
  return static_cast<std::int64_t>(cfg.vocab_size) * cfg.embed_dim +
         static_cast<std::int64_t>(cfg.embed_dim) * cfg.hidden_dim;
}

std::int64_t untied_embedding_param_count(const EncoderConfig& cfg) {
  return static_cast<std::int64_t>(cfg.vocab_size) * cfg.hidden_dim;
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x / std::sqrt(2.0)));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
  return cdf + x * pdf;
}

ForwardTape forward(const EncoderParams& params, const EncoderConfig& cfg,
                    const EncodedSequence& seq) {
  const auto T = static_cast<Eigen::Index>(seq.size());
  const int H = cfg.hidden_dim, A = cfg.heads, d = cfg.head_dim();
  require_data(T >= 1, "empty sequence");
  require_data(T <= cfg.max_positions, "sequence length " + std::to_string(T) +
                                           " exceeds max_positions " +
                                           std::to_string(cfg.max_positions));
  bool any_real = false;
  for (Eigen::Index t = 0; t < T; ++t) {
    require_data(seq.input_ids[t] >= 0 && seq.input_ids[t] < cfg.vocab_size,
                 "token id " + std::to_string(seq.input_ids[t]) + " outside vocab of " +
                     std::to_string(cfg.vocab_size));
    require_data(seq.segment_ids[t] == 0 || seq.segment_ids[t] == 1,
                 "segment id must be 0 or 1, got " + std::to_string(seq.segment_ids[t]));
    if (seq.mask[t] != 0) any_real = true;
  }
  require_data(any_real, "sequence is entirely padding");

  ForwardTape tape;
  tape.seq = seq;
  tape.embedded.resize(T, H);
  for (Eigen::Index t = 0; t < T; ++t) {
    tape.embedded.row(t) = params.token_embed.row(seq.input_ids[t]) * params.embed_proj +
                           params.position_embed.row(t) +
                           params.segment_embed.row(seq.segment_ids[t]);
  }

  MatrixXd x = tape.embedded;
  tape.layers.resize(cfg.layers);
  for (int l = 0; l < cfg.layers; ++l) {
    LayerTape& lt = tape.layers[l];
    lt.input = x;
    layer_norm(x, params.layer.ln1_gain, params.layer.ln1_bias, lt.ln1_xhat, lt.ln1_invstd,
               lt.ln1_out);
    lt.q = (lt.ln1_out * params.layer.wq).rowwise() + params.layer.bq.transpose();
    lt.k = (lt.ln1_out * params.layer.wk).rowwise() + params.layer.bk.transpose();
    lt.v = (lt.ln1_out * params.layer.wv).rowwise() + params.layer.bv.transpose();

    lt.ctx.resize(T, H);
    lt.probs.resize(A);
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
    for (int h = 0; h < A; ++h) {
      const auto qh = lt.q.middleCols(h * d, d);
      const auto kh = lt.k.middleCols(h * d, d);
      const auto vh = lt.v.middleCols(h * d, d);
      MatrixXd scores = qh * kh.transpose() * inv_sqrt_d;
      MatrixXd& probs = lt.probs[h];
      probs.resize(T, T);
      for (Eigen::Index i = 0; i < T; ++i) {
        double row_max = -std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < T; ++j)
          if (seq.mask[j] != 0) row_max = std::max(row_max, scores(i, j));
        double denom = 0.0;
        for (Eigen::Index j = 0; j < T; ++j) {
          const double e = seq.mask[j] != 0 ? std::exp(scores(i, j) - row_max) : 0.0;
          probs(i, j) = e;
          denom += e;
        }
        probs.row(i) /= denom;
      }
      lt.ctx.middleCols(h * d, d).noalias() = probs * vh;
    }

    lt.after_attn = x + ((lt.ctx * params.layer.wo).rowwise() + params.layer.bo.transpose());
    layer_norm(lt.after_attn, params.layer.ln2_gain, params.layer.ln2_bias, lt.ln2_xhat,
               lt.ln2_invstd, lt.ln2_out);
    lt.ff_pre = (lt.ln2_out * params.layer.w1).rowwise() + params.layer.b1.transpose();
    lt.ff_act = lt.ff_pre.unaryExpr([](double v) { return gelu(v); });
    x = lt.after_attn + ((lt.ff_act * params.layer.w2).rowwise() + params.layer.b2.transpose());
  }

  // Final norm keeps the grown residual stream out of the tanh's flat tails.
  layer_norm(x, params.final_ln_gain, params.final_ln_bias, tape.final_xhat, tape.final_invstd,
             tape.hidden);
  const VectorXd pre =
      (tape.hidden.row(0) * params.pooler_w).transpose() + params.pooler_b;
  tape.pooled = pre.array().tanh().matrix();
  return tape;
}

void backward(const EncoderParams& params, const EncoderConfig& cfg, const ForwardTape& tape,
              const VectorXd& grad_pooled, EncoderParams& grads) {
  const auto T = static_cast<Eigen::Index>(tape.seq.size());
  const int A = cfg.heads, d = cfg.head_dim();
  require(tape.layers.size() == static_cast<std::size_t>(cfg.layers),
          "tape does not match config");
  require(grad_pooled.size() == cfg.hidden_dim, "grad_pooled length mismatch");

  // tanh pooler over position 0
  const VectorXd d_pre =
      (grad_pooled.array() * (1.0 - tape.pooled.array().square())).matrix();
  grads.pooler_w.noalias() += tape.hidden.row(0).transpose() * d_pre.transpose();
  grads.pooler_b.noalias() += d_pre;
  MatrixXd d_hidden = MatrixXd::Zero(T, cfg.hidden_dim);
  d_hidden.row(0) = d_pre.transpose() * params.pooler_w.transpose();

  MatrixXd dx = MatrixXd::Zero(T, cfg.hidden_dim);
  layer_norm_backward(d_hidden, tape.final_xhat, tape.final_invstd, params.final_ln_gain,
                      grads.final_ln_gain, grads.final_ln_bias, dx);

  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  for (int l = cfg.layers - 1; l >= 0; --l) {
    const LayerTape& lt = tape.layers[l];

    // feedforward residual
    const MatrixXd& d_ff_out = dx;
    grads.layer.w2.noalias() += lt.ff_act.transpose() * d_ff_out;
    grads.layer.b2.noalias() += d_ff_out.colwise().sum().transpose();
    const MatrixXd d_ff_act = d_ff_out * params.layer.w2.transpose();
    const MatrixXd d_ff_pre =
        (d_ff_act.array() * lt.ff_pre.unaryExpr([](double v) { return gelu_grad(v); }).array())
            .matrix();
    grads.layer.w1.noalias() += lt.ln2_out.transpose() * d_ff_pre;
    grads.layer.b1.noalias() += d_ff_pre.colwise().sum().transpose();
    const MatrixXd d_ln2_out = d_ff_pre * params.layer.w1.transpose();
    MatrixXd d_after_attn = dx;  // residual branch
    layer_norm_backward(d_ln2_out, lt.ln2_xhat, lt.ln2_invstd, params.layer.ln2_gain,
                        grads.layer.ln2_gain, grads.layer.ln2_bias, d_after_attn);

    // attention residual
    const MatrixXd& d_attn_out = d_after_attn;
    grads.layer.wo.noalias() += lt.ctx.transpose() * d_attn_out;
    grads.layer.bo.noalias() += d_attn_out.colwise().sum().transpose();
    const MatrixXd d_ctx = d_attn_out * params.layer.wo.transpose();

    MatrixXd dq(T, cfg.hidden_dim), dk(T, cfg.hidden_dim), dv(T, cfg.hidden_dim);
    for (int h = 0; h < A; ++h) {
      const auto qh = lt.q.middleCols(h * d, d);
      const auto kh = lt.k.middleCols(h * d, d);
      const auto vh = lt.v.middleCols(h * d, d);
      const auto d_ctx_h = d_ctx.middleCols(h * d, d);
      const MatrixXd& probs = lt.probs[h];

      dv.middleCols(h * d, d).noalias() = probs.transpose() * d_ctx_h;
      const MatrixXd d_probs = d_ctx_h * vh.transpose();
      // softmax rows: dS = P .* (dP - rowwise dot(dP, P))
      const VectorXd row_dot = (d_probs.array() * probs.array()).rowwise().sum().matrix();
      const MatrixXd d_scores =
          (probs.array() * (d_probs.colwise() - row_dot).array() * inv_sqrt_d).matrix();
      dq.middleCols(h * d, d).noalias() = d_scores * kh;
      dk.middleCols(h * d, d).noalias() = d_scores.transpose() * qh;
    }

    grads.layer.wq.noalias() += lt.ln1_out.transpose() * dq;
    grads.layer.bq.noalias() += dq.colwise().sum().transpose();
    grads.layer.wk.noalias() += lt.ln1_out.transpose() * dk;
    grads.layer.bk.noalias() += dk.colwise().sum().transpose();
    grads.layer.wv.noalias() += lt.ln1_out.transpose() * dv;
    grads.layer.bv.noalias() += dv.colwise().sum().transpose();
    const MatrixXd d_ln1_out = dq * params.layer.wq.transpose() +
                               dk * params.layer.wk.transpose() +
                               dv * params.layer.wv.transpose();
    MatrixXd d_input = d_after_attn;  // residual branch
    layer_norm_backward(d_ln1_out, lt.ln1_xhat, lt.ln1_invstd, params.layer.ln1_gain,
                        grads.layer.ln1_gain, grads.layer.ln1_bias, d_input);
    dx = std::move(d_input);
  }

  for (Eigen::Index t = 0; t < T; ++t) {
    const int id = tape.seq.input_ids[t];
    grads.token_embed.row(id).noalias() += dx.row(t) * params.embed_proj.transpose();
    grads.embed_proj.noalias() += params.token_embed.row(id).transpose() * dx.row(t);
    grads.position_embed.row(t) += dx.row(t);
    grads.segment_embed.row(tape.seq.segment_ids[t]) += dx.row(t);
  }
}

}  // namespace adcofe
