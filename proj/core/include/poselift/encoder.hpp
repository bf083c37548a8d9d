#pragma once

#include "poselift/rng.hpp"
#include "poselift/tape.hpp"
#include "poselift/tensor.hpp"

namespace poselift {

// One encoder layer: learned positional embedding, pre-LN multi-head
// self-attention with residual, pre-LN per-joint MLP with residual.
struct EncoderWeights {
  Tensor wq, bq, wk, bk, wv, bv;  // [d x d] projections + [d] biases
  Tensor wout, bout;
  Tensor wpos;                    // [J x d]
  Tensor ln1_gamma, ln1_beta;
  Tensor ln2_gamma, ln2_beta;
  Tensor fc1_w, fc1_b;            // [d x r*d], [r*d]
  Tensor fc2_w, fc2_b;            // [r*d x d], [d]
  int num_heads = 1;
  // Scale attention logits by 1/sqrt(full channel width) instead of the
  // default per-head width.
  bool scale_full_width = false;
  double ln_eps = 1e-5;
  double dropout = 0.0;
};

struct EncoderNodes {
  int wq = -1, bq = -1, wk = -1, bk = -1, wv = -1, bv = -1;
  int wout = -1, bout = -1;
  int wpos = -1;
  int ln1_g = -1, ln1_b = -1, ln2_g = -1, ln2_b = -1;
  int fc1_w = -1, fc1_b = -1, fc2_w = -1, fc2_b = -1;
  int num_heads = 1;
  bool scale_full_width = false;
  double ln_eps = 1e-5;
  double dropout = 0.0;
};

EncoderNodes bind_encoder(GradTape& tape, const EncoderWeights& w, bool requires_grad);

// --- tape builders ------------------------------------------------------------

// softmax(q.k^T / sqrt(scale_width)).v
int scaled_dot_attention_node(GradTape& tape, int q, int k, int v, int scale_width);
int msa_node(GradTape& tape, int z, const EncoderNodes& w);
int mlp_node(GradTape& tape, int z, const EncoderNodes& w);
// The full layer. dropout_rng enables train-time dropout on the attention
// and MLP branches when w.dropout > 0; inference passes nullptr.
int encoder_forward_node(GradTape& tape, int z0, const EncoderNodes& w,
                         Rng* dropout_rng = nullptr);

// --- plain-tensor entry points (wrap the builders) ----------------------------

// Row-stochastic attention matrix softmax(q.k^T / sqrt(scale_width)),
// exposed so tests can check the row sums directly.
Tensor attention_weights(const Tensor& q, const Tensor& k, int scale_width);
Tensor scaled_dot_attention(const Tensor& q, const Tensor& k, const Tensor& v, int scale_width);
Tensor msa(const Tensor& z, const EncoderWeights& w);
Tensor mlp(const Tensor& z, const EncoderWeights& w);
Tensor encoder_forward(const Tensor& z0, const EncoderWeights& w);

}  // namespace poselift
