#include "poselift/encoder.hpp"

#include <cmath>

#include "poselift/error.hpp"

namespace poselift {

EncoderNodes bind_encoder(GradTape& tape, const EncoderWeights& w, bool requires_grad) {
  EncoderNodes n;
  n.num_heads = w.num_heads;
  n.scale_full_width = w.scale_full_width;
  n.ln_eps = w.ln_eps;
  n.dropout = w.dropout;
  n.wq = tape.leaf(w.wq, requires_grad);
  n.bq = tape.leaf(w.bq, requires_grad);
  n.wk = tape.leaf(w.wk, requires_grad);
  n.bk = tape.leaf(w.bk, requires_grad);
  n.wv = tape.leaf(w.wv, requires_grad);
  n.bv = tape.leaf(w.bv, requires_grad);
  n.wout = tape.leaf(w.wout, requires_grad);
  n.bout = tape.leaf(w.bout, requires_grad);
  n.wpos = tape.leaf(w.wpos, requires_grad);
  n.ln1_g = tape.leaf(w.ln1_gamma, requires_grad);
  n.ln1_b = tape.leaf(w.ln1_beta, requires_grad);
  n.ln2_g = tape.leaf(w.ln2_gamma, requires_grad);
  n.ln2_b = tape.leaf(w.ln2_beta, requires_grad);
  n.fc1_w = tape.leaf(w.fc1_w, requires_grad);
  n.fc1_b = tape.leaf(w.fc1_b, requires_grad);
  n.fc2_w = tape.leaf(w.fc2_w, requires_grad);
  n.fc2_b = tape.leaf(w.fc2_b, requires_grad);
  return n;
}

int scaled_dot_attention_node(GradTape& tape, int q, int k, int v, int scale_width) {
  if (scale_width <= 0) throw ContractError("scaled_dot_attention: scale width must be positive");
  const int scores = tape.scale(tape.matmul(q, tape.transpose(k)),
                                1.0 / std::sqrt(static_cast<double>(scale_width)));
  return tape.matmul(tape.softmax_rows(scores), v);
}

int msa_node(GradTape& tape, int z, const EncoderNodes& w) {
  const int d = tape.value(z).cols();
  if (w.num_heads < 1 || d % w.num_heads != 0) {
    throw ConfigError("msa: channel width " + std::to_string(d) + " not divisible by " +
                      std::to_string(w.num_heads) + " heads");
  }
  const int dh = d / w.num_heads;
  const int scale_width = w.scale_full_width ? d : dh;
  const int q = tape.add_row(tape.matmul(z, w.wq), w.bq);
  const int k = tape.add_row(tape.matmul(z, w.wk), w.bk);
  const int v = tape.add_row(tape.matmul(z, w.wv), w.bv);
  std::vector<int> heads;
  heads.reserve(static_cast<std::size_t>(w.num_heads));
  for (int h = 0; h < w.num_heads; ++h) {
    const int qh = tape.slice_cols(q, h * dh, dh);
    const int kh = tape.slice_cols(k, h * dh, dh);
    const int vh = tape.slice_cols(v, h * dh, dh);
    heads.push_back(scaled_dot_attention_node(tape, qh, kh, vh, scale_width));
  }
  const int concat = w.num_heads == 1 ? heads[0] : tape.concat_cols(heads);
  return tape.add_row(tape.matmul(concat, w.wout), w.bout);
}

int mlp_node(GradTape& tape, int z, const EncoderNodes& w) {
  const int h = tape.gelu(tape.add_row(tape.matmul(z, w.fc1_w), w.fc1_b));
  return tape.add_row(tape.matmul(h, w.fc2_w), w.fc2_b);
}

int encoder_forward_node(GradTape& tape, int z0, const EncoderNodes& w, Rng* dropout_rng) {
  const bool drop = dropout_rng != nullptr && w.dropout > 0.0;
  const int zp = tape.add(z0, w.wpos);
  int attn = msa_node(tape, tape.layer_norm(zp, w.ln1_g, w.ln1_b, w.ln_eps), w);
  if (drop) attn = tape.dropout(attn, w.dropout, *dropout_rng);
  const int z2 = tape.add(attn, zp);
  int m = mlp_node(tape, tape.layer_norm(z2, w.ln2_g, w.ln2_b, w.ln_eps), w);
  if (drop) m = tape.dropout(m, w.dropout, *dropout_rng);
  return tape.add(m, z2);
}

Tensor attention_weights(const Tensor& q, const Tensor& k, int scale_width) {
  if (scale_width <= 0) throw ContractError("attention_weights: scale width must be positive");
  return softmax_rows(scale(matmul(q, transpose(k)), 1.0 / std::sqrt(static_cast<double>(scale_width))));
}

Tensor scaled_dot_attention(const Tensor& q, const Tensor& k, const Tensor& v, int scale_width) {
  GradTape tape;
  const int qn = tape.leaf(q, false);
  const int kn = tape.leaf(k, false);
  const int vn = tape.leaf(v, false);
  return tape.value(scaled_dot_attention_node(tape, qn, kn, vn, scale_width));
}

Tensor msa(const Tensor& z, const EncoderWeights& w) {
  GradTape tape;
  const int zn = tape.leaf(z, false);
  return tape.value(msa_node(tape, zn, bind_encoder(tape, w, false)));
}

Tensor mlp(const Tensor& z, const EncoderWeights& w) {
  GradTape tape;
  const int zn = tape.leaf(z, false);
  return tape.value(mlp_node(tape, zn, bind_encoder(tape, w, false)));
}

Tensor encoder_forward(const Tensor& z0, const EncoderWeights& w) {
  GradTape tape;
  const int zn = tape.leaf(z0, false);
  return tape.value(encoder_forward_node(tape, zn, bind_encoder(tape, w, false)));
}

}  // namespace poselift
