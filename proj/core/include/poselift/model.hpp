#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "poselift/encoder.hpp"
#include "poselift/graphconv.hpp"
#include "poselift/params.hpp"
#include "poselift/skeleton.hpp"
#include "poselift/tape.hpp"

namespace poselift {

struct ModelConfig {
  int num_joints = 17;
  int channels = 512;
  int depth = 5;
  int num_heads = 8;
  int mlp_ratio = 2;
  GcnDesign gcn_design = GcnDesign::kPrimary;
  std::string skeleton = "h36m17";  // builtin name or file path
  bool attn_scale_full_width = false;
  double dropout = 0.0;
  double ln_eps = 1e-5;
};

// Throws ConfigError listing the violated constraint.
void validate_config(const ModelConfig& cfg, const Skeleton& skeleton);

// Parameter indices into the model's ParamStore.
struct LinearIds {
  int w = -1, b = -1;
};

struct EncoderIds {
  int wpos = -1;
  int ln1_g = -1, ln1_b = -1, ln2_g = -1, ln2_b = -1;
  LinearIds q, k, v, out;
  LinearIds fc1, fc2;
};

struct GcnBlockIds {
  struct ConvIds {
    int t1 = -1, t2 = -1, t3 = -1, bias = -1;
  };
  ConvIds conv_a, conv_b;
  int ln1_g = -1, ln1_b = -1, ln2_g = -1, ln2_b = -1;
  LinearIds fc1, fc2;
};

struct LayerIds {
  EncoderIds encoder;
  GcnBlockIds gcn;
};

// The full network: per-joint input projection, `depth` (encoder, GCN block)
// pairs, per-joint output projection to 3-D coordinates.
struct Model {
  ModelConfig cfg;
  Skeleton skeleton;
  PartitionedAdjacency adjacency;
  ParamStore params;
  LinearIds input_proj;
  std::vector<LayerIds> layers;
  LinearIds output_proj;
};

// Deterministic construction: weight matrices uniform in
// [-1/sqrt(fan_in), +1/sqrt(fan_in)], biases and positional embeddings zero,
// layer-norm gamma one / beta zero, drawn in parameter creation order.
Model build_model(const ModelConfig& cfg, std::uint64_t seed);

// --- forward -------------------------------------------------------------------

// Per-tape view of the model: parameter leaves plus adjacency constants.
struct BoundModel {
  std::vector<int> param_nodes;  // aligned with model.params
  AdjacencyNodes adjacency;
};

BoundModel bind_model(GradTape& tape, const Model& m, bool requires_grad);
// input2d is a [J x 2] node; returns the [J x 3] output node.
int model_forward_node(GradTape& tape, const Model& m, const BoundModel& bound, int input2d,
                       Rng* dropout_rng = nullptr);

// Inference entry point; builds a throwaway tape.
Tensor forward(const Model& m, const Tensor& pose2d);

// --- accounting ------------------------------------------------------------------

struct CountReport {
  long long total = 0;
  std::vector<std::pair<std::string, long long>> items;
  // MACs of applying the constant sparse adjacency matrices; informational,
  // not part of `total` (see count_flops).
  long long excluded_adjacency_macs = 0;
};

// Exact count of trainable scalars, itemized per parameter.
CountReport count_params(const Model& m);

// Forward-pass multiply-accumulate count for one sample, one MAC counted as
// one FLOP. Counts every dense matrix product (projections, attention score
// and value products, per-group filter products); the constant sparse
// adjacency application is excluded from the total and reported separately.
CountReport count_flops(const Model& m);

}  // namespace poselift
