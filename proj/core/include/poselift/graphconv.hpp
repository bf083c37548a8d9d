#pragma once

#include <string>

#include "poselift/skeleton.hpp"
#include "poselift/tape.hpp"
#include "poselift/tensor.hpp"

namespace poselift {

// Block designs. kPrimary is a plain grouped convolution followed by a
// grouped convolution with a residual; the others are the alternative
// arrangements kept for ablation runs.
enum class GcnDesign {
  kPrimary,
  kTwoResidual,
  kTransformerStyle,
  kConvNextStyle,
};

GcnDesign gcn_design_from_string(const std::string& name);
std::string to_string(GcnDesign design);

// One projection matrix per neighbor group, all the same shape.
struct GroupedConvWeights {
  Tensor theta1, theta2, theta3;  // [in x out]
  Tensor bias;                    // [out], empty = no bias
};

struct GcnBlockWeights {
  GcnDesign design = GcnDesign::kPrimary;
  GroupedConvWeights conv_a;
  GroupedConvWeights conv_b;            // primary / two_residual only
  Tensor ln1_gamma, ln1_beta;           // transformer_style, convnext_style
  Tensor ln2_gamma, ln2_beta;           // transformer_style only
  Tensor fc1_w, fc1_b, fc2_w, fc2_b;    // in-block MLP / pointwise pair
  double ln_eps = 1e-5;
};

// --- tape builders (used by the model) ---------------------------------------

struct AdjacencyNodes {
  int ahat1 = -1, ahat2 = -1, ahat3 = -1;
};

struct GroupedConvNodes {
  int t1 = -1, t2 = -1, t3 = -1, bias = -1;
};

struct GcnBlockNodes {
  GcnDesign design = GcnDesign::kPrimary;
  GroupedConvNodes conv_a, conv_b;
  int ln1_g = -1, ln1_b = -1, ln2_g = -1, ln2_b = -1;
  int fc1_w = -1, fc1_b = -1, fc2_w = -1, fc2_b = -1;
  double ln_eps = 1e-5;
};

AdjacencyNodes bind_adjacency(GradTape& tape, const PartitionedAdjacency& part);
GcnBlockNodes bind_gcn_block(GradTape& tape, const GcnBlockWeights& w, bool requires_grad);

// sum_j Ahat_j . X . Theta_j (+ bias); the output at joint i depends only on
// i and its 1-hop neighbors.
int grouped_gconv_node(GradTape& tape, int x, const AdjacencyNodes& adj,
                       const GroupedConvNodes& w);
int gcn_block_node(GradTape& tape, int z, const AdjacencyNodes& adj, const GcnBlockNodes& w);

// --- plain-tensor entry points -----------------------------------------------
// Thin wrappers that evaluate the tape builders, so there is exactly one
// forward definition.

Tensor vanilla_gconv(const Tensor& x, const Tensor& ahat, const Tensor& theta,
                     const Tensor* bias = nullptr);
Tensor grouped_gconv(const Tensor& x, const PartitionedAdjacency& part,
                     const GroupedConvWeights& w);
Tensor gcn_block_forward(const Tensor& z, const PartitionedAdjacency& part,
                         const GcnBlockWeights& w);

}  // namespace poselift
