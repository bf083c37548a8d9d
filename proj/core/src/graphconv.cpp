#include "poselift/graphconv.hpp"

#include "poselift/error.hpp"

namespace poselift {

GcnDesign gcn_design_from_string(const std::string& name) {
  if (name == "primary") return GcnDesign::kPrimary;
  if (name == "two_residual") return GcnDesign::kTwoResidual;
  if (name == "transformer_style") return GcnDesign::kTransformerStyle;
  if (name == "convnext_style") return GcnDesign::kConvNextStyle;
  throw ConfigError("unknown GCN block design '" + name +
                    "' (expected primary, two_residual, transformer_style or convnext_style)");
}

std::string to_string(GcnDesign design) {
  switch (design) {
    case GcnDesign::kPrimary: return "primary";
    case GcnDesign::kTwoResidual: return "two_residual";
    case GcnDesign::kTransformerStyle: return "transformer_style";
    case GcnDesign::kConvNextStyle: return "convnext_style";
  }
  throw ConfigError("unknown GCN block design tag");
}

AdjacencyNodes bind_adjacency(GradTape& tape, const PartitionedAdjacency& part) {
  AdjacencyNodes n;
  n.ahat1 = tape.leaf(part.ahat1, false);
  n.ahat2 = tape.leaf(part.ahat2, false);
  n.ahat3 = tape.leaf(part.ahat3, false);
  return n;
}

namespace {

GroupedConvNodes bind_grouped_conv(GradTape& tape, const GroupedConvWeights& w,
                                   bool requires_grad) {
  if (!w.theta1.same_shape(w.theta2) || !w.theta1.same_shape(w.theta3)) {
    throw ShapeError("grouped conv: group filters disagree, " + w.theta1.shape_str() + " vs " +
                     w.theta2.shape_str() + " vs " + w.theta3.shape_str());
  }
  GroupedConvNodes n;
  n.t1 = tape.leaf(w.theta1, requires_grad);
  n.t2 = tape.leaf(w.theta2, requires_grad);
  n.t3 = tape.leaf(w.theta3, requires_grad);
  if (w.bias.size() > 0) n.bias = tape.leaf(w.bias, requires_grad);
  return n;
}

int mlp_pair_node(GradTape& tape, int x, int w1, int b1, int w2, int b2) {
  int h = tape.add_row(tape.matmul(x, w1), b1);
  h = tape.gelu(h);
  return tape.add_row(tape.matmul(h, w2), b2);
}

}  // namespace

GcnBlockNodes bind_gcn_block(GradTape& tape, const GcnBlockWeights& w, bool requires_grad) {
  GcnBlockNodes n;
  n.design = w.design;
  n.ln_eps = w.ln_eps;
  n.conv_a = bind_grouped_conv(tape, w.conv_a, requires_grad);
  switch (w.design) {
    case GcnDesign::kPrimary:
    case GcnDesign::kTwoResidual:
      n.conv_b = bind_grouped_conv(tape, w.conv_b, requires_grad);
      break;
    case GcnDesign::kTransformerStyle:
      n.ln1_g = tape.leaf(w.ln1_gamma, requires_grad);
      n.ln1_b = tape.leaf(w.ln1_beta, requires_grad);
      n.ln2_g = tape.leaf(w.ln2_gamma, requires_grad);
      n.ln2_b = tape.leaf(w.ln2_beta, requires_grad);
      n.fc1_w = tape.leaf(w.fc1_w, requires_grad);
      n.fc1_b = tape.leaf(w.fc1_b, requires_grad);
      n.fc2_w = tape.leaf(w.fc2_w, requires_grad);
      n.fc2_b = tape.leaf(w.fc2_b, requires_grad);
      break;
    case GcnDesign::kConvNextStyle:
      n.ln1_g = tape.leaf(w.ln1_gamma, requires_grad);
      n.ln1_b = tape.leaf(w.ln1_beta, requires_grad);
      n.fc1_w = tape.leaf(w.fc1_w, requires_grad);
      n.fc1_b = tape.leaf(w.fc1_b, requires_grad);
      n.fc2_w = tape.leaf(w.fc2_w, requires_grad);
      n.fc2_b = tape.leaf(w.fc2_b, requires_grad);
      break;
  }
  return n;
}

int grouped_gconv_node(GradTape& tape, int x, const AdjacencyNodes& adj,
                       const GroupedConvNodes& w) {
  const int z1 = tape.matmul(adj.ahat1, tape.matmul(x, w.t1));
  const int z2 = tape.matmul(adj.ahat2, tape.matmul(x, w.t2));
  const int z3 = tape.matmul(adj.ahat3, tape.matmul(x, w.t3));
  int out = tape.add(tape.add(z1, z2), z3);
  if (w.bias >= 0) out = tape.add_row(out, w.bias);
  return out;
}

int gcn_block_node(GradTape& tape, int z, const AdjacencyNodes& adj, const GcnBlockNodes& w) {
  switch (w.design) {
    case GcnDesign::kPrimary: {
      const int h = tape.gelu(grouped_gconv_node(tape, z, adj, w.conv_a));
      return tape.add(h, tape.gelu(grouped_gconv_node(tape, h, adj, w.conv_b)));
    }
    case GcnDesign::kTwoResidual: {
      const int h = tape.add(z, tape.gelu(grouped_gconv_node(tape, z, adj, w.conv_a)));
      return tape.add(h, tape.gelu(grouped_gconv_node(tape, h, adj, w.conv_b)));
    }
    case GcnDesign::kTransformerStyle: {
      const int n1 = tape.layer_norm(z, w.ln1_g, w.ln1_b, w.ln_eps);
      const int h = tape.add(z, grouped_gconv_node(tape, n1, adj, w.conv_a));
      const int n2 = tape.layer_norm(h, w.ln2_g, w.ln2_b, w.ln_eps);
      return tape.add(h, mlp_pair_node(tape, n2, w.fc1_w, w.fc1_b, w.fc2_w, w.fc2_b));
    }
    case GcnDesign::kConvNextStyle: {
      const int c = grouped_gconv_node(tape, z, adj, w.conv_a);
      const int n1 = tape.layer_norm(c, w.ln1_g, w.ln1_b, w.ln_eps);
      return tape.add(z, mlp_pair_node(tape, n1, w.fc1_w, w.fc1_b, w.fc2_w, w.fc2_b));
    }
  }
  throw ConfigError("gcn_block_node: unknown design tag");
}

Tensor vanilla_gconv(const Tensor& x, const Tensor& ahat, const Tensor& theta,
                     const Tensor* bias) {
  Tensor out = matmul(ahat, matmul(x, theta));
  if (bias != nullptr && bias->size() > 0) out = add_row_broadcast(out, *bias);
  return out;
}

Tensor grouped_gconv(const Tensor& x, const PartitionedAdjacency& part,
                     const GroupedConvWeights& w) {
  GradTape tape;
  const int xn = tape.leaf(x, false);
  const AdjacencyNodes adj = bind_adjacency(tape, part);
  const GroupedConvNodes wn = bind_grouped_conv(tape, w, false);
  return tape.value(grouped_gconv_node(tape, xn, adj, wn));
}

Tensor gcn_block_forward(const Tensor& z, const PartitionedAdjacency& part,
                         const GcnBlockWeights& w) {
  GradTape tape;
  const int zn = tape.leaf(z, false);
  const AdjacencyNodes adj = bind_adjacency(tape, part);
  const GcnBlockNodes wn = bind_gcn_block(tape, w, false);
  return tape.value(gcn_block_node(tape, zn, adj, wn));
}

}  // namespace poselift
