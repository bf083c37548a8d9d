#include "poselift/model.hpp"

#include <cmath>

#include "poselift/error.hpp"

namespace poselift {

void validate_config(const ModelConfig& cfg, const Skeleton& skeleton) {
  if (cfg.depth < 1) throw ConfigError("model config: depth must be >= 1, got " + std::to_string(cfg.depth));
  if (cfg.channels < 1) throw ConfigError("model config: channels must be >= 1, got " + std::to_string(cfg.channels));
  if (cfg.num_heads < 1) throw ConfigError("model config: num_heads must be >= 1, got " + std::to_string(cfg.num_heads));
  if (cfg.channels % cfg.num_heads != 0) {
    throw ConfigError("model config: channels " + std::to_string(cfg.channels) +
                      " not divisible by num_heads " + std::to_string(cfg.num_heads));
  }
  if (cfg.mlp_ratio < 1) throw ConfigError("model config: mlp_ratio must be >= 1, got " + std::to_string(cfg.mlp_ratio));
  if (cfg.num_joints != skeleton.num_joints) {
    throw ConfigError("model config: num_joints " + std::to_string(cfg.num_joints) +
                      " does not match skeleton with " + std::to_string(skeleton.num_joints) +
                      " joints");
  }
  if (cfg.dropout < 0.0 || cfg.dropout >= 1.0) {
    throw ConfigError("model config: dropout must be in [0, 1), got " + std::to_string(cfg.dropout));
  }
  if (cfg.ln_eps <= 0.0) throw ConfigError("model config: ln_eps must be positive");
}

namespace {

struct Initializer {
  ParamStore& store;
  Rng rng;

  int matrix(const std::string& name, int fan_in, int fan_out) {
    Tensor t = Tensor::zeros({fan_in, fan_out});
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& x : t.data) x = rng.uniform(-bound, bound);
    return store.add(name, std::move(t));
  }
  int zeros(const std::string& name, std::vector<int> shape) {
    return store.add(name, Tensor::zeros(std::move(shape)));
  }
  int ones(const std::string& name, int n) { return store.add(name, Tensor::full({n}, 1.0)); }
};

EncoderIds make_encoder_params(Initializer& init, const std::string& prefix,
                               const ModelConfig& cfg) {
  const int d = cfg.channels;
  const int rd = cfg.mlp_ratio * d;
  EncoderIds ids;
  ids.wpos = init.zeros(prefix + ".wpos", {cfg.num_joints, d});
  ids.ln1_g = init.ones(prefix + ".ln1.gamma", d);
  ids.ln1_b = init.zeros(prefix + ".ln1.beta", {d});
  ids.q = {init.matrix(prefix + ".attn.wq", d, d), init.zeros(prefix + ".attn.bq", {d})};
  ids.k = {init.matrix(prefix + ".attn.wk", d, d), init.zeros(prefix + ".attn.bk", {d})};
  ids.v = {init.matrix(prefix + ".attn.wv", d, d), init.zeros(prefix + ".attn.bv", {d})};
  ids.out = {init.matrix(prefix + ".attn.wout", d, d), init.zeros(prefix + ".attn.bout", {d})};
  ids.ln2_g = init.ones(prefix + ".ln2.gamma", d);
  ids.ln2_b = init.zeros(prefix + ".ln2.beta", {d});
  ids.fc1 = {init.matrix(prefix + ".mlp.fc1.weight", d, rd), init.zeros(prefix + ".mlp.fc1.bias", {rd})};
  ids.fc2 = {init.matrix(prefix + ".mlp.fc2.weight", rd, d), init.zeros(prefix + ".mlp.fc2.bias", {d})};
  return ids;
}

GcnBlockIds::ConvIds make_conv_params(Initializer& init, const std::string& prefix, int d) {
  GcnBlockIds::ConvIds ids;
  ids.t1 = init.matrix(prefix + ".theta1", d, d);
  ids.t2 = init.matrix(prefix + ".theta2", d, d);
  ids.t3 = init.matrix(prefix + ".theta3", d, d);
  ids.bias = init.zeros(prefix + ".bias", {d});
  return ids;
}

GcnBlockIds make_gcn_params(Initializer& init, const std::string& prefix,
                            const ModelConfig& cfg) {
  const int d = cfg.channels;
  GcnBlockIds ids;
  switch (cfg.gcn_design) {
    case GcnDesign::kPrimary:
    case GcnDesign::kTwoResidual:
      ids.conv_a = make_conv_params(init, prefix + ".conv_a", d);
      ids.conv_b = make_conv_params(init, prefix + ".conv_b", d);
      break;
    case GcnDesign::kTransformerStyle:
      ids.ln1_g = init.ones(prefix + ".ln1.gamma", d);
      ids.ln1_b = init.zeros(prefix + ".ln1.beta", {d});
      ids.conv_a = make_conv_params(init, prefix + ".conv_a", d);
      ids.ln2_g = init.ones(prefix + ".ln2.gamma", d);
      ids.ln2_b = init.zeros(prefix + ".ln2.beta", {d});
      ids.fc1 = {init.matrix(prefix + ".mlp.fc1.weight", d, d), init.zeros(prefix + ".mlp.fc1.bias", {d})};
      ids.fc2 = {init.matrix(prefix + ".mlp.fc2.weight", d, d), init.zeros(prefix + ".mlp.fc2.bias", {d})};
      break;
    case GcnDesign::kConvNextStyle:
      ids.conv_a = make_conv_params(init, prefix + ".conv_a", d);
      ids.ln1_g = init.ones(prefix + ".ln.gamma", d);
      ids.ln1_b = init.zeros(prefix + ".ln.beta", {d});
      ids.fc1 = {init.matrix(prefix + ".pw1.weight", d, d), init.zeros(prefix + ".pw1.bias", {d})};
      ids.fc2 = {init.matrix(prefix + ".pw2.weight", d, d), init.zeros(prefix + ".pw2.bias", {d})};
      break;
  }
  return ids;
}

}  // namespace

Model build_model(const ModelConfig& cfg, std::uint64_t seed) {
  Model m;
  m.cfg = cfg;
  m.skeleton = resolve_skeleton(cfg.skeleton);
  validate_config(cfg, m.skeleton);
  m.adjacency = partition_adjacency(m.skeleton);

  Initializer init{m.params, Rng(Rng::mix(seed, 0))};
  const int d = cfg.channels;
  m.input_proj = {init.matrix("input_proj.weight", 2, d), init.zeros("input_proj.bias", {d})};
  m.layers.reserve(static_cast<std::size_t>(cfg.depth));
  for (int i = 0; i < cfg.depth; ++i) {
    const std::string prefix = "layer" + std::to_string(i);
    LayerIds layer;
    layer.encoder = make_encoder_params(init, prefix + ".encoder", cfg);
    layer.gcn = make_gcn_params(init, prefix + ".gcn", cfg);
    m.layers.push_back(layer);
  }
  m.output_proj = {init.matrix("output_proj.weight", d, 3), init.zeros("output_proj.bias", {3})};
  return m;
}

namespace {

EncoderNodes encoder_nodes_from_ids(const BoundModel& bound, const EncoderIds& ids,
                                    const ModelConfig& cfg) {
  const auto& p = bound.param_nodes;
  EncoderNodes n;
  n.wq = p[static_cast<std::size_t>(ids.q.w)];
  n.bq = p[static_cast<std::size_t>(ids.q.b)];
  n.wk = p[static_cast<std::size_t>(ids.k.w)];
  n.bk = p[static_cast<std::size_t>(ids.k.b)];
  n.wv = p[static_cast<std::size_t>(ids.v.w)];
  n.bv = p[static_cast<std::size_t>(ids.v.b)];
  n.wout = p[static_cast<std::size_t>(ids.out.w)];
  n.bout = p[static_cast<std::size_t>(ids.out.b)];
  n.wpos = p[static_cast<std::size_t>(ids.wpos)];
  n.ln1_g = p[static_cast<std::size_t>(ids.ln1_g)];
  n.ln1_b = p[static_cast<std::size_t>(ids.ln1_b)];
  n.ln2_g = p[static_cast<std::size_t>(ids.ln2_g)];
  n.ln2_b = p[static_cast<std::size_t>(ids.ln2_b)];
  n.fc1_w = p[static_cast<std::size_t>(ids.fc1.w)];
  n.fc1_b = p[static_cast<std::size_t>(ids.fc1.b)];
  n.fc2_w = p[static_cast<std::size_t>(ids.fc2.w)];
  n.fc2_b = p[static_cast<std::size_t>(ids.fc2.b)];
  n.num_heads = cfg.num_heads;
  n.scale_full_width = cfg.attn_scale_full_width;
  n.ln_eps = cfg.ln_eps;
  n.dropout = cfg.dropout;
  return n;
}

GcnBlockNodes gcn_nodes_from_ids(const BoundModel& bound, const GcnBlockIds& ids,
                                 const ModelConfig& cfg) {
  const auto& p = bound.param_nodes;
  auto conv = [&](const GcnBlockIds::ConvIds& c) {
    GroupedConvNodes n;
    if (c.t1 >= 0) {
      n.t1 = p[static_cast<std::size_t>(c.t1)];
      n.t2 = p[static_cast<std::size_t>(c.t2)];
      n.t3 = p[static_cast<std::size_t>(c.t3)];
      n.bias = p[static_cast<std::size_t>(c.bias)];
    }
    return n;
  };
  GcnBlockNodes n;
  n.design = cfg.gcn_design;
  n.ln_eps = cfg.ln_eps;
  n.conv_a = conv(ids.conv_a);
  n.conv_b = conv(ids.conv_b);
  if (ids.ln1_g >= 0) {
    n.ln1_g = p[static_cast<std::size_t>(ids.ln1_g)];
    n.ln1_b = p[static_cast<std::size_t>(ids.ln1_b)];
  }
  if (ids.ln2_g >= 0) {
    n.ln2_g = p[static_cast<std::size_t>(ids.ln2_g)];
    n.ln2_b = p[static_cast<std::size_t>(ids.ln2_b)];
  }
  if (ids.fc1.w >= 0) {
    n.fc1_w = p[static_cast<std::size_t>(ids.fc1.w)];
    n.fc1_b = p[static_cast<std::size_t>(ids.fc1.b)];
    n.fc2_w = p[static_cast<std::size_t>(ids.fc2.w)];
    n.fc2_b = p[static_cast<std::size_t>(ids.fc2.b)];
  }
  return n;
}

}  // namespace

BoundModel bind_model(GradTape& tape, const Model& m, bool requires_grad) {
  BoundModel bound;
  bound.param_nodes.reserve(static_cast<std::size_t>(m.params.count()));
  for (int i = 0; i < m.params.count(); ++i) {
    bound.param_nodes.push_back(tape.leaf(m.params.value(i), requires_grad));
  }
  bound.adjacency = bind_adjacency(tape, m.adjacency);
  return bound;
}

int model_forward_node(GradTape& tape, const Model& m, const BoundModel& bound, int input2d,
                       Rng* dropout_rng) {
  const Tensor& in = tape.value(input2d);
  if (in.ndim() != 2 || in.shape[0] != m.cfg.num_joints || in.shape[1] != 2) {
    throw ShapeError("forward: input " + in.shape_str() + ", expected [" +
                     std::to_string(m.cfg.num_joints) + " x 2]");
  }
  const auto& p = bound.param_nodes;
  int h = tape.add_row(tape.matmul(input2d, p[static_cast<std::size_t>(m.input_proj.w)]),
                       p[static_cast<std::size_t>(m.input_proj.b)]);
  for (const LayerIds& layer : m.layers) {
    const EncoderNodes enc = encoder_nodes_from_ids(bound, layer.encoder, m.cfg);
    h = encoder_forward_node(tape, h, enc, dropout_rng);
    const GcnBlockNodes gcn = gcn_nodes_from_ids(bound, layer.gcn, m.cfg);
    h = gcn_block_node(tape, h, bound.adjacency, gcn);
  }
  return tape.add_row(tape.matmul(h, p[static_cast<std::size_t>(m.output_proj.w)]),
                      p[static_cast<std::size_t>(m.output_proj.b)]);
}

Tensor forward(const Model& m, const Tensor& pose2d) {
  GradTape tape;
  const BoundModel bound = bind_model(tape, m, false);
  const int in = tape.leaf(pose2d, false);
  return tape.value(model_forward_node(tape, m, bound, in));
}

CountReport count_params(const Model& m) {
  CountReport report;
  for (int i = 0; i < m.params.count(); ++i) {
    const long long n = static_cast<long long>(m.params.value(i).size());
    report.items.emplace_back(m.params.name(i), n);
    report.total += n;
  }
  return report;
}

CountReport count_flops(const Model& m) {
  const long long j = m.cfg.num_joints;
  const long long d = m.cfg.channels;
  const long long r = m.cfg.mlp_ratio;
  CountReport report;
  auto item = [&](const std::string& name, long long macs) {
    report.items.emplace_back(name, macs);
    report.total += macs;
  };
  item("input_proj", j * 2 * d);
  for (int i = 0; i < m.cfg.depth; ++i) {
    const std::string prefix = "layer" + std::to_string(i);
    item(prefix + ".encoder.qkv_proj", 3 * j * d * d);
    item(prefix + ".encoder.attention", 2 * j * j * d);
    item(prefix + ".encoder.out_proj", j * d * d);
    item(prefix + ".encoder.mlp", 2 * r * j * d * d);
    switch (m.cfg.gcn_design) {
      case GcnDesign::kPrimary:
      case GcnDesign::kTwoResidual:
        item(prefix + ".gcn.filters", 6 * j * d * d);
        report.excluded_adjacency_macs += 6 * j * j * d;
        break;
      case GcnDesign::kTransformerStyle:
        item(prefix + ".gcn.filters", 3 * j * d * d);
        item(prefix + ".gcn.mlp", 2 * j * d * d);
        report.excluded_adjacency_macs += 3 * j * j * d;
        break;
      case GcnDesign::kConvNextStyle:
        item(prefix + ".gcn.filters", 3 * j * d * d);
        item(prefix + ".gcn.pointwise", 2 * j * d * d);
        report.excluded_adjacency_macs += 3 * j * j * d;
        break;
    }
  }
  item("output_proj", j * d * 3);
  return report;
}

}  // namespace poselift
