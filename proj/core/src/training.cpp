#include "poselift/training.hpp"

#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "poselift/error.hpp"
#include "poselift/metrics.hpp"

namespace poselift {

using nlohmann::json;

void validate_train_config(const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw ConfigError("train config: epochs must be >= 1");
  if (cfg.batch_size < 1) throw ConfigError("train config: batch_size must be >= 1");
  if (cfg.lr0 <= 0.0) throw ConfigError("train config: lr0 must be positive");
  if (cfg.lr_decay <= 0.0 || cfg.lr_decay > 1.0) {
    throw ConfigError("train config: lr_decay must be in (0, 1], got " +
                      std::to_string(cfg.lr_decay));
  }
  if (cfg.beta1 < 0.0 || cfg.beta1 >= 1.0 || cfg.beta2 < 0.0 || cfg.beta2 >= 1.0) {
    throw ConfigError("train config: adam betas must be in [0, 1)");
  }
  if (cfg.eps <= 0.0) throw ConfigError("train config: adam eps must be positive");
  if (cfg.checkpoint_every < 0) throw ConfigError("train config: checkpoint_every must be >= 0");
  if (cfg.checkpoint_dtype != "f64" && cfg.checkpoint_dtype != "f32") {
    throw ConfigError("train config: checkpoint_dtype must be f64 or f32");
  }
}

double mse_loss(const Tensor& pred, const Tensor& gt) {
  if (!pred.same_shape(gt)) {
    throw ShapeError("mse_loss: shape mismatch, " + pred.shape_str() + " vs " + gt.shape_str());
  }
  if (pred.ndim() != 2) throw ShapeError("mse_loss: expected [J x 3], got " + pred.shape_str());
  double total = 0.0;
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    const double d = pred.data[i] - gt.data[i];
    total += d * d;
  }
  return total / static_cast<double>(pred.shape[0]);
}

int mse_loss_node(GradTape& tape, int pred, int gt, bool include_root, int root_index) {
  // Copy the shape up front: node creation below may invalidate value()
  // references.
  const std::vector<int> pred_shape = tape.value(pred).shape;
  if (pred_shape.size() != 2) {
    throw ShapeError("mse_loss: expected [J x 3], got " + shape_str(pred_shape));
  }
  int diff = tape.sub(pred, gt);
  int joints = pred_shape[0];
  if (!include_root) {
    if (joints < 2) throw ConfigError("mse_loss: cannot exclude the root of a 1-joint pose");
    Tensor mask = Tensor::full(pred_shape, 1.0);
    for (int c = 0; c < pred_shape[1]; ++c) mask.at(root_index, c) = 0.0;
    diff = tape.mul(diff, tape.leaf(mask, false));
    joints -= 1;
  }
  const int squared = tape.mul(diff, diff);
  return tape.scale(tape.sum_all(squared), 1.0 / static_cast<double>(joints));
}

double lr_at_epoch(int epoch, const TrainConfig& cfg) {
  if (epoch < 0) throw ContractError("lr_at_epoch: epoch must be >= 0");
  return cfg.lr0 * std::pow(cfg.lr_decay, epoch);
}

OptimizerState init_optimizer(const Model& model) {
  OptimizerState state;
  state.m.reserve(static_cast<std::size_t>(model.params.count()));
  state.v.reserve(static_cast<std::size_t>(model.params.count()));
  for (int i = 0; i < model.params.count(); ++i) {
    state.m.push_back(Tensor::zeros(model.params.value(i).shape));
    state.v.push_back(Tensor::zeros(model.params.value(i).shape));
  }
  return state;
}

void adam_step(ParamStore& params, const std::vector<Tensor>& grads, OptimizerState& state,
               double lr, const TrainConfig& cfg) {
  if (lr <= 0.0) throw ContractError("adam_step: lr must be positive");
  if (static_cast<int>(grads.size()) != params.count() ||
      static_cast<int>(state.m.size()) != params.count()) {
    throw ShapeError("adam_step: gradient/state count does not match parameter count");
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (int i = 0; i < params.count(); ++i) {
    Tensor& theta = params.value(i);
    const Tensor& g = grads[static_cast<std::size_t>(i)];
    if (!theta.same_shape(g)) {
      throw ShapeError("adam_step: gradient for '" + params.name(i) + "' has shape " +
                       g.shape_str() + ", parameter is " + theta.shape_str());
    }
    Tensor& m = state.m[static_cast<std::size_t>(i)];
    Tensor& v = state.v[static_cast<std::size_t>(i)];
    for (std::size_t k = 0; k < theta.data.size(); ++k) {
      const double gk = g.data[k];
      m.data[k] = cfg.beta1 * m.data[k] + (1.0 - cfg.beta1) * gk;
      v.data[k] = cfg.beta2 * v.data[k] + (1.0 - cfg.beta2) * gk * gk;
      const double mhat = m.data[k] / bc1;
      const double vhat = v.data[k] / bc2;
      theta.data[k] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

TrainResult train(Model& model, const Dataset& train_set, const Dataset* val,
                  const TrainConfig& cfg, TrainState& state, const EpochCallback& on_epoch) {
  validate_train_config(cfg);
  if (train_set.samples.empty()) throw ConfigError("train: empty dataset");
  if (train_set.skeleton.num_joints != model.cfg.num_joints) {
    throw ConfigError("train: dataset has " + std::to_string(train_set.skeleton.num_joints) +
                      " joints, model expects " + std::to_string(model.cfg.num_joints));
  }
  if (val != nullptr && val->skeleton.num_joints != model.cfg.num_joints) {
    throw ConfigError("train: validation set joint count mismatch");
  }
  if (state.opt.m.empty()) state.opt = init_optimizer(model);

  Rng rng(Rng::mix(cfg.seed, 1));
  if (!state.rng_state.empty()) rng.restore(state.rng_state);

  const int n = static_cast<int>(train_set.samples.size());
  std::vector<int> order(static_cast<std::size_t>(n));
  const int root = model.skeleton.root;

  TrainResult result;
  for (int epoch = state.epochs_done; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_at_epoch(epoch, cfg);
    std::iota(order.begin(), order.end(), 0);
    shuffle_indices(order, rng);

    double epoch_loss_sum = 0.0;
    for (int start = 0; start < n; start += cfg.batch_size) {
      const int batch = std::min(cfg.batch_size, n - start);
      GradTape tape;
      const BoundModel bound = bind_model(tape, model, true);
      int batch_loss = -1;
      for (int b = 0; b < batch; ++b) {
        const PoseSample& sample =
            train_set.samples[static_cast<std::size_t>(order[static_cast<std::size_t>(start + b)])];
        const int input = tape.leaf(sample.pose2d, false);
        const int target = tape.leaf(sample.pose3d, false);
        const int pred = model_forward_node(tape, model, bound, input,
                                            model.cfg.dropout > 0.0 ? &rng : nullptr);
        const int loss = mse_loss_node(tape, pred, target, cfg.include_root_joint, root);
        batch_loss = batch_loss < 0 ? loss : tape.add(batch_loss, loss);
      }
      batch_loss = tape.scale(batch_loss, 1.0 / static_cast<double>(batch));
      const double loss_value = tape.value(batch_loss).data[0];
      tape.backward(batch_loss);
      std::vector<Tensor> grads;
      grads.reserve(bound.param_nodes.size());
      for (int node : bound.param_nodes) grads.push_back(tape.grad(node));
      adam_step(model.params, grads, state.opt, lr, cfg);
      epoch_loss_sum += loss_value * batch;
    }

    const Dataset& val_set = val != nullptr ? *val : train_set;
    double val_mpjpe_sum = 0.0;
    for (const PoseSample& sample : val_set.samples) {
      val_mpjpe_sum += mpjpe(forward(model, sample.pose2d), sample.pose3d);
    }

    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.train_loss = epoch_loss_sum / n;
    rec.val_mpjpe = val_mpjpe_sum / static_cast<double>(val_set.samples.size());
    rec.lr = lr;
    result.log.push_back(rec);

    state.epochs_done = epoch + 1;
    state.rng_state = rng.serialize();
    if (on_epoch) on_epoch(rec, state);
  }
  return result;
}

Checkpoint make_checkpoint(const Model& model, const TrainState& state,
                           const std::string& config_text, const std::string& dtype) {
  Checkpoint ckpt;
  ckpt.config_text = config_text;
  ckpt.epoch = state.epochs_done;
  ckpt.step = state.opt.step;
  ckpt.rng_state = state.rng_state;
  ckpt.dtype = dtype;
  for (int i = 0; i < model.params.count(); ++i) {
    ckpt.tensors.emplace_back(model.params.name(i), model.params.value(i));
  }
  for (int i = 0; i < model.params.count(); ++i) {
    ckpt.tensors.emplace_back("adam.m:" + model.params.name(i),
                              state.opt.m[static_cast<std::size_t>(i)]);
  }
  for (int i = 0; i < model.params.count(); ++i) {
    ckpt.tensors.emplace_back("adam.v:" + model.params.name(i),
                              state.opt.v[static_cast<std::size_t>(i)]);
  }
  return ckpt;
}

void apply_checkpoint(const Checkpoint& ckpt, Model& model, TrainState& state) {
  state.opt = init_optimizer(model);
  state.opt.step = ckpt.step;
  state.epochs_done = static_cast<int>(ckpt.epoch);
  state.rng_state = ckpt.rng_state;

  auto assign = [&](const std::string& name, const Tensor& value) {
    std::string base = name;
    Tensor* target = nullptr;
    if (name.rfind("adam.m:", 0) == 0) {
      base = name.substr(7);
      const int idx = model.params.index_of(base);
      if (idx >= 0) target = &state.opt.m[static_cast<std::size_t>(idx)];
    } else if (name.rfind("adam.v:", 0) == 0) {
      base = name.substr(7);
      const int idx = model.params.index_of(base);
      if (idx >= 0) target = &state.opt.v[static_cast<std::size_t>(idx)];
    } else {
      const int idx = model.params.index_of(base);
      if (idx >= 0) target = &model.params.value(idx);
    }
    if (target == nullptr) {
      throw ParseError("checkpoint: unknown tensor '" + name + "' for this model configuration");
    }
    if (!target->same_shape(value)) {
      throw ParseError("checkpoint: tensor '" + name + "' has shape " + value.shape_str() +
                       ", model expects " + target->shape_str());
    }
    *target = value;
  };
  std::size_t assigned = 0;
  for (const auto& [name, value] : ckpt.tensors) {
    assign(name, value);
    ++assigned;
  }
  if (assigned != static_cast<std::size_t>(model.params.count()) * 3) {
    throw ParseError("checkpoint: holds " + std::to_string(assigned) + " tensors, model needs " +
                     std::to_string(model.params.count() * 3));
  }
}

std::string epoch_record_to_text(const EpochRecord& rec) {
  json out;
  out["epoch"] = rec.epoch;
  out["loss"] = rec.train_loss;
  out["val_mpjpe"] = rec.val_mpjpe;
  out["lr"] = rec.lr;
  return out.dump();
}

}  // namespace poselift
