#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "poselift/checkpoint.hpp"
#include "poselift/data.hpp"
#include "poselift/model.hpp"
#include "poselift/tape.hpp"

namespace poselift {

struct TrainConfig {
  int epochs = 50;
  int batch_size = 128;
  double lr0 = 2.5e-5;
  double lr_decay = 0.98;  // per-epoch exponential factor
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 1;
  // The root target is (0,0,0); with false the root row is masked out of the
  // loss and the divisor drops to J-1.
  bool include_root_joint = true;
  int checkpoint_every = 0;  // epochs; 0 = only at the end
  std::string checkpoint_dtype = "f64";
  bool deterministic = true;  // execution is serial either way; kept explicit
};

void validate_train_config(const TrainConfig& cfg);

// Mean over joints of the squared Euclidean distance (squared, unlike MPJPE).
double mse_loss(const Tensor& pred, const Tensor& gt);
int mse_loss_node(GradTape& tape, int pred, int gt, bool include_root, int root_index);

// lr0 * decay^epoch.
double lr_at_epoch(int epoch, const TrainConfig& cfg);

struct OptimizerState {
  std::vector<Tensor> m, v;  // aligned with the model's ParamStore
  long long step = 0;        // completed Adam steps
};

OptimizerState init_optimizer(const Model& model);

// Standard bias-corrected Adam update over every parameter, fixed order.
void adam_step(ParamStore& params, const std::vector<Tensor>& grads, OptimizerState& state,
               double lr, const TrainConfig& cfg);

struct EpochRecord {
  int epoch = 0;  // 1-based, completed
  double train_loss = 0.0;
  double val_mpjpe = 0.0;
  double lr = 0.0;
};

// Mutable training progress; everything needed to resume exactly.
struct TrainState {
  OptimizerState opt;
  int epochs_done = 0;
  std::string rng_state;  // empty until training starts
};

struct TrainResult {
  std::vector<EpochRecord> log;
};

using EpochCallback = std::function<void(const EpochRecord&, const TrainState&)>;

// Seeded shuffled mini-batches; forward, MSE loss, backward, Adam per batch;
// per-epoch training loss and validation MPJPE (on `val`, or on the training
// set when val is null). Resumes from state.epochs_done when nonzero.
TrainResult train(Model& model, const Dataset& train_set, const Dataset* val,
                  const TrainConfig& cfg, TrainState& state,
                  const EpochCallback& on_epoch = {});

// --- checkpoint glue ---------------------------------------------------------

Checkpoint make_checkpoint(const Model& model, const TrainState& state,
                           const std::string& config_text, const std::string& dtype = "f64");
// Restores parameters and optimizer state in place; the model must have been
// built from the same configuration (names and shapes must match).
void apply_checkpoint(const Checkpoint& ckpt, Model& model, TrainState& state);

std::string epoch_record_to_text(const EpochRecord& rec);  // one JSON line

}  // namespace poselift
