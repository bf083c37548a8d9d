#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "poselift/data.hpp"
#include "poselift/model.hpp"
#include "poselift/tensor.hpp"

namespace poselift {

// Mean per-joint position error: (1/J) sum_i ||pred_i - gt_i||_2, in the
// input unit (millimeters for real data). Euclidean distance, not squared.
double mpjpe(const Tensor& pred, const Tensor& gt);

// Per-joint Euclidean errors for one pose.
std::vector<double> per_joint_errors(const Tensor& pred, const Tensor& gt);

// Fraction of errors <= threshold. The boundary counts as correct.
double pck(std::span<const double> errors_mm, double threshold_mm);

struct AucGrid {
  double start = 5.0, stop = 150.0, step = 5.0;
  std::vector<double> thresholds() const;
};

// Mean of pck over the threshold grid (default 5..150 mm in steps of 5).
double auc(std::span<const double> errors_mm, const AucGrid& grid = {});

struct EvalOptions {
  double pck_threshold_mm = 150.0;
  AucGrid auc_grid;
  // false: pool per-joint errors across the whole set (default).
  // true: use one MPJPE value per pose as the error sample.
  bool per_pose = false;
};

struct EvalReport {
  double mpjpe_mm = 0.0;
  double pck = 0.0;
  double auc = 0.0;
  int n_samples = 0;
  std::map<std::string, double> per_action_mpjpe;  // keyed by meta "action"
  EvalOptions options;
};

EvalReport evaluate(const Model& model, const Dataset& ds, const EvalOptions& opts = {});
// Feeds the ground truth through the metrics as if it were the prediction.
EvalReport evaluate_identity(const Dataset& ds, const EvalOptions& opts = {});

std::string report_to_text(const EvalReport& report);  // JSON

}  // namespace poselift
