#include "poselift/metrics.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "poselift/error.hpp"

namespace poselift {

using nlohmann::json;

std::vector<double> per_joint_errors(const Tensor& pred, const Tensor& gt) {
  if (!pred.same_shape(gt)) {
    throw ShapeError("per_joint_errors: shape mismatch, " + pred.shape_str() + " vs " +
                     gt.shape_str());
  }
  if (pred.ndim() != 2 || pred.shape[1] != 3) {
    throw ShapeError("per_joint_errors: expected [J x 3], got " + pred.shape_str());
  }
  std::vector<double> errors(static_cast<std::size_t>(pred.shape[0]));
  for (int i = 0; i < pred.shape[0]; ++i) {
    const double dx = pred.at(i, 0) - gt.at(i, 0);
    const double dy = pred.at(i, 1) - gt.at(i, 1);
    const double dz = pred.at(i, 2) - gt.at(i, 2);
    errors[static_cast<std::size_t>(i)] = std::sqrt(dx * dx + dy * dy + dz * dz);
  }
  return errors;
}

double mpjpe(const Tensor& pred, const Tensor& gt) {
  const std::vector<double> errors = per_joint_errors(pred, gt);
  double sum = 0.0;
  for (double e : errors) sum += e;
  return sum / static_cast<double>(errors.size());
}

double pck(std::span<const double> errors_mm, double threshold_mm) {
  if (errors_mm.empty()) throw ContractError("pck: undefined for an empty error set");
  if (threshold_mm <= 0.0) throw ContractError("pck: threshold must be positive");
  std::size_t correct = 0;
  for (double e : errors_mm) {
    if (e <= threshold_mm) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(errors_mm.size());
}

std::vector<double> AucGrid::thresholds() const {
  if (step <= 0.0 || stop < start) throw ContractError("auc: malformed threshold grid");
  std::vector<double> ts;
  for (int i = 0;; ++i) {
    const double t = start + step * i;
    if (t > stop + 1e-9) break;
    ts.push_back(t);
  }
  return ts;
}

double auc(std::span<const double> errors_mm, const AucGrid& grid) {
  if (errors_mm.empty()) throw ContractError("auc: undefined for an empty error set");
  const std::vector<double> ts = grid.thresholds();
  double sum = 0.0;
  for (double t : ts) sum += pck(errors_mm, t);
  return sum / static_cast<double>(ts.size());
}

namespace {

EvalReport report_from_errors(const std::vector<double>& pooled_joint_errors,
                              const std::vector<double>& per_pose_mpjpe,
                              const std::map<std::string, std::vector<double>>& action_mpjpe,
                              int n_samples, const EvalOptions& opts) {
  EvalReport report;
  report.options = opts;
  report.n_samples = n_samples;
  double total = 0.0;
  for (double e : pooled_joint_errors) total += e;
  report.mpjpe_mm = pooled_joint_errors.empty()
                        ? 0.0
                        : total / static_cast<double>(pooled_joint_errors.size());
  const std::vector<double>& basis = opts.per_pose ? per_pose_mpjpe : pooled_joint_errors;
  report.pck = pck(basis, opts.pck_threshold_mm);
  report.auc = auc(basis, opts.auc_grid);
  for (const auto& [action, values] : action_mpjpe) {
    double s = 0.0;
    for (double v : values) s += v;
    report.per_action_mpjpe[action] = s / static_cast<double>(values.size());
  }
  return report;
}

template <typename PredFn>
EvalReport evaluate_with(const Dataset& ds, const EvalOptions& opts, PredFn&& predict) {
  if (ds.samples.empty()) throw ContractError("evaluate: empty dataset");
  std::vector<double> pooled;
  std::vector<double> per_pose;
  std::map<std::string, std::vector<double>> action_mpjpe;
  pooled.reserve(ds.samples.size() * static_cast<std::size_t>(ds.skeleton.num_joints));
  for (const PoseSample& sample : ds.samples) {
    const Tensor pred = predict(sample);
    const std::vector<double> errors = per_joint_errors(pred, sample.pose3d);
    double sum = 0.0;
    for (double e : errors) {
      pooled.push_back(e);
      sum += e;
    }
    const double sample_mpjpe = sum / static_cast<double>(errors.size());
    per_pose.push_back(sample_mpjpe);
    const auto action = sample.meta.find("action");
    if (action != sample.meta.end()) action_mpjpe[action->second].push_back(sample_mpjpe);
  }
  return report_from_errors(pooled, per_pose, action_mpjpe,
                            static_cast<int>(ds.samples.size()), opts);
}

}  // namespace

EvalReport evaluate(const Model& model, const Dataset& ds, const EvalOptions& opts) {
  if (model.cfg.num_joints != ds.skeleton.num_joints) {
    throw ConfigError("evaluate: model expects " + std::to_string(model.cfg.num_joints) +
                      " joints, dataset has " + std::to_string(ds.skeleton.num_joints));
  }
  return evaluate_with(ds, opts, [&](const PoseSample& s) { return forward(model, s.pose2d); });
}

EvalReport evaluate_identity(const Dataset& ds, const EvalOptions& opts) {
  return evaluate_with(ds, opts, [](const PoseSample& s) { return s.pose3d; });
}

std::string report_to_text(const EvalReport& report) {
  json out;
  out["mpjpe_mm"] = report.mpjpe_mm;
  out["pck"] = report.pck;
  out["auc"] = report.auc;
  out["n_samples"] = report.n_samples;
  out["pck_threshold_mm"] = report.options.pck_threshold_mm;
  out["auc_grid_mm"] = {{"start", report.options.auc_grid.start},
                        {"stop", report.options.auc_grid.stop},
                        {"step", report.options.auc_grid.step}};
  out["pck_mode"] = report.options.per_pose ? "per_pose" : "per_joint";
  if (!report.per_action_mpjpe.empty()) {
    json actions = json::object();
    for (const auto& [k, v] : report.per_action_mpjpe) actions[k] = v;
    out["per_action_mpjpe"] = actions;
  }
  return out.dump(2) + "\n";
}

}  // namespace poselift
