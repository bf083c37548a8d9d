// poselift: train, evaluate and inspect the 2D->3D pose lifting network.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "poselift/config.hpp"
#include "poselift/data.hpp"
#include "poselift/error.hpp"
#include "poselift/metrics.hpp"
#include "poselift/model.hpp"
#include "poselift/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace poselift;

namespace {

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  bool deterministic = false;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_path, "Run configuration JSON file");
  cmd->add_option("--set", opts.overrides,
                  "Dotted-key override, e.g. --set model.depth=2 (repeatable)");
  cmd->add_option("--seed", opts.seed, "Seed overriding the config value");
  cmd->add_flag("--deterministic", opts.deterministic,
                "Force fully serial execution (execution is serial regardless; "
                "the flag pins it for reproducibility runs)");
}

// Resolves file config + overrides + seed into a RunConfig and its canonical
// text. `base_text` supplies the starting JSON (a checkpoint's embedded
// config on resume/eval, "{}" otherwise).
std::pair<RunConfig, std::string> resolve_config(const CommonOptions& opts,
                                                 std::string base_text = "") {
  std::string text = base_text.empty() ? std::string("{}") : base_text;
  if (!opts.config_path.empty()) text = load_text_file(opts.config_path);
  text = apply_overrides(text, opts.overrides);
  RunConfig cfg = parse_run_config(text);
  if (opts.seed) {
    cfg.seed = *opts.seed;
    cfg.train.seed = *opts.seed;
  }
  if (opts.deterministic) cfg.train.deterministic = true;
  return {cfg, run_config_to_text(cfg)};
}

void echo_config(const std::string& text) {
  std::cout << "resolved configuration:\n" << text;
}

long long count_model_params(const ModelConfig& cfg) {
  // Structure-only count used to gate gradcheck before building anything big.
  const long long j = cfg.num_joints, d = cfg.channels, r = cfg.mlp_ratio;
  long long per_layer = j * d + 4 * d            // wpos + two layer norms
                        + 4 * (d * d + d)        // q, k, v, out
                        + (d * r * d + r * d) + (r * d * d + d);  // mlp
  switch (cfg.gcn_design) {
    case GcnDesign::kPrimary:
    case GcnDesign::kTwoResidual:
      per_layer += 2 * (3 * d * d + d);
      break;
    case GcnDesign::kTransformerStyle:
      per_layer += (3 * d * d + d) + 4 * d + 2 * (d * d + d);
      break;
    case GcnDesign::kConvNextStyle:
      per_layer += (3 * d * d + d) + 2 * d + 2 * (d * d + d);
      break;
  }
  return (2 * d + d) + cfg.depth * per_layer + (d * 3 + 3);
}

// Aggregates per-tensor entries into per-layer groups ("layer0.encoder",
// "layer0.gcn", "input_proj", ...).
std::vector<std::pair<std::string, long long>> group_items(
    const std::vector<std::pair<std::string, long long>>& items) {
  std::vector<std::pair<std::string, long long>> grouped;
  for (const auto& [name, count] : items) {
    std::string key = name;
    const auto first = name.find('.');
    if (first != std::string::npos) {
      const auto second = name.find('.', first + 1);
      key = name.substr(0, second == std::string::npos ? first : second);
    }
    if (!grouped.empty() && grouped.back().first == key) {
      grouped.back().second += count;
    } else {
      grouped.emplace_back(key, count);
    }
  }
  return grouped;
}

void print_count_report(const char* title, const CountReport& report, bool itemize) {
  std::cout << title << ": " << report.total << " (" << report.total / 1e6 << " M)\n";
  for (const auto& [name, count] : group_items(report.items)) {
    std::cout << "  " << name << ": " << count << "\n";
  }
  if (itemize) {
    std::cout << "  per tensor:\n";
    for (const auto& [name, count] : report.items) {
      std::cout << "    " << name << ": " << count << "\n";
    }
  }
  if (report.excluded_adjacency_macs > 0) {
    std::cout << "  (adjacency aggregation, constant sparse, excluded from total: "
              << report.excluded_adjacency_macs << ")\n";
  }
}

struct LoadedModel {
  RunConfig cfg;
  std::string cfg_text;
  Model model;
  TrainState state;
};

LoadedModel model_from_checkpoint(const std::string& path, const CommonOptions& opts) {
  const Checkpoint ckpt = load_checkpoint(path);
  auto [cfg, text] = resolve_config(opts, ckpt.config_text);
  LoadedModel out{cfg, text, build_model(cfg.model, cfg.seed), {}};
  apply_checkpoint(ckpt, out.model, out.state);
  return out;
}

// --- train --------------------------------------------------------------------

int cmd_train(const CommonOptions& common, const std::string& data_path,
              const std::string& val_path, const std::string& out_dir,
              const std::string& resume_path) {
  std::string base;
  Checkpoint resume_ckpt;
  if (!resume_path.empty()) {
    resume_ckpt = load_checkpoint(resume_path);
    base = resume_ckpt.config_text;
  }
  auto [cfg, cfg_text] = resolve_config(common, base);
  echo_config(cfg_text);
  validate_train_config(cfg.train);

  Model model = build_model(cfg.model, cfg.seed);
  TrainState state;
  if (!resume_path.empty()) apply_checkpoint(resume_ckpt, model, state);

  const Dataset train_set = load_dataset(data_path, model.skeleton);
  std::optional<Dataset> val_set;
  if (!val_path.empty()) val_set = load_dataset(val_path, model.skeleton);

  fs::create_directories(out_dir);
  const fs::path out(out_dir);
  write_text_file((out / "resolved_config.json").string(), cfg_text);

  std::ofstream metrics((out / "metrics.jsonl").string(),
                        resume_path.empty() ? std::ios::trunc : std::ios::app);
  if (!metrics) throw IoError("cannot open metrics log in '" + out_dir + "'");

  const std::string ckpt_path = (out / "checkpoint.ampck").string();
  const auto on_epoch = [&](const EpochRecord& rec, const TrainState& st) {
    const std::string line = epoch_record_to_text(rec);
    metrics << line << "\n";
    metrics.flush();
    std::cout << line << "\n";
    if (cfg.train.checkpoint_every > 0 && rec.epoch % cfg.train.checkpoint_every == 0) {
      char name[64];
      std::snprintf(name, sizeof(name), "checkpoint_epoch%04d.ampck", rec.epoch);
      save_checkpoint(make_checkpoint(model, st, cfg_text, cfg.train.checkpoint_dtype),
                      (out / name).string());
    }
  };

  try {
    train(model, train_set, val_set ? &*val_set : nullptr, cfg.train, state, on_epoch);
    save_checkpoint(make_checkpoint(model, state, cfg_text, cfg.train.checkpoint_dtype),
                    ckpt_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n"
              << "partial outputs in " << out_dir << ":\n"
              << "  checkpoint.ampck: "
              << (fs::exists(ckpt_path) ? "stale or incomplete" : "not written") << "\n"
              << "  metrics.jsonl: partial (" << state.epochs_done << " epochs logged)\n";
    return 1;
  }
  std::cout << "checkpoint written to " << ckpt_path << "\n";
  return 0;
}

// --- eval ---------------------------------------------------------------------

int cmd_eval(const CommonOptions& common, const std::string& ckpt_path,
             const std::string& data_path, const std::string& out_path, bool identity_test,
             const EvalOptions& eval_opts) {
  EvalReport report;
  if (identity_test) {
    auto [cfg, text] = resolve_config(common);
    echo_config(text);
    const Skeleton skeleton = resolve_skeleton(cfg.model.skeleton);
    report = evaluate_identity(load_dataset(data_path, skeleton), eval_opts);
  } else {
    if (ckpt_path.empty()) throw ConfigError("eval: --checkpoint is required (or --identity-test)");
    LoadedModel loaded = model_from_checkpoint(ckpt_path, common);
    echo_config(loaded.cfg_text);
    const Dataset ds = load_dataset(data_path, loaded.model.skeleton);
    report = evaluate(loaded.model, ds, eval_opts);
  }
  std::cout << "MPJPE: " << report.mpjpe_mm << " mm\n"
            << "PCK@" << eval_opts.pck_threshold_mm << ": " << report.pck << "\n"
            << "AUC: " << report.auc << "\n"
            << "samples: " << report.n_samples << "\n";
  if (!out_path.empty()) {
    write_text_file(out_path, report_to_text(report));
    std::cout << "report written to " << out_path << "\n";
  }
  return 0;
}

// --- predict ------------------------------------------------------------------

int cmd_predict(const CommonOptions& common, const std::string& ckpt_path,
                const std::string& data_path, const std::string& out_path) {
  LoadedModel loaded = model_from_checkpoint(ckpt_path, common);
  echo_config(loaded.cfg_text);
  Dataset ds = load_dataset(data_path, loaded.model.skeleton, /*require_pose3d=*/false);
  for (PoseSample& sample : ds.samples) {
    sample.pose3d = forward(loaded.model, sample.pose2d);
  }
  save_dataset(ds, out_path);
  std::cout << ds.samples.size() << " predictions written to " << out_path << "\n";
  return 0;
}

// --- inspect ------------------------------------------------------------------

int cmd_inspect(const CommonOptions& common, const std::string& ckpt_path, bool itemize) {
  RunConfig cfg;
  std::string text;
  Model model = [&] {
    if (!ckpt_path.empty()) {
      LoadedModel loaded = model_from_checkpoint(ckpt_path, common);
      cfg = loaded.cfg;
      text = loaded.cfg_text;
      return std::move(loaded.model);
    }
    std::tie(cfg, text) = resolve_config(common);
    return build_model(cfg.model, cfg.seed);
  }();
  echo_config(text);

  print_count_report("parameters", count_params(model), itemize);
  print_count_report("forward FLOPs (1 MAC = 1 FLOP)", count_flops(model), itemize);

  const PartitionedAdjacency& part = model.adjacency;
  std::cout << "skeleton: " << model.skeleton.num_joints << " joints, "
            << model.skeleton.edges.size() << " edges"
            << (model.skeleton.is_tree() ? " (tree)" : "") << ", root " << model.skeleton.root
            << "\nhop distances:";
  for (int h : part.hop) std::cout << " " << h;
  std::cout << "\n";
  auto nnz = [](const Tensor& t) {
    int n = 0;
    for (double x : t.data) n += x != 0.0 ? 1 : 0;
    return n;
  };
  std::cout << "partition sizes: self " << nnz(part.a1) << ", toward-root " << nnz(part.a2)
            << ", away-from-root " << nnz(part.a3) << "\n";
  if (model.skeleton.num_joints <= 8) {
    auto print_matrix = [](const char* name, const Tensor& t) {
      std::cout << name << ":\n";
      for (int i = 0; i < t.rows(); ++i) {
        std::cout << " ";
        for (int j = 0; j < t.cols(); ++j) std::cout << " " << t.at(i, j);
        std::cout << "\n";
      }
    };
    print_matrix("A1", part.a1);
    print_matrix("A2", part.a2);
    print_matrix("A3", part.a3);
  }
  return 0;
}

// --- gradcheck ------------------------------------------------------------------

int cmd_gradcheck(const CommonOptions& common, double h, long long param_limit,
                  bool corrupt_gradient) {
  // Default to the tiny configuration; --config/--set can override it.
  std::string text = R"({"model": {"num_joints": 5, "channels": 8, "depth": 1,
                        "num_heads": 2, "skeleton": "tiny5"}})";
  if (!common.config_path.empty()) text = load_text_file(common.config_path);
  text = apply_overrides(text, common.overrides);
  RunConfig cfg = parse_run_config(text);
  if (common.seed) {
    cfg.seed = *common.seed;
    cfg.train.seed = *common.seed;
  }
  const std::string cfg_text = run_config_to_text(cfg);
  echo_config(cfg_text);

  const long long structural = count_model_params(cfg.model);
  if (structural > param_limit) {
    std::cerr << "gradcheck: refusing a " << structural << "-parameter configuration (limit "
              << param_limit << "); finite differences need a tiny model, e.g. "
              << "--set model.channels=8 --set model.depth=1\n";
    return 2;
  }

  Model model = build_model(cfg.model, cfg.seed);
  // Dimensionless probe: with millimeter-scale targets the loss offset
  // swamps the difference quotient in double precision.
  Rng probe_rng(Rng::mix(cfg.seed, 2));
  Tensor input = Tensor::zeros({cfg.model.num_joints, 2});
  Tensor target = Tensor::zeros({cfg.model.num_joints, 3});
  for (double& x : input.data) x = probe_rng.uniform(-1.0, 1.0);
  for (double& x : target.data) x = probe_rng.uniform(-1.0, 1.0);

  const auto eval = [&]() {
    return mse_loss(forward(model, input), target);
  };

  GradTape tape;
  const BoundModel bound = bind_model(tape, model, true);
  const int pred = model_forward_node(tape, model, bound, tape.leaf(input, false));
  const int loss = mse_loss_node(tape, pred, tape.leaf(target, false), true, model.skeleton.root);
  std::vector<std::pair<std::string, int>> param_nodes;
  for (int i = 0; i < model.params.count(); ++i) {
    param_nodes.emplace_back(model.params.name(i), bound.param_nodes[static_cast<std::size_t>(i)]);
  }
  std::map<std::string, Tensor> analytic = backward_gradients(tape, loss, param_nodes);
  if (corrupt_gradient) analytic.begin()->second.data[0] += 1.0;

  std::vector<std::pair<std::string, Tensor*>> params;
  for (int i = 0; i < model.params.count(); ++i) {
    params.emplace_back(model.params.name(i), &model.params.value(i));
  }
  const GradCheckResult res = finite_diff_check(params, eval, analytic, h);
  const bool pass = res.max_rel_err < 1e-4;
  std::cout << "max relative error: " << res.max_rel_err << " (worst: " << res.worst_param
            << "[" << res.worst_entry << "])\n"
            << (pass ? "PASS" : "FAIL") << " (threshold 1e-4, h = " << h << ")\n";
  return pass ? 0 : 1;
}

// --- synth-data -----------------------------------------------------------------

int cmd_synth(const std::string& skeleton_name, int n, std::uint64_t seed,
              const std::string& out_path) {
  const Skeleton skeleton = resolve_skeleton(skeleton_name);
  json echo;
  echo["skeleton"] = skeleton_name;
  echo["n"] = n;
  echo["seed"] = seed;
  echo["out"] = out_path;
  std::cout << "resolved configuration:\n" << echo.dump(2) << "\n";
  Dataset ds = synth_dataset(seed, n, skeleton);
  save_dataset(ds, out_path);
  std::cout << ds.samples.size() << " samples written to " << out_path << "\n";
  return 0;
}

// --- convert --------------------------------------------------------------------

int cmd_convert(const std::string& in_path, const std::string& skeleton_name, double width,
                double height, const std::string& out_path) {
  const Skeleton skeleton = resolve_skeleton(skeleton_name);
  json echo;
  echo["skeleton"] = skeleton_name;
  echo["width"] = width;
  echo["height"] = height;
  echo["input"] = in_path;
  echo["out"] = out_path;
  std::cout << "resolved configuration:\n" << echo.dump(2) << "\n";

  std::ifstream in(in_path);
  if (!in) throw IoError("cannot open '" + in_path + "'");
  Dataset ds;
  ds.skeleton = skeleton;
  const int j = skeleton.num_joints;
  std::string line;
  int record = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++record;
    const std::string where = in_path + ": record " + std::to_string(record);
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(where + ": malformed JSON (" + e.what() + ")");
    }
    if (!rec.contains("pose2d_px") || !rec.contains("pose3d_mm")) {
      throw ParseError(where + ": needs pose2d_px and pose3d_mm fields");
    }
    auto read_flat = [&](const json& arr, int cols, const std::string& field) {
      if (!arr.is_array() || static_cast<int>(arr.size()) != j * cols) {
        throw ParseError(where + ": " + field + " must hold " + std::to_string(j * cols) +
                         " numbers");
      }
      Tensor t = Tensor::zeros({j, cols});
      for (std::size_t i = 0; i < arr.size(); ++i) t.data[i] = arr[i].get<double>();
      if (!t.all_finite()) throw ParseError(where + ": non-finite value in " + field);
      return t;
    };
    PoseSample sample;
    sample.pose2d = normalize_2d(read_flat(rec["pose2d_px"], 2, "pose2d_px"), width, height);
    sample.pose3d = root_relative_3d(read_flat(rec["pose3d_mm"], 3, "pose3d_mm"), skeleton.root);
    if (rec.contains("meta") && rec["meta"].is_object()) {
      for (const auto& [k, v] : rec["meta"].items()) {
        if (v.is_string()) sample.meta[k] = v.get<std::string>();
      }
    }
    ds.samples.push_back(std::move(sample));
  }
  save_dataset(ds, out_path);
  std::cout << ds.samples.size() << " records written to " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"poselift: 2D->3D human pose lifting with alternating transformer "
               "encoders and grouped graph convolutions"};
  app.require_subcommand(1);

  // train
  CommonOptions train_common;
  std::string train_data, train_val, train_out, train_resume;
  CLI::App* train_cmd = app.add_subcommand("train", "Train a model");
  add_common(train_cmd, train_common);
  train_cmd->add_option("--data", train_data, "Training dataset (JSONL records)")->required();
  train_cmd->add_option("--val", train_val, "Validation dataset");
  train_cmd->add_option("--out", train_out, "Output directory")->required();
  train_cmd->add_option("--resume", train_resume, "Checkpoint to resume from");

  // eval
  CommonOptions eval_common;
  std::string eval_ckpt, eval_data, eval_out;
  bool eval_identity = false;
  EvalOptions eval_opts;
  bool eval_per_pose = false;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint (MPJPE, PCK, AUC)");
  add_common(eval_cmd, eval_common);
  eval_cmd->add_option("--checkpoint", eval_ckpt, "Checkpoint file");
  eval_cmd->add_option("--data", eval_data, "Evaluation dataset")->required();
  eval_cmd->add_option("--out", eval_out, "Report output path (JSON)");
  eval_cmd->add_flag("--identity-test", eval_identity,
                     "Feed ground truth as predictions (metric self-check)");
  eval_cmd->add_option("--pck-threshold", eval_opts.pck_threshold_mm, "PCK threshold in mm");
  eval_cmd->add_option("--auc-start", eval_opts.auc_grid.start, "AUC grid start (mm)");
  eval_cmd->add_option("--auc-stop", eval_opts.auc_grid.stop, "AUC grid stop (mm)");
  eval_cmd->add_option("--auc-step", eval_opts.auc_grid.step, "AUC grid step (mm)");
  eval_cmd->add_flag("--per-pose", eval_per_pose, "PCK/AUC over per-pose MPJPE instead of joints");

  // predict
  CommonOptions predict_common;
  std::string predict_ckpt, predict_data, predict_out;
  CLI::App* predict_cmd = app.add_subcommand("predict", "Lift 2D records to 3D poses");
  add_common(predict_cmd, predict_common);
  predict_cmd->add_option("--checkpoint", predict_ckpt, "Checkpoint file")->required();
  predict_cmd->add_option("--data", predict_data, "Input records (pose2d; pose3d optional)")
      ->required();
  predict_cmd->add_option("--out", predict_out, "Output records path")->required();

  // inspect
  CommonOptions inspect_common;
  std::string inspect_ckpt;
  bool inspect_itemize = false;
  CLI::App* inspect_cmd =
      app.add_subcommand("inspect", "Report parameters, FLOPs and the skeleton partition");
  add_common(inspect_cmd, inspect_common);
  inspect_cmd->add_option("--checkpoint", inspect_ckpt, "Inspect a checkpoint's configuration");
  inspect_cmd->add_flag("--itemize", inspect_itemize, "Per-component breakdown");

  // gradcheck
  CommonOptions gradcheck_common;
  double gradcheck_h = 1e-5;
  long long gradcheck_limit = 20000;
  bool gradcheck_corrupt = false;
  CLI::App* gradcheck_cmd = app.add_subcommand(
      "gradcheck", "Verify analytic gradients against central finite differences");
  add_common(gradcheck_cmd, gradcheck_common);
  gradcheck_cmd->add_option("--step", gradcheck_h, "Finite-difference step");
  gradcheck_cmd->add_option("--param-limit", gradcheck_limit,
                            "Refuse configurations above this parameter count");
  gradcheck_cmd->add_flag("--corrupt-gradient", gradcheck_corrupt,
                          "Deliberately corrupt one gradient entry (negative control)");

  // synth-data
  std::string synth_skeleton = "h36m17", synth_out;
  int synth_n = 0;
  std::uint64_t synth_seed = 1;
  CLI::App* synth_cmd = app.add_subcommand("synth-data", "Generate a synthetic dataset");
  synth_cmd->add_option("--skeleton", synth_skeleton, "Builtin skeleton name or file");
  synth_cmd->add_option("--n", synth_n, "Number of samples")->required();
  synth_cmd->add_option("--seed", synth_seed, "Generator seed");
  synth_cmd->add_option("--out", synth_out, "Output dataset path")->required();

  // convert
  std::string convert_in, convert_skeleton = "h36m17", convert_out;
  double convert_width = 0, convert_height = 0;
  CLI::App* convert_cmd = app.add_subcommand(
      "convert", "Convert pixel-space records (pose2d_px, pose3d_mm) to dataset records");
  convert_cmd->add_option("--data", convert_in, "Input records (JSONL)")->required();
  convert_cmd->add_option("--skeleton", convert_skeleton, "Skeleton name or file");
  convert_cmd->add_option("--width", convert_width, "Image width in pixels")->required();
  convert_cmd->add_option("--height", convert_height, "Image height in pixels")->required();
  convert_cmd->add_option("--out", convert_out, "Output dataset path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_cmd->parsed()) {
      return cmd_train(train_common, train_data, train_val, train_out, train_resume);
    }
    if (eval_cmd->parsed()) {
      eval_opts.per_pose = eval_per_pose;
      return cmd_eval(eval_common, eval_ckpt, eval_data, eval_out, eval_identity, eval_opts);
    }
    if (predict_cmd->parsed()) {
      return cmd_predict(predict_common, predict_ckpt, predict_data, predict_out);
    }
    if (inspect_cmd->parsed()) {
      return cmd_inspect(inspect_common, inspect_ckpt, inspect_itemize);
    }
    if (gradcheck_cmd->parsed()) {
      return cmd_gradcheck(gradcheck_common, gradcheck_h, gradcheck_limit, gradcheck_corrupt);
    }
    if (synth_cmd->parsed()) {
      return cmd_synth(synth_skeleton, synth_n, synth_seed, synth_out);
    }
    if (convert_cmd->parsed()) {
      return cmd_convert(convert_in, convert_skeleton, convert_width, convert_height,
                         convert_out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
