// Acceptance suite: runs every calibration and correctness criterion at its
// stated tolerance and prints one pass/fail line per criterion.

#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "poselift/config.hpp"
#include "poselift/data.hpp"
#include "poselift/encoder.hpp"
#include "poselift/graphconv.hpp"
#include "poselift/metrics.hpp"
#include "poselift/model.hpp"
#include "poselift/training.hpp"
#include "support/oracles.hpp"
#include "support/test_util.hpp"

using namespace poselift;
using testutil::max_abs_diff;
using testutil::rnd_tensor;

namespace {

const std::string cli = POSELIFT_CLI_PATH;

Skeleton chain(int n) {
  Skeleton s;
  s.num_joints = n;
  s.root = 0;
  for (int i = 0; i + 1 < n; ++i) s.edges.emplace_back(i, i + 1);
  return s;
}

Skeleton star(int leaves) {
  Skeleton s;
  s.num_joints = leaves + 1;
  s.root = 0;
  for (int i = 1; i <= leaves; ++i) s.edges.emplace_back(0, i);
  return s;
}

// --- criterion 1: parameter-count calibration --------------------------------

bool parameter_calibration(std::string& detail) {
  const Model m = build_model(ModelConfig{}, 1);
  const long long total = count_params(m).total;
  const double rel = std::fabs(total - 18.3e6) / 18.3e6;
  detail = std::to_string(total) + " parameters, " + std::to_string(rel * 100.0) +
           "% from 18.3M";
  return rel <= 0.03;
}

// --- criterion 2: FLOP calibration --------------------------------------------

bool flop_calibration(std::string& detail) {
  const Model m = build_model(ModelConfig{}, 1);
  const long long total = count_flops(m).total;
  const double rel = std::fabs(total - 312.2e6) / 312.2e6;
  detail = std::to_string(total) + " MACs, " + std::to_string(rel * 100.0) + "% from 312.2M";
  return rel <= 0.03;
}

// --- criterion 3: gradient correctness ----------------------------------------

bool gradient_correctness(std::string& detail) {
  // The command itself enforces the 1e-4 gate on the tiny config.
  const testutil::RunResult r = testutil::run(cli + " gradcheck --seed 1");
  const bool cli_ok = r.exit_code == 0;
  detail = cli_ok ? "cmd_gradcheck exit 0" : "cmd_gradcheck exit " + std::to_string(r.exit_code);

  // Independent in-process check at the same tolerance.
  ModelConfig cfg;
  cfg.num_joints = 5;
  cfg.channels = 8;
  cfg.depth = 1;
  cfg.num_heads = 2;
  cfg.skeleton = "tiny5";
  Model model = build_model(cfg, 1);
  Rng probe(Rng::mix(1, 2));
  Tensor input = rnd_tensor(probe, {5, 2});
  Tensor target = rnd_tensor(probe, {5, 3});
  const auto eval = [&] { return mse_loss(forward(model, input), target); };
  GradTape tape;
  const BoundModel bound = bind_model(tape, model, true);
  const int pred = model_forward_node(tape, model, bound, tape.leaf(input, false));
  const int loss = mse_loss_node(tape, pred, tape.leaf(target, false), true, model.skeleton.root);
  std::vector<std::pair<std::string, int>> nodes;
  std::vector<std::pair<std::string, Tensor*>> params;
  for (int i = 0; i < model.params.count(); ++i) {
    nodes.emplace_back(model.params.name(i), bound.param_nodes[static_cast<std::size_t>(i)]);
    params.emplace_back(model.params.name(i), &model.params.value(i));
  }
  const auto grads = backward_gradients(tape, loss, nodes);
  const GradCheckResult res = finite_diff_check(params, eval, grads, 1e-5);
  detail += ", max rel err " + std::to_string(res.max_rel_err);
  return cli_ok && res.max_rel_err < 1e-4;
}

// --- criterion 4: grouped conv oracle equivalence ------------------------------

bool oracle_equivalence(std::string& detail) {
  Rng rng(4);
  double worst = 0.0;
  const std::vector<Skeleton> skeletons = {chain(3), star(4), resolve_skeleton("h36m16"),
                                           resolve_skeleton("h36m17")};
  for (const Skeleton& s : skeletons) {
    const PartitionedAdjacency part = partition_adjacency(s);
    for (int trial = 0; trial < 100; ++trial) {
      const int din = 1 + rng.uniform_int(6);
      const int dout = 1 + rng.uniform_int(6);
      GroupedConvWeights w;
      w.theta1 = rnd_tensor(rng, {din, dout});
      w.theta2 = rnd_tensor(rng, {din, dout});
      w.theta3 = rnd_tensor(rng, {din, dout});
      w.bias = rnd_tensor(rng, {dout});
      const Tensor x = rnd_tensor(rng, {s.num_joints, din});
      worst = std::max(worst, max_abs_diff(grouped_gconv(x, part, w),
                                           oracle::brute_grouped_gconv(x, s, w)));
    }
  }
  detail = "max |impl - oracle| = " + std::to_string(worst) + " over 400 instances";
  return worst <= 1e-12;
}

// --- criterion 5: partition invariants ------------------------------------------

bool partition_invariants(std::string& detail) {
  for (const std::string name : {"h36m17", "h36m16"}) {
    const Skeleton s = resolve_skeleton(name);
    const PartitionedAdjacency p = partition_adjacency(s);
    if (!testutil::bit_equal(add(add(p.a1, p.a2), p.a3), p.a)) {
      detail = name + ": A1+A2+A3 != A";
      return false;
    }
    if (!testutil::bit_equal(p.a1, Tensor::identity(s.num_joints))) {
      detail = name + ": A1 != I";
      return false;
    }
    if (s.is_tree() && !testutil::bit_equal(p.a2, transpose(p.a3))) {
      detail = name + ": A2 != A3^T";
      return false;
    }
  }
  detail = "exact on both bundled skeletons";
  return true;
}

// --- criterion 6: permutation equivariance ---------------------------------------

bool permutation_equivariance(std::string& detail) {
  Rng rng(6);
  const int joints = 7, d = 12;
  EncoderWeights w;
  w.wq = rnd_tensor(rng, {d, d});
  w.bq = rnd_tensor(rng, {d});
  w.wk = rnd_tensor(rng, {d, d});
  w.bk = rnd_tensor(rng, {d});
  w.wv = rnd_tensor(rng, {d, d});
  w.bv = rnd_tensor(rng, {d});
  w.wout = rnd_tensor(rng, {d, d});
  w.bout = rnd_tensor(rng, {d});
  w.wpos = Tensor::zeros({joints, d});
  w.ln1_gamma = Tensor::full({d}, 1.0);
  w.ln1_beta = Tensor::zeros({d});
  w.ln2_gamma = Tensor::full({d}, 1.0);
  w.ln2_beta = Tensor::zeros({d});
  w.fc1_w = rnd_tensor(rng, {d, 2 * d});
  w.fc1_b = rnd_tensor(rng, {2 * d});
  w.fc2_w = rnd_tensor(rng, {2 * d, d});
  w.fc2_b = rnd_tensor(rng, {d});
  w.num_heads = 3;

  const Tensor z = rnd_tensor(rng, {joints, d});
  const Tensor base = msa(z, w);
  auto permute_rows = [](const Tensor& x, const std::vector<int>& perm) {
    Tensor out = Tensor::zeros(x.shape);
    for (int i = 0; i < x.rows(); ++i)
      for (int j = 0; j < x.cols(); ++j)
        out.at(i, j) = x.at(perm[static_cast<std::size_t>(i)], j);
    return out;
  };
  double worst = 0.0;
  std::vector<int> perm(static_cast<std::size_t>(joints));
  for (int trial = 0; trial < 20; ++trial) {
    for (int i = 0; i < joints; ++i) perm[static_cast<std::size_t>(i)] = i;
    shuffle_indices(perm, rng);
    worst = std::max(worst, max_abs_diff(msa(permute_rows(z, perm), w), permute_rows(base, perm)));
  }

  // Negative control: a distinct positional embedding must break equivariance.
  for (int i = 0; i < joints; ++i)
    for (int c = 0; c < d; ++c) w.wpos.at(i, c) = 0.3 * (i + 1);
  std::vector<int> swap01(static_cast<std::size_t>(joints));
  for (int i = 0; i < joints; ++i) swap01[static_cast<std::size_t>(i)] = i;
  std::swap(swap01[0], swap01[1]);
  const double violation = max_abs_diff(encoder_forward(permute_rows(z, swap01), w),
                                        permute_rows(encoder_forward(z, w), swap01));
  detail = "msa drift " + std::to_string(worst) + " over 20 permutations; Wpos violation " +
           std::to_string(violation);
  return worst <= 1e-10 && violation > 1e-3;
}

// --- criterion 7: overfit learnability -------------------------------------------

bool overfit_learnability(std::string& detail) {
  ModelConfig cfg;
  cfg.num_joints = 17;
  cfg.channels = 64;
  cfg.depth = 2;
  cfg.num_heads = 4;
  cfg.skeleton = "h36m17";
  Model model = build_model(cfg, 3);
  const Dataset data = synth_dataset(3, 64, model.skeleton);

  double initial_loss = 0.0;
  for (const PoseSample& s : data.samples) {
    initial_loss += mse_loss(forward(model, s.pose2d), s.pose3d);
  }
  initial_loss /= static_cast<double>(data.samples.size());

  TrainConfig tc;
  tc.epochs = 500;  // 64 samples / batch 16 -> 4 steps per epoch, 2000 steps
  tc.batch_size = 16;
  tc.lr0 = 6e-3;
  tc.lr_decay = 0.995;
  tc.seed = 3;
  TrainState state;
  const TrainResult result = train(model, data, nullptr, tc, state);
  const long long steps = state.opt.step;

  double final_loss = 0.0, final_mpjpe = 0.0;
  for (const PoseSample& s : data.samples) {
    const Tensor pred = forward(model, s.pose2d);
    final_loss += mse_loss(pred, s.pose3d);
    final_mpjpe += mpjpe(pred, s.pose3d);
  }
  final_loss /= static_cast<double>(data.samples.size());
  final_mpjpe /= static_cast<double>(data.samples.size());

  const double reduction = 1.0 - final_loss / initial_loss;
  detail = std::to_string(steps) + " steps, MSE " + std::to_string(initial_loss) + " -> " +
           std::to_string(final_loss) + " (" + std::to_string(reduction * 100.0) +
           "% drop), train MPJPE " + std::to_string(final_mpjpe) + " mm";
  return steps <= 2000 && reduction >= 0.99 && final_mpjpe <= 5.0 && !result.log.empty();
}

// --- criterion 8: metric oracles ---------------------------------------------------

bool metric_oracles(std::string& detail) {
  Rng rng(8);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> errors(1 + rng.uniform_int(40));
    for (double& e : errors) e = rng.uniform(0.0, 400.0);
    int correct = 0;
    for (double e : errors) correct += e <= 150.0 ? 1 : 0;
    const double brute_pck = static_cast<double>(correct) / static_cast<double>(errors.size());
    double brute_auc = 0.0;
    int grid = 0;
    for (double t = 5.0; t <= 150.0 + 1e-9; t += 5.0) {
      int c = 0;
      for (double e : errors) c += e <= t ? 1 : 0;
      brute_auc += static_cast<double>(c) / static_cast<double>(errors.size());
      ++grid;
    }
    brute_auc /= grid;
    worst = std::max(worst, std::fabs(pck(errors, 150.0) - brute_pck));
    worst = std::max(worst, std::fabs(auc(errors) - brute_auc));
  }
  // mpjpe against the direct norm sum.
  for (int trial = 0; trial < 1000; ++trial) {
    const Tensor a = rnd_tensor(rng, {9, 3}, -700.0, 700.0);
    const Tensor b = rnd_tensor(rng, {9, 3}, -700.0, 700.0);
    double direct = 0.0;
    for (int i = 0; i < 9; ++i) {
      double sq = 0.0;
      for (int c = 0; c < 3; ++c) sq += (a.at(i, c) - b.at(i, c)) * (a.at(i, c) - b.at(i, c));
      direct += std::sqrt(sq);
    }
    direct /= 9.0;
    worst = std::max(worst, std::fabs(mpjpe(a, b) - direct));
  }

  // Fixed examples.
  Tensor gt = Tensor::zeros({4, 3});
  Tensor pred = Tensor::zeros({4, 3});
  for (int i = 0; i < 4; ++i) {
    pred.at(i, 0) = 3.0;
    pred.at(i, 1) = 4.0;
  }
  const bool fixed = std::fabs(mpjpe(pred, gt) - 5.0) <= 1e-12 &&
                     pck(std::vector<double>{100.0, 200.0}, 150.0) == 0.5 &&
                     std::fabs(auc(std::vector<double>{75.0}) - 16.0 / 30.0) <= 1e-15;
  detail = "max oracle gap " + std::to_string(worst) + ", fixed examples " +
           (fixed ? "ok" : "WRONG");
  return worst <= 1e-9 && fixed;
}

// --- criterion 9: determinism and resume --------------------------------------------

bool determinism(std::string& detail) {
  testutil::TempDir tmp("acc_det");
  const std::string data = tmp.file("train.jsonl");
  if (testutil::run(cli + " synth-data --skeleton tiny5 --n 16 --seed 2 --out " + data)
          .exit_code != 0) {
    detail = "synth-data failed";
    return false;
  }
  const std::string overrides =
      " --set model.num_joints=5 --set model.channels=16 --set model.depth=1"
      " --set model.num_heads=2 --set model.skeleton=tiny5 --set train.batch_size=4 --seed 21";
  const std::string base = cli + " train --deterministic --data " + data + overrides;

  if (testutil::run(base + " --set train.epochs=4 --out " + tmp.file("a")).exit_code != 0 ||
      testutil::run(base + " --set train.epochs=4 --out " + tmp.file("b")).exit_code != 0) {
    detail = "train run failed";
    return false;
  }
  const bool identical = testutil::read_file(tmp.file("a") + "/checkpoint.ampck") ==
                         testutil::read_file(tmp.file("b") + "/checkpoint.ampck");

  if (testutil::run(base + " --set train.epochs=2 --out " + tmp.file("half")).exit_code != 0 ||
      testutil::run(base + " --set train.epochs=4 --out " + tmp.file("resumed") + " --resume " +
                    tmp.file("half") + "/checkpoint.ampck")
              .exit_code != 0) {
    detail = "resume run failed";
    return false;
  }
  const bool resumed_equal = testutil::read_file(tmp.file("a") + "/checkpoint.ampck") ==
                             testutil::read_file(tmp.file("resumed") + "/checkpoint.ampck");
  detail = std::string("rerun byte-identical: ") + (identical ? "yes" : "NO") +
           ", resumed == uninterrupted: " + (resumed_equal ? "yes" : "NO");
  return identical && resumed_equal;
}

// --- criterion 10: ablation surface ---------------------------------------------------

bool ablation_surface(std::string& detail) {
  // Tiny builds: shape and gradient checks per design.
  for (const GcnDesign design : {GcnDesign::kPrimary, GcnDesign::kTwoResidual,
                                 GcnDesign::kTransformerStyle, GcnDesign::kConvNextStyle}) {
    ModelConfig cfg;
    cfg.num_joints = 5;
    cfg.channels = 8;
    cfg.depth = 1;
    cfg.num_heads = 2;
    cfg.skeleton = "tiny5";
    cfg.gcn_design = design;
    Model model = build_model(cfg, 7);
    Rng rng(7);
    Tensor input = rnd_tensor(rng, {5, 2});
    Tensor target = rnd_tensor(rng, {5, 3});
    const Tensor out = forward(model, input);
    if (out.shape != std::vector<int>{5, 3} || !out.all_finite()) {
      detail = to_string(design) + ": bad forward shape";
      return false;
    }
    const auto eval = [&] { return mse_loss(forward(model, input), target); };
    GradTape tape;
    const BoundModel bound = bind_model(tape, model, true);
    const int pred = model_forward_node(tape, model, bound, tape.leaf(input, false));
    const int loss =
        mse_loss_node(tape, pred, tape.leaf(target, false), true, model.skeleton.root);
    std::vector<std::pair<std::string, int>> nodes;
    std::vector<std::pair<std::string, Tensor*>> params;
    for (int i = 0; i < model.params.count(); ++i) {
      nodes.emplace_back(model.params.name(i), bound.param_nodes[static_cast<std::size_t>(i)]);
      params.emplace_back(model.params.name(i), &model.params.value(i));
    }
    const auto grads = backward_gradients(tape, loss, nodes);
    const GradCheckResult res = finite_diff_check(params, eval, grads, 1e-5);
    if (res.max_rel_err >= 1e-4) {
      detail = to_string(design) + ": gradcheck " + std::to_string(res.max_rel_err);
      return false;
    }
  }

  // Full-scale counts: the primary design must exceed the transformer-style
  // block.
  long long primary = 0, transformer = 0;
  std::string counts;
  for (const GcnDesign design : {GcnDesign::kPrimary, GcnDesign::kTwoResidual,
                                 GcnDesign::kTransformerStyle, GcnDesign::kConvNextStyle}) {
    ModelConfig cfg;
    cfg.gcn_design = design;
    const long long total = count_params(build_model(cfg, 1)).total;
    counts += to_string(design) + "=" + std::to_string(total) + " ";
    if (design == GcnDesign::kPrimary) primary = total;
    if (design == GcnDesign::kTransformerStyle) transformer = total;
  }
  detail = counts + "; primary > transformer_style: " +
           (primary > transformer ? "yes" : "NO");
  return primary > transformer;
}

struct Criterion {
  int number;
  std::string name;
  std::function<bool(std::string&)> fn;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "parameter-count calibration (18.3M +/- 3%)", parameter_calibration},
      {2, "FLOP calibration (312.2M +/- 3%, MAC convention)", flop_calibration},
      {3, "gradient correctness (tiny config, rel err < 1e-4)", gradient_correctness},
      {4, "grouped conv matches brute-force oracle (1e-12)", oracle_equivalence},
      {5, "partition invariants (A1+A2+A3=A, A1=I, A2=A3^T)", partition_invariants},
      {6, "msa permutation equivariance + Wpos negative control", permutation_equivariance},
      {7, "overfit learnability (>=99% MSE drop, MPJPE <= 5)", overfit_learnability},
      {8, "metric oracles (mpjpe/pck/auc, 1e-9)", metric_oracles},
      {9, "determinism (byte-identical checkpoints, exact resume)", determinism},
      {10, "ablation surface (4 designs, param direction)", ablation_surface},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    std::string detail;
    bool ok = false;
    try {
      ok = c.fn(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    std::printf("[%s] criterion %d: %s | %s\n", ok ? "PASS" : "FAIL", c.number, c.name.c_str(),
                detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
  }
  if (failures > 0) {
    std::printf("%d criterion(s) failed\n", failures);
    return 1;
  }
  std::printf("all %zu criteria passed\n", criteria.size());
  return 0;
}
