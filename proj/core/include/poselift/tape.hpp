#pragma once

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "poselift/rng.hpp"
#include "poselift/tensor.hpp"

namespace poselift {

// Reverse-mode differentiation tape. Operations append nodes that hold the
// forward value; backward() walks the nodes in reverse creation order and
// accumulates exact analytic gradients. Creation order is a topological
// order by construction, and every accumulation loop is fixed, so identical
// forward passes yield bit-identical gradients.
class GradTape {
 public:
  // Leaves. Parameters are leaves with requires_grad = true; constants
  // (inputs, targets, adjacency matrices) with requires_grad = false.
  int leaf(Tensor value, bool requires_grad);

  int matmul(int a, int b);
  int add(int a, int b);
  int sub(int a, int b);
  int mul(int a, int b);  // elementwise
  int scale(int a, double s);
  int add_row(int a, int bias);  // [r x c] + bias[c]
  int transpose(int a);
  int softmax_rows(int a);
  int gelu(int a);
  int layer_norm(int x, int gamma, int beta, double eps);
  int slice_cols(int a, int begin, int count);
  int concat_cols(const std::vector<int>& parts);
  int sum_all(int a);  // -> [1 x 1]
  // Inverted-scale dropout; draws one uniform per element from rng.
  int dropout(int a, double rate, Rng& rng);

  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  // The reference is invalidated by the next op call on this tape; copy the
  // tensor when it has to outlive further graph construction.
  const Tensor& value(int id) const { return node(id).value; }
  bool requires_grad(int id) const { return node(id).requires_grad; }

  // Backpropagates from a scalar (1x1 or single-element) node. May be called
  // once per tape.
  void backward(int loss);

  // Gradient of the last backward() loss w.r.t. this node. Zero tensor of the
  // node's shape if the node is unreachable from the loss.
  Tensor grad(int id) const;

 private:
  enum class Op : int {
    kLeaf,
    kMatMul,
    kAdd,
    kSub,
    kMul,
    kScale,
    kAddRow,
    kTranspose,
    kSoftmaxRows,
    kGelu,
    kLayerNorm,
    kSliceCols,
    kConcatCols,
    kSumAll,
    kDropout,
  };

  struct Node {
    Op op = Op::kLeaf;
    int a = -1, b = -1, c = -1;
    std::vector<int> list;  // concat inputs
    double scalar = 0.0;    // scale factor / layer_norm eps
    int begin = 0, count = 0;
    Tensor value;
    Tensor aux;  // dropout mask
    Tensor grad;
    bool requires_grad = false;
  };

  const Node& node(int id) const;
  Node& node(int id);
  int push(Node n);
  void accumulate(int target, const Tensor& delta);

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

// Collects gradients for named parameter nodes after running backward from
// `loss`. Parameters that do not influence the loss map to zero tensors.
std::map<std::string, Tensor> backward_gradients(
    GradTape& tape, int loss, const std::vector<std::pair<std::string, int>>& params);

// --- gradient verification ---------------------------------------------------

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::string worst_param;
  int worst_entry = -1;
};

// Central finite-difference check. `params` point at live parameter storage;
// `eval` recomputes the scalar objective at the current parameter values;
// `analytic` holds the analytic gradient at the unperturbed point, keyed like
// `params`. Relative error uses max(|analytic|, |central|, 1e-12) as the
// denominator. Entries where both sides are at most `dead_tol` count as
// matched: a parameter the objective does not depend on compares an exact 0
// against pure rounding noise in the difference quotient, which is below
// 1e-8 for any objective of reasonable scale.
GradCheckResult finite_diff_check(
    const std::vector<std::pair<std::string, Tensor*>>& params,
    const std::function<double()>& eval, const std::map<std::string, Tensor>& analytic,
    double h, double dead_tol = 1e-8);

}  // namespace poselift
