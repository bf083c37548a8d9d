#include "poselift/tape.hpp"

#include <cmath>
#include <string>

#include "poselift/error.hpp"

namespace poselift {

const GradTape::Node& GradTape::node(int id) const {
  if (id < 0 || id >= num_nodes()) {
    throw ContractError("tape: node id " + std::to_string(id) + " out of range");
  }
  return nodes_[static_cast<std::size_t>(id)];
}

GradTape::Node& GradTape::node(int id) {
  return const_cast<Node&>(static_cast<const GradTape*>(this)->node(id));
}

int GradTape::push(Node n) {
  nodes_.push_back(std::move(n));
  return num_nodes() - 1;
}

int GradTape::leaf(Tensor value, bool requires_grad) {
  Node n;
  n.op = Op::kLeaf;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  return push(std::move(n));
}

int GradTape::matmul(int a, int b) {
  Node n;
  n.op = Op::kMatMul;
  n.a = a;
  n.b = b;
  n.value = poselift::matmul(value(a), value(b));
  n.requires_grad = requires_grad(a) || requires_grad(b);
  return push(std::move(n));
}

int GradTape::add(int a, int b) {
  Node n;
  n.op = Op::kAdd;
  n.a = a;
  n.b = b;
  n.value = poselift::add(value(a), value(b));
  n.requires_grad = requires_grad(a) || requires_grad(b);
  return push(std::move(n));
}

int GradTape::sub(int a, int b) {
  Node n;
  n.op = Op::kSub;
  n.a = a;
  n.b = b;
  n.value = poselift::sub(value(a), value(b));
  n.requires_grad = requires_grad(a) || requires_grad(b);
  return push(std::move(n));
}

int GradTape::mul(int a, int b) {
  Node n;
  n.op = Op::kMul;
  n.a = a;
  n.b = b;
  n.value = poselift::hadamard(value(a), value(b));
  n.requires_grad = requires_grad(a) || requires_grad(b);
  return push(std::move(n));
}

int GradTape::scale(int a, double s) {
  Node n;
  n.op = Op::kScale;
  n.a = a;
  n.scalar = s;
  n.value = poselift::scale(value(a), s);
  n.requires_grad = requires_grad(a);
  return push(std::move(n));
}

int GradTape::add_row(int a, int bias) {
  Node n;
  n.op = Op::kAddRow;
  n.a = a;
  n.b = bias;
  n.value = poselift::add_row_broadcast(value(a), value(bias));
  n.requires_grad = requires_grad(a) || requires_grad(bias);
  return push(std::move(n));
}

int GradTape::transpose(int a) {
  Node n;
  n.op = Op::kTranspose;
  n.a = a;
  n.value = poselift::transpose(value(a));
  n.requires_grad = requires_grad(a);
  return push(std::move(n));
}

int GradTape::softmax_rows(int a) {
  Node n;
  n.op = Op::kSoftmaxRows;
  n.a = a;
  n.value = poselift::softmax_rows(value(a));
  n.requires_grad = requires_grad(a);
  return push(std::move(n));
}

int GradTape::gelu(int a) {
  Node n;
  n.op = Op::kGelu;
  n.a = a;
  n.value = poselift::gelu(value(a));
  n.requires_grad = requires_grad(a);
  return push(std::move(n));
}

int GradTape::layer_norm(int x, int gamma, int beta, double eps) {
  Node n;
  n.op = Op::kLayerNorm;
  n.a = x;
  n.b = gamma;
  n.c = beta;
  n.scalar = eps;
  n.value = poselift::layer_norm(value(x), value(gamma), value(beta), eps);
  n.requires_grad = requires_grad(x) || requires_grad(gamma) || requires_grad(beta);
  return push(std::move(n));
}

int GradTape::slice_cols(int a, int begin, int count) {
  Node n;
  n.op = Op::kSliceCols;
  n.a = a;
  n.begin = begin;
  n.count = count;
  n.value = poselift::slice_cols(value(a), begin, count);
  n.requires_grad = requires_grad(a);
  return push(std::move(n));
}

int GradTape::concat_cols(const std::vector<int>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  std::vector<Tensor> vals;
  vals.reserve(parts.size());
  bool rg = false;
  for (int p : parts) {
    vals.push_back(value(p));
    rg = rg || requires_grad(p);
  }
  Node n;
  n.op = Op::kConcatCols;
  n.list = parts;
  n.value = poselift::concat_cols(vals);
  n.requires_grad = rg;
  return push(std::move(n));
}

int GradTape::sum_all(int a) {
  Node n;
  n.op = Op::kSumAll;
  n.a = a;
  n.value = Tensor::from({1, 1}, {poselift::sum_all(value(a))});
  n.requires_grad = requires_grad(a);
  return push(std::move(n));
}

int GradTape::dropout(int a, double rate, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) {
    throw ContractError("dropout: rate must be in [0, 1), got " + std::to_string(rate));
  }
  const Tensor& x = value(a);
  Tensor mask = Tensor::zeros(x.shape);
  const double keep = 1.0 - rate;
  for (std::size_t i = 0; i < mask.data.size(); ++i) {
    mask.data[i] = rng.uniform() < keep ? 1.0 / keep : 0.0;
  }
  Node n;
  n.op = Op::kDropout;
  n.a = a;
  n.value = hadamard(x, mask);
  n.aux = std::move(mask);
  n.requires_grad = requires_grad(a);
  return push(std::move(n));
}

void GradTape::accumulate(int target, const Tensor& delta) {
  Node& t = node(target);
  if (!t.requires_grad) return;
  for (std::size_t i = 0; i < t.grad.data.size(); ++i) t.grad.data[i] += delta.data[i];
}

void GradTape::backward(int loss) {
  if (backward_done_) throw ContractError("backward: tape already differentiated");
  const Node& l = node(loss);
  if (l.value.size() != 1) {
    throw ContractError("backward: loss must be scalar, got shape " + l.value.shape_str());
  }
  backward_done_ = true;

  for (Node& n : nodes_) {
    if (n.requires_grad) n.grad = Tensor::zeros(n.value.shape);
  }
  if (!node(loss).requires_grad) return;  // no parameters reach the loss
  node(loss).grad.data[0] = 1.0;

  for (int id = loss; id >= 0; --id) {
    Node& n = node(id);
    if (!n.requires_grad) continue;
    const Tensor& g = n.grad;
    switch (n.op) {
      case Op::kLeaf:
        break;
      case Op::kMatMul: {
        if (requires_grad(n.a)) accumulate(n.a, poselift::matmul(g, poselift::transpose(value(n.b))));
        if (requires_grad(n.b)) accumulate(n.b, poselift::matmul(poselift::transpose(value(n.a)), g));
        break;
      }
      case Op::kAdd: {
        if (requires_grad(n.a)) accumulate(n.a, g);
        if (requires_grad(n.b)) accumulate(n.b, g);
        break;
      }
      case Op::kSub: {
        if (requires_grad(n.a)) accumulate(n.a, g);
        if (requires_grad(n.b)) accumulate(n.b, poselift::scale(g, -1.0));
        break;
      }
      case Op::kMul: {
        if (requires_grad(n.a)) accumulate(n.a, hadamard(g, value(n.b)));
        if (requires_grad(n.b)) accumulate(n.b, hadamard(g, value(n.a)));
        break;
      }
      case Op::kScale: {
        if (requires_grad(n.a)) accumulate(n.a, poselift::scale(g, n.scalar));
        break;
      }
      case Op::kAddRow: {
        if (requires_grad(n.a)) accumulate(n.a, g);
        if (requires_grad(n.b)) {
          Tensor db = Tensor::zeros(value(n.b).shape);
          for (int i = 0; i < g.rows(); ++i)
            for (int j = 0; j < g.cols(); ++j) db.data[static_cast<std::size_t>(j)] += g.at(i, j);
          accumulate(n.b, db);
        }
        break;
      }
      case Op::kTranspose: {
        if (requires_grad(n.a)) accumulate(n.a, poselift::transpose(g));
        break;
      }
      case Op::kSoftmaxRows: {
        if (requires_grad(n.a)) {
          const Tensor& y = n.value;
          Tensor dx = Tensor::zeros(y.shape);
          for (int i = 0; i < y.rows(); ++i) {
            double dot = 0.0;
            for (int j = 0; j < y.cols(); ++j) dot += g.at(i, j) * y.at(i, j);
            for (int j = 0; j < y.cols(); ++j) dx.at(i, j) = y.at(i, j) * (g.at(i, j) - dot);
          }
          accumulate(n.a, dx);
        }
        break;
      }
      case Op::kGelu: {
        if (requires_grad(n.a)) {
          const Tensor& x = value(n.a);
          Tensor dx = g;
          for (std::size_t i = 0; i < dx.data.size(); ++i) dx.data[i] *= gelu_grad_scalar(x.data[i]);
          accumulate(n.a, dx);
        }
        break;
      }
      case Op::kLayerNorm: {
        const Tensor& x = value(n.a);
        const Tensor& gamma = value(n.b);
        const int r = x.rows(), d = x.cols();
        const double eps = n.scalar;
        Tensor dx = Tensor::zeros(x.shape);
        Tensor dgamma = Tensor::zeros(gamma.shape);
        Tensor dbeta = Tensor::zeros(gamma.shape);
        for (int i = 0; i < r; ++i) {
          double mean = 0.0;
          for (int j = 0; j < d; ++j) mean += x.at(i, j);
          mean /= d;
          double var = 0.0;
          for (int j = 0; j < d; ++j) {
            const double c = x.at(i, j) - mean;
            var += c * c;
          }
          var /= d;
          const double inv = 1.0 / std::sqrt(var + eps);
          double gh_mean = 0.0, ghx_mean = 0.0;
          for (int j = 0; j < d; ++j) {
            const double xhat = (x.at(i, j) - mean) * inv;
            const double gh = g.at(i, j) * gamma.data[static_cast<std::size_t>(j)];
            dgamma.data[static_cast<std::size_t>(j)] += g.at(i, j) * xhat;
            dbeta.data[static_cast<std::size_t>(j)] += g.at(i, j);
            gh_mean += gh;
            ghx_mean += gh * xhat;
          }
          gh_mean /= d;
          ghx_mean /= d;
          for (int j = 0; j < d; ++j) {
            const double xhat = (x.at(i, j) - mean) * inv;
            const double gh = g.at(i, j) * gamma.data[static_cast<std::size_t>(j)];
            dx.at(i, j) = inv * (gh - gh_mean - xhat * ghx_mean);
          }
        }
        if (requires_grad(n.a)) accumulate(n.a, dx);
        if (requires_grad(n.b)) accumulate(n.b, dgamma);
        if (requires_grad(n.c)) accumulate(n.c, dbeta);
        break;
      }
      case Op::kSliceCols: {
        if (requires_grad(n.a)) {
          Tensor dx = Tensor::zeros(value(n.a).shape);
          for (int i = 0; i < g.rows(); ++i)
            for (int j = 0; j < g.cols(); ++j) dx.at(i, n.begin + j) = g.at(i, j);
          accumulate(n.a, dx);
        }
        break;
      }
      case Op::kConcatCols: {
        int off = 0;
        for (int part : n.list) {
          const int w = value(part).cols();
          if (requires_grad(part)) accumulate(part, poselift::slice_cols(g, off, w));
          off += w;
        }
        break;
      }
      case Op::kSumAll: {
        if (requires_grad(n.a)) {
          accumulate(n.a, Tensor::full(value(n.a).shape, g.data[0]));
        }
        break;
      }
      case Op::kDropout: {
        if (requires_grad(n.a)) accumulate(n.a, hadamard(g, n.aux));
        break;
      }
    }
  }
}

Tensor GradTape::grad(int id) const {
  const Node& n = node(id);
  if (n.grad.size() == n.value.size() && !n.grad.shape.empty()) return n.grad;
  return Tensor::zeros(n.value.shape);
}

std::map<std::string, Tensor> backward_gradients(
    GradTape& tape, int loss, const std::vector<std::pair<std::string, int>>& params) {
  tape.backward(loss);
  std::map<std::string, Tensor> out;
  for (const auto& [name, id] : params) out[name] = tape.grad(id);
  return out;
}

GradCheckResult finite_diff_check(const std::vector<std::pair<std::string, Tensor*>>& params,
                                  const std::function<double()>& eval,
                                  const std::map<std::string, Tensor>& analytic, double h,
                                  double dead_tol) {
  if (h <= 0.0) throw ContractError("finite_diff_check: h must be positive");
  GradCheckResult res;
  for (const auto& [name, tensor] : params) {
    const auto it = analytic.find(name);
    if (it == analytic.end()) {
      throw ContractError("finite_diff_check: no analytic gradient for '" + name + "'");
    }
    const Tensor& a = it->second;
    for (std::size_t i = 0; i < tensor->data.size(); ++i) {
      const double saved = tensor->data[i];
      tensor->data[i] = saved + h;
      const double fp = eval();
      tensor->data[i] = saved - h;
      const double fm = eval();
      tensor->data[i] = saved;
      const double central = (fp - fm) / (2.0 * h);
      if (std::fabs(a.data[i]) <= dead_tol && std::fabs(central) <= dead_tol) continue;
      const double ref = std::max({std::fabs(a.data[i]), std::fabs(central), 1e-12});
      const double rel = std::fabs(a.data[i] - central) / ref;
      if (rel > res.max_rel_err) {
        res.max_rel_err = rel;
        res.worst_param = name;
        res.worst_entry = static_cast<int>(i);
      }
    }
  }
  return res;
}

}  // namespace poselift
