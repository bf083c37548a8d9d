#include "poselift/tensor.hpp"

#include <cmath>
#include <sstream>

#include "poselift/error.hpp"

namespace poselift {

namespace {

std::size_t checked_numel(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 0) throw ShapeError("tensor shape has negative dimension " + std::to_string(d));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

void require_2d(const Tensor& t, const char* op) {
  if (t.ndim() != 2) {
    throw ShapeError(std::string(op) + ": expected 2-D tensor, got " + t.shape_str());
  }
}

}  // namespace

Tensor Tensor::zeros(std::vector<int> shape) {
  Tensor t;
  const std::size_t n = checked_numel(shape);
  t.shape = std::move(shape);
  t.data.assign(n, 0.0);
  return t;
}

Tensor Tensor::full(std::vector<int> shape, double value) {
  Tensor t = zeros(std::move(shape));
  for (double& x : t.data) x = value;
  return t;
}

Tensor Tensor::identity(int n) {
  Tensor t = zeros({n, n});
  for (int i = 0; i < n; ++i) t.at(i, i) = 1.0;
  return t;
}

Tensor Tensor::from(std::vector<int> shape, std::vector<double> values) {
  const std::size_t n = checked_numel(shape);
  if (n != values.size()) {
    throw ShapeError("tensor init: shape " + poselift::shape_str(shape) + " needs " +
                     std::to_string(n) + " values, got " + std::to_string(values.size()));
  }
  Tensor t;
  t.shape = std::move(shape);
  t.data = std::move(values);
  return t;
}

int Tensor::rows() const {
  require_2d(*this, "rows");
  return shape[0];
}

int Tensor::cols() const {
  require_2d(*this, "cols");
  return shape[1];
}

double& Tensor::at(int r, int c) {
  return data[static_cast<std::size_t>(r) * static_cast<std::size_t>(shape[1]) +
              static_cast<std::size_t>(c)];
}

double Tensor::at(int r, int c) const {
  return data[static_cast<std::size_t>(r) * static_cast<std::size_t>(shape[1]) +
              static_cast<std::size_t>(c)];
}

bool Tensor::all_finite() const {
  for (double x : data) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

std::string Tensor::shape_str() const { return poselift::shape_str(shape); }

std::string shape_str(std::span<const int> shape) {
  std::ostringstream oss;
  oss << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) oss << " x ";
    oss << shape[i];
  }
  oss << "]";
  return oss.str();
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_2d(a, "matmul");
  require_2d(b, "matmul");
  if (a.shape[1] != b.shape[0]) {
    throw ShapeError("matmul: inner dimensions disagree, " + a.shape_str() + " vs " +
                     b.shape_str());
  }
  const int m = a.shape[0], k = a.shape[1], n = b.shape[1];
  Tensor c = Tensor::zeros({m, n});
  // i-k-j order: cache friendly, and each output element still accumulates
  // over k in ascending order.
  for (int i = 0; i < m; ++i) {
    const double* arow = a.data.data() + static_cast<std::size_t>(i) * k;
    double* crow = c.data.data() + static_cast<std::size_t>(i) * n;
    for (int kk = 0; kk < k; ++kk) {
      const double av = arow[kk];
      const double* brow = b.data.data() + static_cast<std::size_t>(kk) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

Tensor transpose(const Tensor& a) {
  require_2d(a, "transpose");
  const int r = a.shape[0], c = a.shape[1];
  Tensor t = Tensor::zeros({c, r});
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) t.at(j, i) = a.at(i, j);
  return t;
}

namespace {
void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shape mismatch, " + a.shape_str() + " vs " +
                     b.shape_str());
  }
}
}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out = a;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Tensor out = a;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= b.data[i];
  return out;
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "hadamard");
  Tensor out = a;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= b.data[i];
  return out;
}

Tensor scale(const Tensor& a, double s) {
  Tensor out = a;
  for (double& x : out.data) x *= s;
  return out;
}

Tensor add_row_broadcast(const Tensor& a, const Tensor& bias) {
  require_2d(a, "add_row_broadcast");
  if (bias.ndim() != 1 || bias.shape[0] != a.shape[1]) {
    throw ShapeError("add_row_broadcast: bias " + bias.shape_str() + " does not match " +
                     a.shape_str());
  }
  Tensor out = a;
  for (int i = 0; i < a.shape[0]; ++i)
    for (int j = 0; j < a.shape[1]; ++j) out.at(i, j) += bias.data[static_cast<std::size_t>(j)];
  return out;
}

Tensor slice_cols(const Tensor& a, int begin, int count) {
  require_2d(a, "slice_cols");
  if (begin < 0 || count <= 0 || begin + count > a.shape[1]) {
    throw ShapeError("slice_cols: range [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") out of " + a.shape_str());
  }
  Tensor out = Tensor::zeros({a.shape[0], count});
  for (int i = 0; i < a.shape[0]; ++i)
    for (int j = 0; j < count; ++j) out.at(i, j) = a.at(i, begin + j);
  return out;
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const int r = parts[0].rows();
  int total = 0;
  for (const Tensor& p : parts) {
    if (p.rows() != r) {
      throw ShapeError("concat_cols: row mismatch, " + parts[0].shape_str() + " vs " +
                       p.shape_str());
    }
    total += p.cols();
  }
  Tensor out = Tensor::zeros({r, total});
  int off = 0;
  for (const Tensor& p : parts) {
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < p.cols(); ++j) out.at(i, off + j) = p.at(i, j);
    off += p.cols();
  }
  return out;
}

double sum_all(const Tensor& a) {
  double s = 0.0;
  for (double x : a.data) s += x;
  return s;
}

Tensor softmax_rows(const Tensor& m) {
  require_2d(m, "softmax_rows");
  const int r = m.shape[0], c = m.shape[1];
  if (c == 0) throw ShapeError("softmax_rows: empty rows in " + m.shape_str());
  Tensor out = Tensor::zeros({r, c});
  for (int i = 0; i < r; ++i) {
    double mx = m.at(i, 0);
    for (int j = 1; j < c; ++j) mx = std::max(mx, m.at(i, j));
    double denom = 0.0;
    for (int j = 0; j < c; ++j) {
      const double e = std::exp(m.at(i, j) - mx);
      out.at(i, j) = e;
      denom += e;
    }
    for (int j = 0; j < c; ++j) out.at(i, j) /= denom;
  }
  return out;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_pdf(double x) {
  static const double inv_sqrt_2pi = 0.3989422804014327;
  return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

double gelu_scalar(double x) { return x * normal_cdf(x); }

double gelu_grad_scalar(double x) { return normal_cdf(x) + x * normal_pdf(x); }

Tensor gelu(const Tensor& x) {
  Tensor out = x;
  for (double& v : out.data) v = gelu_scalar(v);
  return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  require_2d(x, "layer_norm");
  const int r = x.shape[0], d = x.shape[1];
  if (d < 1) throw ShapeError("layer_norm: empty rows in " + x.shape_str());
  if (gamma.ndim() != 1 || gamma.shape[0] != d || beta.ndim() != 1 || beta.shape[0] != d) {
    throw ShapeError("layer_norm: gamma " + gamma.shape_str() + " / beta " + beta.shape_str() +
                     " do not match row width " + std::to_string(d));
  }
  if (eps <= 0.0) throw ContractError("layer_norm: eps must be positive");
  Tensor out = Tensor::zeros({r, d});
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
    for (int j = 0; j < d; ++j) {
      out.at(i, j) = gamma.data[static_cast<std::size_t>(j)] * (x.at(i, j) - mean) * inv +
                     beta.data[static_cast<std::size_t>(j)];
    }
  }
  return out;
}

}  // namespace poselift
