#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace poselift {

// Dense row-major tensor of doubles. Computation is 64-bit throughout;
// 32-bit storage exists only at the checkpoint boundary.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;

  static Tensor zeros(std::vector<int> shape);
  static Tensor full(std::vector<int> shape, double value);
  static Tensor identity(int n);
  static Tensor from(std::vector<int> shape, std::vector<double> values);

  std::size_t size() const { return data.size(); }
  int ndim() const { return static_cast<int>(shape.size()); }

  // 2-D accessors; require ndim() == 2.
  int rows() const;
  int cols() const;
  double& at(int r, int c);
  double at(int r, int c) const;

  bool same_shape(const Tensor& other) const { return shape == other.shape; }
  bool all_finite() const;
  std::string shape_str() const;
};

std::string shape_str(std::span<const int> shape);

// --- elementwise / structural operations ------------------------------------
// Every operation has a fixed accumulation order, so results are
// bit-deterministic in single-threaded use.

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
// [r x c] + bias[c], broadcast over rows.
Tensor add_row_broadcast(const Tensor& a, const Tensor& bias);
Tensor slice_cols(const Tensor& a, int begin, int count);
Tensor concat_cols(std::span<const Tensor> parts);
double sum_all(const Tensor& a);

// Row-wise softmax, stabilized by subtracting each row's maximum.
Tensor softmax_rows(const Tensor& m);

// Exact GELU: x * Phi(x) with Phi the standard normal CDF (erf form).
Tensor gelu(const Tensor& x);
double gelu_scalar(double x);
double gelu_grad_scalar(double x);  // Phi(x) + x * phi(x)
double normal_cdf(double x);
double normal_pdf(double x);

// Per-row normalization over the last dimension, then affine scale/shift.
// Variance is the population variance (divide by the row width).
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double eps);

}  // namespace poselift
