#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "poselift/tensor.hpp"

namespace poselift {

// Ordered, named parameter registry. Creation order fixes the initialization
// draw order, the optimizer update order, and the checkpoint layout.
class ParamStore {
 public:
  int add(const std::string& name, Tensor value);
  int index_of(const std::string& name) const;  // -1 if absent

  int count() const { return static_cast<int>(values_.size()); }
  const std::string& name(int i) const { return names_[static_cast<std::size_t>(i)]; }
  Tensor& value(int i) { return values_[static_cast<std::size_t>(i)]; }
  const Tensor& value(int i) const { return values_[static_cast<std::size_t>(i)]; }

  long long total_scalars() const;

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
};

}  // namespace poselift
