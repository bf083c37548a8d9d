#include "poselift/params.hpp"

#include "poselift/error.hpp"

namespace poselift {

int ParamStore::add(const std::string& name, Tensor value) {
  if (index_of(name) >= 0) throw ConfigError("duplicate parameter name '" + name + "'");
  names_.push_back(name);
  values_.push_back(std::move(value));
  return count() - 1;
}

int ParamStore::index_of(const std::string& name) const {
  for (int i = 0; i < count(); ++i) {
    if (names_[static_cast<std::size_t>(i)] == name) return i;
  }
  return -1;
}

long long ParamStore::total_scalars() const {
  long long n = 0;
  for (const Tensor& t : values_) n += static_cast<long long>(t.size());
  return n;
}

}  // namespace poselift
