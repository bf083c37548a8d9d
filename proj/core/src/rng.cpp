#include "poselift/rng.hpp"

#include <cmath>
#include <sstream>

#include "poselift/error.hpp"

namespace poselift {

double Rng::normal() {
  for (;;) {
    const double u = uniform(-1.0, 1.0);
    const double v = uniform(-1.0, 1.0);
    const double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) {
      return u * std::sqrt(-2.0 * std::log(s) / s);
    }
  }
}

int Rng::uniform_int(int n) {
  if (n <= 0) throw ContractError("uniform_int: n must be positive");
  const std::uint64_t un = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % un + 1) % un;
  for (;;) {
    const std::uint64_t r = next_u64();
    if (r <= limit) return static_cast<int>(r % un);
  }
}

std::string Rng::serialize() const {
  std::ostringstream oss;
  oss << engine_;
  return oss.str();
}

void Rng::restore(const std::string& state) {
  std::istringstream iss(state);
  iss >> engine_;
  if (iss.fail()) throw ParseError("Rng::restore: malformed engine state");
}

std::uint64_t Rng::mix(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void shuffle_indices(std::vector<int>& v, Rng& rng) {
  for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
    const int j = rng.uniform_int(i + 1);
    std::swap(v[static_cast<std::size_t>(i)], v[static_cast<std::size_t>(j)]);
  }
}

}  // namespace poselift
