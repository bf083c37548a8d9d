#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "poselift/tensor.hpp"

namespace poselift {

// Serialized training state. Layout:
//   bytes 0..7    magic "PLCKPT01"
//   bytes 8..15   little-endian u64 header length H
//   bytes 16..    UTF-8 JSON header (format version, run config text, epoch,
//                 step, RNG state, payload dtype, tensor directory with
//                 names/shapes/offsets, FNV-1a 64 digest of the payload)
//   then          raw little-endian tensor payload, directory order
// Payload dtype "f64" is lossless and the default; "f32" halves the file at
// the cost of rounding each value to single precision on save.
struct Checkpoint {
  int format_version = 1;
  std::string config_text;  // run config JSON
  std::vector<std::pair<std::string, Tensor>> tensors;
  long long epoch = 0;
  long long step = 0;
  std::string rng_state;
  std::string dtype = "f64";
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
// Verifies magic, version, sizes and digest; errors name the failure.
Checkpoint load_checkpoint(const std::string& path);

std::uint64_t fnv1a64(const unsigned char* data, std::size_t size);

}  // namespace poselift
