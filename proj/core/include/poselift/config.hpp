#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "poselift/model.hpp"
#include "poselift/training.hpp"

namespace poselift {

// The full run configuration behind every CLI command. One seed drives all
// randomness: model initialization and the training data order derive
// independent streams from it.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  std::uint64_t seed = 1;
};

// Strict JSON parsing: unknown keys are configuration errors. Parsing an
// empty object yields the defaults above (the full-size operating point).
RunConfig parse_run_config(const std::string& json_text);
// Canonical serialization (sorted keys, stable float round-trip); parsing the
// output reproduces the config exactly.
std::string run_config_to_text(const RunConfig& cfg);

std::string load_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

// Applies dotted-key overrides ("model.depth=2", "train.lr0=1e-3") on top of
// config JSON text. Values parse as JSON scalars, falling back to strings.
std::string apply_overrides(const std::string& json_text,
                            const std::vector<std::string>& dotted_assignments);

}  // namespace poselift
