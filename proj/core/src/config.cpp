#include "poselift/config.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "poselift/error.hpp"

namespace poselift {

using nlohmann::json;

namespace {

template <typename T>
void read_field(const json& obj, const std::string& key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

void check_known_keys(const json& obj, const std::vector<std::string>& known,
                      const std::string& section) {
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const std::string& k : known) {
      if (k == key) {
        ok = true;
        break;
      }
    }
    if (!ok) throw ConfigError("config: unknown key '" + section + key + "'");
  }
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("config: malformed JSON (") + e.what() + ")");
  }
  if (!root.is_object()) throw ConfigError("config: top level must be an object");
  check_known_keys(root, {"model", "train", "seed"}, "");

  RunConfig cfg;
  read_field(root, "seed", cfg.seed);

  if (root.contains("model")) {
    const json& m = root.at("model");
    check_known_keys(m,
                     {"num_joints", "channels", "depth", "num_heads", "mlp_ratio", "gcn_design",
                      "skeleton", "attn_scale_full_width", "dropout", "ln_eps"},
                     "model.");
    read_field(m, "num_joints", cfg.model.num_joints);
    read_field(m, "channels", cfg.model.channels);
    read_field(m, "depth", cfg.model.depth);
    read_field(m, "num_heads", cfg.model.num_heads);
    read_field(m, "mlp_ratio", cfg.model.mlp_ratio);
    if (m.contains("gcn_design")) {
      cfg.model.gcn_design = gcn_design_from_string(m.at("gcn_design").get<std::string>());
    }
    read_field(m, "skeleton", cfg.model.skeleton);
    read_field(m, "attn_scale_full_width", cfg.model.attn_scale_full_width);
    read_field(m, "dropout", cfg.model.dropout);
    read_field(m, "ln_eps", cfg.model.ln_eps);
  }
  if (root.contains("train")) {
    const json& t = root.at("train");
    check_known_keys(t,
                     {"epochs", "batch_size", "lr0", "lr_decay", "beta1", "beta2", "eps",
                      "include_root_joint", "checkpoint_every", "checkpoint_dtype",
                      "deterministic"},
                     "train.");
    read_field(t, "epochs", cfg.train.epochs);
    read_field(t, "batch_size", cfg.train.batch_size);
    read_field(t, "lr0", cfg.train.lr0);
    read_field(t, "lr_decay", cfg.train.lr_decay);
    read_field(t, "beta1", cfg.train.beta1);
    read_field(t, "beta2", cfg.train.beta2);
    read_field(t, "eps", cfg.train.eps);
    read_field(t, "include_root_joint", cfg.train.include_root_joint);
    read_field(t, "checkpoint_every", cfg.train.checkpoint_every);
    read_field(t, "checkpoint_dtype", cfg.train.checkpoint_dtype);
    read_field(t, "deterministic", cfg.train.deterministic);
  }
  cfg.train.seed = cfg.seed;
  return cfg;
}

std::string run_config_to_text(const RunConfig& cfg) {
  json root;
  root["seed"] = cfg.seed;
  json m;
  m["num_joints"] = cfg.model.num_joints;
  m["channels"] = cfg.model.channels;
  m["depth"] = cfg.model.depth;
  m["num_heads"] = cfg.model.num_heads;
  m["mlp_ratio"] = cfg.model.mlp_ratio;
  m["gcn_design"] = to_string(cfg.model.gcn_design);
  m["skeleton"] = cfg.model.skeleton;
  m["attn_scale_full_width"] = cfg.model.attn_scale_full_width;
  m["dropout"] = cfg.model.dropout;
  m["ln_eps"] = cfg.model.ln_eps;
  root["model"] = m;
  json t;
  t["epochs"] = cfg.train.epochs;
  t["batch_size"] = cfg.train.batch_size;
  t["lr0"] = cfg.train.lr0;
  t["lr_decay"] = cfg.train.lr_decay;
  t["beta1"] = cfg.train.beta1;
  t["beta2"] = cfg.train.beta2;
  t["eps"] = cfg.train.eps;
  t["include_root_joint"] = cfg.train.include_root_joint;
  t["checkpoint_every"] = cfg.train.checkpoint_every;
  t["checkpoint_dtype"] = cfg.train.checkpoint_dtype;
  t["deterministic"] = cfg.train.deterministic;
  root["train"] = t;
  return root.dump(2) + "\n";
}

std::string load_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw IoError("failed while writing '" + path + "'");
}

std::string apply_overrides(const std::string& json_text,
                            const std::vector<std::string>& dotted_assignments) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("config: malformed JSON (") + e.what() + ")");
  }
  for (const std::string& assignment : dotted_assignments) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError("override '" + assignment + "' is not of the form key.path=value");
    }
    const std::string path = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);
    json value;
    try {
      value = json::parse(raw);
      if (!value.is_primitive()) value = raw;
    } catch (const json::exception&) {
      value = raw;  // bare strings are fine
    }
    json* node = &root;
    std::istringstream keys(path);
    std::string key;
    std::vector<std::string> parts;
    while (std::getline(keys, key, '.')) {
      if (key.empty()) throw ConfigError("override '" + assignment + "' has an empty key segment");
      parts.push_back(key);
    }
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
      node = &(*node)[parts[i]];
      if (!node->is_object() && !node->is_null()) {
        throw ConfigError("override '" + assignment + "': '" + parts[i] + "' is not a section");
      }
    }
    (*node)[parts.back()] = value;
  }
  return root.dump(2) + "\n";
}

}  // namespace poselift
