#include "poselift/data.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "poselift/error.hpp"

namespace poselift {

using nlohmann::json;

Tensor normalize_2d(const Tensor& pixels, double width, double height) {
  if (width <= 0.0 || height <= 0.0) {
    throw ContractError("normalize_2d: image dimensions must be positive, got " +
                        std::to_string(width) + " x " + std::to_string(height));
  }
  if (pixels.ndim() != 2 || pixels.shape[1] != 2) {
    throw ShapeError("normalize_2d: expected [J x 2], got " + pixels.shape_str());
  }
  Tensor out = pixels;
  for (int i = 0; i < pixels.shape[0]; ++i) {
    out.at(i, 0) = 2.0 * pixels.at(i, 0) / width - 1.0;
    out.at(i, 1) = 2.0 * pixels.at(i, 1) / width - height / width;
  }
  return out;
}

Tensor denormalize_2d(const Tensor& normalized, double width, double height) {
  if (width <= 0.0 || height <= 0.0) {
    throw ContractError("denormalize_2d: image dimensions must be positive");
  }
  if (normalized.ndim() != 2 || normalized.shape[1] != 2) {
    throw ShapeError("denormalize_2d: expected [J x 2], got " + normalized.shape_str());
  }
  Tensor out = normalized;
  for (int i = 0; i < normalized.shape[0]; ++i) {
    out.at(i, 0) = (normalized.at(i, 0) + 1.0) * width / 2.0;
    out.at(i, 1) = (normalized.at(i, 1) + height / width) * width / 2.0;
  }
  return out;
}

Tensor root_relative_3d(const Tensor& pose3d, int root_index) {
  if (pose3d.ndim() != 2 || pose3d.shape[1] != 3) {
    throw ShapeError("root_relative_3d: expected [J x 3], got " + pose3d.shape_str());
  }
  if (root_index < 0 || root_index >= pose3d.shape[0]) {
    throw ContractError("root_relative_3d: root index " + std::to_string(root_index) +
                        " out of range [0, " + std::to_string(pose3d.shape[0]) + ")");
  }
  const double rx = pose3d.at(root_index, 0);
  const double ry = pose3d.at(root_index, 1);
  const double rz = pose3d.at(root_index, 2);
  Tensor out = pose3d;
  for (int i = 0; i < pose3d.shape[0]; ++i) {
    out.at(i, 0) -= rx;
    out.at(i, 1) -= ry;
    out.at(i, 2) -= rz;
  }
  return out;
}

namespace {

Tensor tensor_from_flat(const json& arr, int rows, int cols, const std::string& where) {
  if (!arr.is_array()) throw ParseError(where + ": expected an array of numbers");
  if (static_cast<int>(arr.size()) != rows * cols) {
    throw ParseError(where + ": has " + std::to_string(arr.size()) + " values, expected " +
                     std::to_string(rows * cols));
  }
  Tensor t = Tensor::zeros({rows, cols});
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) throw ParseError(where + ": non-numeric value at position " + std::to_string(i));
    t.data[i] = arr[i].get<double>();
    if (!std::isfinite(t.data[i])) {
      throw ParseError(where + ": non-finite value at position " + std::to_string(i));
    }
  }
  return t;
}

json flat_json(const Tensor& t) {
  json arr = json::array();
  for (double x : t.data) arr.push_back(x);
  return arr;
}

}  // namespace

Dataset load_dataset(const std::string& path, const Skeleton& skeleton, bool require_pose3d) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset file '" + path + "'");
  Dataset ds;
  ds.skeleton = skeleton;
  const int j = skeleton.num_joints;
  std::string line;
  int record = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++record;
    const std::string where = path + ": record " + std::to_string(record);
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(where + ": malformed JSON (" + e.what() + ")");
    }
    if (!rec.is_object() || !rec.contains("pose2d")) {
      throw ParseError(where + ": missing pose2d field");
    }
    PoseSample sample;
    sample.pose2d = tensor_from_flat(rec["pose2d"], j, 2, where + ": pose2d");
    if (rec.contains("pose3d")) {
      sample.pose3d = tensor_from_flat(rec["pose3d"], j, 3, where + ": pose3d");
    } else if (require_pose3d) {
      throw ParseError(where + ": missing pose3d field");
    } else {
      sample.pose3d = Tensor::zeros({j, 3});
    }
    if (rec.contains("meta")) {
      if (!rec["meta"].is_object()) throw ParseError(where + ": meta must be an object");
      for (const auto& [key, val] : rec["meta"].items()) {
        if (!val.is_string()) throw ParseError(where + ": meta." + key + " must be a string");
        sample.meta[key] = val.get<std::string>();
      }
    }
    ds.samples.push_back(std::move(sample));
  }
  return ds;
}

void save_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  for (const PoseSample& sample : ds.samples) {
    json rec;
    rec["pose2d"] = flat_json(sample.pose2d);
    rec["pose3d"] = flat_json(sample.pose3d);
    if (!sample.meta.empty()) {
      json meta = json::object();
      for (const auto& [k, v] : sample.meta) meta[k] = v;
      rec["meta"] = meta;
    }
    out << rec.dump() << "\n";
  }
  if (!out) throw IoError("failed while writing '" + path + "'");
}

PinholeCamera synth_camera() { return PinholeCamera{}; }

std::vector<double> synth_bone_lengths(const Skeleton& skeleton) {
  // Hip girdle, legs, torso, head, arms; wraps for longer edge lists.
  static const double table[] = {132.0, 442.0, 454.0, 132.0, 442.0, 454.0, 233.0, 257.0,
                                 121.0, 115.0, 151.0, 278.0, 252.0, 151.0, 278.0, 252.0};
  const std::size_t n = sizeof(table) / sizeof(table[0]);
  std::vector<double> bones(skeleton.edges.size());
  for (std::size_t i = 0; i < bones.size(); ++i) bones[i] = table[i % n];
  return bones;
}

Tensor synth_world_pose(Rng& rng, const Skeleton& skeleton, const std::vector<double>& bones) {
  if (bones.size() != skeleton.edges.size()) {
    throw ContractError("synth_world_pose: " + std::to_string(bones.size()) + " bone lengths for " +
                        std::to_string(skeleton.edges.size()) + " edges");
  }
  const int n = skeleton.num_joints;
  std::vector<std::vector<std::pair<int, int>>> adj(static_cast<std::size_t>(n));  // (nbr, edge)
  for (std::size_t e = 0; e < skeleton.edges.size(); ++e) {
    const auto& [a, b] = skeleton.edges[e];
    adj[static_cast<std::size_t>(a)].emplace_back(b, static_cast<int>(e));
    adj[static_cast<std::size_t>(b)].emplace_back(a, static_cast<int>(e));
  }
  for (auto& list : adj) std::sort(list.begin(), list.end());

  Tensor pose = Tensor::zeros({n, 3});
  pose.at(skeleton.root, 0) = rng.uniform(-250.0, 250.0);
  pose.at(skeleton.root, 1) = rng.uniform(-250.0, 250.0);
  pose.at(skeleton.root, 2) = rng.uniform(3500.0, 4500.0);

  std::vector<char> placed(static_cast<std::size_t>(n), 0);
  placed[static_cast<std::size_t>(skeleton.root)] = 1;
  std::deque<int> queue{skeleton.root};
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    for (const auto& [v, e] : adj[static_cast<std::size_t>(u)]) {
      if (placed[static_cast<std::size_t>(v)]) continue;
      placed[static_cast<std::size_t>(v)] = 1;
      // Uniform direction on the sphere.
      const double z = rng.uniform(-1.0, 1.0);
      const double phi = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double len = bones[static_cast<std::size_t>(e)];
      pose.at(v, 0) = pose.at(u, 0) + len * r * std::cos(phi);
      pose.at(v, 1) = pose.at(u, 1) + len * r * std::sin(phi);
      pose.at(v, 2) = pose.at(u, 2) + len * z;
      queue.push_back(v);
    }
  }
  return pose;
}

Tensor project_pinhole(const Tensor& world3d, const PinholeCamera& cam) {
  if (world3d.ndim() != 2 || world3d.shape[1] != 3) {
    throw ShapeError("project_pinhole: expected [J x 3], got " + world3d.shape_str());
  }
  Tensor out = Tensor::zeros({world3d.shape[0], 2});
  for (int i = 0; i < world3d.shape[0]; ++i) {
    const double z = world3d.at(i, 2);
    if (z <= 0.0) throw ContractError("project_pinhole: joint " + std::to_string(i) + " behind the camera");
    out.at(i, 0) = cam.fx * world3d.at(i, 0) / z + cam.cx;
    out.at(i, 1) = cam.fy * world3d.at(i, 1) / z + cam.cy;
  }
  return out;
}

Dataset synth_dataset(std::uint64_t seed, int n_samples, const Skeleton& skeleton) {
  if (n_samples < 1) throw ContractError("synth_dataset: need at least one sample");
  const PinholeCamera cam = synth_camera();
  const std::vector<double> bones = synth_bone_lengths(skeleton);
  Rng rng(Rng::mix(seed, 0));
  Dataset ds;
  ds.skeleton = skeleton;
  ds.split = "synth";
  ds.samples.reserve(static_cast<std::size_t>(n_samples));
  for (int i = 0; i < n_samples; ++i) {
    const Tensor world = synth_world_pose(rng, skeleton, bones);
    PoseSample sample;
    sample.pose2d = normalize_2d(project_pinhole(world, cam),
                                 static_cast<double>(cam.width), static_cast<double>(cam.height));
    sample.pose3d = root_relative_3d(world, skeleton.root);
    ds.samples.push_back(std::move(sample));
  }
  return ds;
}

}  // namespace poselift
