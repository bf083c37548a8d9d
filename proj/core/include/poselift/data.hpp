#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "poselift/rng.hpp"
#include "poselift/skeleton.hpp"
#include "poselift/tensor.hpp"

namespace poselift {

// One training/evaluation record: normalized 2-D keypoints paired with
// root-relative 3-D targets in millimeters.
struct PoseSample {
  Tensor pose2d;  // [J x 2], dimensionless, roughly [-1, 1]
  Tensor pose3d;  // [J x 3], millimeters, root row (0,0,0) for training data
  std::map<std::string, std::string> meta;
};

struct Dataset {
  Skeleton skeleton;
  std::vector<PoseSample> samples;
  std::string split;

  std::size_t size() const { return samples.size(); }
};

// p' = 2p/width - (1, height/width): x spans [-1, 1] across the image width
// and the aspect ratio is preserved.
Tensor normalize_2d(const Tensor& pixels, double width, double height);
// Inverse of normalize_2d.
Tensor denormalize_2d(const Tensor& normalized, double width, double height);

// Subtracts the root joint's coordinates from every joint.
Tensor root_relative_3d(const Tensor& pose3d, int root_index);

// Newline-delimited records: {"pose2d": [...2J], "pose3d": [...3J],
// "meta": {...}} per line. Record order is file order. Parse errors name the
// offending record. Prediction inputs may omit pose3d when
// require_pose3d = false (missing targets load as zeros).
Dataset load_dataset(const std::string& path, const Skeleton& skeleton,
                     bool require_pose3d = true);
void save_dataset(const Dataset& ds, const std::string& path);

// --- synthetic data -------------------------------------------------------------

struct PinholeCamera {
  double fx = 1150.0, fy = 1150.0;
  double cx = 500.0, cy = 500.0;
  int width = 1000, height = 1000;
};

// The fixed camera used by the generator.
PinholeCamera synth_camera();

// Per-edge bone lengths in millimeters: a fixed anthropomorphic table (sized
// for a roughly 1.7 m figure) indexed by edge order, wrapping for skeletons
// with more edges.
std::vector<double> synth_bone_lengths(const Skeleton& skeleton);

// Random articulated pose in camera coordinates (mm): the root lands in a
// fixed box in front of the camera and each child joint is placed at bone
// length from its parent in a random direction, following a breadth-first
// spanning tree.
Tensor synth_world_pose(Rng& rng, const Skeleton& skeleton, const std::vector<double>& bones);

// u = fx*x/z + cx, v = fy*y/z + cy per joint.
Tensor project_pinhole(const Tensor& world3d, const PinholeCamera& cam);

// Deterministic dataset: 2-D inputs are the exact pinhole projection of the
// generated pose (normalized), 3-D targets are the root-centered pose.
Dataset synth_dataset(std::uint64_t seed, int n_samples, const Skeleton& skeleton);

}  // namespace poselift
