#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>

#include "poselift/data.hpp"
#include "poselift/error.hpp"
#include "support/test_util.hpp"

using namespace poselift;
using testutil::bit_equal;
using testutil::max_abs_diff;
using testutil::rnd_tensor;

TEST_CASE("normalize_2d fixed points") {
  const double w = 1000, h = 800;
  const Tensor center = normalize_2d(Tensor::from({1, 2}, {w / 2, h / 2}), w, h);
  CHECK(center.at(0, 0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(center.at(0, 1) == doctest::Approx(0.0).epsilon(1e-15));

  const Tensor corner = normalize_2d(Tensor::from({1, 2}, {0, 0}), w, h);
  CHECK(corner.at(0, 0) == -1.0);
  CHECK(corner.at(0, 1) == doctest::Approx(-h / w).epsilon(1e-15));

  const Tensor point = normalize_2d(Tensor::from({1, 2}, {250, 300}), 1000, 1000);
  CHECK(point.at(0, 0) == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(point.at(0, 1) == doctest::Approx(-0.4).epsilon(1e-15));

  CHECK_THROWS_AS(normalize_2d(corner, 0.0, 10.0), ContractError);
}

TEST_CASE("normalize_2d round-trips through denormalize_2d") {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const double w = rng.uniform(100, 4000), h = rng.uniform(100, 4000);
    const Tensor px = rnd_tensor(rng, {6, 2}, 0.0, 4000.0);
    const Tensor back = denormalize_2d(normalize_2d(px, w, h), w, h);
    CHECK(max_abs_diff(px, back) <= 1e-12 * 4000.0);
  }
}

TEST_CASE("root_relative_3d zeroes the root and is idempotent") {
  Rng rng(2);
  const Tensor pose = rnd_tensor(rng, {5, 3}, -900.0, 900.0);
  const Tensor centered = root_relative_3d(pose, 2);
  CHECK(centered.at(2, 0) == 0.0);
  CHECK(centered.at(2, 1) == 0.0);
  CHECK(centered.at(2, 2) == 0.0);
  CHECK(bit_equal(root_relative_3d(centered, 2), centered));
  CHECK_THROWS_AS(root_relative_3d(pose, 9), ContractError);
}

TEST_CASE("root_relative_3d preserves pairwise distances") {
  Rng rng(3);
  const Tensor pose = rnd_tensor(rng, {7, 3}, -900.0, 900.0);
  const Tensor centered = root_relative_3d(pose, 0);
  for (int i = 0; i < 7; ++i) {
    for (int j = i + 1; j < 7; ++j) {
      double before = 0.0, after = 0.0;
      for (int c = 0; c < 3; ++c) {
        before += (pose.at(i, c) - pose.at(j, c)) * (pose.at(i, c) - pose.at(j, c));
        after += (centered.at(i, c) - centered.at(j, c)) * (centered.at(i, c) - centered.at(j, c));
      }
      CHECK(std::fabs(std::sqrt(before) - std::sqrt(after)) <= 1e-12);
    }
  }
}

TEST_CASE("dataset files load, validate and round-trip") {
  testutil::TempDir tmp("data");
  const Skeleton skeleton = resolve_skeleton("tiny5");
  Dataset ds = synth_dataset(11, 3, skeleton);
  ds.samples[0].meta["action"] = "walking";
  const std::string path = tmp.file("set.jsonl");
  save_dataset(ds, path);

  const Dataset loaded = load_dataset(path, skeleton);
  REQUIRE(loaded.samples.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(bit_equal(loaded.samples[i].pose2d, ds.samples[i].pose2d));
    CHECK(bit_equal(loaded.samples[i].pose3d, ds.samples[i].pose3d));
  }
  CHECK(loaded.samples[0].meta.at("action") == "walking");
}

TEST_CASE("dataset parse errors name the record") {
  testutil::TempDir tmp("data_err");
  const Skeleton tiny = resolve_skeleton("tiny5");
  const Skeleton bigger = resolve_skeleton("h36m17");

  const std::string wrong_count = tmp.file("wrong.jsonl");
  save_dataset(synth_dataset(1, 2, tiny), wrong_count);
  CHECK_THROWS_WITH_AS(load_dataset(wrong_count, bigger), doctest::Contains("record 1"),
                       ParseError);

  const std::string bad_json = tmp.file("bad.jsonl");
  {
    std::ofstream out(bad_json);
    out << "{\"pose2d\": [0, 0]\n";
  }
  CHECK_THROWS_WITH_AS(load_dataset(bad_json, tiny), doctest::Contains("malformed"), ParseError);

  const std::string non_finite = tmp.file("nan.jsonl");
  {
    std::ofstream out(non_finite);
    out << R"({"pose2d": [0,0,0,0,0,0,0,0,0,0], "pose3d": [0,0,0,0,0,0,0,0,0,0,0,0,0,0,1e999]})"
        << "\n";
  }
  CHECK_THROWS_AS(load_dataset(non_finite, tiny), ParseError);

  CHECK_THROWS_AS(load_dataset(tmp.file("missing.jsonl"), tiny), IoError);
}

TEST_CASE("pose3d is required unless explicitly optional") {
  testutil::TempDir tmp("data_p3");
  const Skeleton tiny = resolve_skeleton("tiny5");
  const std::string path = tmp.file("inputs.jsonl");
  {
    std::ofstream out(path);
    out << R"({"pose2d": [0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0]})" << "\n";
  }
  CHECK_THROWS_WITH_AS(load_dataset(path, tiny), doctest::Contains("pose3d"), ParseError);
  const Dataset loaded = load_dataset(path, tiny, /*require_pose3d=*/false);
  REQUIRE(loaded.samples.size() == 1);
  for (double v : loaded.samples[0].pose3d.data) CHECK(v == 0.0);
}

TEST_CASE("synthetic data is deterministic in the seed") {
  const Skeleton skeleton = resolve_skeleton("h36m17");
  const Dataset a = synth_dataset(5, 10, skeleton);
  const Dataset b = synth_dataset(5, 10, skeleton);
  const Dataset c = synth_dataset(6, 10, skeleton);
  REQUIRE(a.samples.size() == 10);
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(bit_equal(a.samples[i].pose2d, b.samples[i].pose2d));
    CHECK(bit_equal(a.samples[i].pose3d, b.samples[i].pose3d));
  }
  CHECK(!bit_equal(a.samples[0].pose3d, c.samples[0].pose3d));
}

TEST_CASE("bone lengths are fixed across samples") {
  const Skeleton skeleton = resolve_skeleton("h36m17");
  const std::vector<double> bones = synth_bone_lengths(skeleton);
  const Dataset ds = synth_dataset(9, 25, skeleton);
  for (const PoseSample& sample : ds.samples) {
    for (std::size_t e = 0; e < skeleton.edges.size(); ++e) {
      const auto& [a, b] = skeleton.edges[e];
      double dist = 0.0;
      for (int c = 0; c < 3; ++c) {
        const double d = sample.pose3d.at(a, c) - sample.pose3d.at(b, c);
        dist += d * d;
      }
      CHECK(std::fabs(std::sqrt(dist) - bones[e]) <= 1e-9);
    }
  }
}

TEST_CASE("synthetic 2D inputs are the exact pinhole projection") {
  const Skeleton skeleton = resolve_skeleton("tiny5");
  const std::uint64_t seed = 21;
  const Dataset ds = synth_dataset(seed, 8, skeleton);

  // Regenerate the world poses along the same stream.
  Rng rng(Rng::mix(seed, 0));
  const std::vector<double> bones = synth_bone_lengths(skeleton);
  const PinholeCamera cam = synth_camera();
  for (const PoseSample& sample : ds.samples) {
    const Tensor world = synth_world_pose(rng, skeleton, bones);
    const Tensor projected = project_pinhole(world, cam);
    const Tensor expected_2d =
        normalize_2d(projected, static_cast<double>(cam.width), static_cast<double>(cam.height));
    CHECK(max_abs_diff(sample.pose2d, expected_2d) == 0.0);
    CHECK(bit_equal(sample.pose3d, root_relative_3d(world, skeleton.root)));
    // Reprojection residual in pixel units.
    const Tensor back = denormalize_2d(sample.pose2d, cam.width, cam.height);
    CHECK(max_abs_diff(back, projected) <= 1e-9);
  }
}

TEST_CASE("synthetic samples satisfy the record invariants") {
  const Skeleton skeleton = resolve_skeleton("h36m16");
  const Dataset ds = synth_dataset(2, 100, skeleton);
  REQUIRE(ds.samples.size() == 100);
  for (const PoseSample& s : ds.samples) {
    CHECK(s.pose2d.all_finite());
    CHECK(s.pose3d.all_finite());
    CHECK(s.pose3d.at(skeleton.root, 0) == 0.0);
    CHECK(s.pose3d.at(skeleton.root, 1) == 0.0);
    CHECK(s.pose3d.at(skeleton.root, 2) == 0.0);
    for (double v : s.pose2d.data) CHECK(std::fabs(v) < 2.0);
  }
}
