#pragma once

#include <string>
#include <utility>
#include <vector>

#include "poselift/tensor.hpp"

namespace poselift {

// Undirected, connected joint graph with a designated root (the hip).
struct Skeleton {
  int num_joints = 0;
  std::vector<std::pair<int, int>> edges;
  int root = 0;
  std::vector<std::string> joint_names;  // empty or num_joints entries

  bool is_tree() const { return static_cast<int>(edges.size()) == num_joints - 1; }
};

// Self-loop-augmented adjacency split into the three neighbor groups:
//   group 1: the joint itself (A1 = I)
//   group 2: neighbors with a smaller hop count to the root
//   group 3: neighbors with a larger (or, in cyclic graphs, equal) hop count
// with each group's symmetrically normalized form.
struct PartitionedAdjacency {
  Tensor a;                   // adjacency + I
  Tensor a1, a2, a3;          // binary group matrices, a1 + a2 + a3 == a
  Tensor ahat1, ahat2, ahat3; // normalized
  std::vector<int> hop;       // hop distance to root per joint
};

// Parses the skeleton description grammar:
//   # comment
//   num_joints <int>
//   root <int>
//   name <joint-index> <label>     (optional)
//   edge <a> <b>                   (one undirected edge per line)
// Validation errors name the offending line or element.
Skeleton parse_skeleton(const std::string& text, const std::string& source_name = "<string>");
Skeleton load_skeleton(const std::string& path);

// Bundled skeleton descriptions ("h36m17", "h36m16", "tiny5").
std::vector<std::string> builtin_skeleton_names();
const std::string& builtin_skeleton_text(const std::string& name);
bool is_builtin_skeleton(const std::string& name);
// Resolves a builtin name or a filesystem path.
Skeleton resolve_skeleton(const std::string& name_or_path);

// Breadth-first hop count from the root to every joint; hop[root] = 0.
std::vector<int> hop_distances(const Skeleton& s);

PartitionedAdjacency partition_adjacency(const Skeleton& s);

// D^{-1/2} A D^{-1/2} with D the row-degree diagonal of A, applied on both
// sides. Zero degrees invert to zero (pseudo-inverse convention), so
// zero-degree rows and columns stay exactly zero.
Tensor normalize_adjacency(const Tensor& a);

}  // namespace poselift
