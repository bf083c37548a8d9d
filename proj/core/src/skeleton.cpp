#include "poselift/skeleton.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "poselift/error.hpp"

namespace poselift {

namespace {

// Human3.6M 17-joint convention (hip root). Mirrored in core/data/h36m17.skel.
const std::string kH36m17 = R"(# Human3.6M 17-joint skeleton, hip-rooted tree
num_joints 17
root 0
name 0 hip
name 1 right_hip
name 2 right_knee
name 3 right_ankle
name 4 left_hip
name 5 left_knee
name 6 left_ankle
name 7 spine
name 8 thorax
name 9 nose
name 10 head
name 11 left_shoulder
name 12 left_elbow
name 13 left_wrist
name 14 right_shoulder
name 15 right_elbow
name 16 right_wrist
edge 0 1
edge 1 2
edge 2 3
edge 0 4
edge 4 5
edge 5 6
edge 0 7
edge 7 8
edge 8 9
edge 9 10
edge 8 11
edge 11 12
edge 12 13
edge 8 14
edge 14 15
edge 15 16
)";

// Common 16-joint convention (no nose joint). Mirrored in core/data/h36m16.skel.
const std::string kH36m16 = R"(# Human3.6M 16-joint skeleton, hip-rooted tree
num_joints 16
root 0
name 0 hip
name 1 right_hip
name 2 right_knee
name 3 right_ankle
name 4 left_hip
name 5 left_knee
name 6 left_ankle
name 7 spine
name 8 thorax
name 9 head
name 10 left_shoulder
name 11 left_elbow
name 12 left_wrist
name 13 right_shoulder
name 14 right_elbow
name 15 right_wrist
edge 0 1
edge 1 2
edge 2 3
edge 0 4
edge 4 5
edge 5 6
edge 0 7
edge 7 8
edge 8 9
edge 8 10
edge 10 11
edge 11 12
edge 8 13
edge 13 14
edge 14 15
)";

// Five-joint Y tree used by the gradient-check command.
const std::string kTiny5 = R"(# tiny 5-joint test skeleton
num_joints 5
root 0
edge 0 1
edge 1 2
edge 0 3
edge 3 4
)";

std::vector<std::vector<int>> adjacency_lists(const Skeleton& s) {
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(s.num_joints));
  for (const auto& [a, b] : s.edges) {
    adj[static_cast<std::size_t>(a)].push_back(b);
    adj[static_cast<std::size_t>(b)].push_back(a);
  }
  for (auto& nbrs : adj) std::sort(nbrs.begin(), nbrs.end());
  return adj;
}

void validate(const Skeleton& s, const std::string& source) {
  if (s.num_joints < 1) {
    throw ParseError(source + ": num_joints must be at least 1");
  }
  if (s.root < 0 || s.root >= s.num_joints) {
    throw ParseError(source + ": root " + std::to_string(s.root) + " out of range [0, " +
                     std::to_string(s.num_joints) + ")");
  }
  std::set<std::pair<int, int>> seen;
  for (const auto& [a, b] : s.edges) {
    if (a < 0 || a >= s.num_joints || b < 0 || b >= s.num_joints) {
      throw ParseError(source + ": edge (" + std::to_string(a) + ", " + std::to_string(b) +
                       ") references a joint outside [0, " + std::to_string(s.num_joints) + ")");
    }
    if (a == b) {
      throw ParseError(source + ": edge (" + std::to_string(a) + ", " + std::to_string(b) +
                       ") is a self-loop");
    }
    const auto key = std::minmax(a, b);
    if (!seen.insert(key).second) {
      throw ParseError(source + ": duplicate edge (" + std::to_string(key.first) + ", " +
                       std::to_string(key.second) + ")");
    }
  }
  if (!s.joint_names.empty() && static_cast<int>(s.joint_names.size()) != s.num_joints) {
    throw ParseError(source + ": " + std::to_string(s.joint_names.size()) +
                     " names for " + std::to_string(s.num_joints) + " joints");
  }
  // Connectivity by traversal.
  const auto adj = adjacency_lists(s);
  std::vector<char> visited(static_cast<std::size_t>(s.num_joints), 0);
  std::deque<int> queue{s.root};
  visited[static_cast<std::size_t>(s.root)] = 1;
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    for (int v : adj[static_cast<std::size_t>(u)]) {
      if (!visited[static_cast<std::size_t>(v)]) {
        visited[static_cast<std::size_t>(v)] = 1;
        queue.push_back(v);
      }
    }
  }
  for (int j = 0; j < s.num_joints; ++j) {
    if (!visited[static_cast<std::size_t>(j)]) {
      throw ParseError(source + ": joint " + std::to_string(j) +
                       " is not reachable from root " + std::to_string(s.root));
    }
  }
}

}  // namespace

Skeleton parse_skeleton(const std::string& text, const std::string& source_name) {
  Skeleton s;
  s.num_joints = -1;
  std::map<int, std::string> names;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;  // blank
    const std::string where = source_name + ":" + std::to_string(lineno);
    if (key == "num_joints") {
      if (!(ls >> s.num_joints)) throw ParseError(where + ": num_joints needs an integer");
    } else if (key == "root") {
      if (!(ls >> s.root)) throw ParseError(where + ": root needs an integer");
    } else if (key == "name") {
      int idx = 0;
      std::string label;
      if (!(ls >> idx >> label)) throw ParseError(where + ": name needs '<index> <label>'");
      names[idx] = label;
    } else if (key == "edge") {
      int a = 0, b = 0;
      if (!(ls >> a >> b)) throw ParseError(where + ": edge needs two joint indices");
      s.edges.emplace_back(a, b);
    } else {
      throw ParseError(where + ": unknown key '" + key + "'");
    }
    std::string extra;
    if (ls >> extra) throw ParseError(where + ": trailing token '" + extra + "'");
  }
  if (s.num_joints < 0) throw ParseError(source_name + ": missing num_joints");
  if (!names.empty()) {
    s.joint_names.assign(static_cast<std::size_t>(std::max(s.num_joints, 0)), "");
    for (const auto& [idx, label] : names) {
      if (idx < 0 || idx >= s.num_joints) {
        throw ParseError(source_name + ": name index " + std::to_string(idx) + " out of range");
      }
      s.joint_names[static_cast<std::size_t>(idx)] = label;
    }
  }
  validate(s, source_name);
  return s;
}

Skeleton load_skeleton(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open skeleton file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_skeleton(buf.str(), path);
}

std::vector<std::string> builtin_skeleton_names() { return {"h36m17", "h36m16", "tiny5"}; }

const std::string& builtin_skeleton_text(const std::string& name) {
  if (name == "h36m17") return kH36m17;
  if (name == "h36m16") return kH36m16;
  if (name == "tiny5") return kTiny5;
  throw ConfigError("unknown builtin skeleton '" + name + "'");
}

bool is_builtin_skeleton(const std::string& name) {
  return name == "h36m17" || name == "h36m16" || name == "tiny5";
}

Skeleton resolve_skeleton(const std::string& name_or_path) {
  if (is_builtin_skeleton(name_or_path)) {
    return parse_skeleton(builtin_skeleton_text(name_or_path), "builtin:" + name_or_path);
  }
  return load_skeleton(name_or_path);
}

std::vector<int> hop_distances(const Skeleton& s) {
  const auto adj = adjacency_lists(s);
  std::vector<int> hop(static_cast<std::size_t>(s.num_joints), -1);
  std::deque<int> queue{s.root};
  hop[static_cast<std::size_t>(s.root)] = 0;
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    for (int v : adj[static_cast<std::size_t>(u)]) {
      if (hop[static_cast<std::size_t>(v)] < 0) {
        hop[static_cast<std::size_t>(v)] = hop[static_cast<std::size_t>(u)] + 1;
        queue.push_back(v);
      }
    }
  }
  for (int j = 0; j < s.num_joints; ++j) {
    if (hop[static_cast<std::size_t>(j)] < 0) {
      throw ConfigError("hop_distances: joint " + std::to_string(j) + " unreachable");
    }
  }
  return hop;
}

PartitionedAdjacency partition_adjacency(const Skeleton& s) {
  const int n = s.num_joints;
  PartitionedAdjacency p;
  p.hop = hop_distances(s);
  p.a1 = Tensor::identity(n);
  p.a2 = Tensor::zeros({n, n});
  p.a3 = Tensor::zeros({n, n});
  for (const auto& [a, b] : s.edges) {
    // Row i aggregates the features of column j.
    auto classify = [&](int i, int j) {
      if (p.hop[static_cast<std::size_t>(j)] < p.hop[static_cast<std::size_t>(i)]) {
        p.a2.at(i, j) = 1.0;
      } else {
        // Equal hop counts only occur in cyclic graphs; those neighbors go
        // to group 3 so the three groups still add up to A.
        p.a3.at(i, j) = 1.0;
      }
    };
    classify(a, b);
    classify(b, a);
  }
  p.a = add(add(p.a1, p.a2), p.a3);
  p.ahat1 = normalize_adjacency(p.a1);
  p.ahat2 = normalize_adjacency(p.a2);
  p.ahat3 = normalize_adjacency(p.a3);
  return p;
}

Tensor normalize_adjacency(const Tensor& a) {
  if (a.ndim() != 2 || a.shape[0] != a.shape[1]) {
    throw ShapeError("normalize_adjacency: expected square matrix, got " + a.shape_str());
  }
  const int n = a.shape[0];
  std::vector<double> inv_sqrt(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    double deg = 0.0;
    for (int j = 0; j < n; ++j) {
      if (a.at(i, j) < 0.0) {
        throw ShapeError("normalize_adjacency: negative entry at (" + std::to_string(i) + ", " +
                         std::to_string(j) + ")");
      }
      deg += a.at(i, j);
    }
    inv_sqrt[static_cast<std::size_t>(i)] = deg > 0.0 ? 1.0 / std::sqrt(deg) : 0.0;
  }
  Tensor out = Tensor::zeros({n, n});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      out.at(i, j) = a.at(i, j) * inv_sqrt[static_cast<std::size_t>(i)] *
                     inv_sqrt[static_cast<std::size_t>(j)];
  return out;
}

}  // namespace poselift
