#pragma once

#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "poselift/rng.hpp"
#include "poselift/tensor.hpp"

namespace testutil {

inline poselift::Tensor rnd_tensor(poselift::Rng& rng, std::vector<int> shape, double lo = -1.0,
                                   double hi = 1.0) {
  poselift::Tensor t = poselift::Tensor::zeros(std::move(shape));
  for (double& x : t.data) x = rng.uniform(lo, hi);
  return t;
}

inline bool bit_equal(const poselift::Tensor& a, const poselift::Tensor& b) {
  if (a.shape != b.shape) return false;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    if (a.data[i] != b.data[i]) return false;
  }
  return true;
}

inline double max_abs_diff(const poselift::Tensor& a, const poselift::Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    m = std::max(m, std::fabs(a.data[i] - b.data[i]));
  }
  return m;
}

// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("poselift_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

// Runs a shell command capturing stdout/stderr.
inline RunResult run(const std::string& cmd) {
  TempDir capture("capture");
  const std::string out_path = capture.file("out.txt");
  const std::string err_path = capture.file("err.txt");
  const int status = std::system((cmd + " > " + out_path + " 2> " + err_path).c_str());
  RunResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  auto slurp = [](const std::string& p) {
    std::ifstream in(p);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
  };
  result.out = slurp(out_path);
  result.err = slurp(err_path);
  return result;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace testutil
