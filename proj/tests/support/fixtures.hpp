#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "core/config.hpp"

namespace pico::testing {

namespace fs = std::filesystem;

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("pico_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(path_ / name, std::ios::binary) << text;
    return path_ / name;
  }

 private:
  fs::path path_;
};

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline EnvConfig make_env(const fs::path& root, const std::string& system = "desk",
                          const NetworkModel& model = default_network_model()) {
  EnvConfig env;
  env.system_name = system;
  env.topology.name = system;
  env.topology.groups = 2;
  env.topology.nodes_per_group = 4;
  env.topology.ranks_per_node = 2;
  env.network_model = model;
  env.output_root = root / "results";
  return env;
}

inline TestConfig make_test(CollectiveKind c, std::vector<AlgorithmId> algs,
                            std::vector<int> ranks, SizeRange sizes, Backend backend) {
  TestConfig t;
  t.collective = c;
  t.algorithms = std::move(algs);
  t.ranks = std::move(ranks);
  t.sizes = sizes;
  t.backend = backend;
  t.iterations = 3;
  t.warmup = 1;
  return t;
}

// Every regular file below `dir`, relative and sorted.
inline std::vector<std::string> tree(const fs::path& dir) {
  std::vector<std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), dir).generic_string());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace pico::testing
