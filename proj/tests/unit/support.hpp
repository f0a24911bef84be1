#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <unistd.h>

#include "tpcl/dataset.hpp"

namespace testing {

// Fresh scratch directory, removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name) {
    static std::atomic<int> counter{0};
    const char* root = std::getenv("TPCL_TEST_TMP");
    auto base = root ? std::filesystem::path(root) : std::filesystem::temp_directory_path() / "tpcl_tests";
    path = base / (name + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

// Small synthetic spec for fast end-to-end tests.
inline tpcl::SyntheticSpec tiny_spec(std::uint64_t seed = 1) {
  tpcl::SyntheticSpec s;
  s.num_tasks = 4;
  s.samples_per_task = 60;
  s.test_samples_per_task = 30;
  s.feature_dim = 12;
  s.labels_per_task = 3;
  s.seed = seed;
  return s;
}

}  // namespace testing
