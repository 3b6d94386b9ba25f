// Copyright 2026 The critplan Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>

#include "critplan/generation.hpp"

namespace testing {

inline std::string source_dir() { return CRITPLAN_SOURCE_DIR; }

inline std::string fixture(const std::string& rel) {
  return source_dir() + "/fixtures/" + rel;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("critplan-" + tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string str() const { return path_.string(); }
  std::string operator/(const std::string& rel) const { return (path_ / rel).string(); }

 private:
  std::filesystem::path path_;
};

/// Wraps another backend and counts calls.
class CountingGenerator final : public critplan::GeneratorBackend {
 public:
  explicit CountingGenerator(const critplan::GeneratorBackend& inner) : inner_(inner) {}

  std::vector<std::string> sample(const std::string& prompt, std::size_t k, double t,
                                  std::optional<std::uint64_t> seed) const override {
    ++samples;
    return inner_.sample(prompt, k, t, seed);
  }
  std::string conclude(const std::string& prompt) const override {
    ++concludes;
    return inner_.conclude(prompt);
  }

  mutable std::atomic<int> samples{0};
  mutable std::atomic<int> concludes{0};

 private:
  const critplan::GeneratorBackend& inner_;
};

}  // namespace testing
