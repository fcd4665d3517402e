// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "o3aed/common.hpp"

namespace testutil {

/// Unique scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& hint) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("o3aed_" + hint + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Swap in a capturing warning handler for the current scope.
class CaptureWarnings {
 public:
  CaptureWarnings() : old_(o3aed::warn_handler()) {
    o3aed::warn_handler() = [this](const std::string& msg) { messages.push_back(msg); };
  }
  ~CaptureWarnings() { o3aed::warn_handler() = old_; }
  std::vector<std::string> messages;

 private:
  std::function<void(const std::string&)> old_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::size_t line_count(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::string line;
  std::size_t c = 0;
  while (std::getline(in, line)) ++c;
  return c;
}

}  // namespace testutil
