#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <iterator>
#include <random>
#include <string>
#include <tuple>

#include <unistd.h>

#include "kgalign/kg.hpp"

namespace kgalign::testing {

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("kgalign_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

using Edge = std::tuple<std::string, std::string, std::string>;

// Graph from short entity names. Without explicit attributes every head gets
// an empty `note` literal, which satisfies a >= 1 but never seeds a match.
inline KnowledgeGraph make_graph(std::initializer_list<Edge> edges,
                                 std::initializer_list<Edge> attrs = {}) {
  KnowledgeGraphBuilder b;
  for (const auto& [h, r, t] : edges) b.add_relation(h, r, t);
  for (const auto& [e, a, v] : attrs) b.add_attribute(e, a, v);
  if (attrs.size() == 0) {
    for (const auto& [h, r, t] : edges) b.add_attribute(h, "note", "");
  }
  return std::move(b).finish();
}

}  // namespace kgalign::testing
