#ifndef ROLEMASK_TESTS_TEST_UTIL_HPP
#define ROLEMASK_TESTS_TEST_UTIL_HPP

#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "rolemask/types.hpp"

namespace testutil {

// Self-cleaning scratch directory under the system temp path.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            (tag + "-" + std::to_string(rd()) + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const {
    return (path_ / name).string();
  }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

inline rolemask::AnnotatedInstance make_instance(
    std::string id, std::vector<std::string> tokens, std::string label,
    std::map<rolemask::RoleKind, std::vector<rolemask::Span>> roles = {}) {
  rolemask::AnnotatedInstance inst;
  inst.id = std::move(id);
  inst.tokens = std::move(tokens);
  inst.label = std::move(label);
  inst.raw_label = inst.label;
  inst.roles = std::move(roles);
  return inst;
}

inline rolemask::Corpus make_corpus(
    std::vector<rolemask::AnnotatedInstance> instances,
    const std::string& name = "test") {
  rolemask::Corpus corpus;
  corpus.name = name;
  corpus.instances = std::move(instances);
  rolemask::refresh_label_set(corpus);
  return corpus;
}

// Runs fn and returns the CorpusError/ConfigError message, or "" if nothing
// was thrown. Lets tests assert on message fragments instead of full text.
template <typename Error, typename Fn>
std::string message_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

inline bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

}  // namespace testutil

#endif
