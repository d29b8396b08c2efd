// Copyright 2026 The fairjudge Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef FAIRJUDGE_TESTS_TEST_SUPPORT_HPP_
#define FAIRJUDGE_TESTS_TEST_SUPPORT_HPP_

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <unistd.h>

#include "fairjudge/model.hpp"

namespace fairjudge::testing {

/// Removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("fairjudge-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
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

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// One item "d0" with candidates c0..c{n-1}; human score of ci is `scores[i]`.
inline Dataset small_dataset(const std::vector<double>& scores,
                             const std::string& aspect = "coherence") {
  Dataset ds;
  ds.name = "small";
  AspectSpec spec;
  spec.name = aspect;
  spec.seed_instruction = {aspect + "-seed", "Which summary has better " + aspect + "?", aspect,
                           std::nullopt, 0};
  ds.aspects.push_back(spec);
  EvalItem item;
  item.content.id = "d0";
  item.content.source_text = "The source.";
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const std::string id = "c" + std::to_string(i);
    item.content.candidates.push_back({id, "Candidate text " + std::to_string(i)});
    item.aspect_scores[aspect][id] = scores[i];
  }
  ds.items.push_back(item);
  return ds;
}

}  // namespace fairjudge::testing

#endif  // FAIRJUDGE_TESTS_TEST_SUPPORT_HPP_
