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


// Writes a synthetic dataset with uniformly drawn human scores, for trying
// the toolkit against the simulated judge.

#include <CLI11.hpp>

#include <iostream>

#include "fairjudge/error.hpp"
#include "fairjudge/simulated.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic evaluation dataset", "fairjudge-synth"};
  fairjudge::SyntheticDatasetSpec spec;
  std::string out;
  app.add_option("--out", out, "Output JSON path")->required();
  app.add_option("--name", spec.name);
  app.add_option("--items", spec.n_items)->check(CLI::PositiveNumber);
  app.add_option("--candidates", spec.n_candidates)->check(CLI::Range(2, 1000));
  app.add_option("--aspect", spec.aspects, "Aspect name (repeatable)");
  app.add_option("--seed", spec.seed);
  CLI11_PARSE(app, argc, argv);
  try {
    fairjudge::save_dataset(fairjudge::make_synthetic_dataset(spec), out);
  } catch (const fairjudge::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.exit_code());
  }
  return 0;
}
