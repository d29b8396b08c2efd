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

#ifndef FAIRJUDGE_CLI_HPP_
#define FAIRJUDGE_CLI_HPP_

#include <ostream>
#include <string>
#include <vector>

namespace fairjudge {

/// Entry point behind the `fairjudge` binary. Returns the process exit code
/// (0 ok, 1 internal, 2 config/validation, 3 backend, 4 analysis undefined).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fairjudge

#endif  // FAIRJUDGE_CLI_HPP_
