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

#ifndef FAIRJUDGE_REMOTE_BACKEND_HPP_
#define FAIRJUDGE_REMOTE_BACKEND_HPP_

#include <chrono>
#include <functional>
#include <semaphore>
#include <string>

#include <nlohmann/json.hpp>

#include "fairjudge/backend.hpp"

namespace fairjudge {

struct RemoteBackendConfig {
  /// Base URL up to and including the API version, e.g. "http://localhost:8000/v1".
  std::string endpoint;
  std::string model;
  std::string api_key;
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::seconds timeout{120};
  int max_in_flight = 4;
};

/// Client for an OpenAI-compatible `/chat/completions` endpoint.
///
/// Transport failures (connection errors, HTTP 429 and 5xx) are retried with
/// exponential backoff up to `max_attempts`; anything else fails at once.
class RemoteChatBackend : public Backend {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  explicit RemoteChatBackend(RemoteBackendConfig config);

  std::string id() const override;
  ChatResponse complete(const ChatRequest& request) override;

  /// Replaces the sleep used between retries (tests use a no-op).
  void set_sleeper(Sleeper sleeper) { sleeper_ = std::move(sleeper); }

  /// Request body sent on the wire.
  nlohmann::json wire_request(const ChatRequest& request) const;

  /// Parses a chat-completions reply. Throws ProtocolError on malformed
  /// bodies and CapabilityError when logprobs were wanted but are missing.
  static ChatResponse parse_reply(const std::string& body, bool want_logprobs);

 private:
  RemoteBackendConfig config_;
  std::string scheme_host_port_;
  std::string path_prefix_;
  Sleeper sleeper_;
  std::counting_semaphore<> in_flight_;
};

}  // namespace fairjudge

#endif  // FAIRJUDGE_REMOTE_BACKEND_HPP_
