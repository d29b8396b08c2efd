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

// Text-model backends and the content-addressed response cache.

#ifndef FAIRJUDGE_BACKEND_HPP_
#define FAIRJUDGE_BACKEND_HPP_

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

namespace fairjudge {

struct ChatMessage {
  std::string role;
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  int max_tokens = 1;
  bool want_label_logprobs = false;
  int top_logprobs_k = 0;
  // Distinguishes repeated draws of an otherwise identical sampled request.
  // Part of the cache key; forwarded as the endpoint's `seed` when sampling.
  std::uint64_t seed = 0;

  bool operator==(const ChatRequest&) const = default;
};

/// Throws PreconditionError if the request breaks its invariants.
void validate(const ChatRequest& request);

/// Canonical serialization; the cache digest is computed over its dump.
nlohmann::json canonical_json(const ChatRequest& request);

struct ChatResponse {
  std::string text;
  /// token -> log-probability of the first generated token, when requested.
  std::optional<std::map<std::string, double>> first_token_logprobs;

  bool operator==(const ChatResponse&) const = default;
};

nlohmann::json to_json(const ChatResponse& response);
ChatResponse response_from_json(const nlohmann::json& j);

/// A text model. Implementations must be safe to call from several threads.
class Backend {
 public:
  virtual ~Backend() = default;
  /// Identifies the model behind the backend; part of every cache key.
  virtual std::string id() const = 0;
  virtual ChatResponse complete(const ChatRequest& request) = 0;
};

struct CacheKey {
  std::string backend_id;
  std::string digest;

  static CacheKey of(const std::string& backend_id, const ChatRequest& request);
  std::string str() const { return digest; }
  bool operator==(const CacheKey&) const = default;
};

/// In-memory response cache, optionally mirrored to a directory with one
/// `<digest>.json` file per entry so several processes can share it.
/// Last writer wins on identical keys. No expiry.
class ResponseCache {
 public:
  ResponseCache() = default;
  explicit ResponseCache(std::filesystem::path directory);

  std::optional<ChatResponse> get(const CacheKey& key);
  void put(const CacheKey& key, const ChatResponse& response);
  std::size_t size() const;

 private:
  std::optional<std::filesystem::path> directory_;
  mutable std::mutex mutex_;
  std::unordered_map<std::string, nlohmann::json> entries_;
};

/// Serves repeated requests from a ResponseCache and forwards misses.
class CachedBackend : public Backend {
 public:
  CachedBackend(std::shared_ptr<Backend> inner,
                std::shared_ptr<ResponseCache> cache);

  std::string id() const override { return inner_->id(); }
  ChatResponse complete(const ChatRequest& request) override;

  std::uint64_t hits() const { return hits_; }
  std::uint64_t misses() const { return misses_; }

 private:
  std::shared_ptr<Backend> inner_;
  std::shared_ptr<ResponseCache> cache_;
  std::atomic<std::uint64_t> hits_{0};
  std::atomic<std::uint64_t> misses_{0};
};

/// Wraps a callable. Used for scripted paraphrasers and tests.
class FunctionBackend : public Backend {
 public:
  using Fn = std::function<ChatResponse(const ChatRequest&)>;
  FunctionBackend(std::string id, Fn fn) : id_(std::move(id)), fn_(std::move(fn)) {}

  std::string id() const override { return id_; }
  ChatResponse complete(const ChatRequest& request) override { return fn_(request); }

 private:
  std::string id_;
  Fn fn_;
};

/// Replays a fixed list of completions in call order, cycling at the end.
std::shared_ptr<Backend> make_scripted_backend(std::string id,
                                               std::vector<std::string> responses);

}  // namespace fairjudge

#endif  // FAIRJUDGE_BACKEND_HPP_
