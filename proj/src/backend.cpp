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

#include "fairjudge/backend.hpp"

#include <fstream>
#include <sstream>
#include <thread>

#include "fairjudge/error.hpp"
#include "fairjudge/util.hpp"

namespace fairjudge {

using json = nlohmann::json;

void validate(const ChatRequest& request) {
  if (request.messages.empty()) {
    throw PreconditionError("chat request has no messages");
  }
  if (request.temperature < 0) {
    throw PreconditionError("chat request temperature must be >= 0");
  }
  if (request.want_label_logprobs && request.top_logprobs_k < 1) {
    throw PreconditionError("chat request wants logprobs but top_logprobs_k < 1");
  }
}

nlohmann::json canonical_json(const ChatRequest& request) {
  json messages = json::array();
  for (const auto& m : request.messages) {
    messages.push_back({{"role", m.role}, {"content", m.content}});
  }
  // nlohmann::json objects keep keys sorted, so dump() is canonical.
  return json{{"messages", std::move(messages)},
              {"temperature", request.temperature},
              {"max_tokens", request.max_tokens},
              {"want_label_logprobs", request.want_label_logprobs},
              {"top_logprobs_k", request.top_logprobs_k},
              {"seed", request.seed}};
}

nlohmann::json to_json(const ChatResponse& response) {
  json j{{"text", response.text}};
  j["first_token_logprobs"] =
      response.first_token_logprobs ? json(*response.first_token_logprobs) : json();
  return j;
}

ChatResponse response_from_json(const nlohmann::json& j) {
  ChatResponse out;
  out.text = j.at("text").get<std::string>();
  if (auto it = j.find("first_token_logprobs"); it != j.end() && !it->is_null()) {
    out.first_token_logprobs = it->get<std::map<std::string, double>>();
  }
  return out;
}

CacheKey CacheKey::of(const std::string& backend_id, const ChatRequest& request) {
  json envelope{{"backend", backend_id}, {"request", canonical_json(request)}};
  return CacheKey{backend_id, sha256_hex(envelope.dump())};
}

ResponseCache::ResponseCache(std::filesystem::path directory)
    : directory_(std::move(directory)) {
  std::filesystem::create_directories(*directory_);
}

std::optional<ChatResponse> ResponseCache::get(const CacheKey& key) {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    if (auto it = entries_.find(key.digest); it != entries_.end()) {
      return response_from_json(it->second);
    }
  }
  if (!directory_) return std::nullopt;
  std::ifstream in(*directory_ / (key.digest + ".json"));
  if (!in) return std::nullopt;
  json stored;
  try {
    stored = json::parse(in);
  } catch (const json::parse_error&) {
    // A torn write from a concurrent process; treat as a miss.
    return std::nullopt;
  }
  if (stored.value("backend", std::string{}) != key.backend_id) return std::nullopt;
  ChatResponse response = response_from_json(stored.at("response"));
  std::lock_guard<std::mutex> lock(mutex_);
  entries_.emplace(key.digest, stored.at("response"));
  return response;
}

void ResponseCache::put(const CacheKey& key, const ChatResponse& response) {
  json value = to_json(response);
  if (directory_) {
    const auto final_path = *directory_ / (key.digest + ".json");
    std::ostringstream tmp_name;
    tmp_name << key.digest << ".tmp." << std::hash<std::thread::id>{}(std::this_thread::get_id());
    const auto tmp_path = *directory_ / tmp_name.str();
    {
      std::ofstream out(tmp_path);
      out << json{{"backend", key.backend_id}, {"response", value}}.dump() << '\n';
    }
    std::error_code ec;
    std::filesystem::rename(tmp_path, final_path, ec);
    if (ec) std::filesystem::remove(tmp_path, ec);
  }
  std::lock_guard<std::mutex> lock(mutex_);
  entries_[key.digest] = std::move(value);
}

std::size_t ResponseCache::size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return entries_.size();
}

CachedBackend::CachedBackend(std::shared_ptr<Backend> inner,
                             std::shared_ptr<ResponseCache> cache)
    : inner_(std::move(inner)), cache_(std::move(cache)) {}

ChatResponse CachedBackend::complete(const ChatRequest& request) {
  validate(request);
  const CacheKey key = CacheKey::of(inner_->id(), request);
  if (auto hit = cache_->get(key)) {
    ++hits_;
    return *hit;
  }
  ++misses_;
  ChatResponse response = inner_->complete(request);
  cache_->put(key, response);
  // Return what the cache holds so first and repeated calls are identical.
  return response_from_json(to_json(response));
}

std::shared_ptr<Backend> make_scripted_backend(std::string id,
                                               std::vector<std::string> responses) {
  if (responses.empty()) {
    throw PreconditionError("scripted backend needs at least one response");
  }
  auto counter = std::make_shared<std::atomic<std::size_t>>(0);
  auto shared = std::make_shared<const std::vector<std::string>>(std::move(responses));
  return std::make_shared<FunctionBackend>(
      std::move(id), [counter, shared](const ChatRequest&) {
        const std::size_t k = (*counter)++;
        return ChatResponse{(*shared)[k % shared->size()], std::nullopt};
      });
}

}  // namespace fairjudge
