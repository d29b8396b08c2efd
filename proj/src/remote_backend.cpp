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

#include "fairjudge/remote_backend.hpp"

#include <thread>

#include <httplib.h>

#include "fairjudge/error.hpp"

namespace fairjudge {

using json = nlohmann::json;

namespace {

// Splits "https://host:port/v1" into ("https://host:port", "/v1").
std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
  const auto scheme_end = endpoint.find("://");
  if (scheme_end == std::string::npos) {
    throw ValidationError("endpoint '" + endpoint + "' must start with http:// or https://");
  }
  const auto path_start = endpoint.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {endpoint, ""};
  std::string path = endpoint.substr(path_start);
  while (!path.empty() && path.back() == '/') path.pop_back();
  return {endpoint.substr(0, path_start), path};
}

class SemaphoreGuard {
 public:
  explicit SemaphoreGuard(std::counting_semaphore<>& s) : s_(s) { s_.acquire(); }
  ~SemaphoreGuard() { s_.release(); }
  SemaphoreGuard(const SemaphoreGuard&) = delete;
  SemaphoreGuard& operator=(const SemaphoreGuard&) = delete;

 private:
  std::counting_semaphore<>& s_;
};

}  // namespace

RemoteChatBackend::RemoteChatBackend(RemoteBackendConfig config)
    : config_(std::move(config)),
      sleeper_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }),
      in_flight_(std::max(1, config_.max_in_flight)) {
  if (config_.model.empty()) throw ValidationError("remote backend: model is empty");
  if (config_.max_attempts < 1) throw ValidationError("remote backend: max_attempts < 1");
  std::tie(scheme_host_port_, path_prefix_) = split_endpoint(config_.endpoint);
}

std::string RemoteChatBackend::id() const {
  return "remote:" + config_.endpoint + "#" + config_.model;
}

nlohmann::json RemoteChatBackend::wire_request(const ChatRequest& request) const {
  json messages = json::array();
  for (const auto& m : request.messages) {
    messages.push_back({{"role", m.role}, {"content", m.content}});
  }
  json body{{"model", config_.model},
            {"messages", std::move(messages)},
            {"temperature", request.temperature},
            {"max_tokens", request.max_tokens},
            {"stream", false}};
  if (request.want_label_logprobs) {
    body["logprobs"] = true;
    body["top_logprobs"] = request.top_logprobs_k;
  }
  if (request.temperature > 0) body["seed"] = request.seed;
  return body;
}

ChatResponse RemoteChatBackend::parse_reply(const std::string& body, bool want_logprobs) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error& e) {
    throw ProtocolError(std::string("malformed reply: ") + e.what());
  }
  ChatResponse out;
  try {
    const json& choice = doc.at("choices").at(0);
    const json& content = choice.at("message").at("content");
    out.text = content.is_null() ? std::string{} : content.get<std::string>();
    if (!want_logprobs) return out;

    auto lp = choice.find("logprobs");
    if (lp == choice.end() || lp->is_null() || !lp->contains("content") ||
        (*lp)["content"].is_null() || (*lp)["content"].empty()) {
      throw CapabilityError("endpoint returned no token logprobs");
    }
    const json& first = (*lp)["content"].at(0);
    std::map<std::string, double> logprobs;
    auto add = [&](const json& entry) {
      const auto token = entry.at("token").get<std::string>();
      const double value = entry.at("logprob").get<double>();
      if (value > 0) throw ProtocolError("positive log-probability for token '" + token + "'");
      // Keep the larger value if a token shows up twice.
      auto [it, inserted] = logprobs.emplace(token, value);
      if (!inserted) it->second = std::max(it->second, value);
    };
    add(first);
    if (auto top = first.find("top_logprobs"); top != first.end() && top->is_array()) {
      for (const auto& entry : *top) add(entry);
    }
    out.first_token_logprobs = std::move(logprobs);
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("unexpected reply shape: ") + e.what());
  }
  return out;
}

ChatResponse RemoteChatBackend::complete(const ChatRequest& request) {
  validate(request);
  const std::string body = wire_request(request).dump();
  const std::string path = path_prefix_ + "/chat/completions";

  SemaphoreGuard guard(in_flight_);
  std::string last_failure;
  auto backoff = config_.initial_backoff;
  for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
    httplib::Client client(scheme_host_port_);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    client.set_write_timeout(config_.timeout);
    httplib::Headers headers;
    if (!config_.api_key.empty()) {
      headers.emplace("Authorization", "Bearer " + config_.api_key);
    }
    auto result = client.Post(path, headers, body, "application/json");
    if (!result) {
      last_failure = "transport error: " + httplib::to_string(result.error());
    } else if (result->status == 429 || result->status >= 500) {
      last_failure = "HTTP " + std::to_string(result->status);
    } else if (result->status != 200) {
      throw ProtocolError("HTTP " + std::to_string(result->status) + ": " + result->body);
    } else {
      return parse_reply(result->body, request.want_label_logprobs);
    }
    if (attempt < config_.max_attempts) {
      sleeper_(backoff);
      backoff *= 2;
    }
  }
  throw TransportError(last_failure, config_.max_attempts);
}

}  // namespace fairjudge
