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

#ifndef FAIRJUDGE_UTIL_HPP_
#define FAIRJUDGE_UTIL_HPP_

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <random>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace fairjudge {

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// 64-bit FNV-1a, chained through `seed`. Stable across platforms.
std::uint64_t fnv1a64(std::string_view data,
                      std::uint64_t seed = 14695981039346656037ULL);

std::uint64_t splitmix64(std::uint64_t x);

/// Maps a 64-bit hash to a double in [0, 1).
inline double unit_interval(std::uint64_t h) {
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

/// Standard normal deviate derived deterministically from a hash (Box-Muller).
double hashed_normal(std::uint64_t h);

/// Unbiased draw in [0, bound) from a 64-bit engine. Unlike
/// std::uniform_int_distribution, the result is identical on every stdlib.
std::uint64_t bounded_draw(std::mt19937_64& engine, std::uint64_t bound);

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

/// Numerically stable log(sigmoid(z)).
double log_sigmoid(double z);
inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

/// Runs fn(i) for i in [0, n) on up to `workers` threads and returns the
/// results in index order. The first exception (by index) is rethrown.
template <typename T, typename Fn>
std::vector<T> parallel_map(std::size_t n, std::size_t workers, Fn&& fn) {
  std::vector<T> out(n);
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
    return out;
  }
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        out[i] = fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    const std::size_t k = std::min(workers, n);
    pool.reserve(k);
    for (std::size_t t = 0; t < k; ++t) pool.emplace_back(work);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace fairjudge

#endif  // FAIRJUDGE_UTIL_HPP_
