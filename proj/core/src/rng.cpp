// Copyright 2026 The pubfeat-dp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pubfeat/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <unordered_set>

namespace pubfeat {
namespace {

constexpr uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

uint64_t combine(uint64_t h, uint64_t v) { return mix64(h + kGolden + v); }

uint64_t hash_tag(std::string_view tag) {
  // FNV-1a, then finalized.
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : tag) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return mix64(h);
}

}  // namespace

uint64_t mix64(uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

Substream::Substream(uint64_t key,
                     std::shared_ptr<std::atomic<uint64_t>> gaussian_counter)
    : state_(key), gaussian_counter_(std::move(gaussian_counter)) {}

uint64_t Substream::next_u64() {
  state_ += kGolden;
  return mix64(state_);
}

double Substream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Substream::gaussian() {
  const double u1 = 1.0 - uniform();  // (0, 1]; keeps log finite
  const double u2 = uniform();
  if (gaussian_counter_) gaussian_counter_->fetch_add(1);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

uint64_t Substream::uniform_int(uint64_t n) {
  if (n == 0) throw std::invalid_argument("uniform_int: n must be positive");
  const uint64_t max = std::numeric_limits<uint64_t>::max();
  const uint64_t rem = (max % n + 1) % n;  // 2^64 mod n
  uint64_t x = next_u64();
  while (rem != 0 && x > max - rem) x = next_u64();
  return x % n;
}

RngRoot::RngRoot(uint64_t seed)
    : seed_(seed),
      gaussian_counter_(std::make_shared<std::atomic<uint64_t>>(0)) {}

RngRoot::RngRoot(uint64_t seed, std::shared_ptr<std::atomic<uint64_t>> counter)
    : seed_(seed), gaussian_counter_(std::move(counter)) {}

Substream RngRoot::stream(std::string_view tag, uint64_t a, uint64_t b,
                          uint64_t c) const {
  uint64_t key = combine(mix64(seed_), hash_tag(tag));
  key = combine(key, a);
  key = combine(key, b);
  key = combine(key, c);
  return Substream(key, gaussian_counter_);
}

RngRoot RngRoot::child(std::string_view tag, uint64_t index) const {
  uint64_t key = combine(mix64(seed_), hash_tag(tag));
  key = combine(key, index);
  return RngRoot(key, gaussian_counter_);
}

uint64_t RngRoot::gaussian_draws() const {
  return gaussian_counter_->load();
}

void RngRoot::reset_gaussian_draws() { gaussian_counter_->store(0); }

std::vector<int64_t> sample_without_replacement(Substream& stream,
                                                int64_t population,
                                                int64_t count) {
  if (count < 0 || population < 0 || count > population) {
    throw std::invalid_argument(
        "sample_without_replacement: need 0 <= count <= population");
  }
  std::unordered_set<int64_t> chosen;
  chosen.reserve(static_cast<size_t>(count));
  for (int64_t j = population - count; j < population; ++j) {
    const auto t = static_cast<int64_t>(
        stream.uniform_int(static_cast<uint64_t>(j) + 1));
    if (!chosen.insert(t).second) chosen.insert(j);
  }
  std::vector<int64_t> out(chosen.begin(), chosen.end());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace pubfeat
