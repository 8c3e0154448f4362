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

#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string_view>
#include <vector>

namespace pubfeat {

// 64-bit finalizer (splitmix64). Full avalanche; used to derive stream keys.
uint64_t mix64(uint64_t x);

// Deterministic counter-free PRNG stream. Draw order is part of the contract:
// every consumer documents which stream it draws from and in what order, so
// runs are bit-reproducible for a fixed seed regardless of thread count.
class Substream {
 public:
  explicit Substream(uint64_t key,
                     std::shared_ptr<std::atomic<uint64_t>> gaussian_counter);

  uint64_t next_u64();
  // Uniform in [0, 1).
  double uniform();
  // Standard normal via Box-Muller; consumes exactly two uniforms per call
  // (no caching), so the gaussian draw count is exact and platform-stable.
  double gaussian();
  // Uniform integer in [0, n); rejection-sampled, unbiased. Requires n > 0.
  uint64_t uniform_int(uint64_t n);

 private:
  uint64_t state_;
  std::shared_ptr<std::atomic<uint64_t>> gaussian_counter_;
};

// Root of a seeded stream hierarchy. stream() derives independent substreams
// from a string tag plus up to three integer coordinates; equal keys yield
// identical streams, distinct keys are decorrelated by mix64.
class RngRoot {
 public:
  explicit RngRoot(uint64_t seed);

  Substream stream(std::string_view tag, uint64_t a = 0, uint64_t b = 0,
                   uint64_t c = 0) const;
  // Derived root for a nested phase (e.g. one alternating-minimization
  // round); shares this root's gaussian draw counter.
  RngRoot child(std::string_view tag, uint64_t index) const;

  uint64_t seed() const { return seed_; }
  // Total gaussians drawn across all substreams of this root (and children).
  uint64_t gaussian_draws() const;
  void reset_gaussian_draws();

 private:
  RngRoot(uint64_t seed, std::shared_ptr<std::atomic<uint64_t>> counter);

  uint64_t seed_;
  std::shared_ptr<std::atomic<uint64_t>> gaussian_counter_;
};

// Floyd's algorithm: `count` distinct values from [0, population), returned
// sorted ascending. count == population yields 0..population-1.
std::vector<int64_t> sample_without_replacement(Substream& stream,
                                                int64_t population,
                                                int64_t count);

}  // namespace pubfeat
