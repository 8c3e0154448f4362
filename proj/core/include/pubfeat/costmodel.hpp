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

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace pubfeat {

// Expected distinct-batch visits per item and epoch for uniform batches of
// size B drawn with replacement from D examples:
//   beta_j = (D / B) * (1 - (1 - p_j)^B),  p_j = count_j / D,
// and the scalar beta = sum_j beta_j (so B = 1 gives beta = D).
struct VisitStats {
  std::vector<double> per_item;
  double total = 0.0;
};

VisitStats expected_item_visits(std::span<const int64_t> counts,
                                int64_t batch_size);

// Monte-Carlo twin of expected_item_visits: runs `epochs` epochs of D/B
// batches sampled with replacement and averages, per item, the number of
// batches per epoch that contain the item (scaled to match the closed form's
// per-step convention). batch_size must divide the total count.
VisitStats simulate_item_visits(std::span<const int64_t> counts,
                                int64_t batch_size, int epochs,
                                uint64_t seed);

struct CostParams {
  int64_t examples = 0;   // D
  int items = 0;          // m
  int dim = 0;            // d
  double unit_cost = 1.0; // c, encoder forward/backward cost
  double epochs = 1.0;    // e
};

// Relative per-epoch training cost of the statistics route versus the
// per-example route:
//   ratio = (m / beta) * (1 + d^2/c + D d^2 / (c e m)).
double cost_ratio(const CostParams& params, double beta);

// Deterministic power-law item counts: count_r proportional to (r+1)^-alpha,
// rounded by largest remainder to sum exactly to total; seed breaks remainder
// ties only.
std::vector<int64_t> powerlaw_counts(int items, double alpha, int64_t total,
                                     uint64_t seed);

struct CostReportRow {
  int64_t batch_size = 0;
  double epochs = 0.0;
  double beta = 0.0;
  double ratio = 0.0;
};

// Cost sweep CSV with header B,epochs,beta,ratio.
void save_cost_csv(const std::string& path,
                   const std::vector<CostReportRow>& rows);

}  // namespace pubfeat
