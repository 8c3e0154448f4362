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

#include "pubfeat/costmodel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "pubfeat/csv.hpp"
#include "pubfeat/rng.hpp"

namespace pubfeat {
namespace {

int64_t total_count(std::span<const int64_t> counts) {
  int64_t total = 0;
  for (int64_t c : counts) {
    if (c < 0) {
      throw std::invalid_argument("item counts must be >= 0");
    }
    total += c;
  }
  return total;
}

}  // namespace

VisitStats expected_item_visits(std::span<const int64_t> counts,
                                int64_t batch_size) {
  const int64_t total = total_count(counts);
  if (total < 1) throw std::invalid_argument("expected_item_visits: no data");
  if (batch_size < 1 || batch_size > total) {
    throw std::invalid_argument(
        "expected_item_visits: need 1 <= batch_size <= total");
  }
  VisitStats stats;
  stats.per_item.reserve(counts.size());
  const double steps =
      static_cast<double>(total) / static_cast<double>(batch_size);
  for (int64_t c : counts) {
    const double p = static_cast<double>(c) / static_cast<double>(total);
    const double hit =
        1.0 - std::pow(1.0 - p, static_cast<double>(batch_size));
    stats.per_item.push_back(steps * hit);
  }
  stats.total =
      std::accumulate(stats.per_item.begin(), stats.per_item.end(), 0.0);
  return stats;
}

VisitStats simulate_item_visits(std::span<const int64_t> counts,
                                int64_t batch_size, int epochs,
                                uint64_t seed) {
  const int64_t total = total_count(counts);
  if (total < 1) throw std::invalid_argument("simulate_item_visits: no data");
  if (batch_size < 1 || batch_size > total) {
    throw std::invalid_argument(
        "simulate_item_visits: need 1 <= batch_size <= total");
  }
  if (total % batch_size != 0) {
    throw std::invalid_argument(
        "simulate_item_visits: batch_size must divide the total count");
  }
  if (epochs < 1) {
    throw std::invalid_argument("simulate_item_visits: epochs must be >= 1");
  }

  std::vector<int64_t> cumulative(counts.size());
  std::partial_sum(counts.begin(), counts.end(), cumulative.begin());

  const int64_t batches_per_epoch = total / batch_size;
  std::vector<double> visits(counts.size(), 0.0);
  std::vector<int64_t> last_batch(counts.size(), -1);
  const RngRoot rng(seed);
  Substream s = rng.stream("costsim");
  int64_t batch_id = 0;
  for (int e = 0; e < epochs; ++e) {
    for (int64_t b = 0; b < batches_per_epoch; ++b, ++batch_id) {
      for (int64_t t = 0; t < batch_size; ++t) {
        const auto r = static_cast<int64_t>(
            s.uniform_int(static_cast<uint64_t>(total)));
        const auto it =
            std::upper_bound(cumulative.begin(), cumulative.end(), r);
        const auto j =
            static_cast<size_t>(std::distance(cumulative.begin(), it));
        if (last_batch[j] != batch_id) {
          last_batch[j] = batch_id;
          visits[j] += 1.0;
        }
      }
    }
  }

  VisitStats stats;
  stats.per_item.resize(counts.size());
  for (size_t j = 0; j < counts.size(); ++j) {
    stats.per_item[j] = visits[j] / static_cast<double>(epochs);
  }
  stats.total =
      std::accumulate(stats.per_item.begin(), stats.per_item.end(), 0.0);
  return stats;
}

double cost_ratio(const CostParams& params, double beta) {
  if (params.examples < 1 || params.items < 1 || params.dim < 1) {
    throw std::invalid_argument("cost_ratio: sizes must be >= 1");
  }
  if (!(params.unit_cost > 0.0) || !(params.epochs > 0.0)) {
    throw std::invalid_argument(
        "cost_ratio: unit_cost and epochs must be positive");
  }
  if (!(beta > 0.0)) {
    throw std::invalid_argument("cost_ratio: beta must be positive");
  }
  const double m = static_cast<double>(params.items);
  const double d2 = static_cast<double>(params.dim) * params.dim;
  const double d_sq_term = d2 / params.unit_cost;
  const double amortized = static_cast<double>(params.examples) * d2 /
                           (params.unit_cost * params.epochs * m);
  return (m / beta) * (1.0 + d_sq_term + amortized);
}

std::vector<int64_t> powerlaw_counts(int items, double alpha, int64_t total,
                                     uint64_t seed) {
  if (items < 1) throw std::invalid_argument("powerlaw_counts: items >= 1");
  if (total < 0) throw std::invalid_argument("powerlaw_counts: total >= 0");
  if (std::isnan(alpha) || alpha < 0.0) {
    throw std::invalid_argument("powerlaw_counts: alpha must be >= 0");
  }
  std::vector<double> weight(static_cast<size_t>(items));
  double norm = 0.0;
  for (int r = 0; r < items; ++r) {
    weight[static_cast<size_t>(r)] =
        std::pow(static_cast<double>(r + 1), -alpha);
    norm += weight[static_cast<size_t>(r)];
  }

  std::vector<int64_t> counts(static_cast<size_t>(items));
  std::vector<std::pair<double, uint64_t>> remainder(
      static_cast<size_t>(items));
  int64_t assigned = 0;
  for (int r = 0; r < items; ++r) {
    const double target =
        static_cast<double>(total) * weight[static_cast<size_t>(r)] / norm;
    const double base = std::floor(target);
    counts[static_cast<size_t>(r)] = static_cast<int64_t>(base);
    assigned += counts[static_cast<size_t>(r)];
    // Ties in the remainder are ordered by a seeded hash of the rank.
    remainder[static_cast<size_t>(r)] = {
        target - base, mix64(seed ^ mix64(static_cast<uint64_t>(r)))};
  }

  std::vector<int> order(static_cast<size_t>(items));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const auto& ra = remainder[static_cast<size_t>(a)];
    const auto& rb = remainder[static_cast<size_t>(b)];
    if (ra.first != rb.first) return ra.first > rb.first;
    return ra.second < rb.second;
  });
  for (int64_t leftover = total - assigned; leftover > 0; --leftover) {
    counts[static_cast<size_t>(
        order[static_cast<size_t>(total - assigned - leftover)])] += 1;
  }
  return counts;
}

void save_cost_csv(const std::string& path,
                   const std::vector<CostReportRow>& rows) {
  csv::Writer writer(path, "B,epochs,beta,ratio");
  for (const CostReportRow& row : rows) {
    writer.begin_row();
    writer.field(row.batch_size);
    writer.field(row.epochs);
    writer.field(row.beta);
    writer.field(row.ratio);
    writer.end_row();
  }
}

}  // namespace pubfeat
