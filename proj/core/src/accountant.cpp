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

#include "pubfeat/accountant.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pubfeat/csv.hpp"

namespace pubfeat {

std::string mechanism_name(Mechanism m) {
  switch (m) {
    case Mechanism::kSsp1:
      return "ssp1";
    case Mechanism::kSsp2:
      return "ssp2";
    case Mechanism::kSspConvex:
      return "ssp-convex";
    case Mechanism::kDpSgd:
      return "dpsgd";
  }
  throw std::invalid_argument("mechanism_name: unknown mechanism");
}

void PrivacySpec::validate() const {
  if (!(delta > 0.0) || !(delta < 1.0)) {
    throw std::invalid_argument("privacy spec: delta must be in (0, 1)");
  }
  if (!(epsilon > 0.0)) {
    throw std::invalid_argument("privacy spec: epsilon must be positive");
  }
  if (!(epsilon < std::log(1.0 / delta))) {
    throw std::invalid_argument(
        "privacy spec: epsilon must be below ln(1/delta)");
  }
  if (steps < 1) {
    throw std::invalid_argument("privacy spec: steps must be >= 1");
  }
  if (!(weight_bound > 0.0) || !std::isfinite(weight_bound)) {
    throw std::invalid_argument(
        "privacy spec: weight_bound must be positive and finite");
  }
}

RdpCurve rdp_compose(std::span<const RdpCurve> parts) {
  RdpCurve total;
  for (const RdpCurve& c : parts) {
    if (!(c.beta >= 0.0)) {
      throw std::invalid_argument("rdp_compose: beta must be >= 0");
    }
    total.beta += c.beta;
  }
  return total;
}

double rdp_to_dp(const RdpCurve& curve, double delta) {
  if (!(delta > 0.0) || !(delta < 1.0)) {
    throw std::invalid_argument("rdp_to_dp: delta must be in (0, 1)");
  }
  if (!(curve.beta >= 0.0)) {
    throw std::invalid_argument("rdp_to_dp: beta must be >= 0");
  }
  return std::sqrt(8.0 * curve.beta * std::log(1.0 / delta));
}

double beta_budget(double epsilon, double delta) {
  if (!(epsilon > 0.0)) {
    throw std::invalid_argument("beta_budget: epsilon must be positive");
  }
  if (!(delta > 0.0) || !(delta < 1.0)) {
    throw std::invalid_argument("beta_budget: delta must be in (0, 1)");
  }
  return epsilon * epsilon / (8.0 * std::log(1.0 / delta));
}

RdpCurve release_round_beta(double sigma, double weight_bound) {
  if (!(sigma > 0.0)) {
    throw std::invalid_argument("release_round_beta: sigma must be positive");
  }
  if (!(weight_bound > 0.0)) {
    throw std::invalid_argument(
        "release_round_beta: weight_bound must be positive");
  }
  return RdpCurve{weight_bound * weight_bound / (sigma * sigma)};
}

int mechanism_rounds(Mechanism variant, int steps) {
  if (steps < 1) {
    throw std::invalid_argument("mechanism_rounds: steps must be >= 1");
  }
  return variant == Mechanism::kSsp2 ? 1 : steps;
}

double sigma_for_releases(double epsilon, double delta, int rounds,
                          double weight_bound) {
  PrivacySpec check;
  check.epsilon = epsilon;
  check.delta = delta;
  check.steps = rounds;
  check.weight_bound = weight_bound;
  check.validate();
  return weight_bound * std::sqrt(static_cast<double>(rounds)) *
         std::sqrt(8.0 * std::log(1.0 / delta)) / epsilon;
}

double calibrate_sigma(const PrivacySpec& spec) {
  spec.validate();
  const double wbar =
      spec.unit == PrivacyUnit::kUser ? spec.weight_bound : 1.0;
  return sigma_for_releases(spec.epsilon, spec.delta,
                            mechanism_rounds(spec.variant, spec.steps), wbar);
}

BudgetSplit split_budget(double beta_total, double count_fraction) {
  if (!(beta_total > 0.0)) {
    throw std::invalid_argument("split_budget: beta_total must be positive");
  }
  if (!(count_fraction > 0.0) || !(count_fraction < 1.0)) {
    throw std::invalid_argument(
        "split_budget: count_fraction must be in (0, 1)");
  }
  return BudgetSplit{beta_total * count_fraction,
                     beta_total * (1.0 - count_fraction)};
}

double count_sigma_for_beta(double beta_count, double sensitivity) {
  if (!(beta_count > 0.0)) {
    throw std::invalid_argument(
        "count_sigma_for_beta: beta_count must be positive");
  }
  if (!(sensitivity > 0.0)) {
    throw std::invalid_argument(
        "count_sigma_for_beta: sensitivity must be positive");
  }
  return sensitivity / std::sqrt(2.0 * beta_count);
}

double count_sensitivity(const Partition& part, PrivacyUnit unit) {
  if (unit == PrivacyUnit::kExample) return 1.0;
  size_t largest = 0;
  for (const auto& examples : part.by_user) {
    largest = std::max(largest, examples.size());
  }
  return std::sqrt(static_cast<double>(std::max<size_t>(largest, 1)));
}

std::vector<double> noisy_item_counts(const InteractionDataset& ds,
                                      double sigma_count, const RngRoot& rng) {
  if (std::isnan(sigma_count) || sigma_count < 0.0) {
    throw std::invalid_argument("noisy_item_counts: sigma_count must be >= 0");
  }
  std::vector<double> counts(static_cast<size_t>(ds.item_count), 0.0);
  for (const Interaction& ex : ds.examples) {
    counts[static_cast<size_t>(ex.item)] += 1.0;
  }
  for (size_t j = 0; j < counts.size(); ++j) {
    double noised = counts[j];
    if (sigma_count > 0.0) {
      Substream s = rng.stream("counts", static_cast<uint64_t>(j));
      noised += sigma_count * s.gaussian();
    }
    counts[j] = std::max(1.0, noised);
  }
  return counts;
}

std::vector<double> budget_weights(const InteractionDataset& ds,
                                   const Partition& part,
                                   std::span<const double> noisy_counts,
                                   double weight_bound) {
  if (!(weight_bound > 0.0)) {
    throw std::invalid_argument("budget_weights: weight_bound must be > 0");
  }
  if (static_cast<int>(noisy_counts.size()) != ds.item_count) {
    throw std::invalid_argument("budget_weights: counts/dataset mismatch");
  }
  for (double c : noisy_counts) {
    if (!(c >= 1.0)) {
      throw std::invalid_argument("budget_weights: counts must be >= 1");
    }
  }
  std::vector<double> weights(static_cast<size_t>(ds.size()), 0.0);
  for (const auto& examples : part.by_user) {
    if (examples.empty()) continue;
    double denom_sq = 0.0;
    for (int64_t i : examples) {
      const int item = ds.examples[static_cast<size_t>(i)].item;
      denom_sq += 1.0 / std::sqrt(noisy_counts[static_cast<size_t>(item)]);
    }
    const double denom = std::sqrt(denom_sq);
    for (int64_t i : examples) {
      const int item = ds.examples[static_cast<size_t>(i)].item;
      weights[static_cast<size_t>(i)] =
          weight_bound /
          (std::pow(noisy_counts[static_cast<size_t>(item)], 0.25) * denom);
    }
  }
  return weights;
}

void save_accounting_csv(const std::string& path,
                         const std::vector<AccountingRow>& rows) {
  csv::Writer writer(path, "mechanism,beta,sigma,epsilon,delta");
  for (const AccountingRow& row : rows) {
    writer.begin_row();
    writer.field(row.mechanism);
    writer.field(row.beta);
    writer.field(row.sigma);
    writer.field(row.epsilon);
    writer.field(row.delta);
    writer.end_row();
  }
}

}  // namespace pubfeat
