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

#include <span>
#include <string>
#include <vector>

#include "pubfeat/dataio.hpp"
#include "pubfeat/rng.hpp"

namespace pubfeat {

enum class PrivacyUnit { kExample, kUser };
enum class Mechanism { kSsp1, kSsp2, kSspConvex, kDpSgd };

std::string mechanism_name(Mechanism m);

struct PrivacySpec {
  double epsilon = 1.0;
  double delta = 1e-5;
  PrivacyUnit unit = PrivacyUnit::kExample;
  Mechanism variant = Mechanism::kSsp2;
  int steps = 1;              // noised rounds T for the per-step variants
  double weight_bound = 1.0;  // per-user weight norm bound (user unit only)

  // Throws std::invalid_argument unless epsilon in (0, ln(1/delta)),
  // delta in (0, 1), steps >= 1, weight_bound > 0.
  void validate() const;
};

// Renyi divergence bound of the form (alpha, alpha * beta) for all alpha > 1;
// gaussian releases compose additively in beta.
struct RdpCurve {
  double beta = 0.0;
};

RdpCurve rdp_compose(std::span<const RdpCurve> parts);
// Conversion used throughout: epsilon = sqrt(8 * beta * ln(1/delta)),
// valid for beta <= ln(1/delta).
double rdp_to_dp(const RdpCurve& curve, double delta);
// Inverse of rdp_to_dp: the beta affordable at (epsilon, delta).
double beta_budget(double epsilon, double delta);

// One release round = one (A, b) pair (or (H, g), or one dpsgd gradient,
// charged conservatively at the same rate). Contributes beta =
// weight_bound^2 / sigma^2.
RdpCurve release_round_beta(double sigma, double weight_bound = 1.0);

// Rounds of noise the mechanism consumes: 1 for ssp2, steps otherwise.
int mechanism_rounds(Mechanism variant, int steps);

// Noise multiplier for `rounds` release rounds at (epsilon, delta):
//   sigma = weight_bound * sqrt(rounds) * sqrt(8 ln(1/delta)) / epsilon.
double sigma_for_releases(double epsilon, double delta, int rounds,
                          double weight_bound = 1.0);
double calibrate_sigma(const PrivacySpec& spec);

struct BudgetSplit {
  double beta_count = 0.0;
  double beta_train = 0.0;
};
BudgetSplit split_budget(double beta_total, double count_fraction);

// Absolute noise std for a single count release with L2 sensitivity
// `sensitivity` at RDP budget beta_count: sensitivity / sqrt(2 beta_count).
double count_sigma_for_beta(double beta_count, double sensitivity);
// L2 sensitivity of the per-item count vector: 1 at example level,
// sqrt(max_k |examples of user k|) at user level.
double count_sensitivity(const Partition& part, PrivacyUnit unit);

// n_hat_j = max(1, |examples of item j| + sigma_count * N(0,1)); streams
// keyed ("counts", j).
std::vector<double> noisy_item_counts(const InteractionDataset& ds,
                                      double sigma_count, const RngRoot& rng);

// Per-example weights from noisy counts: within each user k,
//   w_i = weight_bound * n_hat_{j_i}^{-1/4} / sqrt(sum_{i' in k} n_hat_{j_i'}^{-1/2})
// so that sum_{i in k} w_i^2 = weight_bound^2 exactly.
std::vector<double> budget_weights(const InteractionDataset& ds,
                                   const Partition& part,
                                   std::span<const double> noisy_counts,
                                   double weight_bound);

struct AccountingRow {
  std::string mechanism;
  double beta = 0.0;
  double sigma = 0.0;
  double epsilon = 0.0;
  double delta = 0.0;
};

void save_accounting_csv(const std::string& path,
                         const std::vector<AccountingRow>& rows);

}  // namespace pubfeat
