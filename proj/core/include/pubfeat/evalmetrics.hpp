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

#include <Eigen/Dense>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pubfeat/dataio.hpp"
#include "pubfeat/encoder.hpp"

namespace pubfeat {

// Root mean squared error over (prediction, label) pairs; empty input errors.
double rmse(std::span<const std::pair<double, double>> pred_label);

// Scores over all items for one user, plus that user's training history
// (excluded from ranking) and held-out target items.
struct UserRanking {
  std::vector<double> scores;
  std::vector<int> history;
  std::vector<int> target;
};

// |target hit in top K| / min(K, |target|) after removing history from the
// candidate list. Ties rank the lower item index first. history and target
// must be disjoint; empty target errors.
double user_recall_at_k(const UserRanking& ranking, int k);
// Mean of user_recall_at_k over users with nonempty targets; errors if no
// user has a target.
double recall_at_k(std::span<const UserRanking> rankings, int k);

// Weighted squared-error objective sum_i w_i (u_{k_i} . v_{j_i} - y_i)^2 / 2
// on raw (unclipped) user vectors and labels.
double quadratic_loss(const PublicEncoder& enc,
                      const PublicFeatureMatrix& features,
                      const InteractionDataset& ds, const UserEncoder& users);
double quadratic_loss_theta(const Eigen::MatrixXd& theta,
                            const PublicFeatureMatrix& features,
                            const InteractionDataset& ds,
                            const Eigen::MatrixXd& user_table);

// Rescales theta so that max_j ||theta^T x_j|| <= bound (no-op when already
// feasible). bound must be positive.
Eigen::MatrixXd project_theta(const Eigen::MatrixXd& theta,
                              const PublicFeatureMatrix& features,
                              double bound);

// Constrained least-squares reference: projected gradient descent on
// quadratic_loss_theta over {theta : max_j ||theta^T x_j|| <= bound},
// run to fixed-point tolerance. Deterministic.
Eigen::MatrixXd constrained_ls_theta(const PublicFeatureMatrix& features,
                                     const InteractionDataset& ds,
                                     const Eigen::MatrixXd& user_table,
                                     int embed_dim, double bound,
                                     int max_iters = 20000,
                                     double tol = 1e-10);

// quadratic_loss_theta(theta_hat) - quadratic_loss_theta(oracle).
double excess_risk(const Eigen::MatrixXd& theta_hat,
                   const Eigen::MatrixXd& oracle,
                   const PublicFeatureMatrix& features,
                   const InteractionDataset& ds,
                   const Eigen::MatrixXd& user_table);

struct MetricsRow {
  std::string metric;
  double epsilon = 0.0;
  int64_t seed = 0;
  double value = 0.0;
};

// Creates the file with header metric,epsilon,seed,value if needed, then
// appends rows.
void append_metrics_csv(const std::string& path,
                        const std::vector<MetricsRow>& rows);

}  // namespace pubfeat
