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

#include "pubfeat/evalmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <unordered_set>

#include "pubfeat/csv.hpp"

namespace pubfeat {

double rmse(std::span<const std::pair<double, double>> pred_label) {
  if (pred_label.empty()) {
    throw std::invalid_argument("rmse: empty input");
  }
  double sum = 0.0;
  for (const auto& [pred, label] : pred_label) {
    const double r = pred - label;
    sum += r * r;
  }
  return std::sqrt(sum / static_cast<double>(pred_label.size()));
}

double user_recall_at_k(const UserRanking& ranking, int k) {
  if (k < 1) throw std::invalid_argument("recall: K must be >= 1");
  if (ranking.target.empty()) {
    throw std::invalid_argument("recall: empty target set");
  }
  const int items = static_cast<int>(ranking.scores.size());
  std::unordered_set<int> history(ranking.history.begin(),
                                  ranking.history.end());
  std::unordered_set<int> target(ranking.target.begin(),
                                 ranking.target.end());
  for (int j : ranking.target) {
    if (j < 0 || j >= items) {
      throw std::invalid_argument("recall: target item out of range");
    }
    if (history.count(j) > 0) {
      throw std::invalid_argument("recall: history and target overlap");
    }
  }
  for (int j : ranking.history) {
    if (j < 0 || j >= items) {
      throw std::invalid_argument("recall: history item out of range");
    }
  }

  std::vector<int> candidates;
  candidates.reserve(static_cast<size_t>(items));
  for (int j = 0; j < items; ++j) {
    if (history.count(j) == 0) candidates.push_back(j);
  }
  const int top = std::min<int>(k, static_cast<int>(candidates.size()));
  std::partial_sort(candidates.begin(), candidates.begin() + top,
                    candidates.end(), [&](int a, int b) {
                      if (ranking.scores[static_cast<size_t>(a)] !=
                          ranking.scores[static_cast<size_t>(b)]) {
                        return ranking.scores[static_cast<size_t>(a)] >
                               ranking.scores[static_cast<size_t>(b)];
                      }
                      return a < b;
                    });
  int hits = 0;
  for (int t = 0; t < top; ++t) {
    if (target.count(candidates[static_cast<size_t>(t)]) > 0) ++hits;
  }
  const int denom = std::min<int>(k, static_cast<int>(ranking.target.size()));
  return static_cast<double>(hits) / static_cast<double>(denom);
}

double recall_at_k(std::span<const UserRanking> rankings, int k) {
  if (k < 1) throw std::invalid_argument("recall: K must be >= 1");
  double sum = 0.0;
  int counted = 0;
  for (const UserRanking& r : rankings) {
    if (r.target.empty()) continue;
    sum += user_recall_at_k(r, k);
    ++counted;
  }
  if (counted == 0) {
    throw std::invalid_argument("recall: no user has a nonempty target");
  }
  return sum / static_cast<double>(counted);
}

double quadratic_loss(const PublicEncoder& enc,
                      const PublicFeatureMatrix& features,
                      const InteractionDataset& ds, const UserEncoder& users) {
  if (features.item_count() < ds.item_count) {
    throw std::invalid_argument("quadratic_loss: features/dataset mismatch");
  }
  std::vector<Eigen::VectorXd> item_vecs(
      static_cast<size_t>(ds.item_count));
  for (int j = 0; j < ds.item_count; ++j) {
    item_vecs[static_cast<size_t>(j)] = enc.forward(features.row(j));
  }
  double loss = 0.0;
  for (const Interaction& ex : ds.examples) {
    const double r =
        users.embed(ex.user).dot(item_vecs[static_cast<size_t>(ex.item)]) -
        ex.label;
    loss += 0.5 * ex.weight * r * r;
  }
  return loss;
}

double quadratic_loss_theta(const Eigen::MatrixXd& theta,
                            const PublicFeatureMatrix& features,
                            const InteractionDataset& ds,
                            const Eigen::MatrixXd& user_table) {
  LinearEncoder enc(theta);
  UserEncoder users(user_table);
  return quadratic_loss(enc, features, ds, users);
}

Eigen::MatrixXd project_theta(const Eigen::MatrixXd& theta,
                              const PublicFeatureMatrix& features,
                              double bound) {
  if (!(bound > 0.0)) {
    throw std::invalid_argument("project_theta: bound must be positive");
  }
  double worst = 0.0;
  for (int j = 0; j < features.item_count(); ++j) {
    const SparseVector& x = features.row(j);
    double norm_sq = 0.0;
    for (int c = 0; c < theta.cols(); ++c) {
      const double s = x.dot_column(theta, c);
      norm_sq += s * s;
    }
    worst = std::max(worst, norm_sq);
  }
  worst = std::sqrt(worst);
  if (worst <= bound) return theta;
  return theta * (bound / worst);
}

Eigen::MatrixXd constrained_ls_theta(const PublicFeatureMatrix& features,
                                     const InteractionDataset& ds,
                                     const Eigen::MatrixXd& user_table,
                                     int embed_dim, double bound,
                                     int max_iters, double tol) {
  if (embed_dim < 1 || user_table.cols() != embed_dim) {
    throw std::invalid_argument("constrained_ls_theta: bad embed_dim");
  }
  const int m = ds.item_count;
  const int p = features.feature_dim();
  const int d = embed_dim;

  // Unclipped per-item second moments; fixed across iterations.
  std::vector<Eigen::MatrixXd> A(static_cast<size_t>(m),
                                 Eigen::MatrixXd::Zero(d, d));
  std::vector<Eigen::VectorXd> b(static_cast<size_t>(m),
                                 Eigen::VectorXd::Zero(d));
  for (const Interaction& ex : ds.examples) {
    const auto u = user_table.row(ex.user).transpose();
    A[static_cast<size_t>(ex.item)].noalias() +=
        ex.weight * (u * u.transpose());
    b[static_cast<size_t>(ex.item)].noalias() += ex.weight * ex.label * u;
  }

  // Step size from a Lipschitz bound on the quadratic:
  // lambda_max <= sum_j ||x_j||^2 ||A_j||_F.
  double lipschitz = 0.0;
  for (int j = 0; j < m; ++j) {
    lipschitz +=
        features.row(j).squared_norm() * A[static_cast<size_t>(j)].norm();
  }
  if (lipschitz <= 0.0) return Eigen::MatrixXd::Zero(p, d);
  const double eta = 1.0 / lipschitz;

  Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(p, d);
  for (int it = 0; it < max_iters; ++it) {
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(p, d);
    for (int j = 0; j < m; ++j) {
      const SparseVector& x = features.row(j);
      Eigen::VectorXd v(d);
      for (int c = 0; c < d; ++c) v(c) = x.dot_column(theta, c);
      const Eigen::VectorXd r =
          A[static_cast<size_t>(j)] * v - b[static_cast<size_t>(j)];
      for (size_t t = 0; t < x.idx.size(); ++t) {
        grad.row(x.idx[t]) += x.val[t] * r.transpose();
      }
    }
    const Eigen::MatrixXd next =
        project_theta(theta - eta * grad, features, bound);
    const double move = (next - theta).norm();
    theta = next;
    if (move <= tol * std::max(1.0, theta.norm())) break;
  }
  return theta;
}

double excess_risk(const Eigen::MatrixXd& theta_hat,
                   const Eigen::MatrixXd& oracle,
                   const PublicFeatureMatrix& features,
                   const InteractionDataset& ds,
                   const Eigen::MatrixXd& user_table) {
  return quadratic_loss_theta(theta_hat, features, ds, user_table) -
         quadratic_loss_theta(oracle, features, ds, user_table);
}

void append_metrics_csv(const std::string& path,
                        const std::vector<MetricsRow>& rows) {
  const bool fresh = !std::filesystem::exists(path);
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  if (fresh) out << "metric,epsilon,seed,value\n";
  for (const MetricsRow& row : rows) {
    out << row.metric << ',' << csv::format_double(row.epsilon) << ','
        << row.seed << ',' << csv::format_double(row.value) << '\n';
  }
}

}  // namespace pubfeat
