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
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "pubfeat/rng.hpp"

namespace pubfeat {

// Sparse feature vector with strictly increasing indices.
struct SparseVector {
  std::vector<int> idx;
  std::vector<double> val;

  int nnz() const { return static_cast<int>(idx.size()); }
  double squared_norm() const;
  double norm() const;
  double dot_column(const Eigen::MatrixXd& mat, int col) const;
};

// Public item-feature matrix: m rows (items) over p features.
class PublicFeatureMatrix {
 public:
  PublicFeatureMatrix(int feature_dim, std::vector<SparseVector> rows);

  int item_count() const { return static_cast<int>(rows_.size()); }
  int feature_dim() const { return feature_dim_; }
  const SparseVector& row(int item) const;
  double max_row_norm() const;
  Eigen::MatrixXd dense() const;  // m x p

 private:
  int feature_dim_;
  std::vector<SparseVector> rows_;
};

struct Interaction {
  int user = 0;
  int item = 0;
  double label = 0.0;
  double weight = 1.0;
};

struct InteractionDataset {
  std::vector<Interaction> examples;
  int user_count = 0;  // n
  int item_count = 0;  // m

  int64_t size() const { return static_cast<int64_t>(examples.size()); }
  // Throws std::invalid_argument on out-of-range ids, non-finite labels,
  // or negative weights.
  void validate() const;
};

// Index sets in example order: by_item[j] lists example indices of item j,
// by_user[k] those of user k.
struct Partition {
  std::vector<std::vector<int64_t>> by_item;
  std::vector<std::vector<int64_t>> by_user;
};

Partition partition(const InteractionDataset& ds);

PublicFeatureMatrix load_feature_matrix(const std::string& path);
void save_feature_matrix(const PublicFeatureMatrix& mat,
                         const std::string& path);
InteractionDataset load_interactions(const std::string& path);
void save_interactions(const InteractionDataset& ds, const std::string& path);
// Dense matrix dump with header row,col,value; rows ordered row-major.
void save_dense_matrix(const Eigen::MatrixXd& mat, const std::string& path);
Eigen::MatrixXd load_dense_matrix(const std::string& path);

// Maps arbitrary external int64 ids to dense 0-based ids in first-seen order.
class IdRemapper {
 public:
  int to_dense(int64_t external);
  int64_t to_external(int dense) const;
  int size() const { return static_cast<int>(originals_.size()); }

 private:
  std::unordered_map<int64_t, int> dense_;
  std::vector<int64_t> originals_;
};

struct RemapResult {
  IdRemapper users;
  IdRemapper items;
};

// Rewrites an interactions CSV with dense consecutive ids.
RemapResult remap_interactions_file(const std::string& in_path,
                                    const std::string& out_path);

struct SyntheticLinearConfig {
  int items = 32;           // m
  int users = 100;          // n
  int feature_dim = 512;    // p
  int embed_dim = 4;        // d
  int features_per_item = 8;
  int64_t examples = 1000;  // D
  double label_noise_std = 0.0;
  double user_norm_bound = 1.0;
  uint64_t seed = 0;
};

struct SyntheticLinear {
  PublicFeatureMatrix features;
  InteractionDataset data;
  Eigen::MatrixXd theta_star;  // p x d
  Eigen::MatrixXd user_star;   // n x d, rows clipped to user_norm_bound
};

// Ground-truth linear model: y_i = u_k^T theta*^T x_j + noise, with (k, j)
// drawn uniformly per example.
SyntheticLinear gen_synthetic_linear(const SyntheticLinearConfig& cfg);

}  // namespace pubfeat
