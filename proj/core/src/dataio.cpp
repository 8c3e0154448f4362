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

#include "pubfeat/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "pubfeat/csv.hpp"

namespace pubfeat {

double SparseVector::squared_norm() const {
  double s = 0.0;
  for (double v : val) s += v * v;
  return s;
}

double SparseVector::norm() const { return std::sqrt(squared_norm()); }

double SparseVector::dot_column(const Eigen::MatrixXd& mat, int col) const {
  double s = 0.0;
  for (size_t t = 0; t < idx.size(); ++t) s += val[t] * mat(idx[t], col);
  return s;
}

PublicFeatureMatrix::PublicFeatureMatrix(int feature_dim,
                                         std::vector<SparseVector> rows)
    : feature_dim_(feature_dim), rows_(std::move(rows)) {
  if (feature_dim_ < 1) {
    throw std::invalid_argument("feature matrix: feature_dim must be >= 1");
  }
  for (size_t j = 0; j < rows_.size(); ++j) {
    const SparseVector& r = rows_[j];
    if (r.idx.size() != r.val.size()) {
      throw std::invalid_argument("feature matrix: row " + std::to_string(j) +
                                  " has mismatched index/value lengths");
    }
    int prev = -1;
    for (size_t t = 0; t < r.idx.size(); ++t) {
      if (r.idx[t] <= prev) {
        throw std::invalid_argument(
            "feature matrix: row " + std::to_string(j) +
            " indices must be strictly increasing");
      }
      if (r.idx[t] >= feature_dim_) {
        throw std::invalid_argument("feature matrix: row " +
                                    std::to_string(j) +
                                    " has feature index out of range");
      }
      if (!std::isfinite(r.val[t])) {
        throw std::invalid_argument("feature matrix: row " +
                                    std::to_string(j) +
                                    " has non-finite value");
      }
      prev = r.idx[t];
    }
  }
}

const SparseVector& PublicFeatureMatrix::row(int item) const {
  if (item < 0 || item >= item_count()) {
    throw std::out_of_range("feature matrix: item index out of range");
  }
  return rows_[static_cast<size_t>(item)];
}

double PublicFeatureMatrix::max_row_norm() const {
  double best = 0.0;
  for (const auto& r : rows_) best = std::max(best, r.norm());
  return best;
}

Eigen::MatrixXd PublicFeatureMatrix::dense() const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(item_count(), feature_dim_);
  for (int j = 0; j < item_count(); ++j) {
    const SparseVector& r = rows_[static_cast<size_t>(j)];
    for (size_t t = 0; t < r.idx.size(); ++t) out(j, r.idx[t]) = r.val[t];
  }
  return out;
}

void InteractionDataset::validate() const {
  for (size_t i = 0; i < examples.size(); ++i) {
    const Interaction& ex = examples[i];
    if (ex.user < 0 || ex.user >= user_count) {
      throw std::invalid_argument("dataset: example " + std::to_string(i) +
                                  " has user id out of range");
    }
    if (ex.item < 0 || ex.item >= item_count) {
      throw std::invalid_argument("dataset: example " + std::to_string(i) +
                                  " has item id out of range");
    }
    if (!std::isfinite(ex.label)) {
      throw std::invalid_argument("dataset: example " + std::to_string(i) +
                                  " has non-finite label");
    }
    if (!std::isfinite(ex.weight) || ex.weight < 0.0) {
      throw std::invalid_argument("dataset: example " + std::to_string(i) +
                                  " has invalid weight");
    }
  }
}

Partition partition(const InteractionDataset& ds) {
  ds.validate();
  Partition part;
  part.by_item.resize(static_cast<size_t>(ds.item_count));
  part.by_user.resize(static_cast<size_t>(ds.user_count));
  for (int64_t i = 0; i < ds.size(); ++i) {
    const Interaction& ex = ds.examples[static_cast<size_t>(i)];
    part.by_item[static_cast<size_t>(ex.item)].push_back(i);
    part.by_user[static_cast<size_t>(ex.user)].push_back(i);
  }
  return part;
}

PublicFeatureMatrix load_feature_matrix(const std::string& path) {
  csv::Reader reader(path, "item_id,feature_id,value");
  std::map<std::pair<int64_t, int64_t>, double> entries;
  int64_t max_item = -1;
  int64_t max_feature = -1;
  while (reader.next()) {
    const int64_t item = reader.int_field(0);
    const int64_t feature = reader.int_field(1);
    const double value = reader.double_field(2);
    if (item < 0 || feature < 0) reader.fail("negative id");
    if (!std::isfinite(value)) reader.fail("non-finite value");
    if (!entries.emplace(std::make_pair(item, feature), value).second) {
      reader.fail("duplicate entry for item " + std::to_string(item) +
                  " feature " + std::to_string(feature));
    }
    max_item = std::max(max_item, item);
    max_feature = std::max(max_feature, feature);
  }
  if (entries.empty()) throw std::runtime_error(path + ": no items");
  std::vector<SparseVector> rows(static_cast<size_t>(max_item + 1));
  for (const auto& [key, value] : entries) {
    SparseVector& r = rows[static_cast<size_t>(key.first)];
    r.idx.push_back(static_cast<int>(key.second));
    r.val.push_back(value);
  }
  return PublicFeatureMatrix(static_cast<int>(max_feature + 1),
                             std::move(rows));
}

void save_feature_matrix(const PublicFeatureMatrix& mat,
                         const std::string& path) {
  csv::Writer writer(path, "item_id,feature_id,value");
  for (int j = 0; j < mat.item_count(); ++j) {
    const SparseVector& r = mat.row(j);
    for (size_t t = 0; t < r.idx.size(); ++t) {
      writer.begin_row();
      writer.field(static_cast<int64_t>(j));
      writer.field(static_cast<int64_t>(r.idx[t]));
      writer.field(r.val[t]);
      writer.end_row();
    }
  }
}

InteractionDataset load_interactions(const std::string& path) {
  csv::Reader reader(path, "user_id,item_id,rating");
  InteractionDataset ds;
  int64_t max_user = -1;
  int64_t max_item = -1;
  while (reader.next()) {
    const int64_t user = reader.int_field(0);
    const int64_t item = reader.int_field(1);
    const double rating = reader.double_field(2);
    if (user < 0 || item < 0) reader.fail("negative id");
    if (!std::isfinite(rating)) reader.fail("non-finite rating");
    ds.examples.push_back(Interaction{static_cast<int>(user),
                                      static_cast<int>(item), rating, 1.0});
    max_user = std::max(max_user, user);
    max_item = std::max(max_item, item);
  }
  ds.user_count = static_cast<int>(max_user + 1);
  ds.item_count = static_cast<int>(max_item + 1);
  return ds;
}

void save_interactions(const InteractionDataset& ds, const std::string& path) {
  csv::Writer writer(path, "user_id,item_id,rating");
  for (const Interaction& ex : ds.examples) {
    writer.begin_row();
    writer.field(static_cast<int64_t>(ex.user));
    writer.field(static_cast<int64_t>(ex.item));
    writer.field(ex.label);
    writer.end_row();
  }
}

void save_dense_matrix(const Eigen::MatrixXd& mat, const std::string& path) {
  csv::Writer writer(path, "row,col,value");
  for (Eigen::Index r = 0; r < mat.rows(); ++r) {
    for (Eigen::Index c = 0; c < mat.cols(); ++c) {
      writer.begin_row();
      writer.field(static_cast<int64_t>(r));
      writer.field(static_cast<int64_t>(c));
      writer.field(mat(r, c));
      writer.end_row();
    }
  }
}

Eigen::MatrixXd load_dense_matrix(const std::string& path) {
  csv::Reader reader(path, "row,col,value");
  std::map<std::pair<int64_t, int64_t>, double> entries;
  int64_t max_row = -1;
  int64_t max_col = -1;
  while (reader.next()) {
    const int64_t r = reader.int_field(0);
    const int64_t c = reader.int_field(1);
    const double v = reader.double_field(2);
    if (r < 0 || c < 0) reader.fail("negative index");
    if (!std::isfinite(v)) reader.fail("non-finite value");
    if (!entries.emplace(std::make_pair(r, c), v).second) {
      reader.fail("duplicate entry");
    }
    max_row = std::max(max_row, r);
    max_col = std::max(max_col, c);
  }
  if (entries.empty()) throw std::runtime_error(path + ": empty matrix");
  Eigen::MatrixXd out =
      Eigen::MatrixXd::Zero(max_row + 1, max_col + 1);
  for (const auto& [key, value] : entries) out(key.first, key.second) = value;
  return out;
}

int IdRemapper::to_dense(int64_t external) {
  auto [it, inserted] =
      dense_.emplace(external, static_cast<int>(originals_.size()));
  if (inserted) originals_.push_back(external);
  return it->second;
}

int64_t IdRemapper::to_external(int dense) const {
  if (dense < 0 || dense >= size()) {
    throw std::out_of_range("id remap: dense id out of range");
  }
  return originals_[static_cast<size_t>(dense)];
}

RemapResult remap_interactions_file(const std::string& in_path,
                                    const std::string& out_path) {
  csv::Reader reader(in_path, "user_id,item_id,rating");
  csv::Writer writer(out_path, "user_id,item_id,rating");
  RemapResult maps;
  while (reader.next()) {
    const int64_t user = reader.int_field(0);
    const int64_t item = reader.int_field(1);
    const double rating = reader.double_field(2);
    if (user < 0 || item < 0) reader.fail("negative id");
    writer.begin_row();
    writer.field(static_cast<int64_t>(maps.users.to_dense(user)));
    writer.field(static_cast<int64_t>(maps.items.to_dense(item)));
    writer.field(rating);
    writer.end_row();
  }
  return maps;
}

SyntheticLinear gen_synthetic_linear(const SyntheticLinearConfig& cfg) {
  if (cfg.items < 1 || cfg.users < 1 || cfg.feature_dim < 1 ||
      cfg.embed_dim < 1) {
    throw std::invalid_argument("gen_synthetic_linear: dims must be >= 1");
  }
  if (cfg.features_per_item < 1 ||
      cfg.features_per_item > cfg.feature_dim) {
    throw std::invalid_argument(
        "gen_synthetic_linear: need 1 <= features_per_item <= feature_dim");
  }
  if (cfg.examples < 0) {
    throw std::invalid_argument("gen_synthetic_linear: examples must be >= 0");
  }
  if (cfg.label_noise_std < 0.0 || cfg.user_norm_bound <= 0.0) {
    throw std::invalid_argument(
        "gen_synthetic_linear: need label_noise_std >= 0, user_norm_bound > "
        "0");
  }
  const RngRoot rng(cfg.seed);

  Eigen::MatrixXd theta(cfg.feature_dim, cfg.embed_dim);
  {
    Substream s = rng.stream("synthetic/theta");
    for (int r = 0; r < cfg.feature_dim; ++r) {
      for (int c = 0; c < cfg.embed_dim; ++c) theta(r, c) = s.gaussian();
    }
  }

  Eigen::MatrixXd users(cfg.users, cfg.embed_dim);
  {
    Substream s = rng.stream("synthetic/users");
    for (int r = 0; r < cfg.users; ++r) {
      for (int c = 0; c < cfg.embed_dim; ++c) users(r, c) = s.gaussian();
      const double norm = users.row(r).norm();
      if (norm > cfg.user_norm_bound) {
        users.row(r) *= cfg.user_norm_bound / norm;
      }
    }
  }

  std::vector<SparseVector> rows(static_cast<size_t>(cfg.items));
  for (int j = 0; j < cfg.items; ++j) {
    Substream s = rng.stream("synthetic/features", static_cast<uint64_t>(j));
    const std::vector<int64_t> picked = sample_without_replacement(
        s, cfg.feature_dim, cfg.features_per_item);
    SparseVector& r = rows[static_cast<size_t>(j)];
    for (int64_t f : picked) r.idx.push_back(static_cast<int>(f));
    for (size_t t = 0; t < r.idx.size(); ++t) r.val.push_back(s.gaussian());
  }
  PublicFeatureMatrix features(cfg.feature_dim, std::move(rows));

  InteractionDataset ds;
  ds.user_count = cfg.users;
  ds.item_count = cfg.items;
  ds.examples.reserve(static_cast<size_t>(cfg.examples));
  {
    Substream s = rng.stream("synthetic/examples");
    for (int64_t i = 0; i < cfg.examples; ++i) {
      const int k = static_cast<int>(
          s.uniform_int(static_cast<uint64_t>(cfg.users)));
      const int j = static_cast<int>(
          s.uniform_int(static_cast<uint64_t>(cfg.items)));
      Eigen::VectorXd item_vec(cfg.embed_dim);
      for (int c = 0; c < cfg.embed_dim; ++c) {
        item_vec(c) = features.row(j).dot_column(theta, c);
      }
      double y = users.row(k).dot(item_vec);
      if (cfg.label_noise_std > 0.0) {
        y += cfg.label_noise_std * s.gaussian();
      }
      ds.examples.push_back(Interaction{k, j, y, 1.0});
    }
  }

  return SyntheticLinear{std::move(features), std::move(ds),
                         std::move(theta), std::move(users)};
}

}  // namespace pubfeat
