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

#include "pubfeat/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "pubfeat/csv.hpp"

namespace pubfeat {
namespace {

void check_dims(const char* who, Eigen::Index got, Eigen::Index want) {
  if (got != want) {
    throw std::invalid_argument(std::string(who) + ": expected size " +
                                std::to_string(want) + ", got " +
                                std::to_string(got));
  }
}

Eigen::MatrixXd random_matrix(int rows, int cols, Substream& s) {
  Eigen::MatrixXd out(rows, cols);
  const double scale = 1.0 / std::sqrt(static_cast<double>(cols));
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) out(r, c) = scale * s.gaussian();
  }
  return out;
}

}  // namespace

LinearEncoder::LinearEncoder(Eigen::MatrixXd theta)
    : theta_(std::move(theta)) {
  if (theta_.rows() < 1 || theta_.cols() < 1) {
    throw std::invalid_argument("linear encoder: theta must be nonempty");
  }
}

LinearEncoder LinearEncoder::random(int feature_dim, int output_dim,
                                    Substream s) {
  if (feature_dim < 1 || output_dim < 1) {
    throw std::invalid_argument("linear encoder: dims must be >= 1");
  }
  return LinearEncoder(random_matrix(feature_dim, output_dim, s));
}

Eigen::VectorXd LinearEncoder::forward(const SparseVector& x) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(output_dim());
  for (size_t t = 0; t < x.idx.size(); ++t) {
    if (x.idx[t] >= feature_dim()) {
      throw std::invalid_argument("linear encoder: feature index out of range");
    }
    v += x.val[t] * theta_.row(x.idx[t]).transpose();
  }
  return v;
}

void LinearEncoder::add_vjp(const SparseVector& x, const Eigen::VectorXd& r,
                            Eigen::Ref<Eigen::VectorXd> grad) const {
  check_dims("linear add_vjp: r", r.size(), output_dim());
  check_dims("linear add_vjp: grad", grad.size(), param_count());
  const int d = output_dim();
  for (size_t t = 0; t < x.idx.size(); ++t) {
    grad.segment(static_cast<Eigen::Index>(x.idx[t]) * d, d) +=
        x.val[t] * r;
  }
}

std::vector<int> LinearEncoder::sparsity_pattern(const SparseVector& x) const {
  return x.idx;
}

void LinearEncoder::gradient_step(const Eigen::VectorXd& grad, double lr) {
  check_dims("linear gradient_step: grad", grad.size(), param_count());
  // Flat layout is row-major; theta_ is column-major, so map with the
  // transposed shape.
  theta_ -= lr * Eigen::Map<const Eigen::MatrixXd>(
                     grad.data(), theta_.cols(), theta_.rows())
                     .transpose();
}

Eigen::VectorXd LinearEncoder::flat_params() const {
  Eigen::VectorXd out(param_count());
  Eigen::Map<Eigen::MatrixXd>(out.data(), theta_.cols(), theta_.rows()) =
      theta_.transpose();
  return out;
}

void LinearEncoder::set_flat_params(const Eigen::VectorXd& params) {
  check_dims("linear set_flat_params", params.size(), param_count());
  theta_ = Eigen::Map<const Eigen::MatrixXd>(params.data(), theta_.cols(),
                                             theta_.rows())
               .transpose();
}

std::unique_ptr<PublicEncoder> LinearEncoder::clone() const {
  return std::make_unique<LinearEncoder>(*this);
}

TwoLayerEncoder::TwoLayerEncoder(Eigen::MatrixXd embedding,
                                 Eigen::MatrixXd dense, Activation activation)
    : embedding_(std::move(embedding)),
      dense_(std::move(dense)),
      activation_(activation) {
  if (embedding_.rows() < 1 || embedding_.cols() < 1) {
    throw std::invalid_argument("two-layer encoder: embedding must be nonempty");
  }
  if (dense_.rows() != embedding_.cols() || dense_.cols() < 1) {
    throw std::invalid_argument(
        "two-layer encoder: dense rows must match embedding cols");
  }
}

TwoLayerEncoder TwoLayerEncoder::random(int feature_dim, int output_dim,
                                        Activation activation, Substream s) {
  if (feature_dim < 1 || output_dim < 1) {
    throw std::invalid_argument("two-layer encoder: dims must be >= 1");
  }
  Eigen::MatrixXd embedding = random_matrix(feature_dim, output_dim, s);
  Eigen::MatrixXd dense = random_matrix(output_dim, output_dim, s);
  return TwoLayerEncoder(std::move(embedding), std::move(dense), activation);
}

Eigen::VectorXd TwoLayerEncoder::hidden(const SparseVector& x) const {
  Eigen::VectorXd h = Eigen::VectorXd::Zero(embedding_.cols());
  for (size_t t = 0; t < x.idx.size(); ++t) {
    if (x.idx[t] >= feature_dim()) {
      throw std::invalid_argument(
          "two-layer encoder: feature index out of range");
    }
    h += x.val[t] * embedding_.row(x.idx[t]).transpose();
  }
  return h;
}

Eigen::VectorXd TwoLayerEncoder::forward(const SparseVector& x) const {
  Eigen::VectorXd a = hidden(x);
  if (activation_ == Activation::kTanh) a = a.array().tanh();
  return dense_.transpose() * a;
}

void TwoLayerEncoder::add_vjp(const SparseVector& x, const Eigen::VectorXd& r,
                              Eigen::Ref<Eigen::VectorXd> grad) const {
  check_dims("two-layer add_vjp: r", r.size(), output_dim());
  check_dims("two-layer add_vjp: grad", grad.size(), param_count());
  const int d = output_dim();
  const Eigen::VectorXd h = hidden(x);
  Eigen::VectorXd a = h;
  if (activation_ == Activation::kTanh) a = a.array().tanh();

  // Dense block: d<a, W r>/dW = a r^T, stored row-major after the embedding.
  const Eigen::VectorXd wr = dense_ * r;
  const Eigen::Index dense_base = embedding_.size();
  for (int i = 0; i < d; ++i) {
    grad.segment(dense_base + static_cast<Eigen::Index>(i) * d, d) +=
        a(i) * r;
  }

  // Embedding block: chain through the activation.
  Eigen::VectorXd back = wr;
  if (activation_ == Activation::kTanh) {
    back.array() *= 1.0 - a.array().square();
  }
  for (size_t t = 0; t < x.idx.size(); ++t) {
    grad.segment(static_cast<Eigen::Index>(x.idx[t]) * d, d) +=
        x.val[t] * back;
  }
}

std::vector<int> TwoLayerEncoder::sparsity_pattern(
    const SparseVector& x) const {
  return x.idx;
}

void TwoLayerEncoder::gradient_step(const Eigen::VectorXd& grad, double lr) {
  check_dims("two-layer gradient_step: grad", grad.size(), param_count());
  const int d = output_dim();
  embedding_ -= lr * Eigen::Map<const Eigen::MatrixXd>(
                         grad.data(), d, embedding_.rows())
                         .transpose();
  dense_ -= lr * Eigen::Map<const Eigen::MatrixXd>(
                     grad.data() + embedding_.size(), d, d)
                     .transpose();
}

Eigen::VectorXd TwoLayerEncoder::flat_params() const {
  Eigen::VectorXd out(param_count());
  const int d = output_dim();
  Eigen::Map<Eigen::MatrixXd>(out.data(), d, embedding_.rows()) =
      embedding_.transpose();
  Eigen::Map<Eigen::MatrixXd>(out.data() + embedding_.size(), d, d) =
      dense_.transpose();
  return out;
}

void TwoLayerEncoder::set_flat_params(const Eigen::VectorXd& params) {
  check_dims("two-layer set_flat_params", params.size(), param_count());
  const int d = output_dim();
  embedding_ = Eigen::Map<const Eigen::MatrixXd>(params.data(), d,
                                                 embedding_.rows())
                   .transpose();
  dense_ = Eigen::Map<const Eigen::MatrixXd>(params.data() + embedding_.size(),
                                             d, d)
               .transpose();
}

std::unique_ptr<PublicEncoder> TwoLayerEncoder::clone() const {
  return std::make_unique<TwoLayerEncoder>(*this);
}

UserEncoder::UserEncoder(Eigen::MatrixXd table) : table_(std::move(table)) {
  if (table_.rows() < 1 || table_.cols() < 1) {
    throw std::invalid_argument("user encoder: table must be nonempty");
  }
}

UserEncoder UserEncoder::random(int user_count, int dim, Substream s) {
  if (user_count < 1 || dim < 1) {
    throw std::invalid_argument("user encoder: dims must be >= 1");
  }
  return UserEncoder(random_matrix(user_count, dim, s));
}

Eigen::VectorXd UserEncoder::embed(int user) const {
  if (user < 0 || user >= user_count()) {
    throw std::out_of_range("user encoder: user id out of range");
  }
  return table_.row(user).transpose();
}

void UserEncoder::set_row(int user, const Eigen::VectorXd& u) {
  if (user < 0 || user >= user_count()) {
    throw std::out_of_range("user encoder: user id out of range");
  }
  check_dims("user set_row", u.size(), dim());
  table_.row(user) = u.transpose();
}

namespace {

void write_layer(csv::Writer& writer, const std::string& layer,
                 const Eigen::MatrixXd& mat) {
  for (Eigen::Index r = 0; r < mat.rows(); ++r) {
    for (Eigen::Index c = 0; c < mat.cols(); ++c) {
      writer.begin_row();
      writer.field(layer);
      writer.field(static_cast<int64_t>(r));
      writer.field(static_cast<int64_t>(c));
      writer.field(mat(r, c));
      writer.end_row();
    }
  }
}

}  // namespace

void save_checkpoint(const std::string& path, const PublicEncoder* encoder,
                     const UserEncoder* users) {
  csv::Writer writer(path, "layer,row,col,value");
  if (encoder != nullptr) {
    if (const auto* lin = dynamic_cast<const LinearEncoder*>(encoder)) {
      write_layer(writer, "linear", lin->theta());
    } else if (const auto* two =
                   dynamic_cast<const TwoLayerEncoder*>(encoder)) {
      write_layer(writer, "embedding", two->embedding());
      write_layer(writer, "dense", two->dense());
    } else {
      throw std::invalid_argument("save_checkpoint: unknown encoder type");
    }
  }
  if (users != nullptr) write_layer(writer, "user", users->table());
}

Checkpoint load_checkpoint(const std::string& path, Activation activation) {
  csv::Reader reader(path, "layer,row,col,value");
  std::map<std::string, std::map<std::pair<int64_t, int64_t>, double>> layers;
  while (reader.next()) {
    const std::string& layer = reader.fields()[0];
    const int64_t r = reader.int_field(1);
    const int64_t c = reader.int_field(2);
    const double v = reader.double_field(3);
    if (layer != "linear" && layer != "embedding" && layer != "dense" &&
        layer != "user") {
      reader.fail("unknown layer '" + layer + "'");
    }
    if (r < 0 || c < 0) reader.fail("negative index");
    if (!layers[layer].emplace(std::make_pair(r, c), v).second) {
      reader.fail("duplicate entry in layer '" + layer + "'");
    }
  }

  auto to_matrix = [&](const std::string& layer) {
    const auto& entries = layers.at(layer);
    int64_t max_row = -1, max_col = -1;
    for (const auto& [key, value] : entries) {
      max_row = std::max(max_row, key.first);
      max_col = std::max(max_col, key.second);
    }
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(max_row + 1, max_col + 1);
    for (const auto& [key, value] : entries) {
      out(key.first, key.second) = value;
    }
    return out;
  };

  Checkpoint ckpt;
  const bool has_linear = layers.count("linear") > 0;
  const bool has_embedding = layers.count("embedding") > 0;
  const bool has_dense = layers.count("dense") > 0;
  if (has_linear && (has_embedding || has_dense)) {
    throw std::runtime_error(path +
                             ": checkpoint mixes linear and two-layer parts");
  }
  if (has_embedding != has_dense) {
    throw std::runtime_error(path +
                             ": two-layer checkpoint needs both embedding "
                             "and dense layers");
  }
  if (has_linear) {
    ckpt.encoder = std::make_unique<LinearEncoder>(to_matrix("linear"));
  } else if (has_embedding) {
    ckpt.encoder = std::make_unique<TwoLayerEncoder>(
        to_matrix("embedding"), to_matrix("dense"), activation);
  }
  if (layers.count("user") > 0) {
    ckpt.users.emplace(to_matrix("user"));
  }
  if (!ckpt.encoder && !ckpt.users.has_value()) {
    throw std::runtime_error(path + ": checkpoint has no layers");
  }
  return ckpt;
}

}  // namespace pubfeat
