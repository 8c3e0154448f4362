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
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pubfeat/dataio.hpp"
#include "pubfeat/rng.hpp"

namespace pubfeat {

enum class Activation { kIdentity, kTanh };

// Differentiable map from a public sparse feature vector to an item vector
// v in R^d. Parameters are exposed through one flat vector; the first
// embedding_rows()*output_dim() entries are the first-layer table stored
// row-major (row l occupies [l*d, l*d+d)), any dense block follows.
class PublicEncoder {
 public:
  virtual ~PublicEncoder() = default;

  virtual int output_dim() const = 0;     // d
  virtual int feature_dim() const = 0;    // p
  virtual int param_count() const = 0;    // total flat parameters
  virtual int embedding_rows() const = 0;

  virtual Eigen::VectorXd forward(const SparseVector& x) const = 0;
  // grad += d<forward(x), r>/dtheta. Touches only the embedding rows named
  // by sparsity_pattern(x) within the first-layer block.
  virtual void add_vjp(const SparseVector& x, const Eigen::VectorXd& r,
                       Eigen::Ref<Eigen::VectorXd> grad) const = 0;
  // Embedding rows the VJP can touch for input x: exactly the nonzero
  // feature indices, sorted. Dense blocks after the first layer are always
  // touched and are not listed here.
  virtual std::vector<int> sparsity_pattern(const SparseVector& x) const = 0;

  // theta -= lr * grad.
  virtual void gradient_step(const Eigen::VectorXd& grad, double lr) = 0;
  virtual Eigen::VectorXd flat_params() const = 0;
  virtual void set_flat_params(const Eigen::VectorXd& params) = 0;
  virtual std::unique_ptr<PublicEncoder> clone() const = 0;
};

// v = theta^T x with theta in R^{p x d}.
class LinearEncoder final : public PublicEncoder {
 public:
  explicit LinearEncoder(Eigen::MatrixXd theta);
  // Entries i.i.d. N(0, 1/d).
  static LinearEncoder random(int feature_dim, int output_dim, Substream s);

  const Eigen::MatrixXd& theta() const { return theta_; }
  Eigen::MatrixXd& theta() { return theta_; }

  int output_dim() const override { return static_cast<int>(theta_.cols()); }
  int feature_dim() const override { return static_cast<int>(theta_.rows()); }
  int param_count() const override {
    return static_cast<int>(theta_.size());
  }
  int embedding_rows() const override { return feature_dim(); }
  Eigen::VectorXd forward(const SparseVector& x) const override;
  void add_vjp(const SparseVector& x, const Eigen::VectorXd& r,
               Eigen::Ref<Eigen::VectorXd> grad) const override;
  std::vector<int> sparsity_pattern(const SparseVector& x) const override;
  void gradient_step(const Eigen::VectorXd& grad, double lr) override;
  Eigen::VectorXd flat_params() const override;
  void set_flat_params(const Eigen::VectorXd& params) override;
  std::unique_ptr<PublicEncoder> clone() const override;

 private:
  Eigen::MatrixXd theta_;  // p x d
};

// v = W^T act(E^T x) with embedding E in R^{p x d} and dense W in R^{d x d}.
class TwoLayerEncoder final : public PublicEncoder {
 public:
  TwoLayerEncoder(Eigen::MatrixXd embedding, Eigen::MatrixXd dense,
                  Activation activation);
  static TwoLayerEncoder random(int feature_dim, int output_dim,
                                Activation activation, Substream s);

  const Eigen::MatrixXd& embedding() const { return embedding_; }
  const Eigen::MatrixXd& dense() const { return dense_; }
  Activation activation() const { return activation_; }

  int output_dim() const override {
    return static_cast<int>(dense_.cols());
  }
  int feature_dim() const override {
    return static_cast<int>(embedding_.rows());
  }
  int param_count() const override {
    return static_cast<int>(embedding_.size() + dense_.size());
  }
  int embedding_rows() const override { return feature_dim(); }
  Eigen::VectorXd forward(const SparseVector& x) const override;
  void add_vjp(const SparseVector& x, const Eigen::VectorXd& r,
               Eigen::Ref<Eigen::VectorXd> grad) const override;
  std::vector<int> sparsity_pattern(const SparseVector& x) const override;
  void gradient_step(const Eigen::VectorXd& grad, double lr) override;
  Eigen::VectorXd flat_params() const override;
  void set_flat_params(const Eigen::VectorXd& params) override;
  std::unique_ptr<PublicEncoder> clone() const override;

 private:
  Eigen::VectorXd hidden(const SparseVector& x) const;

  Eigen::MatrixXd embedding_;  // p x d
  Eigen::MatrixXd dense_;      // d x d
  Activation activation_;
};

// Private per-user embedding table, n rows of dimension d.
class UserEncoder {
 public:
  explicit UserEncoder(Eigen::MatrixXd table);
  static UserEncoder random(int user_count, int dim, Substream s);

  int user_count() const { return static_cast<int>(table_.rows()); }
  int dim() const { return static_cast<int>(table_.cols()); }
  Eigen::VectorXd embed(int user) const;
  void set_row(int user, const Eigen::VectorXd& u);
  const Eigen::MatrixXd& table() const { return table_; }

 private:
  Eigen::MatrixXd table_;
};

// Checkpoint CSV with header layer,row,col,value. Layer names: "linear" for
// LinearEncoder, "embedding"/"dense" for TwoLayerEncoder, "user" for the
// user table. Either encoder pointer may be null to omit that part.
void save_checkpoint(const std::string& path, const PublicEncoder* encoder,
                     const UserEncoder* users);

struct Checkpoint {
  std::unique_ptr<PublicEncoder> encoder;  // null if absent from file
  std::optional<UserEncoder> users;
};

// Activations are not serialized; callers supply one for two-layer weights.
Checkpoint load_checkpoint(const std::string& path,
                           Activation activation = Activation::kIdentity);

}  // namespace pubfeat
