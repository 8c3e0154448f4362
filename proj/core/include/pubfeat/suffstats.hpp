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
#include <string>
#include <string_view>
#include <vector>

#include "pubfeat/dataio.hpp"
#include "pubfeat/encoder.hpp"
#include "pubfeat/rng.hpp"

namespace pubfeat {

// Norm clipping: returns x unchanged when its norm is within bound,
// otherwise x scaled to lie exactly on the bound. bound must be positive
// (+infinity disables clipping); non-finite inputs are rejected.
Eigen::VectorXd clip(const Eigen::VectorXd& x, double bound);   // L2 norm
Eigen::MatrixXd clip(const Eigen::MatrixXd& x, double bound);   // Frobenius
double clip(double x, double bound);                            // |x|

// Per-item quadratic-loss statistics over clipped user vectors and labels:
//   A_j = sum_{i in item j} w_i u_i u_i^T,  b_j = sum w_i y_i u_i.
struct ItemStats {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
};

std::vector<ItemStats> compute_stats(const InteractionDataset& ds,
                                     const Partition& part,
                                     const UserEncoder& users, double clip_u,
                                     double clip_y);

// Symmetric matrix with i.i.d. N(0,1) upper triangle mirrored below; draws
// the d(d+1)/2 entries in row-major upper-triangular order.
Eigen::MatrixXd symmetric_gaussian(int dim, Substream& s);

// Adds calibrated gaussian noise in place: A_j += sigma*clip_u^2 * sym noise,
// b_j += sigma*clip_u*clip_y * i.i.d. noise. Streams are keyed by
// (tag, round, item, field) with field 0 for A and 1 for b, so re-noising
// rounds and items are independent and order-free. sigma == 0 draws nothing.
void noise_stats(std::vector<ItemStats>& stats, double sigma, double clip_u,
                 double clip_y, const RngRoot& rng, std::string_view tag,
                 uint64_t round);

// Scalar loss l(s, y) of a prediction s, twice differentiable in s.
class ScalarLoss {
 public:
  virtual ~ScalarLoss() = default;
  virtual double value(double s, double y) const = 0;
  virtual double d1(double s, double y) const = 0;
  virtual double d2(double s, double y) const = 0;
};

// l = (s - y)^2 / 2.
class QuadraticLoss final : public ScalarLoss {
 public:
  double value(double s, double y) const override;
  double d1(double s, double y) const override;
  double d2(double s, double y) const override;
};

// l = log(1 + exp(-(2y-1) s)) for labels y in {0, 1}.
class LogisticLoss final : public ScalarLoss {
 public:
  double value(double s, double y) const override;
  double d1(double s, double y) const override;
  double d2(double s, double y) const override;
};

// Quadratic approximation of a general loss around the anchor item vectors
// v0_j = enc(x_j):
//   H_j = sum_i w_i clip(l''(u.v0, y) u u^T, clip_h)
//   g_j = sum_i w_i clip(l'(u.v0, y) u, clip_g)
// The anchor is retained for the inner gradient; it is public given theta0.
struct ConvexItemStats {
  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  Eigen::VectorXd anchor;
};

std::vector<ConvexItemStats> compute_convex_stats(
    const InteractionDataset& ds, const Partition& part,
    const UserEncoder& users, const PublicEncoder& enc,
    const PublicFeatureMatrix& features, const ScalarLoss& loss,
    double clip_u, double clip_y, double clip_h, double clip_g);

// H_j += sigma*clip_h * sym noise, g_j += sigma*clip_g * i.i.d. noise; keyed
// like noise_stats.
void noise_convex_stats(std::vector<ConvexItemStats>& stats, double sigma,
                        double clip_h, double clip_g, const RngRoot& rng,
                        std::string_view tag, uint64_t round);

// Stats dump with header item_id,kind,row,col,value; kind in {A,b,H,g}.
// Vector kinds use col 0.
void save_stats_csv(const std::string& path,
                    const std::vector<ItemStats>& stats);
void save_convex_stats_csv(const std::string& path,
                           const std::vector<ConvexItemStats>& stats);

}  // namespace pubfeat
