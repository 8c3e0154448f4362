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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pubfeat/dataio.hpp"
#include "pubfeat/encoder.hpp"
#include "pubfeat/evalmetrics.hpp"
#include "pubfeat/rng.hpp"
#include "pubfeat/suffstats.hpp"

namespace pubfeat {

enum class LrSchedule { kConstant, kInvSqrt };

struct TrainConfig {
  int steps = 100;          // T; 0 returns the initial encoder unchanged
  int batch_size = 0;       // mini-batch size; 0 means full
  double learning_rate = 0.1;
  LrSchedule schedule = LrSchedule::kConstant;
  double clip_u = 1.0;      // Gamma_u
  double clip_y = 1.0;      // Gamma_y
  double clip_g = 1.0;      // Gamma_g, per-example gradient bound
  double clip_h = 1.0;      // Gamma_H, curvature bound
  double lambda_u = 0.0;
  double lambda_v = 0.0;
  int outer_steps = 1;      // alternating-minimization rounds
  int inner_steps = 1;      // inner descent steps per convex outer round
  double rho = 0.0;         // noise-to-step coupling of the projected runs
  double theta_bound = 0.0;     // feasible-set bound; 0 derives clip_y/clip_u
  double domain_diameter = 0.0; // |Theta|; 0 derives a heuristic
  int trace_every = 1;      // 0 records endpoints only
  uint64_t seed = 0;
};

struct TraceRow {
  int step = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
  double elapsed_ms = 0.0;
};

struct TrainTrace {
  std::vector<TraceRow> rows;
  // Individual statistic releases: each (A, b) or (H, g) round counts 2,
  // each released dpsgd/gd gradient counts 1.
  int stat_releases = 0;
  int steps_run = 0;
  double sigma = 0.0;
};

void save_trace_csv(const std::string& path, const TrainTrace& trace);

// Factored gradient of the quadratic objective through per-item statistics:
//   G = sum_j J_j [A_j v_j - b_j + lambda_v v_j],   v_j = enc(x_j),
// where J_j is the encoder VJP at x_j. Accumulation order is item order.
Eigen::VectorXd stats_gradient(const PublicEncoder& enc,
                               const PublicFeatureMatrix& features,
                               std::span<const ItemStats> stats,
                               double lambda_v = 0.0);
// Same sum restricted to the given items (ascending, in-range, no repeats).
Eigen::VectorXd stats_gradient_batch(const PublicEncoder& enc,
                                     const PublicFeatureMatrix& features,
                                     std::span<const ItemStats> stats,
                                     std::span<const int64_t> items,
                                     double lambda_v = 0.0);
// stats_gradient with lambda_v = 0; named for its role as the factored side
// of the gradient-equivalence check.
Eigen::VectorXd exact_gradient_factored(const PublicEncoder& enc,
                                        const PublicFeatureMatrix& features,
                                        std::span<const ItemStats> stats);
// Reference gradient summed example by example with raw users and labels:
//   G = sum_i w_i J_{j_i} [(u_i . v_{j_i} - y_i) u_i].
// Independent of the statistics path; forwards are recomputed per example.
Eigen::VectorXd exact_gradient_naive(const PublicEncoder& enc,
                                     const PublicFeatureMatrix& features,
                                     const InteractionDataset& ds,
                                     const UserEncoder& users);
// Inner gradient of the quadratic surrogate: G = sum_j J_j [H_j (v_j -
// anchor_j) + g_j].
Eigen::VectorXd convex_stats_gradient(const PublicEncoder& enc,
                                      const PublicFeatureMatrix& features,
                                      std::span<const ConvexItemStats> stats);

// General-loss data objective sum_i w_i l(u_i . v_{j_i}, y_i) on raw inputs.
double dataset_loss(const PublicEncoder& enc,
                    const PublicFeatureMatrix& features,
                    const InteractionDataset& ds, const UserEncoder& users,
                    const ScalarLoss& loss);

// Full-batch statistics trainers. Statistics are computed once; noise is
// drawn once for ssp2, fresh per step for ssp1, and once per block of
// steps/resamples steps for ssp_resampled (resamples must divide steps).
// ssp2 == ssp_resampled(1) and ssp1 == ssp_resampled(steps) exactly.
TrainTrace ssp1(PublicEncoder& enc, const InteractionDataset& ds,
                const PublicFeatureMatrix& features, const UserEncoder& users,
                const TrainConfig& cfg, double sigma, const RngRoot& rng);
TrainTrace ssp2(PublicEncoder& enc, const InteractionDataset& ds,
                const PublicFeatureMatrix& features, const UserEncoder& users,
                const TrainConfig& cfg, double sigma, const RngRoot& rng);
TrainTrace ssp_resampled(PublicEncoder& enc, const InteractionDataset& ds,
                         const PublicFeatureMatrix& features,
                         const UserEncoder& users, const TrainConfig& cfg,
                         double sigma, const RngRoot& rng, int resamples);

// Example-batched variant: each step draws batch_size examples without
// replacement, builds fresh statistics over all items from that batch, and
// re-noises them. batch_size == D with sigma == 0 matches the full method.
TrainTrace ssp1_minibatch(PublicEncoder& enc, const InteractionDataset& ds,
                          const PublicFeatureMatrix& features,
                          const UserEncoder& users, const TrainConfig& cfg,
                          double sigma, const RngRoot& rng);
// Item-batched variant: statistics are noised once; each step applies the
// factored gradient over batch_size sampled items. batch_size == m matches
// ssp2 step for step.
TrainTrace ssp2_minibatch(PublicEncoder& enc, const InteractionDataset& ds,
                          const PublicFeatureMatrix& features,
                          const UserEncoder& users, const TrainConfig& cfg,
                          double sigma, const RngRoot& rng);

// Descent loop of ssp2_minibatch after the statistics are released: each of
// cfg.steps steps samples batch_size items (0 = all) from
// stream("ssp/batch", t) and applies the factored gradient. Touches only
// released statistics and public features; the optional probe supplies the
// trace loss (rows record NaN without one).
TrainTrace item_steps_on_stats(PublicEncoder& enc,
                               const PublicFeatureMatrix& features,
                               std::span<const ItemStats> stats,
                               const TrainConfig& cfg, const RngRoot& rng,
                               const std::function<double()>& probe = {});

// Per-example clipped gradient descent with dense noise on every parameter:
//   G = sum_{i in batch} clip(J_{j_i}[(u_i . v_{j_i} - y_i) u_i], clip_g)
//     + sigma * clip_g * N(0, I).
// Example weights are ignored; the per-example clip fixes sensitivity.
// Forwards are shared across batch examples of the same item.
TrainTrace dpsgd(PublicEncoder& enc, const InteractionDataset& ds,
                 const PublicFeatureMatrix& features, const UserEncoder& users,
                 const TrainConfig& cfg, double sigma, const RngRoot& rng);

// Quadratic-surrogate trainer for a general convex loss: each of cfg.steps
// outer rounds recomputes (H, g) at the current anchor, noises them, and
// runs cfg.inner_steps descent steps on the surrogate.
TrainTrace ssp_convex(PublicEncoder& enc, const InteractionDataset& ds,
                      const PublicFeatureMatrix& features,
                      const UserEncoder& users, const TrainConfig& cfg,
                      const ScalarLoss& loss, double sigma,
                      const RngRoot& rng);

// Step count of the utility-bound schedule: floor(D^2 / (m d rho^2)), at
// least 1. rho must be positive.
int64_t utility_bound_steps(int64_t examples, int items, int dim,
                              double rho);

struct ProjectedSchedule {
  int64_t steps = 0;
  double sigma = 0.0;
  double bound = 0.0;     // feasible-set bound on ||theta^T x_j||
  double diameter = 0.0;  // |Theta| factor in the step size
  double gamma = 0.0;     // Gamma_x * Gamma_y * Gamma_u
};

// Schedule for projected_ssp1: cfg.rho > 0 sets steps by the utility bound
// (capped by cfg.steps when positive) and sigma = rho * sqrt(steps);
// rho == 0 keeps cfg.steps noiseless. Step size at step t (1-based) is
// diameter / (gamma * D * sqrt(8 t)).
ProjectedSchedule projected_ssp1_schedule(int64_t examples,
                                          const PublicFeatureMatrix& features,
                                          int embed_dim,
                                          const TrainConfig& cfg);
// Same derivation for the dense baseline, whose statistic dimension is the
// full parameter count p*d instead of m*d.
ProjectedSchedule projected_gd_schedule(int64_t examples,
                                        const PublicFeatureMatrix& features,
                                        int embed_dim, const TrainConfig& cfg);

// Projected per-step-noised statistics descent (linear encoders only).
TrainTrace projected_ssp1(PublicEncoder& enc, const InteractionDataset& ds,
                          const PublicFeatureMatrix& features,
                          const UserEncoder& users, const TrainConfig& cfg,
                          const RngRoot& rng);
// Projected noisy gradient descent baseline: per-example clipped gradients
// plus dense noise over all p*d parameters (linear encoders only).
TrainTrace projected_noisy_gd(PublicEncoder& enc, const InteractionDataset& ds,
                              const PublicFeatureMatrix& features,
                              const UserEncoder& users, const TrainConfig& cfg,
                              const RngRoot& rng);

// Exact per-user ridge solution given the current item vectors:
//   u_k = (sum_{i in user k} w_i v_{j_i} v_{j_i}^T + lambda_u I)^{-1}
//         (sum w_i y_i v_{j_i}).
// lambda_u must be positive. Users without examples keep their rows.
void user_update_closed_form(UserEncoder& users, const InteractionDataset& ds,
                             const Partition& part, const PublicEncoder& enc,
                             const PublicFeatureMatrix& features,
                             double lambda_u);

// 0.5 sum_i w_i (u.v - y)^2 + 0.5 lambda_u ||U||_F^2
//   + 0.5 lambda_v sum_j ||v_j||^2.
double regularized_objective(const PublicEncoder& enc,
                             const PublicFeatureMatrix& features,
                             const InteractionDataset& ds,
                             const UserEncoder& users, double lambda_u,
                             double lambda_v);

enum class ItemTrainer { kSsp2, kSsp1, kDpSgd };

struct AmTrace {
  // Regularized objective before training and after each outer round.
  std::vector<double> objective;
  int stat_releases = 0;
};

// Alternating minimization: closed-form user update, then the chosen item
// trainer, for cfg.outer_steps rounds. Each round trains items on an
// independent child of rng.
AmTrace alternating_minimization(PublicEncoder& enc, UserEncoder& users,
                                 const InteractionDataset& ds,
                                 const PublicFeatureMatrix& features,
                                 const TrainConfig& cfg, ItemTrainer trainer,
                                 double sigma, const RngRoot& rng);

}  // namespace pubfeat
