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

#include "pubfeat/trainers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "pubfeat/csv.hpp"

namespace pubfeat {
namespace {

void validate_config(const TrainConfig& cfg) {
  if (cfg.steps < 0) throw std::invalid_argument("train: steps must be >= 0");
  if (!(cfg.learning_rate > 0.0) || !std::isfinite(cfg.learning_rate)) {
    throw std::invalid_argument("train: learning_rate must be positive");
  }
  for (double bound : {cfg.clip_u, cfg.clip_y, cfg.clip_g, cfg.clip_h}) {
    if (std::isnan(bound) || bound <= 0.0) {
      throw std::invalid_argument("train: clip bounds must be positive");
    }
  }
  if (cfg.batch_size < 0) {
    throw std::invalid_argument("train: batch_size must be >= 0");
  }
  if (cfg.lambda_u < 0.0 || cfg.lambda_v < 0.0) {
    throw std::invalid_argument("train: lambdas must be >= 0");
  }
  if (cfg.outer_steps < 0 || cfg.inner_steps < 1) {
    throw std::invalid_argument(
        "train: need outer_steps >= 0 and inner_steps >= 1");
  }
  if (std::isnan(cfg.rho) || cfg.rho < 0.0) {
    throw std::invalid_argument("train: rho must be >= 0");
  }
  if (cfg.trace_every < 0) {
    throw std::invalid_argument("train: trace_every must be >= 0");
  }
}

void validate_sigma(double sigma) {
  if (std::isnan(sigma) || sigma < 0.0) {
    throw std::invalid_argument("train: sigma must be >= 0");
  }
}

double lr_at(const TrainConfig& cfg, int step_idx) {
  if (cfg.schedule == LrSchedule::kInvSqrt) {
    return cfg.learning_rate / std::sqrt(static_cast<double>(step_idx + 1));
  }
  return cfg.learning_rate;
}

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double ms() const {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

// Records step 0, every trace_every-th step (when > 0), and the final step.
class Tracer {
 public:
  Tracer(TrainTrace& trace, int total_steps, int every,
         std::function<double()> probe)
      : trace_(trace),
        total_steps_(total_steps),
        every_(every),
        probe_(std::move(probe)) {
    trace_.rows.push_back(
        TraceRow{0, probe_ ? probe_() : std::nan(""), 0.0, watch_.ms()});
  }

  void step(int step, double grad_norm) {
    const bool last = step == total_steps_;
    const bool periodic = every_ > 0 && step % every_ == 0;
    if (!last && !periodic) return;
    trace_.rows.push_back(TraceRow{step, probe_ ? probe_() : std::nan(""),
                                   grad_norm, watch_.ms()});
  }

 private:
  TrainTrace& trace_;
  int total_steps_;
  int every_;
  std::function<double()> probe_;
  Stopwatch watch_;
};

int resolve_batch(int configured, int64_t full, const char* who) {
  const int64_t batch = configured == 0 ? full : configured;
  if (batch < 1 || batch > full) {
    throw std::invalid_argument(std::string(who) +
                                ": need 1 <= batch_size <= " +
                                std::to_string(full));
  }
  return static_cast<int>(batch);
}

std::vector<Eigen::VectorXd> forward_all(const PublicEncoder& enc,
                                         const PublicFeatureMatrix& features,
                                         int item_count) {
  std::vector<Eigen::VectorXd> out(static_cast<size_t>(item_count));
  for (int j = 0; j < item_count; ++j) out[static_cast<size_t>(j)] = enc.forward(features.row(j));
  return out;
}

}  // namespace

void save_trace_csv(const std::string& path, const TrainTrace& trace) {
  csv::Writer writer(path, "step,loss,grad_norm,elapsed_ms");
  for (const TraceRow& row : trace.rows) {
    writer.begin_row();
    writer.field(static_cast<int64_t>(row.step));
    writer.field(row.loss);
    writer.field(row.grad_norm);
    writer.field(row.elapsed_ms);
    writer.end_row();
  }
}

Eigen::VectorXd stats_gradient(const PublicEncoder& enc,
                               const PublicFeatureMatrix& features,
                               std::span<const ItemStats> stats,
                               double lambda_v) {
  if (static_cast<int>(stats.size()) > features.item_count()) {
    throw std::invalid_argument("stats_gradient: more stats than items");
  }
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(enc.param_count());
  for (size_t j = 0; j < stats.size(); ++j) {
    const SparseVector& x = features.row(static_cast<int>(j));
    const Eigen::VectorXd v = enc.forward(x);
    Eigen::VectorXd r = stats[j].A * v - stats[j].b;
    if (lambda_v != 0.0) r.noalias() += lambda_v * v;
    enc.add_vjp(x, r, grad);
  }
  return grad;
}

Eigen::VectorXd stats_gradient_batch(const PublicEncoder& enc,
                                     const PublicFeatureMatrix& features,
                                     std::span<const ItemStats> stats,
                                     std::span<const int64_t> items,
                                     double lambda_v) {
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(enc.param_count());
  int64_t prev = -1;
  for (int64_t j : items) {
    if (j <= prev || j >= static_cast<int64_t>(stats.size())) {
      throw std::invalid_argument(
          "stats_gradient_batch: items must be ascending and in range");
    }
    prev = j;
    const SparseVector& x = features.row(static_cast<int>(j));
    const Eigen::VectorXd v = enc.forward(x);
    Eigen::VectorXd r =
        stats[static_cast<size_t>(j)].A * v - stats[static_cast<size_t>(j)].b;
    if (lambda_v != 0.0) r.noalias() += lambda_v * v;
    enc.add_vjp(x, r, grad);
  }
  return grad;
}

Eigen::VectorXd exact_gradient_factored(const PublicEncoder& enc,
                                        const PublicFeatureMatrix& features,
                                        std::span<const ItemStats> stats) {
  return stats_gradient(enc, features, stats, 0.0);
}

Eigen::VectorXd exact_gradient_naive(const PublicEncoder& enc,
                                     const PublicFeatureMatrix& features,
                                     const InteractionDataset& ds,
                                     const UserEncoder& users) {
  ds.validate();
  if (features.item_count() < ds.item_count) {
    throw std::invalid_argument("exact_gradient_naive: features too small");
  }
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(enc.param_count());
  for (const Interaction& ex : ds.examples) {
    const SparseVector& x = features.row(ex.item);
    const Eigen::VectorXd v = enc.forward(x);
    const Eigen::VectorXd u = users.embed(ex.user);
    const Eigen::VectorXd r = ex.weight * (u.dot(v) - ex.label) * u;
    enc.add_vjp(x, r, grad);
  }
  return grad;
}

Eigen::VectorXd convex_stats_gradient(const PublicEncoder& enc,
                                      const PublicFeatureMatrix& features,
                                      std::span<const ConvexItemStats> stats) {
  if (static_cast<int>(stats.size()) > features.item_count()) {
    throw std::invalid_argument("convex_stats_gradient: more stats than items");
  }
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(enc.param_count());
  for (size_t j = 0; j < stats.size(); ++j) {
    const SparseVector& x = features.row(static_cast<int>(j));
    const Eigen::VectorXd v = enc.forward(x);
    const Eigen::VectorXd r = stats[j].H * (v - stats[j].anchor) + stats[j].g;
    enc.add_vjp(x, r, grad);
  }
  return grad;
}

double dataset_loss(const PublicEncoder& enc,
                    const PublicFeatureMatrix& features,
                    const InteractionDataset& ds, const UserEncoder& users,
                    const ScalarLoss& loss) {
  const auto item_vecs = forward_all(enc, features, ds.item_count);
  double total = 0.0;
  for (const Interaction& ex : ds.examples) {
    const double s =
        users.embed(ex.user).dot(item_vecs[static_cast<size_t>(ex.item)]);
    total += ex.weight * loss.value(s, ex.label);
  }
  return total;
}

namespace {

TrainTrace ssp_train_core(PublicEncoder& enc, const InteractionDataset& ds,
                          const PublicFeatureMatrix& features,
                          const UserEncoder& users, const TrainConfig& cfg,
                          double sigma, const RngRoot& rng, int resamples) {
  validate_config(cfg);
  validate_sigma(sigma);
  if (resamples < 1) {
    throw std::invalid_argument("ssp: resamples must be >= 1");
  }
  if (cfg.steps > 0 && cfg.steps % resamples != 0) {
    throw std::invalid_argument("ssp: resamples must divide steps");
  }
  const Partition part = partition(ds);
  const std::vector<ItemStats> stats =
      compute_stats(ds, part, users, cfg.clip_u, cfg.clip_y);

  TrainTrace trace;
  trace.sigma = sigma;
  Tracer tracer(trace, cfg.steps, cfg.trace_every,
                [&] { return quadratic_loss(enc, features, ds, users); });

  std::vector<ItemStats> noised;
  const int block = cfg.steps > 0 ? cfg.steps / resamples : 0;
  for (int t = 0; t < cfg.steps; ++t) {
    if (t % block == 0) {
      noised = stats;
      noise_stats(noised, sigma, cfg.clip_u, cfg.clip_y, rng, "ssp/noise",
                  static_cast<uint64_t>(t / block));
      trace.stat_releases += 2;
    }
    const Eigen::VectorXd grad =
        stats_gradient(enc, features, noised, cfg.lambda_v);
    enc.gradient_step(grad, lr_at(cfg, t));
    tracer.step(t + 1, grad.norm());
  }
  trace.steps_run = cfg.steps;
  return trace;
}

}  // namespace

TrainTrace ssp1(PublicEncoder& enc, const InteractionDataset& ds,
                const PublicFeatureMatrix& features, const UserEncoder& users,
                const TrainConfig& cfg, double sigma, const RngRoot& rng) {
  return ssp_train_core(enc, ds, features, users, cfg, sigma, rng,
                        std::max(cfg.steps, 1));
}

TrainTrace ssp2(PublicEncoder& enc, const InteractionDataset& ds,
                const PublicFeatureMatrix& features, const UserEncoder& users,
                const TrainConfig& cfg, double sigma, const RngRoot& rng) {
  return ssp_train_core(enc, ds, features, users, cfg, sigma, rng, 1);
}

TrainTrace ssp_resampled(PublicEncoder& enc, const InteractionDataset& ds,
                         const PublicFeatureMatrix& features,
                         const UserEncoder& users, const TrainConfig& cfg,
                         double sigma, const RngRoot& rng, int resamples) {
  return ssp_train_core(enc, ds, features, users, cfg, sigma, rng, resamples);
}

TrainTrace ssp1_minibatch(PublicEncoder& enc, const InteractionDataset& ds,
                          const PublicFeatureMatrix& features,
                          const UserEncoder& users, const TrainConfig& cfg,
                          double sigma, const RngRoot& rng) {
  validate_config(cfg);
  validate_sigma(sigma);
  ds.validate();
  const int batch = resolve_batch(cfg.batch_size, ds.size(), "ssp1_minibatch");

  TrainTrace trace;
  trace.sigma = sigma;
  Tracer tracer(trace, cfg.steps, cfg.trace_every,
                [&] { return quadratic_loss(enc, features, ds, users); });

  for (int t = 0; t < cfg.steps; ++t) {
    Substream s = rng.stream("ssp/batch", static_cast<uint64_t>(t));
    const std::vector<int64_t> picked =
        sample_without_replacement(s, ds.size(), batch);
    InteractionDataset sub;
    sub.user_count = ds.user_count;
    sub.item_count = ds.item_count;
    sub.examples.reserve(picked.size());
    for (int64_t i : picked) {
      sub.examples.push_back(ds.examples[static_cast<size_t>(i)]);
    }
    const Partition sub_part = partition(sub);
    std::vector<ItemStats> stats =
        compute_stats(sub, sub_part, users, cfg.clip_u, cfg.clip_y);
    noise_stats(stats, sigma, cfg.clip_u, cfg.clip_y, rng, "ssp/noise",
                static_cast<uint64_t>(t));
    trace.stat_releases += 2;
    const Eigen::VectorXd grad =
        stats_gradient(enc, features, stats, cfg.lambda_v);
    enc.gradient_step(grad, lr_at(cfg, t));
    tracer.step(t + 1, grad.norm());
  }
  trace.steps_run = cfg.steps;
  return trace;
}

TrainTrace item_steps_on_stats(PublicEncoder& enc,
                               const PublicFeatureMatrix& features,
                               std::span<const ItemStats> stats,
                               const TrainConfig& cfg, const RngRoot& rng,
                               const std::function<double()>& probe) {
  validate_config(cfg);
  const int batch = resolve_batch(cfg.batch_size,
                                  static_cast<int64_t>(stats.size()),
                                  "item_steps_on_stats");
  TrainTrace trace;
  Tracer tracer(trace, cfg.steps, cfg.trace_every, probe);
  for (int t = 0; t < cfg.steps; ++t) {
    Substream s = rng.stream("ssp/batch", static_cast<uint64_t>(t));
    const std::vector<int64_t> items = sample_without_replacement(
        s, static_cast<int64_t>(stats.size()), batch);
    const Eigen::VectorXd grad =
        stats_gradient_batch(enc, features, stats, items, cfg.lambda_v);
    enc.gradient_step(grad, lr_at(cfg, t));
    tracer.step(t + 1, grad.norm());
  }
  trace.steps_run = cfg.steps;
  return trace;
}

TrainTrace ssp2_minibatch(PublicEncoder& enc, const InteractionDataset& ds,
                          const PublicFeatureMatrix& features,
                          const UserEncoder& users, const TrainConfig& cfg,
                          double sigma, const RngRoot& rng) {
  validate_config(cfg);
  validate_sigma(sigma);
  const Partition part = partition(ds);
  std::vector<ItemStats> stats =
      compute_stats(ds, part, users, cfg.clip_u, cfg.clip_y);
  noise_stats(stats, sigma, cfg.clip_u, cfg.clip_y, rng, "ssp/noise", 0);
  TrainTrace trace = item_steps_on_stats(
      enc, features, stats, cfg, rng,
      [&] { return quadratic_loss(enc, features, ds, users); });
  trace.sigma = sigma;
  trace.stat_releases += 2;
  return trace;
}

TrainTrace dpsgd(PublicEncoder& enc, const InteractionDataset& ds,
                 const PublicFeatureMatrix& features, const UserEncoder& users,
                 const TrainConfig& cfg, double sigma, const RngRoot& rng) {
  validate_config(cfg);
  validate_sigma(sigma);
  ds.validate();
  const int batch = resolve_batch(cfg.batch_size, ds.size(), "dpsgd");
  const Eigen::Index dim = enc.param_count();

  TrainTrace trace;
  trace.sigma = sigma;
  Tracer tracer(trace, cfg.steps, cfg.trace_every,
                [&] { return quadratic_loss(enc, features, ds, users); });

  Eigen::VectorXd scratch(dim);
  for (int t = 0; t < cfg.steps; ++t) {
    Substream s = rng.stream("dpsgd/batch", static_cast<uint64_t>(t));
    const std::vector<int64_t> picked =
        sample_without_replacement(s, ds.size(), batch);

    // One forward per distinct item in the batch.
    std::unordered_map<int, Eigen::VectorXd> item_vecs;
    for (int64_t i : picked) {
      const int j = ds.examples[static_cast<size_t>(i)].item;
      if (item_vecs.find(j) == item_vecs.end()) {
        item_vecs.emplace(j, enc.forward(features.row(j)));
      }
    }

    Eigen::VectorXd grad = Eigen::VectorXd::Zero(dim);
    for (int64_t i : picked) {
      const Interaction& ex = ds.examples[static_cast<size_t>(i)];
      const Eigen::VectorXd u = users.embed(ex.user);
      const Eigen::VectorXd r =
          (u.dot(item_vecs.at(ex.item)) - ex.label) * u;
      scratch.setZero();
      enc.add_vjp(features.row(ex.item), r, scratch);
      grad.noalias() += clip(scratch, cfg.clip_g);
    }
    if (sigma > 0.0) {
      Substream noise = rng.stream("dpsgd/noise", static_cast<uint64_t>(t));
      const double scale = sigma * cfg.clip_g;
      for (Eigen::Index c = 0; c < dim; ++c) {
        grad(c) += scale * noise.gaussian();
      }
    }
    trace.stat_releases += 1;
    enc.gradient_step(grad, lr_at(cfg, t));
    tracer.step(t + 1, grad.norm());
  }
  trace.steps_run = cfg.steps;
  return trace;
}

TrainTrace ssp_convex(PublicEncoder& enc, const InteractionDataset& ds,
                      const PublicFeatureMatrix& features,
                      const UserEncoder& users, const TrainConfig& cfg,
                      const ScalarLoss& loss, double sigma,
                      const RngRoot& rng) {
  validate_config(cfg);
  validate_sigma(sigma);
  const Partition part = partition(ds);

  TrainTrace trace;
  trace.sigma = sigma;
  Tracer tracer(trace, cfg.steps, cfg.trace_every, [&] {
    return dataset_loss(enc, features, ds, users, loss);
  });

  for (int t = 0; t < cfg.steps; ++t) {
    std::vector<ConvexItemStats> stats = compute_convex_stats(
        ds, part, users, enc, features, loss, cfg.clip_u, cfg.clip_y,
        cfg.clip_h, cfg.clip_g);
    noise_convex_stats(stats, sigma, cfg.clip_h, cfg.clip_g, rng,
                       "convex/noise", static_cast<uint64_t>(t));
    trace.stat_releases += 2;
    double grad_norm = 0.0;
    for (int inner = 0; inner < cfg.inner_steps; ++inner) {
      const Eigen::VectorXd grad =
          convex_stats_gradient(enc, features, stats);
      enc.gradient_step(grad, cfg.learning_rate);
      grad_norm = grad.norm();
    }
    tracer.step(t + 1, grad_norm);
  }
  trace.steps_run = cfg.steps;
  return trace;
}

int64_t utility_bound_steps(int64_t examples, int items, int dim,
                              double rho) {
  if (examples < 1 || items < 1 || dim < 1) {
    throw std::invalid_argument("utility_bound_steps: sizes must be >= 1");
  }
  if (!(rho > 0.0) || !std::isfinite(rho)) {
    throw std::invalid_argument("utility_bound_steps: rho must be positive");
  }
  const double steps = static_cast<double>(examples) *
                       static_cast<double>(examples) /
                       (static_cast<double>(items) * dim * rho * rho);
  return std::max<int64_t>(1, static_cast<int64_t>(std::floor(steps)));
}

namespace {

ProjectedSchedule projected_schedule_impl(int64_t examples,
                                          const PublicFeatureMatrix& features,
                                          int stat_rows, int embed_dim,
                                          const TrainConfig& cfg) {
  validate_config(cfg);
  if (examples < 1) {
    throw std::invalid_argument("projected schedule: examples must be >= 1");
  }
  if (embed_dim < 1) {
    throw std::invalid_argument("projected schedule: embed_dim must be >= 1");
  }
  const double gamma_x = features.max_row_norm();
  if (!(gamma_x > 0.0)) {
    throw std::invalid_argument("projected schedule: empty feature matrix");
  }
  ProjectedSchedule sched;
  sched.bound = cfg.theta_bound > 0.0 ? cfg.theta_bound
                                      : cfg.clip_y / cfg.clip_u;
  sched.gamma = gamma_x * cfg.clip_y * cfg.clip_u;
  sched.diameter =
      cfg.domain_diameter > 0.0
          ? cfg.domain_diameter
          : 2.0 * sched.bound *
                std::sqrt(static_cast<double>(features.item_count())) /
                gamma_x;
  if (cfg.rho > 0.0) {
    sched.steps = utility_bound_steps(examples, stat_rows, embed_dim,
                                        cfg.rho);
    if (cfg.steps > 0) sched.steps = std::min<int64_t>(sched.steps, cfg.steps);
    sched.sigma = cfg.rho * std::sqrt(static_cast<double>(sched.steps));
  } else {
    sched.steps = cfg.steps;
    sched.sigma = 0.0;
  }
  return sched;
}

LinearEncoder& require_linear(PublicEncoder& enc, const char* who) {
  auto* lin = dynamic_cast<LinearEncoder*>(&enc);
  if (lin == nullptr) {
    throw std::invalid_argument(std::string(who) +
                                ": requires a linear encoder");
  }
  return *lin;
}

}  // namespace

ProjectedSchedule projected_ssp1_schedule(int64_t examples,
                                          const PublicFeatureMatrix& features,
                                          int embed_dim,
                                          const TrainConfig& cfg) {
  return projected_schedule_impl(examples, features, features.item_count(),
                                 embed_dim, cfg);
}

ProjectedSchedule projected_gd_schedule(int64_t examples,
                                        const PublicFeatureMatrix& features,
                                        int embed_dim, const TrainConfig& cfg) {
  return projected_schedule_impl(examples, features, features.feature_dim(),
                                 embed_dim, cfg);
}

TrainTrace projected_ssp1(PublicEncoder& enc, const InteractionDataset& ds,
                          const PublicFeatureMatrix& features,
                          const UserEncoder& users, const TrainConfig& cfg,
                          const RngRoot& rng) {
  LinearEncoder& lin = require_linear(enc, "projected_ssp1");
  const ProjectedSchedule sched =
      projected_ssp1_schedule(ds.size(), features, enc.output_dim(), cfg);
  const Partition part = partition(ds);
  const std::vector<ItemStats> stats =
      compute_stats(ds, part, users, cfg.clip_u, cfg.clip_y);

  TrainTrace trace;
  trace.sigma = sched.sigma;
  const int total = static_cast<int>(sched.steps);
  Tracer tracer(trace, total, cfg.trace_every,
                [&] { return quadratic_loss(enc, features, ds, users); });

  std::vector<ItemStats> noised;
  for (int t = 1; t <= total; ++t) {
    noised = stats;
    noise_stats(noised, sched.sigma, cfg.clip_u, cfg.clip_y, rng, "ssp/noise",
                static_cast<uint64_t>(t - 1));
    trace.stat_releases += 2;
    const Eigen::VectorXd grad = stats_gradient(enc, features, noised, 0.0);
    const double eta = sched.diameter /
                       (sched.gamma * static_cast<double>(ds.size()) *
                        std::sqrt(8.0 * t));
    enc.gradient_step(grad, eta);
    lin.theta() = project_theta(lin.theta(), features, sched.bound);
    tracer.step(t, grad.norm());
  }
  trace.steps_run = total;
  return trace;
}

TrainTrace projected_noisy_gd(PublicEncoder& enc, const InteractionDataset& ds,
                              const PublicFeatureMatrix& features,
                              const UserEncoder& users, const TrainConfig& cfg,
                              const RngRoot& rng) {
  LinearEncoder& lin = require_linear(enc, "projected_noisy_gd");
  const ProjectedSchedule sched =
      projected_gd_schedule(ds.size(), features, enc.output_dim(), cfg);
  ds.validate();
  const int d = enc.output_dim();
  const int p = features.feature_dim();

  TrainTrace trace;
  trace.sigma = sched.sigma;
  const int total = static_cast<int>(sched.steps);
  Tracer tracer(trace, total, cfg.trace_every,
                [&] { return quadratic_loss(enc, features, ds, users); });

  for (int t = 1; t <= total; ++t) {
    const auto item_vecs = forward_all(enc, features, ds.item_count);
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(p, d);
    for (const Interaction& ex : ds.examples) {
      const Eigen::VectorXd u = users.embed(ex.user);
      const Eigen::VectorXd r =
          (u.dot(item_vecs[static_cast<size_t>(ex.item)]) - ex.label) * u;
      // Per-example gradient x r^T is rank one, so its Frobenius norm is
      // exactly ||x|| ||r||.
      const SparseVector& x = features.row(ex.item);
      const double norm = x.norm() * r.norm();
      const double scale =
          norm > sched.gamma && norm > 0.0 ? sched.gamma / norm : 1.0;
      for (size_t tt = 0; tt < x.idx.size(); ++tt) {
        grad.row(x.idx[tt]) += scale * x.val[tt] * r.transpose();
      }
    }
    if (sched.sigma > 0.0) {
      Substream noise = rng.stream("gd/noise", static_cast<uint64_t>(t - 1));
      const double scale = sched.sigma * sched.gamma;
      for (int rr = 0; rr < p; ++rr) {
        for (int cc = 0; cc < d; ++cc) {
          grad(rr, cc) += scale * noise.gaussian();
        }
      }
    }
    trace.stat_releases += 1;
    const double eta = sched.diameter /
                       (sched.gamma * static_cast<double>(ds.size()) *
                        std::sqrt(8.0 * t));
    lin.theta() -= eta * grad;
    lin.theta() = project_theta(lin.theta(), features, sched.bound);
    tracer.step(t, grad.norm());
  }
  trace.steps_run = total;
  return trace;
}

void user_update_closed_form(UserEncoder& users, const InteractionDataset& ds,
                             const Partition& part, const PublicEncoder& enc,
                             const PublicFeatureMatrix& features,
                             double lambda_u) {
  if (!(lambda_u > 0.0)) {
    throw std::invalid_argument(
        "user_update_closed_form: lambda_u must be positive");
  }
  if (static_cast<int>(part.by_user.size()) != ds.user_count ||
      users.user_count() < ds.user_count) {
    throw std::invalid_argument("user_update_closed_form: size mismatch");
  }
  const int d = users.dim();
  const auto item_vecs = forward_all(enc, features, ds.item_count);
  for (int k = 0; k < ds.user_count; ++k) {
    const auto& examples = part.by_user[static_cast<size_t>(k)];
    if (examples.empty()) continue;
    Eigen::MatrixXd M = lambda_u * Eigen::MatrixXd::Identity(d, d);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d);
    for (int64_t i : examples) {
      const Interaction& ex = ds.examples[static_cast<size_t>(i)];
      const Eigen::VectorXd& v = item_vecs[static_cast<size_t>(ex.item)];
      M.noalias() += ex.weight * (v * v.transpose());
      rhs.noalias() += ex.weight * ex.label * v;
    }
    users.set_row(k, M.ldlt().solve(rhs));
  }
}

double regularized_objective(const PublicEncoder& enc,
                             const PublicFeatureMatrix& features,
                             const InteractionDataset& ds,
                             const UserEncoder& users, double lambda_u,
                             double lambda_v) {
  double obj = quadratic_loss(enc, features, ds, users);
  obj += 0.5 * lambda_u *
         users.table().topRows(ds.user_count).squaredNorm();
  if (lambda_v != 0.0) {
    for (int j = 0; j < ds.item_count; ++j) {
      obj += 0.5 * lambda_v * enc.forward(features.row(j)).squaredNorm();
    }
  }
  return obj;
}

AmTrace alternating_minimization(PublicEncoder& enc, UserEncoder& users,
                                 const InteractionDataset& ds,
                                 const PublicFeatureMatrix& features,
                                 const TrainConfig& cfg, ItemTrainer trainer,
                                 double sigma, const RngRoot& rng) {
  validate_config(cfg);
  validate_sigma(sigma);
  if (!(cfg.lambda_u > 0.0)) {
    throw std::invalid_argument(
        "alternating_minimization: lambda_u must be positive");
  }
  const Partition part = partition(ds);

  AmTrace am;
  am.objective.push_back(regularized_objective(enc, features, ds, users,
                                               cfg.lambda_u, cfg.lambda_v));
  for (int round = 0; round < cfg.outer_steps; ++round) {
    user_update_closed_form(users, ds, part, enc, features, cfg.lambda_u);
    const RngRoot round_rng = rng.child("am", static_cast<uint64_t>(round));
    TrainTrace item_trace;
    switch (trainer) {
      case ItemTrainer::kSsp2:
        item_trace = ssp2(enc, ds, features, users, cfg, sigma, round_rng);
        break;
      case ItemTrainer::kSsp1:
        item_trace = ssp1(enc, ds, features, users, cfg, sigma, round_rng);
        break;
      case ItemTrainer::kDpSgd:
        item_trace = dpsgd(enc, ds, features, users, cfg, sigma, round_rng);
        break;
    }
    am.stat_releases += item_trace.stat_releases;
    am.objective.push_back(regularized_objective(enc, features, ds, users,
                                                 cfg.lambda_u, cfg.lambda_v));
  }
  return am;
}

}  // namespace pubfeat
