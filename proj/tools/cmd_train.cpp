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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <memory>
#include <utility>

#include "common.hpp"
#include "pubfeat/csv.hpp"
#include "pubfeat/evalmetrics.hpp"
#include "pubfeat/suffstats.hpp"

namespace pubfeat::cli {
namespace {

const std::vector<std::string> kAlgoLabels = {
    "ssp1",       "ssp2",       "ssp1-mb",        "ssp2-mb",
    "ssp-convex", "dpsgd",      "am-ssp1",        "am-ssp2",
    "am-dpsgd",   "projected-ssp1", "projected-gd", "ssp-resampled"};

LrSchedule parse_schedule(const std::string& name) {
  if (name == "constant") return LrSchedule::kConstant;
  if (name == "invsqrt") return LrSchedule::kInvSqrt;
  throw std::invalid_argument("unknown schedule '" + name +
                              "' (constant|invsqrt)");
}

PrivacyUnit parse_unit(const std::string& name) {
  if (name == "example") return PrivacyUnit::kExample;
  if (name == "user") return PrivacyUnit::kUser;
  throw std::invalid_argument("unknown privacy unit '" + name +
                              "' (example|user)");
}

std::unique_ptr<ScalarLoss> parse_loss(const std::string& name) {
  if (name == "quadratic") return std::make_unique<QuadraticLoss>();
  if (name == "logistic") return std::make_unique<LogisticLoss>();
  throw std::invalid_argument("unknown loss '" + name +
                              "' (quadratic|logistic)");
}

Activation parse_activation(const std::string& name) {
  if (name == "identity") return Activation::kIdentity;
  if (name == "tanh") return Activation::kTanh;
  throw std::invalid_argument("unknown activation '" + name +
                              "' (identity|tanh)");
}

std::unique_ptr<PublicEncoder> make_encoder(const RunSpec& spec,
                                            int feature_dim,
                                            const RngRoot& rng) {
  if (spec.encoder == "linear") {
    return std::make_unique<LinearEncoder>(LinearEncoder::random(
        feature_dim, spec.dim, rng.stream("init/encoder")));
  }
  if (spec.encoder == "two-layer") {
    return std::make_unique<TwoLayerEncoder>(TwoLayerEncoder::random(
        feature_dim, spec.dim, parse_activation(spec.activation),
        rng.stream("init/encoder")));
  }
  throw std::invalid_argument("unknown encoder '" + spec.encoder +
                              "' (linear|two-layer)");
}

TrainConfig make_config(const RunSpec& spec) {
  TrainConfig cfg;
  cfg.steps = spec.steps;
  cfg.batch_size = spec.batch_size;
  cfg.learning_rate = spec.learning_rate;
  cfg.schedule = parse_schedule(spec.schedule);
  cfg.clip_u = spec.clip_u;
  cfg.clip_y = spec.clip_y;
  cfg.clip_g = spec.clip_g;
  cfg.clip_h = spec.clip_h;
  cfg.lambda_u = spec.lambda_u;
  cfg.lambda_v = spec.lambda_v;
  cfg.outer_steps = spec.outer_steps;
  cfg.inner_steps = spec.inner_steps;
  cfg.trace_every = spec.trace_every;
  cfg.seed = spec.seed;
  return cfg;
}

// Noise rounds the algorithm consumes under the accounting conventions.
int rounds_for(const std::string& base, const RunSpec& spec, int resamples) {
  if (base == "ssp2" || base == "ssp2-mb") return 1;
  if (base == "ssp1" || base == "ssp1-mb" || base == "dpsgd" ||
      base == "ssp-convex") {
    return std::max(spec.steps, 1);
  }
  if (base == "ssp-resampled") return std::max(resamples, 1);
  if (base == "am-ssp2") return std::max(spec.outer_steps, 1);
  if (base == "am-ssp1" || base == "am-dpsgd") {
    return std::max(spec.outer_steps, 1) * std::max(spec.steps, 1);
  }
  throw std::invalid_argument("rounds_for: unexpected algo '" + base + "'");
}

}  // namespace

bool parse_algo_label(const std::string& label, std::string& base,
                      int& resamples) {
  const std::string prefix = "ssp-resampled-r";
  if (label.rfind(prefix, 0) == 0) {
    const std::string suffix = label.substr(prefix.size());
    if (suffix.empty() ||
        suffix.find_first_not_of("0123456789") != std::string::npos) {
      return false;
    }
    base = "ssp-resampled";
    resamples = std::stoi(suffix);
    return resamples >= 1;
  }
  for (const std::string& known : kAlgoLabels) {
    if (label == known) {
      base = label;
      return true;
    }
  }
  return false;
}

void add_run_flags(CLI::App& cmd, RunSpec& spec) {
  cmd.add_option("--algo", spec.algo,
                 "ssp1 | ssp2 | ssp1-mb | ssp2-mb | ssp-resampled[-r<k>] | "
                 "ssp-convex | dpsgd | am-ssp1 | am-ssp2 | am-dpsgd | "
                 "projected-ssp1 | projected-gd")
      ->capture_default_str();
  cmd.add_option("--epsilon", spec.epsilon, "Privacy budget epsilon")
      ->capture_default_str();
  cmd.add_option("--delta", spec.delta, "Privacy budget delta")
      ->capture_default_str();
  cmd.add_option("--privacy-unit", spec.privacy_unit, "example | user")
      ->capture_default_str();
  cmd.add_option("--wbar", spec.wbar,
                 "Per-user weight norm bound (user unit)")
      ->capture_default_str();
  cmd.add_option("--steps", spec.steps, "Gradient / outer-noise steps T")
      ->capture_default_str();
  cmd.add_option("--batch-size", spec.batch_size,
                 "Mini-batch size (0 = full)")
      ->capture_default_str();
  cmd.add_option("--outer-steps", spec.outer_steps,
                 "Alternating-minimization rounds")
      ->capture_default_str();
  cmd.add_option("--inner-steps", spec.inner_steps,
                 "Inner surrogate steps per convex round")
      ->capture_default_str();
  cmd.add_option("--resamples", spec.resamples,
                 "Noise rounds for ssp-resampled (must divide steps)")
      ->capture_default_str();
  cmd.add_option("--dim", spec.dim, "Embedding dimension d")
      ->capture_default_str();
  cmd.add_option("--clip-u", spec.clip_u, "User vector norm bound")
      ->capture_default_str();
  cmd.add_option("--clip-y", spec.clip_y, "Label magnitude bound")
      ->capture_default_str();
  cmd.add_option("--clip-g", spec.clip_g, "Per-example gradient bound")
      ->capture_default_str();
  cmd.add_option("--clip-h", spec.clip_h, "Curvature bound")
      ->capture_default_str();
  cmd.add_option("--lambda-u", spec.lambda_u, "User ridge strength")
      ->capture_default_str();
  cmd.add_option("--lambda-v", spec.lambda_v, "Item vector ridge strength")
      ->capture_default_str();
  cmd.add_option("--lr", spec.learning_rate, "Base learning rate")
      ->capture_default_str();
  cmd.add_option("--schedule", spec.schedule, "constant | invsqrt")
      ->capture_default_str();
  cmd.add_option("--encoder", spec.encoder, "linear | two-layer")
      ->capture_default_str();
  cmd.add_option("--activation", spec.activation,
                 "identity | tanh (two-layer only)")
      ->capture_default_str();
  cmd.add_option("--loss", spec.loss, "quadratic | logistic (ssp-convex)")
      ->capture_default_str();
  cmd.add_flag("--budget-weights", spec.budget_weights,
               "Allocate per-example weights from noisy item counts "
               "(user unit)");
  cmd.add_option("--count-budget-fraction", spec.count_budget_fraction,
                 "Budget share spent on noisy counts")
      ->capture_default_str();
  cmd.add_option("--trace-every", spec.trace_every,
                 "Trace cadence (0 = endpoints only)")
      ->capture_default_str();
  cmd.add_option("--seed", spec.seed, "Run seed")->capture_default_str();
  cmd.add_flag("--no-noise", spec.no_noise,
               "Disable noise (sigma = 0, no accounting)");
}

RunOutput execute_run(const RunSpec& spec, const InteractionDataset& ds,
                      const PublicFeatureMatrix& features) {
  std::string base;
  int resamples = spec.resamples;
  if (!parse_algo_label(spec.algo, base, resamples)) {
    throw std::invalid_argument("unknown algo '" + spec.algo + "'");
  }
  const PrivacyUnit unit = parse_unit(spec.privacy_unit);
  const double wbar = unit == PrivacyUnit::kUser ? spec.wbar : 1.0;
  const RngRoot rng(spec.seed);
  TrainConfig cfg = make_config(spec);

  RunOutput out;
  out.encoder = make_encoder(spec, features.feature_dim(), rng);
  out.users.emplace(UserEncoder::random(static_cast<int>(ds.user_count),
                                        spec.dim, rng.stream("init/users")));

  InteractionDataset data = ds;
  const bool projected =
      base == "projected-ssp1" || base == "projected-gd";

  // Calibration. Projected runs couple noise to their derived step count
  // through rho = wbar sqrt(8 ln(1/delta)) / epsilon, which equals the
  // per-round calibration at sigma = rho sqrt(T).
  double sigma = 0.0;
  double sigma_count = 0.0;
  if (!spec.no_noise) {
    if (projected) {
      cfg.rho = wbar * std::sqrt(8.0 * std::log(1.0 / spec.delta)) /
                spec.epsilon;
      PrivacySpec ps;  // validates the (epsilon, delta) region
      ps.epsilon = spec.epsilon;
      ps.delta = spec.delta;
      ps.weight_bound = wbar;
      ps.validate();
    } else {
      out.rounds = rounds_for(base, spec, resamples);
      if (spec.budget_weights && unit == PrivacyUnit::kUser) {
        const double total = beta_budget(spec.epsilon, spec.delta);
        const BudgetSplit split =
            split_budget(total, spec.count_budget_fraction);
        const Partition part = partition(data);
        sigma_count =
            count_sigma_for_beta(split.beta_count,
                                 count_sensitivity(part, unit));
        const std::vector<double> counts =
            noisy_item_counts(data, sigma_count, rng);
        const std::vector<double> weights =
            budget_weights(data, part, counts, wbar);
        for (size_t i = 0; i < weights.size(); ++i) {
          data.examples[i].weight = weights[i];
        }
        sigma = wbar * std::sqrt(static_cast<double>(out.rounds) /
                                 split.beta_train);
        out.accounting.push_back(AccountingRow{
            "counts", split.beta_count, sigma_count,
            rdp_to_dp(RdpCurve{split.beta_count}, spec.delta), spec.delta});
      } else {
        sigma = sigma_for_releases(spec.epsilon, spec.delta, out.rounds,
                                   wbar);
      }
    }
  }

  // Dispatch.
  if (base == "ssp1") {
    out.trace = ssp1(*out.encoder, data, features, *out.users, cfg, sigma,
                     rng);
  } else if (base == "ssp2") {
    out.trace = ssp2(*out.encoder, data, features, *out.users, cfg, sigma,
                     rng);
  } else if (base == "ssp-resampled") {
    out.trace = ssp_resampled(*out.encoder, data, features, *out.users, cfg,
                              sigma, rng, resamples);
  } else if (base == "ssp1-mb") {
    out.trace = ssp1_minibatch(*out.encoder, data, features, *out.users, cfg,
                               sigma, rng);
  } else if (base == "ssp2-mb") {
    out.trace = ssp2_minibatch(*out.encoder, data, features, *out.users, cfg,
                               sigma, rng);
  } else if (base == "dpsgd") {
    out.trace = dpsgd(*out.encoder, data, features, *out.users, cfg, sigma,
                      rng);
  } else if (base == "ssp-convex") {
    const auto loss = parse_loss(spec.loss);
    out.trace = ssp_convex(*out.encoder, data, features, *out.users, cfg,
                           *loss, sigma, rng);
  } else if (base == "projected-ssp1") {
    out.trace =
        projected_ssp1(*out.encoder, data, features, *out.users, cfg, rng);
  } else if (base == "projected-gd") {
    out.trace =
        projected_noisy_gd(*out.encoder, data, features, *out.users, cfg,
                           rng);
  } else if (base == "am-ssp2" || base == "am-ssp1" || base == "am-dpsgd") {
    const ItemTrainer trainer = base == "am-ssp2"  ? ItemTrainer::kSsp2
                                : base == "am-ssp1" ? ItemTrainer::kSsp1
                                                    : ItemTrainer::kDpSgd;
    const AmTrace am = alternating_minimization(
        *out.encoder, *out.users, data, features, cfg, trainer, sigma, rng);
    out.trace.sigma = sigma;
    out.trace.stat_releases = am.stat_releases;
    out.trace.steps_run = spec.outer_steps;
    for (size_t s = 0; s < am.objective.size(); ++s) {
      out.trace.rows.push_back(
          TraceRow{static_cast<int>(s), am.objective[s], 0.0, 0.0});
    }
  } else {
    throw std::invalid_argument("unhandled algo '" + base + "'");
  }

  if (projected) out.rounds = out.trace.steps_run;
  out.sigma = out.trace.sigma;

  // Metrics on the training interactions.
  std::vector<std::pair<double, double>> pred;
  pred.reserve(data.examples.size());
  std::vector<Eigen::VectorXd> item_vecs(
      static_cast<size_t>(data.item_count));
  for (int j = 0; j < data.item_count; ++j) {
    item_vecs[static_cast<size_t>(j)] = out.encoder->forward(features.row(j));
  }
  for (const Interaction& ex : data.examples) {
    pred.emplace_back(
        out.users->embed(ex.user).dot(item_vecs[static_cast<size_t>(ex.item)]),
        ex.label);
  }
  out.train_rmse = pred.empty() ? 0.0 : rmse(pred);
  if (base == "ssp-convex" && spec.loss == "logistic") {
    out.final_loss =
        dataset_loss(*out.encoder, features, data, *out.users,
                     LogisticLoss());
  } else {
    out.final_loss = quadratic_loss(*out.encoder, features, data, *out.users);
  }

  if (out.sigma > 0.0) {
    const RdpCurve beta{static_cast<double>(out.rounds) * wbar * wbar /
                        (out.sigma * out.sigma)};
    out.accounting.push_back(AccountingRow{spec.algo, beta.beta, out.sigma,
                                           rdp_to_dp(beta, spec.delta),
                                           spec.delta});
  }
  return out;
}

void setup_train(CLI::App& app) {
  auto cmd = app.add_subcommand("train",
                                "Train one model under a privacy budget");
  auto spec = std::make_shared<RunSpec>();
  auto data_path = std::make_shared<std::string>();
  auto features_path = std::make_shared<std::string>();
  auto out_dir = std::make_shared<std::string>("run");
  auto dump_stats = std::make_shared<bool>(false);

  add_run_flags(*cmd, *spec);
  cmd->add_option("--data", *data_path, "Interactions CSV")->required();
  cmd->add_option("--features", *features_path, "Item features CSV")
      ->required();
  cmd->add_option("--out", *out_dir, "Output directory")
      ->capture_default_str();
  cmd->add_flag("--dump-stats", *dump_stats,
                "Also write the first released statistics round "
                "(full-batch ssp algos)");

  cmd->callback([spec, data_path, features_path, out_dir, dump_stats] {
    const InteractionDataset ds = load_interactions(*data_path);
    const PublicFeatureMatrix features = load_feature_matrix(*features_path);
    RunOutput out = execute_run(*spec, ds, features);

    std::filesystem::create_directories(*out_dir);
    const std::string dir = *out_dir + "/";
    save_trace_csv(dir + "trace.csv", out.trace);
    save_checkpoint(dir + "checkpoint.csv", out.encoder.get(),
                    out.users.has_value() ? &*out.users : nullptr);
    if (!out.accounting.empty()) {
      save_accounting_csv(dir + "accounting.csv", out.accounting);
    }
    append_metrics_csv(dir + "metrics.csv",
                       {MetricsRow{"final_loss", spec->epsilon,
                                   static_cast<int64_t>(spec->seed),
                                   out.final_loss},
                        MetricsRow{"rmse", spec->epsilon,
                                   static_cast<int64_t>(spec->seed),
                                   out.train_rmse}});

    if (*dump_stats) {
      std::string base;
      int resamples = 1;
      parse_algo_label(spec->algo, base, resamples);
      if (base == "ssp1" || base == "ssp2" || base == "ssp-resampled" ||
          base == "projected-ssp1") {
        // Streams are keyed, so this reproduces the round-0 release exactly.
        const RngRoot rng(spec->seed);
        UserEncoder users =
            UserEncoder::random(static_cast<int>(ds.user_count), spec->dim,
                                rng.stream("init/users"));
        const Partition part = partition(ds);
        std::vector<ItemStats> stats =
            compute_stats(ds, part, users, spec->clip_u, spec->clip_y);
        noise_stats(stats, out.sigma, spec->clip_u, spec->clip_y, rng,
                    "ssp/noise", 0);
        save_stats_csv(dir + "stats.csv", stats);
      } else {
        std::cerr << "note: --dump-stats ignored for algo " << spec->algo
                  << '\n';
      }
    }

    std::cout << "algo=" << spec->algo << " unit=" << spec->privacy_unit
              << " steps=" << out.trace.steps_run << " rounds=" << out.rounds
              << " sigma=" << csv::format_double(out.sigma)
              << " releases=" << out.trace.stat_releases << '\n';
    std::cout << "final_loss=" << csv::format_double(out.final_loss)
              << " rmse=" << csv::format_double(out.train_rmse) << '\n';
    std::cout << "outputs in " << *out_dir << '\n';
  });
}

}  // namespace pubfeat::cli
