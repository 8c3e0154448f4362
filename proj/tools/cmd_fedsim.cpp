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
#include <filesystem>
#include <iostream>
#include <optional>

#include "common.hpp"
#include "pubfeat/csv.hpp"
#include "pubfeat/fedsim.hpp"

namespace pubfeat::cli {

void setup_fedsim(CLI::App& app) {
  auto cmd = app.add_subcommand(
      "fedsim", "One-round federated statistics release plus server "
                "training, with a transcript audit");
  auto spec = std::make_shared<RunSpec>();
  auto synth = std::make_shared<SynthFlags>();
  auto data_path = std::make_shared<std::string>();
  auto features_path = std::make_shared<std::string>();
  auto out_dir = std::make_shared<std::string>("fedsim");
  auto check_equivalence = std::make_shared<bool>(false);

  add_run_flags(*cmd, *spec);
  add_synth_flags(*cmd, *synth);
  cmd->add_option("--data", *data_path,
                  "Interactions CSV (omit for synthetic data)");
  cmd->add_option("--features", *features_path, "Item features CSV");
  cmd->add_option("--out", *out_dir, "Output directory")
      ->capture_default_str();
  cmd->add_flag("--check-equivalence", *check_equivalence,
                "Also train the monolithic twin and compare parameters");

  cmd->callback([spec, synth, data_path, features_path, out_dir,
                 check_equivalence] {
    if (data_path->empty() != features_path->empty()) {
      throw std::invalid_argument(
          "--data and --features must be given together");
    }
    std::optional<SyntheticLinear> synthetic;
    std::optional<InteractionDataset> file_ds;
    std::optional<PublicFeatureMatrix> file_features;
    if (data_path->empty()) {
      synthetic = make_synth(*synth, spec->dim, spec->seed);
    } else {
      file_ds = load_interactions(*data_path);
      file_features = load_feature_matrix(*features_path);
    }
    const InteractionDataset& ds =
        synthetic ? synthetic->data : *file_ds;
    const PublicFeatureMatrix& features =
        synthetic ? synthetic->features : *file_features;

    const RngRoot rng(spec->seed);
    TrainConfig cfg;
    cfg.steps = spec->steps;
    cfg.batch_size = spec->batch_size;
    cfg.learning_rate = spec->learning_rate;
    cfg.schedule = spec->schedule == "invsqrt" ? LrSchedule::kInvSqrt
                                               : LrSchedule::kConstant;
    cfg.clip_u = spec->clip_u;
    cfg.clip_y = spec->clip_y;
    cfg.lambda_v = spec->lambda_v;
    cfg.trace_every = spec->trace_every;
    cfg.seed = spec->seed;

    const double wbar =
        spec->privacy_unit == "user" ? spec->wbar : 1.0;
    const double sigma =
        spec->no_noise
            ? 0.0
            : sigma_for_releases(spec->epsilon, spec->delta, 1, wbar);

    auto enc = std::make_unique<LinearEncoder>(LinearEncoder::random(
        features.feature_dim(), spec->dim, rng.stream("init/encoder")));
    const UserEncoder users = UserEncoder::random(
        static_cast<int>(ds.user_count), spec->dim, rng.stream("init/users"));

    const FederatedResult result =
        run_federated_ssp2(*enc, ds, features, users, cfg, sigma, rng);

    const AuditReport audit = audit_server_view(result.transcript);

    std::filesystem::create_directories(*out_dir);
    const std::string dir = *out_dir + "/";
    save_transcript_csv(dir + "transcript.csv", result.transcript);
    save_trace_csv(dir + "trace.csv", result.trace);
    save_checkpoint(dir + "checkpoint.csv", enc.get(), nullptr);

    int64_t total_scalars = 0;
    for (const Message& msg : result.transcript.messages) {
      total_scalars += msg.scalars;
    }
    std::cout << "fedsim: " << result.transcript.messages.size()
              << " messages, " << total_scalars << " scalars on the wire, "
              << "sigma=" << csv::format_double(sigma) << '\n';
    std::cout << "audit: "
              << (audit.ok ? "ok" : "FAILED") << '\n';
    for (const std::string& v : audit.violations) {
      std::cout << "  violation: " << v << '\n';
    }

    if (*check_equivalence) {
      const RngRoot twin_rng(spec->seed);
      auto twin = std::make_unique<LinearEncoder>(LinearEncoder::random(
          features.feature_dim(), spec->dim,
          twin_rng.stream("init/encoder")));
      const UserEncoder twin_users =
          UserEncoder::random(static_cast<int>(ds.user_count), spec->dim,
                              twin_rng.stream("init/users"));
      const InteractionDataset canonical = sort_by_user(ds);
      ssp2_minibatch(*twin, canonical, features, twin_users, cfg, sigma,
                     twin_rng);
      const Eigen::VectorXd a = twin->flat_params();
      const Eigen::VectorXd b = enc->flat_params();
      const bool same = a.size() == b.size() &&
                        std::equal(a.data(), a.data() + a.size(), b.data());
      std::cout << "monolithic twin parameters "
                << (same ? "identical" : "DIFFER") << '\n';
      if (!same) throw std::runtime_error("fedsim equivalence check failed");
    }

    std::cout << "outputs in " << *out_dir << '\n';
    if (!audit.ok) throw std::runtime_error("transcript audit failed");
  });
}

}  // namespace pubfeat::cli
