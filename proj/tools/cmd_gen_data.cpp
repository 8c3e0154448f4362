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

#include <iostream>
#include <memory>

#include "common.hpp"

namespace pubfeat::cli {

void setup_gen_data(CLI::App& app) {
  auto cmd = app.add_subcommand(
      "gen-data", "Synthesize a ground-truth linear dataset");
  auto cfg = std::make_shared<SyntheticLinearConfig>();
  auto out = std::make_shared<std::string>("data");

  cmd->add_option("--items", cfg->items, "Number of items (m)")
      ->capture_default_str();
  cmd->add_option("--users", cfg->users, "Number of users (n)")
      ->capture_default_str();
  cmd->add_option("--feature-dim", cfg->feature_dim,
                  "Public feature dimension (p)")
      ->capture_default_str();
  cmd->add_option("--dim", cfg->embed_dim, "Embedding dimension (d)")
      ->capture_default_str();
  cmd->add_option("--features-per-item", cfg->features_per_item,
                  "Nonzero features per item row")
      ->capture_default_str();
  cmd->add_option("--examples", cfg->examples, "Number of interactions (D)")
      ->capture_default_str();
  cmd->add_option("--noise-std", cfg->label_noise_std,
                  "Gaussian label noise std")
      ->capture_default_str();
  cmd->add_option("--user-norm-bound", cfg->user_norm_bound,
                  "Max norm of ground-truth user vectors")
      ->capture_default_str();
  cmd->add_option("--seed", cfg->seed, "Generator seed")
      ->capture_default_str();
  cmd->add_option("--out", *out,
                  "Output prefix; writes <out>_interactions.csv, "
                  "<out>_features.csv, <out>_theta.csv")
      ->capture_default_str();

  cmd->callback([cfg, out] {
    const SyntheticLinear synth = gen_synthetic_linear(*cfg);
    save_interactions(synth.data, *out + "_interactions.csv");
    save_feature_matrix(synth.features, *out + "_features.csv");
    save_dense_matrix(synth.theta_star, *out + "_theta.csv");
    std::cout << "wrote " << *out << "_{interactions,features,theta}.csv"
              << " items=" << cfg->items << " users=" << cfg->users
              << " examples=" << synth.data.size() << '\n';
  });
}

}  // namespace pubfeat::cli
