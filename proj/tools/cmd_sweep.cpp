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
#include <optional>

#include "common.hpp"
#include "pubfeat/csv.hpp"
#include "pubfeat/parallel.hpp"

namespace pubfeat::cli {

void add_synth_flags(CLI::App& cmd, SynthFlags& flags) {
  cmd.add_option("--synth-items", flags.items, "Synthetic item count")
      ->capture_default_str();
  cmd.add_option("--synth-users", flags.users, "Synthetic user count")
      ->capture_default_str();
  cmd.add_option("--synth-feature-dim", flags.feature_dim,
                 "Synthetic feature dimension")
      ->capture_default_str();
  cmd.add_option("--synth-features-per-item", flags.features_per_item,
                 "Nonzeros per synthetic item")
      ->capture_default_str();
  cmd.add_option("--synth-examples", flags.examples,
                 "Synthetic interaction count")
      ->capture_default_str();
  cmd.add_option("--synth-noise-std", flags.noise_std,
                 "Synthetic label noise std")
      ->capture_default_str();
}

SyntheticLinear make_synth(const SynthFlags& flags, int dim, uint64_t seed) {
  SyntheticLinearConfig cfg;
  cfg.items = flags.items;
  cfg.users = flags.users;
  cfg.feature_dim = flags.feature_dim;
  cfg.embed_dim = dim;
  cfg.features_per_item = flags.features_per_item;
  cfg.examples = flags.examples;
  cfg.label_noise_std = flags.noise_std;
  cfg.seed = seed;
  return gen_synthetic_linear(cfg);
}

void setup_sweep(CLI::App& app) {
  auto cmd = app.add_subcommand(
      "sweep", "Grid of runs over algos x epsilons x seeds");
  auto spec = std::make_shared<RunSpec>();
  auto synth = std::make_shared<SynthFlags>();
  auto algos = std::make_shared<std::vector<std::string>>(
      std::vector<std::string>{"ssp1", "ssp2"});
  auto epsilons =
      std::make_shared<std::vector<double>>(std::vector<double>{1.0});
  auto seeds = std::make_shared<int>(1);
  auto data_path = std::make_shared<std::string>();
  auto features_path = std::make_shared<std::string>();
  auto out_path = std::make_shared<std::string>("sweep.csv");

  add_run_flags(*cmd, *spec);
  add_synth_flags(*cmd, *synth);
  cmd->add_option("--algos", *algos, "Algo labels to sweep")
      ->delimiter(',')
      ->capture_default_str();
  cmd->add_option("--epsilons", *epsilons, "Epsilon values to sweep")
      ->delimiter(',')
      ->capture_default_str();
  cmd->add_option("--seeds", *seeds, "Seed count (runs seeds 0..N-1)")
      ->capture_default_str();
  cmd->add_option("--data", *data_path,
                  "Interactions CSV (omit for synthetic data per seed)");
  cmd->add_option("--features", *features_path, "Item features CSV");
  cmd->add_option("--out", *out_path, "Sweep results CSV")
      ->capture_default_str();

  cmd->callback([spec, synth, algos, epsilons, seeds, data_path,
                 features_path, out_path] {
    if (algos->empty() || epsilons->empty() || *seeds < 1) {
      throw std::invalid_argument(
          "sweep needs at least one algo, one epsilon, and one seed");
    }
    if (data_path->empty() != features_path->empty()) {
      throw std::invalid_argument(
          "--data and --features must be given together");
    }
    std::optional<InteractionDataset> file_ds;
    std::optional<PublicFeatureMatrix> file_features;
    if (!data_path->empty()) {
      file_ds = load_interactions(*data_path);
      file_features = load_feature_matrix(*features_path);
    }

    struct Cell {
      std::string algo;
      double epsilon = 0.0;
      int seed = 0;
      double final_loss = 0.0;
      double rmse = 0.0;
    };
    std::vector<Cell> cells;
    for (const std::string& algo : *algos) {
      for (double eps : *epsilons) {
        for (int s = 0; s < *seeds; ++s) {
          cells.push_back(Cell{algo, eps, s, 0.0, 0.0});
        }
      }
    }

    // Streams are keyed by (seed, tag), so the grid order never affects the
    // per-cell results.
    parallel_for(static_cast<int64_t>(cells.size()), [&](int64_t i) {
      Cell& cell = cells[static_cast<size_t>(i)];
      RunSpec rs = *spec;
      rs.algo = cell.algo;
      rs.epsilon = cell.epsilon;
      rs.seed = static_cast<uint64_t>(cell.seed);
      RunOutput out;
      if (file_ds.has_value()) {
        out = execute_run(rs, *file_ds, *file_features);
      } else {
        const SyntheticLinear synth_data =
            make_synth(*synth, rs.dim, rs.seed);
        out = execute_run(rs, synth_data.data, synth_data.features);
      }
      cell.final_loss = out.final_loss;
      cell.rmse = out.train_rmse;
    });

    csv::Writer w(*out_path, "algo,epsilon,seed,metric,value");
    for (const Cell& cell : cells) {
      w.begin_row();
      w.field(cell.algo);
      w.field(cell.epsilon);
      w.field(static_cast<int64_t>(cell.seed));
      w.field("final_loss");
      w.field(cell.final_loss);
      w.end_row();
      w.begin_row();
      w.field(cell.algo);
      w.field(cell.epsilon);
      w.field(static_cast<int64_t>(cell.seed));
      w.field("rmse");
      w.field(cell.rmse);
      w.end_row();
    }

    std::cout << "sweep: " << cells.size() << " runs, " << 2 * cells.size()
              << " rows -> " << *out_path << '\n';
  });
}

}  // namespace pubfeat::cli
