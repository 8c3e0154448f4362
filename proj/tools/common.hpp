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

#include <CLI11.hpp>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pubfeat/accountant.hpp"
#include "pubfeat/dataio.hpp"
#include "pubfeat/encoder.hpp"
#include "pubfeat/trainers.hpp"

namespace pubfeat::cli {

// One training run, fully specified by flags.
struct RunSpec {
  std::string algo = "ssp2";
  double epsilon = 1.0;
  double delta = 1e-5;
  std::string privacy_unit = "example";
  double wbar = 1.0;
  int steps = 100;
  int batch_size = 0;
  int outer_steps = 1;
  int inner_steps = 1;
  int resamples = 1;
  int dim = 4;
  double clip_u = 1.0;
  double clip_y = 1.0;
  double clip_g = 1.0;
  double clip_h = 1.0;
  double lambda_u = 0.1;
  double lambda_v = 0.0;
  double learning_rate = 0.05;
  std::string schedule = "constant";
  std::string encoder = "linear";
  std::string activation = "identity";
  std::string loss = "quadratic";
  bool budget_weights = false;
  double count_budget_fraction = 0.05;
  int trace_every = 1;
  uint64_t seed = 0;
  bool no_noise = false;  // sigma forced to 0; accounting rows omitted
};

struct RunOutput {
  TrainTrace trace;
  std::unique_ptr<PublicEncoder> encoder;
  std::optional<UserEncoder> users;
  double sigma = 0.0;
  int rounds = 0;  // noise rounds charged
  double final_loss = 0.0;
  double train_rmse = 0.0;
  std::vector<AccountingRow> accounting;
};

// Registers the shared training flags on a subcommand.
void add_run_flags(CLI::App& cmd, RunSpec& spec);

// Known algo labels, including the ssp-resampled-r<k> family.
bool parse_algo_label(const std::string& label, std::string& base,
                      int& resamples);

RunOutput execute_run(const RunSpec& spec, const InteractionDataset& ds,
                      const PublicFeatureMatrix& features);

// Synthetic fallback used by sweep/fedsim when no data files are given.
struct SynthFlags {
  int items = 32;
  int users = 100;
  int feature_dim = 512;
  int features_per_item = 8;
  int64_t examples = 2000;
  double noise_std = 0.1;
};

void add_synth_flags(CLI::App& cmd, SynthFlags& flags);
SyntheticLinear make_synth(const SynthFlags& flags, int dim, uint64_t seed);

void setup_gen_data(CLI::App& app);
void setup_train(CLI::App& app);
void setup_sweep(CLI::App& app);
void setup_complexity(CLI::App& app);
void setup_fedsim(CLI::App& app);

}  // namespace pubfeat::cli
