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

#include <cmath>
#include <iostream>

#include "common.hpp"
#include "pubfeat/costmodel.hpp"
#include "pubfeat/csv.hpp"

namespace pubfeat::cli {

void setup_complexity(CLI::App& app) {
  auto cmd = app.add_subcommand(
      "complexity",
      "Cost of statistics-route vs per-example training under a "
      "power-law item popularity");
  auto examples = std::make_shared<int64_t>(100000);
  auto items = std::make_shared<int>(20);
  auto dim = std::make_shared<int>(4);
  auto unit_cost = std::make_shared<double>(80.0);
  auto epochs = std::make_shared<double>(50.0);
  auto alpha = std::make_shared<double>(1.0);
  auto batches = std::make_shared<std::vector<int64_t>>(
      std::vector<int64_t>{10, 50, 100, 500, 1000});
  auto mc_epochs = std::make_shared<int>(0);
  auto seed = std::make_shared<uint64_t>(0);
  auto out_path = std::make_shared<std::string>("cost.csv");

  cmd->add_option("--examples", *examples, "Total interaction count D")
      ->capture_default_str();
  cmd->add_option("--items", *items, "Item count m")->capture_default_str();
  cmd->add_option("--dim", *dim, "Embedding dimension d")
      ->capture_default_str();
  cmd->add_option("--unit-cost", *unit_cost,
                  "Encoder forward/backward cost c")
      ->capture_default_str();
  cmd->add_option("--epochs", *epochs, "Per-example epochs e")
      ->capture_default_str();
  cmd->add_option("--alpha", *alpha, "Power-law popularity exponent")
      ->capture_default_str();
  cmd->add_option("--batches", *batches, "Batch sizes B to evaluate")
      ->delimiter(',')
      ->capture_default_str();
  cmd->add_option("--mc-epochs", *mc_epochs,
                  "Also Monte-Carlo check each B over this many epochs "
                  "(0 = skip)")
      ->capture_default_str();
  cmd->add_option("--seed", *seed, "Seed for count ties and the MC check")
      ->capture_default_str();
  cmd->add_option("--out", *out_path, "Cost sweep CSV")
      ->capture_default_str();

  cmd->callback([examples, items, dim, unit_cost, epochs, alpha, batches,
                 mc_epochs, seed, out_path] {
    if (batches->empty()) {
      throw std::invalid_argument("complexity needs at least one batch size");
    }
    const std::vector<int64_t> counts =
        powerlaw_counts(*items, *alpha, *examples, *seed);
    CostParams params;
    params.examples = *examples;
    params.items = *items;
    params.dim = *dim;
    params.unit_cost = *unit_cost;
    params.epochs = *epochs;

    std::vector<CostReportRow> rows;
    for (int64_t b : *batches) {
      const VisitStats visits = expected_item_visits(counts, b);
      CostReportRow row;
      row.batch_size = b;
      row.epochs = *epochs;
      row.beta = visits.total;
      row.ratio = cost_ratio(params, visits.total);
      rows.push_back(row);
      std::cout << "B=" << b << " beta=" << csv::format_double(visits.total)
                << " ratio=" << csv::format_double(row.ratio);
      if (*mc_epochs > 0 && *examples % b == 0) {
        const VisitStats mc =
            simulate_item_visits(counts, b, *mc_epochs, *seed);
        std::cout << " mc_beta=" << csv::format_double(mc.total)
                  << " rel_err="
                  << csv::format_double(
                         std::abs(mc.total - visits.total) / visits.total);
      } else if (*mc_epochs > 0) {
        std::cout << " mc_beta=skipped(B does not divide D)";
      }
      std::cout << '\n';
    }
    save_cost_csv(*out_path, rows);
    std::cout << "cost sweep -> " << *out_path << '\n';
  });
}

}  // namespace pubfeat::cli
