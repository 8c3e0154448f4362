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

#include "common.hpp"
#include "pubfeat/parallel.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "Differentially private training of item/user embedding models "
      "through perturbed sufficient statistics"};
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "Read options from a config file (flags override it)");
  app.add_option_function<int>(
      "--threads",
      [](int n) { pubfeat::set_max_threads(n); },
      "Worker thread cap (overrides PUBFEAT_DP_THREADS)");

  pubfeat::cli::setup_gen_data(app);
  pubfeat::cli::setup_train(app);
  pubfeat::cli::setup_sweep(app);
  pubfeat::cli::setup_complexity(app);
  pubfeat::cli::setup_fedsim(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
