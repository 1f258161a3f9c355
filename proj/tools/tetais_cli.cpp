// Copyright 2026 the tetais authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "tetais/experiment.hpp"

namespace {

struct CliOverrides {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  int repeats = 0;
  int threads = 0;
  bool has_seed = false;
  bool has_repeats = false;
  bool has_out = false;
  bool has_threads = false;
};

void add_common_flags(CLI::App* cmd, CliOverrides* o) {
  cmd->add_option("--config", o->config_path, "Experiment configuration (JSON)")
      ->envname("TETAIS_CONFIG");
  cmd->add_option("--seed", o->seed, "Master RNG seed")
      ->envname("TETAIS_SEED")
      ->each([o](const std::string&) { o->has_seed = true; });
  cmd->add_option("--repeats", o->repeats, "Number of repeats")
      ->envname("TETAIS_REPEATS")
      ->each([o](const std::string&) { o->has_repeats = true; });
  cmd->add_option("--out", o->out_dir, "Output directory")
      ->envname("TETAIS_OUT")
      ->each([o](const std::string&) { o->has_out = true; });
  cmd->add_option("--threads", o->threads, "Worker threads per repeat")
      ->envname("TETAIS_THREADS")
      ->each([o](const std::string&) { o->has_threads = true; });
}

tetais::ExperimentConfig resolve(const CliOverrides& o) {
  tetais::ExperimentConfig config =
      o.config_path.empty() ? tetais::ExperimentConfig{} : tetais::ExperimentConfig::load(o.config_path);
  if (o.has_seed) config.master_seed = o.seed;
  if (o.has_repeats) config.repeats = o.repeats;
  if (o.has_out) config.out_dir = o.out_dir;
  if (o.has_threads) config.sampler.threads = o.threads;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transport-accelerated ensemble importance sampling experiments"};
  app.require_subcommand(1);

  CliOverrides o;
  CLI::App* run = app.add_subcommand("run", "Run the configured sampler repeats");
  CLI::App* simulate = app.add_subcommand("simulate", "Generate the synthetic dataset");
  CLI::App* tune = app.add_subcommand("tune", "Pilot-tune the proposal scale");
  CLI::App* diagnose = app.add_subcommand("diagnose", "Recompute metrics from stored logs");
  for (CLI::App* cmd : {run, simulate, tune, diagnose}) add_common_flags(cmd, &o);

  CLI11_PARSE(app, argc, argv);

  try {
    const tetais::ExperimentConfig config = resolve(o);
    if (run->parsed()) {
      const auto logs = tetais::run_experiment(config);
      for (std::size_t r = 0; r < logs.size(); ++r) {
        const auto& log = logs[r];
        double mean_ess = 0.0;
        for (double e : log.ess) mean_ess += e;
        mean_ess /= static_cast<double>(log.ess.empty() ? 1 : log.ess.size());
        std::cout << "repeat " << r << ": iterations=" << log.iterations_completed()
                  << " mean_ess=" << mean_ess;
        if (log.mh_steps > 0) std::cout << " acceptance=" << log.acceptance_rate();
        std::cout << "\n";
      }
    } else if (simulate->parsed()) {
      tetais::simulate_experiment(config);
      std::cout << "dataset written to " << config.out_dir << "/dataset\n";
    } else if (tune->parsed()) {
      const auto result = tetais::tune_experiment(config);
      std::cout << "selected beta_prop=" << result.beta << "\n";
    } else if (diagnose->parsed()) {
      tetais::diagnose_experiment(config);
      std::cout << "diagnostics written to " << config.out_dir << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
