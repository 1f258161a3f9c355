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

#ifndef TETAIS_EXPERIMENT_HPP
#define TETAIS_EXPERIMENT_HPP

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "tetais/csv.hpp"
#include "tetais/diagnostics.hpp"
#include "tetais/samplers.hpp"
#include "tetais/srn.hpp"

namespace tetais {

inline constexpr const char* kVersion = "0.1.0";

/// Fully resolved experiment description; serializes to/from a single JSON
/// document so the manifest alone can reproduce any artifact.
struct ExperimentConfig {
  std::string problem = "rosenbrock";  // rosenbrock | srn-full | srn-qea | srn-cma | grn
  SamplerConfig sampler;
  int repeats = 8;
  std::string out_dir = "out";
  std::uint64_t master_seed = 0;
  long long budget_guard = 100000000;  // cap on M * N per repeat

  // Synthetic-data controls for the srn problems.
  double data_t_end = 100.0;
  std::uint64_t data_seed = 1;

  // Tuning controls.
  std::vector<double> tune_grid;
  int pilot_iterations = 200;

  void validate() const {
    sampler.validate();
    if (repeats < 1) throw std::invalid_argument("ExperimentConfig: repeats must be >= 1");
    const long long work =
        static_cast<long long>(sampler.ensemble_size) * static_cast<long long>(sampler.iterations);
    if (work > budget_guard)
      throw std::invalid_argument("ExperimentConfig: M * N exceeds the budget guard");
    if (problem != "rosenbrock" && problem != "srn-full" && problem != "srn-qea" &&
        problem != "srn-cma" && problem != "grn")
      throw std::invalid_argument("ExperimentConfig: unknown problem " + problem);
    if (problem != "rosenbrock" && !(data_t_end > 0.0))
      throw std::invalid_argument("ExperimentConfig: data horizon must be positive");
  }

  nlohmann::json to_json() const {
    nlohmann::json s;
    s["algorithm"] = to_string(sampler.algorithm);
    s["ensemble_size"] = sampler.ensemble_size;
    s["iterations"] = sampler.iterations;
    s["beta_prop"] = sampler.beta_prop;
    s["map_update_interval"] = sampler.map_update_interval;
    s["map_adaptation_stop"] = sampler.map_adaptation_stop;
    s["map_order"] = sampler.map_order;
    s["resampler"] = sampler.resampler == ResamplerKind::kMultinomial ? "multinomial"
                     : sampler.resampler == ResamplerKind::kMultinomialTransform ? "mt"
                                                                                 : "dimensionwise";
    s["preconditioner"] = to_string(sampler.preconditioner);
    s["burn_in_fraction"] = sampler.burn_in_fraction;
    s["adapt_covariance"] = sampler.adapt_covariance;
    s["map_beta_reg"] = sampler.map_beta_reg;
    s["map_sample_cap"] = sampler.map_sample_cap;
    s["threads"] = sampler.threads;
    if (sampler.init_point.size() > 0)
      s["init_point"] = std::vector<double>(sampler.init_point.begin(), sampler.init_point.end());

    nlohmann::json j;
    j["problem"] = problem;
    j["sampler"] = s;
    j["repeats"] = repeats;
    j["out"] = out_dir;
    j["seed"] = master_seed;
    j["budget_guard"] = budget_guard;
    j["data_t_end"] = data_t_end;
    j["data_seed"] = data_seed;
    j["tune_grid"] = tune_grid;
    j["pilot_iterations"] = pilot_iterations;
    return j;
  }

  static ExperimentConfig from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    c.problem = j.value("problem", c.problem);
    c.repeats = j.value("repeats", c.repeats);
    c.out_dir = j.value("out", c.out_dir);
    c.master_seed = j.value("seed", c.master_seed);
    c.budget_guard = j.value("budget_guard", c.budget_guard);
    c.data_t_end = j.value("data_t_end", c.data_t_end);
    c.data_seed = j.value("data_seed", c.data_seed);
    c.tune_grid = j.value("tune_grid", c.tune_grid);
    c.pilot_iterations = j.value("pilot_iterations", c.pilot_iterations);
    if (j.contains("sampler")) {
      const auto& s = j.at("sampler");
      c.sampler.algorithm = algorithm_from_string(s.value("algorithm", std::string("etais")));
      c.sampler.ensemble_size = s.value("ensemble_size", c.sampler.ensemble_size);
      c.sampler.iterations = s.value("iterations", c.sampler.iterations);
      c.sampler.beta_prop = s.value("beta_prop", c.sampler.beta_prop);
      c.sampler.map_update_interval = s.value("map_update_interval", c.sampler.map_update_interval);
      c.sampler.map_adaptation_stop = s.value("map_adaptation_stop", c.sampler.map_adaptation_stop);
      c.sampler.map_order = s.value("map_order", c.sampler.map_order);
      c.sampler.resampler = resampler_from_string(s.value("resampler", std::string("mt")));
      c.sampler.preconditioner = s.value("preconditioner", std::string("none")) == "logarithmic"
                                     ? Preconditioner::kLogarithmic
                                     : Preconditioner::kNone;
      c.sampler.burn_in_fraction = s.value("burn_in_fraction", c.sampler.burn_in_fraction);
      c.sampler.adapt_covariance = s.value("adapt_covariance", c.sampler.adapt_covariance);
      c.sampler.map_beta_reg = s.value("map_beta_reg", c.sampler.map_beta_reg);
      c.sampler.map_sample_cap = s.value("map_sample_cap", c.sampler.map_sample_cap);
      c.sampler.threads = s.value("threads", c.sampler.threads);
      if (s.contains("init_point")) {
        const auto p = s.at("init_point").get<std::vector<double>>();
        c.sampler.init_point = Eigen::Map<const Vector>(p.data(), static_cast<int>(p.size()));
      }
    }
    return c;
  }

  static ExperimentConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("ExperimentConfig: cannot open " + path);
    nlohmann::json j;
    in >> j;
    return from_json(j);
  }
};

/// A problem instance: the sampling target plus the dataset it was built
/// from (empty object for analytic targets).
struct ProblemInstance {
  Target target;
  nlohmann::json dataset = nlohmann::json::object();
};

namespace detail {

inline nlohmann::json simulate_two_species(const ExperimentConfig& config) {
  Rng rng = Rng::substream(config.data_seed, 0x5a, 0);
  const ReactionNetwork net = two_species_network(two_species_true_rates());
  const PathRecord path = ssa_simulate(net, {0, 0}, config.data_t_end, rng);
  nlohmann::json d;
  d["network"] = net.to_json();
  d["path"] = path.to_json();
  d["stats"] = sufficient_stats(path, net).to_json();
  d["slow"] = project_to_slow(path).to_json();
  return d;
}

inline nlohmann::json simulate_grn(const ExperimentConfig& config) {
  Rng rng = Rng::substream(config.data_seed, 0x5b, 0);
  const ReactionNetwork net = grn_network(grn_true_rates());
  const PathRecord path = ssa_simulate(net, {0, 0, 1, 0, 0}, config.data_t_end, rng);
  nlohmann::json d;
  d["network"] = net.to_json();
  d["path"] = path.to_json();
  d["stats"] = sufficient_stats(path, net).to_json();
  return d;
}

}  // namespace detail

/// Construct the configured target, simulating synthetic data when needed.
inline ProblemInstance build_problem(const ExperimentConfig& config) {
  config.validate();
  ProblemInstance prob;
  if (config.problem == "rosenbrock") {
    prob.target.log_target = RosenbrockDensity{}.as_log_density();
    return prob;
  }
  if (config.problem == "grn") {
    prob.dataset = detail::simulate_grn(config);
    const PathRecord path = PathRecord::from_json(prob.dataset.at("path"));
    prob.target =
        grn_posterior(project_to_grn_slow(path), grn_priors(), grn_constrained_propensities);
    return prob;
  }
  prob.dataset = detail::simulate_two_species(config);
  if (config.problem == "srn-full") {
    prob.target =
        full_posterior(SufficientStats::from_json(prob.dataset.at("stats")), two_species_priors());
  } else {
    const SlowStats slow = SlowStats::from_json(prob.dataset.at("slow"));
    prob.target = slow_posterior(slow, two_species_priors(),
                                 config.problem == "srn-qea" ? ReducedVariant::kQea
                                                             : ReducedVariant::kCma);
  }
  return prob;
}

namespace detail {

inline void write_sample_log(const SampleLog& log, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const bool split = !log.log_prior.empty();
  const bool proposal = !log.log_proposal.empty();
  {
    CsvWriter csv((dir / "samples.csv").string());
    std::vector<std::string> header = {"k", "i"};
    for (int c = 0; c < log.dim; ++c) header.push_back("theta" + std::to_string(c + 1));
    header.push_back("log_weight");
    if (split) {
      header.push_back("log_prior");
      header.push_back("log_likelihood");
    }
    if (proposal) header.push_back("log_proposal");
    csv.row(header);
    for (std::size_t k = 0; k < log.samples.size(); ++k) {
      for (int i = 0; i < log.samples[k].rows(); ++i) {
        std::vector<std::string> row = {std::to_string(k + 1), std::to_string(i)};
        for (int c = 0; c < log.dim; ++c) row.push_back(csv_double(log.samples[k](i, c)));
        row.push_back(csv_double(log.log_weights[k][i]));
        if (split) {
          row.push_back(csv_double(log.log_prior[k][i]));
          row.push_back(csv_double(log.log_like[k][i]));
        }
        if (proposal) row.push_back(csv_double(log.log_proposal[k][i]));
        csv.row(row);
      }
    }
  }
  {
    CsvWriter csv((dir / "summary.csv").string());
    csv.row({"k", "ess", "total_weight", "map_refit"});
    for (std::size_t k = 0; k < log.samples.size(); ++k) {
      const double mx = log.log_weights[k].maxCoeff();
      const double total = ((log.log_weights[k].array() - mx).exp()).sum() * std::exp(mx);
      const bool refit = std::find(log.map_refit_at.begin(), log.map_refit_at.end(),
                                   static_cast<int>(k + 1)) != log.map_refit_at.end();
      csv.row({std::to_string(k + 1), csv_double(log.ess[k]), csv_double(total),
               refit ? "1" : "0"});
    }
  }
  if (log.final_map) {
    std::ofstream out(dir / "map.json");
    out << log.final_map->to_json().dump(2) << "\n";
  }
}

inline void write_manifest(const ExperimentConfig& config, const std::string& command) {
  nlohmann::json m;
  m["command"] = command;
  m["version"] = kVersion;
  m["config"] = config.to_json();
  m["timestamp"] = static_cast<long long>(
      std::chrono::duration_cast<std::chrono::seconds>(
          std::chrono::system_clock::now().time_since_epoch())
          .count());
  std::filesystem::create_directories(config.out_dir);
  std::ofstream out(std::filesystem::path(config.out_dir) / "manifest.json");
  out << m.dump(2) << "\n";
}

inline void write_dataset(const nlohmann::json& dataset, const std::filesystem::path& dir) {
  if (dataset.empty()) return;
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "dataset.json");
  out << dataset.dump(2) << "\n";
  if (dataset.contains("path") && dataset.contains("network")) {
    const ReactionNetwork net = ReactionNetwork::from_json(dataset.at("network"));
    const PathRecord path = PathRecord::from_json(dataset.at("path"));
    CsvWriter csv((dir / "trajectory.csv").string());
    std::vector<std::string> header = {"t"};
    for (const auto& s : net.species) header.push_back(s);
    csv.row(header);
    State x = path.x0;
    auto emit = [&](double t) {
      std::vector<std::string> row = {csv_double(t)};
      for (long long v : x) row.push_back(std::to_string(v));
      csv.row(row);
    };
    emit(0.0);
    for (const auto& [t, j] : path.events) {
      for (int s = 0; s < net.num_species(); ++s) x[s] += net.reactions[j].stoich(s);
      emit(t);
    }
  }
}

}  // namespace detail

/// Execute the configured repeats; each repeat runs with seed = master seed
/// + repeat index and writes its own artifact directory.
inline std::vector<SampleLog> run_experiment(const ExperimentConfig& config) {
  config.validate();
  const ProblemInstance prob = build_problem(config);
  detail::write_manifest(config, "run");
  detail::write_dataset(prob.dataset, std::filesystem::path(config.out_dir) / "dataset");

  std::vector<SampleLog> logs;
  const std::filesystem::path out(config.out_dir);
  CsvWriter pooled((out / "diagnostics.csv").string());
  pooled.row({"repeat", "k", "ess", "ess_ratio"});
  for (int r = 0; r < config.repeats; ++r) {
    SamplerConfig sc = config.sampler;
    sc.seed = config.master_seed + static_cast<std::uint64_t>(r);
    SampleLog log = run_sampler(sc, prob.target);
    char name[32];
    std::snprintf(name, sizeof(name), "repeat_%03d", r);
    detail::write_sample_log(log, out / name);
    const double m = static_cast<double>(sc.ensemble_size);
    for (std::size_t k = 0; k < log.ess.size(); ++k)
      pooled.row({std::to_string(r), std::to_string(k + 1), csv_double(log.ess[k]),
                  csv_double(log.ess[k] / m)});
    logs.push_back(std::move(log));
  }
  return logs;
}

/// Generate and store the synthetic dataset for an srn problem.
inline void simulate_experiment(const ExperimentConfig& config) {
  config.validate();
  if (config.problem == "rosenbrock")
    throw std::invalid_argument("simulate: rosenbrock has no dataset");
  const ProblemInstance prob = build_problem(config);
  detail::write_manifest(config, "simulate");
  detail::write_dataset(prob.dataset, std::filesystem::path(config.out_dir) / "dataset");
}

struct TuneResult {
  double beta = 0.0;
  std::vector<std::pair<double, double>> table;  // (beta, score)
};

/// Short pilot runs over the beta grid. MH variants target the classic
/// 23.4% acceptance; ensemble variants maximize the mean ESS ratio.
inline TuneResult tune_experiment(const ExperimentConfig& config) {
  config.validate();
  if (config.tune_grid.empty()) throw std::invalid_argument("tune: empty grid");
  const ProblemInstance prob = build_problem(config);
  const bool is_mh = config.sampler.algorithm == Algorithm::kMh ||
                     config.sampler.algorithm == Algorithm::kTransportMh;

  TuneResult result;
  double best_rank = kNegInf;
  for (double beta : config.tune_grid) {
    SamplerConfig sc = config.sampler;
    sc.beta_prop = beta;
    sc.iterations = config.pilot_iterations;
    sc.seed = config.master_seed;
    double score;
    try {
      const SampleLog log = run_sampler(sc, prob.target);
      if (is_mh) {
        score = log.acceptance_rate();
      } else {
        double mean_ess = 0.0;
        for (double e : log.ess) mean_ess += e;
        score = mean_ess / (static_cast<double>(log.ess.size()) * sc.ensemble_size);
      }
    } catch (const DegenerateEnsembleError&) {
      score = kNegInf;
    }
    result.table.emplace_back(beta, score);
    if (!std::isfinite(score)) continue;
    const double rank = is_mh ? -std::abs(score - 0.234) : score;
    if (rank > best_rank) {
      best_rank = rank;
      result.beta = beta;
    }
  }
  if (!std::isfinite(best_rank)) throw std::runtime_error("tune: all pilot runs degenerate");

  detail::write_manifest(config, "tune");
  const std::filesystem::path out(config.out_dir);
  CsvWriter csv((out / "tune.csv").string());
  csv.row({"beta", is_mh ? "acceptance" : "ess_ratio"});
  for (const auto& [b, s] : result.table) csv.row({csv_double(b), csv_double(s)});
  ExperimentConfig resolved = config;
  resolved.sampler.beta_prop = result.beta;
  std::ofstream cfg(out / "resolved_config.json");
  cfg << resolved.to_json().dump(2) << "\n";
  return result;
}

namespace detail {

inline std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_csv: cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace detail

/// Recompute per-iteration ESS (and evidence, when the logs carry the
/// prior/likelihood/proposal columns) from stored sample CSVs.
inline void diagnose_experiment(const ExperimentConfig& config) {
  const std::filesystem::path out(config.out_dir);
  if (!std::filesystem::exists(out))
    throw std::runtime_error("diagnose: no artifacts at " + config.out_dir);
  CsvWriter csv((out / "diagnostics_recomputed.csv").string());
  csv.row({"repeat", "k", "ess", "evidence", "evidence_se"});
  for (int r = 0;; ++r) {
    char name[32];
    std::snprintf(name, sizeof(name), "repeat_%03d", r);
    const std::filesystem::path dir = out / name;
    if (!std::filesystem::exists(dir / "samples.csv")) break;
    const auto rows = detail::read_csv(dir / "samples.csv");
    const auto& header = rows.front();
    auto col = [&](const std::string& name_) {
      for (std::size_t c = 0; c < header.size(); ++c)
        if (header[c] == name_) return static_cast<int>(c);
      return -1;
    };
    const int c_k = col("k"), c_w = col("log_weight");
    const int c_lp = col("log_prior"), c_ll = col("log_likelihood"), c_lq = col("log_proposal");
    std::vector<std::vector<double>> lw, lp, ll, lq;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const std::size_t k = std::stoull(rows[i][c_k]);
      if (lw.size() < k) {
        lw.resize(k);
        lp.resize(k);
        ll.resize(k);
        lq.resize(k);
      }
      lw[k - 1].push_back(std::stod(rows[i][c_w]));
      if (c_lp >= 0) lp[k - 1].push_back(std::stod(rows[i][c_lp]));
      if (c_ll >= 0) ll[k - 1].push_back(std::stod(rows[i][c_ll]));
      if (c_lq >= 0) lq[k - 1].push_back(std::stod(rows[i][c_lq]));
    }
    EvidenceEstimate evidence;
    bool have_evidence = c_lp >= 0 && c_ll >= 0 && c_lq >= 0 && !lp.empty() && !lp[0].empty();
    if (have_evidence) {
      auto wrap = [](const std::vector<std::vector<double>>& v) {
        std::vector<Vector> out_;
        for (const auto& b : v)
          out_.push_back(Eigen::Map<const Vector>(b.data(), static_cast<int>(b.size())));
        return out_;
      };
      evidence = marginal_likelihood(wrap(ll), wrap(lp), wrap(lq));
    }
    for (std::size_t k = 0; k < lw.size(); ++k) {
      double mx = kNegInf;
      for (double v : lw[k]) mx = std::max(mx, v);
      double s = 0.0, s2 = 0.0;
      for (double v : lw[k]) {
        const double w = std::exp(v - mx);
        s += w;
        s2 += w * w;
      }
      csv.row({std::to_string(r), std::to_string(k + 1), csv_double(s * s / s2),
               have_evidence ? csv_double(evidence.value) : "",
               have_evidence ? csv_double(evidence.jackknife_se) : ""});
    }
  }
}

}  // namespace tetais

#endif  // TETAIS_EXPERIMENT_HPP
