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

#ifndef TETAIS_SRN_HPP
#define TETAIS_SRN_HPP

#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tetais/density.hpp"
#include "tetais/rng.hpp"
#include "tetais/samplers.hpp"

namespace tetais {

/// One mass-action reaction: reactant/product multiplicities per species.
struct Reaction {
  std::vector<int> reactants;
  std::vector<int> products;

  int stoich(int s) const { return products[s] - reactants[s]; }
};

/// A chemical reaction network with mass-action kinetics. Rate constants
/// include any volume scaling (zeroth-order reactions carry k V directly).
struct ReactionNetwork {
  std::vector<std::string> species;
  std::vector<Reaction> reactions;
  Vector rates;

  int num_species() const { return static_cast<int>(species.size()); }
  int num_reactions() const { return static_cast<int>(reactions.size()); }

  void validate() const {
    if (rates.size() != num_reactions())
      throw std::invalid_argument("ReactionNetwork: rate/reaction count mismatch");
    for (const auto& r : reactions)
      if (static_cast<int>(r.reactants.size()) != num_species() ||
          static_cast<int>(r.products.size()) != num_species())
        throw std::invalid_argument("ReactionNetwork: reaction width mismatch");
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["species"] = species;
    j["reactions"] = nlohmann::json::array();
    for (int r = 0; r < num_reactions(); ++r)
      j["reactions"].push_back({{"reactants", reactions[r].reactants},
                                {"products", reactions[r].products},
                                {"rate", rates[r]}});
    return j;
  }

  static ReactionNetwork from_json(const nlohmann::json& j) {
    ReactionNetwork net;
    net.species = j.at("species").get<std::vector<std::string>>();
    std::vector<double> k;
    for (const auto& r : j.at("reactions")) {
      net.reactions.push_back({r.at("reactants").get<std::vector<int>>(),
                               r.at("products").get<std::vector<int>>()});
      k.push_back(r.at("rate").get<double>());
    }
    net.rates = Eigen::Map<const Vector>(k.data(), static_cast<int>(k.size()));
    net.validate();
    return net;
  }
};

using State = std::vector<long long>;

/// Falling-factorial reactant count g_j(x): product over species of
/// x(x-1).../m! for multiplicity m (so a dimerization P+P counts pairs).
inline double mass_action_count(const Reaction& reaction, const State& state) {
  double g = 1.0;
  for (std::size_t s = 0; s < state.size(); ++s) {
    const int m = reaction.reactants[s];
    for (int e = 0; e < m; ++e) g *= static_cast<double>(state[s] - e) / static_cast<double>(e + 1);
    if (g <= 0.0) return 0.0;
  }
  return g;
}

inline double mass_action_propensity(const ReactionNetwork& net, const State& state, int j) {
  return net.rates[j] * mass_action_count(net.reactions[j], state);
}

/// A fully observed reaction path: the event sequence determines the whole
/// trajectory from the initial state.
struct PathRecord {
  State x0;
  std::vector<std::pair<double, int>> events;  // (time, reaction index)
  double t_end = 0.0;

  void validate() const {
    double prev = 0.0;
    for (const auto& [t, j] : events) {
      if (!(t > prev) || t > t_end) throw std::invalid_argument("PathRecord: times not increasing");
      prev = t;
    }
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["x0"] = x0;
    j["T"] = t_end;
    j["events"] = nlohmann::json::array();
    for (const auto& [t, r] : events) j["events"].push_back({t, r});
    return j;
  }

  static PathRecord from_json(const nlohmann::json& j) {
    PathRecord p;
    p.x0 = j.at("x0").get<State>();
    p.t_end = j.at("T").get<double>();
    for (const auto& e : j.at("events"))
      p.events.emplace_back(e[0].get<double>(), e[1].get<int>());
    return p;
  }
};

/// Gillespie direct method: exponential holding times at total propensity,
/// reaction chosen proportionally. Stops at T or in an absorbing state.
inline PathRecord ssa_simulate(const ReactionNetwork& net, const State& x0, double t_end,
                               Rng& rng) {
  net.validate();
  if (!(t_end > 0.0)) throw std::invalid_argument("ssa_simulate: T must be positive");
  PathRecord path;
  path.x0 = x0;
  path.t_end = t_end;
  State x = x0;
  const int nr = net.num_reactions();
  Vector a(nr);
  double t = 0.0;
  for (;;) {
    double a0 = 0.0;
    for (int j = 0; j < nr; ++j) {
      a[j] = mass_action_propensity(net, x, j);
      a0 += a[j];
    }
    if (!std::isfinite(a0)) throw std::overflow_error("ssa_simulate: propensity overflow");
    if (a0 == 0.0) break;  // absorbing state
    t += rng.exponential(a0);
    if (t >= t_end) break;
    const int j = rng.discrete(a, a0);
    for (int s = 0; s < net.num_species(); ++s) x[s] += net.reactions[j].stoich(s);
    path.events.emplace_back(t, j);
  }
  return path;
}

/// Per-reaction sufficient statistics of a fully observed path: event counts
/// R_j, occupancy integrals G_j = int g_j(X(t)) dt, and the k-independent
/// log-likelihood constant C = sum over events of log g_j(X(t-)).
struct SufficientStats {
  std::vector<long long> counts;  // R_j
  Vector occupancy;               // G_j
  double log_g_sum = 0.0;         // C
  double t_end = 0.0;

  nlohmann::json to_json() const {
    return {{"R", counts},
            {"G", std::vector<double>(occupancy.begin(), occupancy.end())},
            {"C", log_g_sum},
            {"T", t_end}};
  }

  static SufficientStats from_json(const nlohmann::json& j) {
    SufficientStats s;
    s.counts = j.at("R").get<std::vector<long long>>();
    const auto g = j.at("G").get<std::vector<double>>();
    s.occupancy = Eigen::Map<const Vector>(g.data(), static_cast<int>(g.size()));
    s.log_g_sum = j.at("C").get<double>();
    s.t_end = j.at("T").get<double>();
    return s;
  }
};

inline SufficientStats sufficient_stats(const PathRecord& path, const ReactionNetwork& net) {
  net.validate();
  path.validate();
  const int nr = net.num_reactions();
  SufficientStats stats;
  stats.counts.assign(nr, 0);
  stats.occupancy = Vector::Zero(nr);
  stats.t_end = path.t_end;
  State x = path.x0;
  double prev = 0.0;
  auto accumulate = [&](double until) {
    const double dt = until - prev;
    for (int j = 0; j < nr; ++j)
      stats.occupancy[j] += dt * mass_action_count(net.reactions[j], x);
    prev = until;
  };
  for (const auto& [t, j] : path.events) {
    accumulate(t);
    const double g = mass_action_count(net.reactions[j], x);
    if (!(g > 0.0)) throw std::invalid_argument("sufficient_stats: event with zero propensity");
    stats.log_g_sum += std::log(g);
    ++stats.counts[j];
    for (int s = 0; s < net.num_species(); ++s) {
      x[s] += net.reactions[j].stoich(s);
      if (x[s] < 0) throw std::invalid_argument("sufficient_stats: state went negative");
    }
  }
  accumulate(path.t_end);
  return stats;
}

/// Full-path log-likelihood: sum_j [R_j log k_j - k_j G_j] + C. Exact in the
/// k-dependent part; -infinity for non-positive rates.
inline double full_loglikelihood(const SufficientStats& stats, const Vector& k) {
  if (k.size() != static_cast<int>(stats.counts.size()))
    throw std::invalid_argument("full_loglikelihood: rate dimension mismatch");
  double ll = stats.log_g_sum;
  for (int j = 0; j < k.size(); ++j) {
    if (!(k[j] > 0.0)) return kNegInf;
    ll += static_cast<double>(stats.counts[j]) * std::log(k[j]) - k[j] * stats.occupancy[j];
  }
  return ll;
}

/// Gamma conjugacy: Gamma(a, b) prior on k_j with channel stats (R_j, G_j)
/// gives posterior Gamma(a + R_j, b + G_j).
inline std::vector<GammaPrior> conjugate_posterior(const std::vector<GammaPrior>& priors,
                                                   const SufficientStats& stats) {
  if (priors.size() != stats.counts.size())
    throw std::invalid_argument("conjugate_posterior: dimension mismatch");
  std::vector<GammaPrior> post;
  for (std::size_t j = 0; j < priors.size(); ++j)
    post.emplace_back(priors[j].alpha + static_cast<double>(stats.counts[j]),
                      priors[j].beta + stats.occupancy[j]);
  return post;
}

// ---------------------------------------------------------------------------
// Two-species multiscale system: 0 -> S1 <-> S2 -> 0, with slow variable
// S = X1 + X2 conserved by the fast exchange reactions.
// ---------------------------------------------------------------------------

/// Rates are (k1 V, k2, k3, k4); the birth parameter folds in the volume
/// since only the product enters the dynamics.
inline ReactionNetwork two_species_network(const Vector& k) {
  if (k.size() != 4) throw std::invalid_argument("two_species_network: expects 4 rates");
  ReactionNetwork net;
  net.species = {"S1", "S2"};
  net.reactions = {
      {{0, 0}, {1, 0}},  // 0 -> S1
      {{1, 0}, {0, 1}},  // S1 -> S2
      {{0, 1}, {1, 0}},  // S2 -> S1
      {{0, 1}, {0, 0}},  // S2 -> 0
  };
  net.rates = k;
  return net;
}

inline Vector two_species_true_rates() {
  Vector k(4);
  k << 100.0, 10.0, 10.0, 1.0;
  return k;
}

inline std::vector<GammaPrior> two_species_priors() {
  return {GammaPrior(150.0, 15.0 / 9.0), GammaPrior(5.0, 5.0 / 12.0), GammaPrior(5.0, 5.0 / 12.0),
          GammaPrior(3.0, 1.0)};
}

/// QEA effective degradation propensity k2 k4 s / (k2 + k3).
inline double qea_effective_propensity(double s, double k2, double k3, double k4) {
  return k2 * k4 * s / (k2 + k3);
}

/// CMA effective degradation propensity k2 k4 s / (k2 + k3 + k4).
inline double cma_effective_propensity(double s, double k2, double k3, double k4) {
  return k2 * k4 * s / (k2 + k3 + k4);
}

enum class ReducedVariant { kFull, kQea, kCma };

inline std::string to_string(ReducedVariant v) {
  switch (v) {
    case ReducedVariant::kFull: return "full";
    case ReducedVariant::kQea: return "qea";
    case ReducedVariant::kCma: return "cma";
  }
  return "?";
}

/// Effective degradation rate constant in alpha_4(s) = k_hat s.
inline double effective_degradation_rate(const Vector& k, ReducedVariant variant) {
  switch (variant) {
    case ReducedVariant::kQea: return k[1] * k[3] / (k[1] + k[2]);
    case ReducedVariant::kCma: return k[1] * k[3] / (k[1] + k[2] + k[3]);
    case ReducedVariant::kFull: break;
  }
  throw std::invalid_argument("effective_degradation_rate: full model has no reduced rate");
}

/// Slow-variable statistics from a two-species path. The X2-based fields
/// carry the latent intensity of the degradation channel so the full-model
/// likelihood of the same slow events remains available for comparison.
struct SlowStats {
  long long r1 = 0;          // birth events
  long long r4 = 0;          // degradation events
  double integral_s = 0.0;   // int S dt
  double log_s_sum = 0.0;    // sum log S(t-) at degradation events
  double integral_x2 = 0.0;  // int X2 dt (latent)
  double log_x2_sum = 0.0;   // sum log X2(t-) at degradation events (latent)
  double t_end = 0.0;

  nlohmann::json to_json() const {
    return {{"R1", r1},           {"R4", r4},           {"int_s", integral_s},
            {"log_s", log_s_sum}, {"int_x2", integral_x2}, {"log_x2", log_x2_sum},
            {"T", t_end}};
  }

  static SlowStats from_json(const nlohmann::json& j) {
    SlowStats s;
    s.r1 = j.at("R1").get<long long>();
    s.r4 = j.at("R4").get<long long>();
    s.integral_s = j.at("int_s").get<double>();
    s.log_s_sum = j.at("log_s").get<double>();
    s.integral_x2 = j.at("int_x2").get<double>();
    s.log_x2_sum = j.at("log_x2").get<double>();
    s.t_end = j.at("T").get<double>();
    return s;
  }
};

/// Project a two-species path onto the slow variable: the fast exchange
/// events R2/R3 leave S unchanged and are dropped.
inline SlowStats project_to_slow(const PathRecord& path) {
  path.validate();
  SlowStats slow;
  slow.t_end = path.t_end;
  long long x1 = path.x0[0];
  long long x2 = path.x0[1];
  double prev = 0.0;
  for (const auto& [t, j] : path.events) {
    const double dt = t - prev;
    slow.integral_s += dt * static_cast<double>(x1 + x2);
    slow.integral_x2 += dt * static_cast<double>(x2);
    prev = t;
    switch (j) {
      case 0:
        ++slow.r1;
        ++x1;
        break;
      case 1:
        --x1;
        ++x2;
        break;
      case 2:
        ++x1;
        --x2;
        break;
      case 3:
        ++slow.r4;
        slow.log_s_sum += std::log(static_cast<double>(x1 + x2));
        slow.log_x2_sum += std::log(static_cast<double>(x2));
        --x2;
        break;
      default:
        throw std::invalid_argument("project_to_slow: not a two-species path");
    }
    if (x1 < 0 || x2 < 0) throw std::invalid_argument("project_to_slow: state went negative");
  }
  const double dt = path.t_end - prev;
  slow.integral_s += dt * static_cast<double>(x1 + x2);
  slow.integral_x2 += dt * static_cast<double>(x2);
  return slow;
}

/// Log-likelihood of the slow birth/death events. The reduced variants use
/// the effective intensity k_hat S(t); the full variant uses the exact
/// latent intensity k4 X2(t), so all three are likelihoods of the same data.
inline double reduced_loglikelihood(const SlowStats& slow, const Vector& k,
                                    ReducedVariant variant) {
  if (k.size() != 4) throw std::invalid_argument("reduced_loglikelihood: expects 4 rates");
  for (int j = 0; j < 4; ++j)
    if (!(k[j] > 0.0)) return kNegInf;
  const double birth = static_cast<double>(slow.r1) * std::log(k[0]) - k[0] * slow.t_end;
  if (variant == ReducedVariant::kFull)
    return birth + static_cast<double>(slow.r4) * std::log(k[3]) - k[3] * slow.integral_x2 +
           slow.log_x2_sum;
  const double khat = effective_degradation_rate(k, variant);
  return birth + static_cast<double>(slow.r4) * std::log(khat) - khat * slow.integral_s +
         slow.log_s_sum;
}

// ---------------------------------------------------------------------------
// Gene regulatory network: P+P <-> D, G+D <-> G', G -> G+M, M -> M+P,
// P -> 0, M -> 0. Species order (P, D, G, G', M).
// ---------------------------------------------------------------------------

inline ReactionNetwork grn_network(const Vector& k) {
  if (k.size() != 8) throw std::invalid_argument("grn_network: expects 8 rates");
  ReactionNetwork net;
  net.species = {"P", "D", "G", "Gp", "M"};
  net.reactions = {
      {{2, 0, 0, 0, 0}, {0, 1, 0, 0, 0}},  // P+P -> D
      {{0, 1, 0, 0, 0}, {2, 0, 0, 0, 0}},  // D -> P+P
      {{0, 1, 1, 0, 0}, {0, 0, 0, 1, 0}},  // G+D -> G'
      {{0, 0, 0, 1, 0}, {0, 1, 1, 0, 0}},  // G' -> G+D
      {{0, 0, 1, 0, 0}, {0, 0, 1, 0, 1}},  // G -> G+M
      {{0, 0, 0, 0, 1}, {1, 0, 0, 0, 1}},  // M -> M+P
      {{1, 0, 0, 0, 0}, {0, 0, 0, 0, 0}},  // P -> 0
      {{0, 0, 0, 0, 1}, {0, 0, 0, 0, 0}},  // M -> 0
  };
  net.rates = k;
  return net;
}

inline Vector grn_true_rates() {
  Vector k(8);
  k << 0.04, 5000.0, 100.0, 1.0, 0.5, 2.0, 0.2, 0.05;
  return k;
}

inline std::vector<GammaPrior> grn_priors() {
  return {GammaPrior(2.0, 50.0), GammaPrior(100.0, 0.02), GammaPrior(100.0, 1.0),
          GammaPrior(3.0, 1.0),  GammaPrior(3.0, 0.6),    GammaPrior(3.0, 1.0),
          GammaPrior(2.0, 50.0), GammaPrior(2.0, 50.0)};
}

/// Observed-path statistics for the GRN effective model on (T, M), where
/// T = P + 2D + 2G' is conserved by the fast binding reactions. Channels 5
/// and 7 have state-dependent effective propensities in T, so occupancy and
/// event counts are kept per distinct T value.
struct GrnSlowStats {
  std::map<long long, double> occupancy_t;    // time spent at each T value
  std::map<long long, long long> r5_at;       // mRNA production events by T(t-)
  std::map<long long, long long> r7_at;       // protein degradation events by T(t-)
  long long r6 = 0;                           // translation events
  long long r8 = 0;                           // mRNA degradation events
  double integral_m = 0.0;                    // int M dt
  double log_m_sum = 0.0;                     // sum log M(t-) at R6/R8 events
  double t_end = 0.0;
};

/// Project a GRN path onto the observables (T, M). The fast reactions 1-4
/// change neither T nor M and are dropped.
inline GrnSlowStats project_to_grn_slow(const PathRecord& path) {
  path.validate();
  GrnSlowStats slow;
  slow.t_end = path.t_end;
  long long T = path.x0[0] + 2 * path.x0[1] + 2 * path.x0[3];
  long long M = path.x0[4];
  double prev = 0.0;
  auto hold = [&](double until) {
    slow.occupancy_t[T] += until - prev;
    slow.integral_m += (until - prev) * static_cast<double>(M);
    prev = until;
  };
  for (const auto& [t, j] : path.events) {
    hold(t);
    switch (j) {
      case 0: case 1: case 2: case 3:
        break;  // fast subsystem: T and M unchanged
      case 4:
        ++slow.r5_at[T];
        ++M;
        break;
      case 5:
        ++slow.r6;
        slow.log_m_sum += std::log(static_cast<double>(M));
        ++T;
        break;
      case 6:
        ++slow.r7_at[T];
        --T;
        break;
      case 7:
        ++slow.r8;
        slow.log_m_sum += std::log(static_cast<double>(M));
        --M;
        break;
      default:
        throw std::invalid_argument("project_to_grn_slow: not a GRN path");
    }
  }
  hold(path.t_end);
  return slow;
}

/// Plug-in computing the effective propensities (alpha5_hat, alpha7_hat) of
/// the reduced GRN dynamics at total protein count T and rates k. The paper
/// omits the derivation, so the interface is injectable.
using GrnEffectivePropensities =
    std::function<std::pair<double, double>(long long T, const Vector& k)>;

/// Default plug-in: stationary distribution of the fast binding subsystem
/// (reactions 1-4) constrained to P + 2D + 2G' = T with one gene copy. The
/// constrained state space is finite, so the stationary CME is solved
/// exactly by a dense linear solve; alpha5_hat = k5 P(G on), alpha7_hat =
/// k7 E[P].
inline std::pair<double, double> grn_constrained_propensities(long long T, const Vector& k) {
  struct FastState {
    long long p, d, gp;  // P, D, G' with G = 1 - G'
  };
  std::vector<FastState> states;
  for (long long gp = 0; gp <= std::min<long long>(1, T / 2); ++gp)
    for (long long d = 0; 2 * d + 2 * gp <= T; ++d)
      states.push_back({T - 2 * d - 2 * gp, d, gp});
  const int n = static_cast<int>(states.size());
  if (n == 1) return {k[4] * (1.0 - states[0].gp), k[6] * static_cast<double>(states[0].p)};

  // States are enumerated gp-major then d-ascending, so (d, gp) indexes
  // directly: gp = 0 block first (T/2 + 1 states), then the gp = 1 block.
  const long long n0 = T / 2 + 1;
  auto index_of = [&](long long /*p*/, long long d, long long gp) {
    return static_cast<int>(gp == 0 ? d : n0 + d);
  };

  // Stationary solve pi Q = 0, sum pi = 1: replace one balance equation by
  // the normalization row.
  Matrix A = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const auto& s = states[i];
    double out = 0.0;
    auto flow = [&](double rate, long long p, long long d, long long gp) {
      if (rate <= 0.0) return;
      A(index_of(p, d, gp), i) += rate;
      out += rate;
    };
    // P+P -> D and D -> P+P
    flow(k[0] * static_cast<double>(s.p) * static_cast<double>(s.p - 1) / 2.0, s.p - 2, s.d + 1,
         s.gp);
    flow(k[1] * static_cast<double>(s.d), s.p + 2, s.d - 1, s.gp);
    // G+D -> G' and G' -> G+D
    if (s.gp == 0) flow(k[2] * static_cast<double>(s.d), s.p, s.d - 1, 1);
    if (s.gp == 1) flow(k[3], s.p, s.d + 1, 0);
    A(i, i) -= out;
  }
  Vector b = Vector::Zero(n);
  A.row(n - 1).setOnes();
  b[n - 1] = 1.0;
  const Vector pi = A.fullPivLu().solve(b);

  double gene_on = 0.0;
  double mean_p = 0.0;
  for (int i = 0; i < n; ++i) {
    const double p = std::max(pi[i], 0.0);  // clip tiny negative round-off
    gene_on += p * (1.0 - static_cast<double>(states[i].gp));
    mean_p += p * static_cast<double>(states[i].p);
  }
  return {k[4] * gene_on, k[6] * mean_p};
}

/// Log-likelihood of the observed (T, M) path under the effective GRN
/// dynamics, with the state-dependent propensities supplied by the plug-in.
/// The plug-in is evaluated once per distinct T value.
inline double grn_reduced_loglikelihood(const GrnSlowStats& slow, const Vector& k,
                                        const GrnEffectivePropensities& plugin) {
  if (!plugin) throw std::invalid_argument("grn_reduced_loglikelihood: missing plug-in");
  if (k.size() != 8) throw std::invalid_argument("grn_reduced_loglikelihood: expects 8 rates");
  for (int j = 0; j < 8; ++j)
    if (!(k[j] > 0.0)) return kNegInf;

  std::map<long long, std::pair<double, double>> eff;
  auto effective = [&](long long T) -> const std::pair<double, double>& {
    auto it = eff.find(T);
    if (it == eff.end()) it = eff.emplace(T, plugin(T, k)).first;
    return it->second;
  };

  double ll = 0.0;
  for (const auto& [T, dt] : slow.occupancy_t) {
    const auto& [a5, a7] = effective(T);
    ll -= dt * (a5 + a7);
  }
  for (const auto& [T, r] : slow.r5_at) {
    const double a5 = effective(T).first;
    if (!(a5 > 0.0)) return kNegInf;
    ll += static_cast<double>(r) * std::log(a5);
  }
  for (const auto& [T, r] : slow.r7_at) {
    const double a7 = effective(T).second;
    if (!(a7 > 0.0)) return kNegInf;
    ll += static_cast<double>(r) * std::log(a7);
  }
  ll += static_cast<double>(slow.r6) * std::log(k[5]) - k[5] * slow.integral_m;
  ll += static_cast<double>(slow.r8) * std::log(k[7]) - k[7] * slow.integral_m;
  ll += slow.log_m_sum;
  return ll;
}

// ---------------------------------------------------------------------------
// Posterior assembly
// ---------------------------------------------------------------------------

namespace detail {

inline Target assemble_target(std::vector<GammaPrior> priors,
                              std::function<double(const Vector&)> loglike) {
  const int d = static_cast<int>(priors.size());
  Target target;
  target.log_prior = product_prior_density(priors);
  target.log_likelihood = LogDensity{d, loglike};
  target.log_target = LogDensity{d, [prior = *target.log_prior, like = loglike](const Vector& k) {
                                   const double lp = prior(k);
                                   if (lp == kNegInf) return kNegInf;
                                   return lp + like(k);
                                 }};
  target.sample_prior = [priors = std::move(priors), d](Rng& rng) {
    Vector k(d);
    for (int i = 0; i < d; ++i) k[i] = priors[i].sample(rng);
    return k;
  };
  return target;
}

}  // namespace detail

/// Posterior over all rates from a fully observed path (conjugate: the
/// analytic posterior is a product of Gammas).
inline Target full_posterior(const SufficientStats& stats, std::vector<GammaPrior> priors) {
  if (priors.size() != stats.counts.size())
    throw std::invalid_argument("full_posterior: dimension mismatch");
  return detail::assemble_target(
      std::move(priors), [stats](const Vector& k) { return full_loglikelihood(stats, k); });
}

/// Two-species posterior from slow-variable observations, with the
/// likelihood variant selecting the exact, QEA, or CMA intensity.
inline Target slow_posterior(const SlowStats& slow, std::vector<GammaPrior> priors,
                             ReducedVariant variant) {
  if (priors.size() != 4) throw std::invalid_argument("slow_posterior: expects 4 priors");
  return detail::assemble_target(std::move(priors), [slow, variant](const Vector& k) {
    return reduced_loglikelihood(slow, k, variant);
  });
}

/// GRN posterior from (T, M) observations through the effective-propensity
/// plug-in.
inline Target grn_posterior(const GrnSlowStats& slow, std::vector<GammaPrior> priors,
                            GrnEffectivePropensities plugin) {
  if (!plugin) throw std::invalid_argument("grn_posterior: missing effective-propensity plug-in");
  if (priors.size() != 8) throw std::invalid_argument("grn_posterior: expects 8 priors");
  return detail::assemble_target(std::move(priors),
                                 [slow, plugin = std::move(plugin)](const Vector& k) {
                                   return grn_reduced_loglikelihood(slow, k, plugin);
                                 });
}

}  // namespace tetais

#endif  // TETAIS_SRN_HPP
