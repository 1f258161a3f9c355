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

#ifndef TETAIS_SAMPLERS_HPP
#define TETAIS_SAMPLERS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tetais/density.hpp"
#include "tetais/parallel.hpp"
#include "tetais/resampling.hpp"
#include "tetais/rng.hpp"
#include "tetais/transport.hpp"

namespace tetais {

inline double logsumexp(const Vector& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (int i = 0; i < v.size(); ++i) s += std::exp(v[i] - m);
  return m + std::log(s);
}

/// Sampling target: the joint log density, plus the prior/likelihood split
/// and a prior sampler where the problem provides them (needed for evidence
/// estimates and for prior-based ensemble initialization).
struct Target {
  LogDensity log_target;
  std::optional<LogDensity> log_prior;
  std::optional<LogDensity> log_likelihood;
  std::function<Vector(Rng&)> sample_prior;  // may be empty

  int dim() const { return log_target.dim; }
  bool has_split() const { return log_prior.has_value() && log_likelihood.has_value(); }
};

/// Gaussian random-walk kernel q(.; center, beta) with covariance beta^2 C.
class ProposalKernel {
 public:
  ProposalKernel(int dim, double beta) : ProposalKernel(Matrix::Identity(dim, dim), beta) {}

  ProposalKernel(Matrix covariance, double beta) : beta_(beta) {
    if (!(beta > 0.0)) throw std::invalid_argument("ProposalKernel: beta must be positive");
    set_covariance(std::move(covariance));
  }

  void set_covariance(Matrix covariance) {
    cov_ = std::move(covariance);
    llt_.compute(cov_);
    if (llt_.info() != Eigen::Success)
      throw std::invalid_argument("ProposalKernel: covariance not SPD");
    log_norm_ = -0.5 * cov_.rows() * std::log(2.0 * M_PI) - cov_.rows() * std::log(beta_);
    for (int i = 0; i < cov_.rows(); ++i) log_norm_ -= std::log(llt_.matrixL()(i, i));
  }

  int dim() const { return static_cast<int>(cov_.rows()); }
  double beta() const { return beta_; }
  const Matrix& covariance() const { return cov_; }

  Vector sample(const Vector& center, Rng& rng) const {
    Vector z(dim());
    for (int i = 0; i < dim(); ++i) z[i] = rng.normal();
    const Vector correlated = llt_.matrixL() * z;
    return center + beta_ * correlated;
  }

  /// Normalized log N(x; center, beta^2 C).
  double logpdf(const Vector& x, const Vector& center) const {
    const Vector z = llt_.matrixL().solve(x - center) / beta_;
    return log_norm_ - 0.5 * z.squaredNorm();
  }

 private:
  double beta_;
  Matrix cov_;
  Eigen::LLT<Matrix> llt_;
  double log_norm_ = 0.0;
};

enum class Algorithm { kMh, kTransportMh, kEtais, kTetais1, kTetais2 };

inline Algorithm algorithm_from_string(const std::string& s) {
  if (s == "mh") return Algorithm::kMh;
  if (s == "tmh") return Algorithm::kTransportMh;
  if (s == "etais") return Algorithm::kEtais;
  if (s == "tetais1") return Algorithm::kTetais1;
  if (s == "tetais2") return Algorithm::kTetais2;
  throw std::invalid_argument("unknown algorithm: " + s);
}

inline std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kMh: return "mh";
    case Algorithm::kTransportMh: return "tmh";
    case Algorithm::kEtais: return "etais";
    case Algorithm::kTetais1: return "tetais1";
    case Algorithm::kTetais2: return "tetais2";
  }
  return "?";
}

struct SamplerConfig {
  Algorithm algorithm = Algorithm::kEtais;
  int ensemble_size = 100;           // M (ignored by MH variants)
  int iterations = 1000;             // N
  double beta_prop = 0.5;
  int map_update_interval = 25;      // K_U
  int map_adaptation_stop = -1;      // K_stop; -1 resolves to N/2
  int map_order = 3;                 // p
  ResamplerKind resampler = ResamplerKind::kMultinomialTransform;
  Preconditioner preconditioner = Preconditioner::kNone;
  double burn_in_fraction = 0.1;
  bool adapt_covariance = false;
  double map_beta_reg = 1.0;
  int map_sample_cap = 200000;
  std::optional<Matrix> proposal_covariance;
  Vector init_point;                 // fallback ensemble center when no prior
  std::uint64_t seed = 0;
  int threads = 1;

  int resolved_map_stop() const {
    return map_adaptation_stop >= 0 ? map_adaptation_stop : iterations / 2;
  }

  void validate() const {
    const bool ensemble_alg = algorithm == Algorithm::kEtais || algorithm == Algorithm::kTetais1 ||
                              algorithm == Algorithm::kTetais2;
    if (ensemble_alg && ensemble_size < 2)
      throw std::invalid_argument("SamplerConfig: ensemble size must be >= 2");
    if (iterations < 1) throw std::invalid_argument("SamplerConfig: iterations must be >= 1");
    if (map_update_interval < 1) throw std::invalid_argument("SamplerConfig: K_U must be >= 1");
    if (resolved_map_stop() > iterations)
      throw std::invalid_argument("SamplerConfig: K_stop must not exceed iterations");
  }
};

/// M particle states with importance weights; the unit of sampler exchange.
struct WeightedEnsemble {
  Matrix states;   // M x d
  Vector weights;  // non-negative, at least one positive
  int iteration = 0;
};

/// Full record of a sampler run. Log weights are stored raw (unnormalized)
/// so estimates can pool all iterations; per-iteration ESS uses the
/// normalized weights within the iteration.
struct SampleLog {
  int dim = 0;
  Algorithm algorithm = Algorithm::kEtais;
  std::vector<Matrix> samples;      // per iteration: proposals (M x d)
  std::vector<Vector> log_weights;  // per iteration: raw log w
  std::vector<double> ess;          // per iteration
  std::vector<int> map_refit_at;    // iterations where the map was refitted
  std::vector<FitReport> fit_reports;
  std::vector<Vector> log_prior;    // empty unless target has a split
  std::vector<Vector> log_like;
  std::vector<Vector> log_proposal; // normalized mixture density of each sample
  long long accepted = 0;           // MH variants
  long long mh_steps = 0;
  long long failed_inversions = 0;
  long long skipped_refits = 0;     // fits abandoned, previous map kept
  std::optional<TriangularMap> final_map;

  int iterations_completed() const { return static_cast<int>(samples.size()); }

  double acceptance_rate() const {
    return mh_steps > 0 ? static_cast<double>(accepted) / static_cast<double>(mh_steps) : 0.0;
  }
};

struct DegenerateEnsembleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Deterministic-mixture importance weights, computed in log space.
/// `proposals` live in target space; `proposal_refs` and `centers` live in
/// reference space when a map is given (then proposal_refs[i] = T(proposals
/// row i)), else both equal their target-space counterparts.
inline Vector mixture_log_weights(const Matrix& proposals, const Matrix& proposal_refs,
                                  const Matrix& centers, const ProposalKernel& kernel,
                                  const Target& target, const TriangularMap* map,
                                  int threads = 1, Vector* log_prop_norm = nullptr,
                                  const std::vector<char>* failed = nullptr) {
  const int m = static_cast<int>(proposals.rows());
  Vector logw(m);
  if (log_prop_norm) log_prop_norm->resize(m);
  parallel_for(m, threads, [&](int i) {
    if (failed && (*failed)[i]) {
      logw[i] = kNegInf;
      if (log_prop_norm) (*log_prop_norm)[i] = kNegInf;
      return;
    }
    const Vector theta = proposals.row(i).transpose();
    const Vector rhat = proposal_refs.row(i).transpose();
    Vector logq(centers.rows());
    for (int j = 0; j < centers.rows(); ++j)
      logq[j] = kernel.logpdf(rhat, centers.row(j).transpose());
    const double log_mix = logsumexp(logq);
    double logj = 0.0;
    bool ok = true;
    if (map) {
      try {
        logj = map->log_jacobian(theta);
      } catch (const NonMonotoneError&) {
        ok = false;
      }
    }
    if (!ok) {
      logw[i] = kNegInf;
      if (log_prop_norm) (*log_prop_norm)[i] = kNegInf;
      return;
    }
    logw[i] = target.log_target(theta) - log_mix - logj;
    if (log_prop_norm)
      (*log_prop_norm)[i] = log_mix - std::log(static_cast<double>(centers.rows())) + logj;
  });
  return logw;
}

/// Weights exponentiated after subtracting the max (all zero -> error).
inline Vector mixture_weights(const Matrix& proposals, const Matrix& centers,
                              const ProposalKernel& kernel, const Target& target,
                              const TriangularMap* map = nullptr, int threads = 1) {
  Matrix refs = proposals;
  if (map) {
    refs.resize(proposals.rows(), proposals.cols());
    for (int i = 0; i < proposals.rows(); ++i)
      refs.row(i) = map->evaluate(proposals.row(i).transpose()).transpose();
  }
  const Vector logw =
      mixture_log_weights(proposals, refs, centers, kernel, target, map, threads);
  const double mx = logw.maxCoeff();
  if (!std::isfinite(mx)) throw DegenerateEnsembleError("all importance weights are zero");
  return (logw.array() - mx).exp().matrix();
}

struct StepResult {
  Matrix next_states;   // target space ensemble for the next iteration
  Matrix proposals;     // the weighted sample (target space)
  Vector log_weights;   // raw log weights
  Vector log_proposal;  // normalized proposal density per sample
  long long failed_inversions = 0;
};

/// One ETAIS iteration, optionally transport-accelerated. `map == nullptr`
/// gives plain ETAIS (Alg. 1); a map gives the transport variant with
/// resampling either in target space (option 1) or reference space (option 2).
inline StepResult ensemble_step(const Matrix& states, const Target& target,
                                const ProposalKernel& kernel, const TriangularMap* map,
                                ResampleSpace resample_space, ResamplerKind resampler,
                                std::uint64_t seed, int iteration, int threads = 1) {
  const int m = static_cast<int>(states.rows());
  const int d = static_cast<int>(states.cols());

  // Stratified proposals: exactly one draw per ensemble member.
  Matrix centers(m, d);     // reference space (== target space without map)
  Matrix proposal_ref(m, d);
  Matrix proposals(m, d);
  std::vector<char> failed(m, 0);
  long long n_failed = 0;
  parallel_for(m, threads, [&](int i) {
    Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(iteration), i);
    const Vector theta = states.row(i).transpose();
    const Vector r = map ? map->evaluate(theta) : theta;
    centers.row(i) = r.transpose();
    const Vector rhat = kernel.sample(r, rng);
    proposal_ref.row(i) = rhat.transpose();
    if (map) {
      try {
        proposals.row(i) = map->invert(rhat).transpose();
      } catch (const InversionError&) {
        failed[i] = 1;
        proposals.row(i) = states.row(i);  // placeholder; weight forced to zero
      }
    } else {
      proposals.row(i) = rhat.transpose();
    }
  });
  for (int i = 0; i < m; ++i) n_failed += failed[i];

  Vector log_prop;
  const Vector logw = mixture_log_weights(proposals, proposal_ref, centers, kernel, target, map,
                                          threads, &log_prop, &failed);
  const double mx = logw.maxCoeff();
  if (!std::isfinite(mx))
    throw DegenerateEnsembleError("ensemble_step: all importance weights are zero");
  const Vector w = (logw.array() - mx).exp().matrix();

  Rng resample_rng = Rng::substream(seed, static_cast<std::uint64_t>(iteration),
                                    static_cast<std::uint64_t>(m) + 1);
  Matrix next(m, d);
  if (map && resample_space == ResampleSpace::kReference) {
    const Matrix rstar =
        resample(resampler, {proposal_ref, w, ResampleSpace::kReference}, resample_rng);
    int best = 0;
    w.maxCoeff(&best);
    parallel_for(m, threads, [&](int i) {
      try {
        next.row(i) = map->invert(rstar.row(i).transpose()).transpose();
      } catch (const InversionError&) {
        next.row(i) = proposals.row(best);  // rare; fall back to the heaviest sample
      }
    });
  } else {
    next = resample(resampler, {proposals, w, ResampleSpace::kTarget}, resample_rng);
  }
  return {std::move(next), std::move(proposals), logw, std::move(log_prop), n_failed};
}

/// One ETAIS iteration (Alg. 1, no transport map).
inline StepResult etais_step(const Matrix& states, const Target& target,
                             const ProposalKernel& kernel, ResamplerKind resampler,
                             std::uint64_t seed, int iteration, int threads = 1) {
  return ensemble_step(states, target, kernel, nullptr, ResampleSpace::kTarget, resampler, seed,
                       iteration, threads);
}

/// One transport-ETAIS iteration (Alg. 2; option 1 resamples in target
/// space, option 2 in reference space).
inline StepResult tetais_step(const Matrix& states, const Target& target,
                              const ProposalKernel& kernel, const TriangularMap& map,
                              ResampleSpace resample_space, ResamplerKind resampler,
                              std::uint64_t seed, int iteration, int threads = 1) {
  return ensemble_step(states, target, kernel, &map, resample_space, resampler, seed, iteration,
                       threads);
}

struct MhState {
  Vector theta;
  double log_target = kNegInf;
};

/// One random-walk Metropolis-Hastings step, optionally through a transport
/// map (proposal made in reference space, pulled back with the Jacobian
/// correction in the acceptance ratio). Inversion failure rejects.
inline bool mh_step(MhState& state, const Target& target, const ProposalKernel& kernel,
                    const TriangularMap* map, Rng& rng) {
  Vector proposal;
  double log_ratio_jacobian = 0.0;
  if (map) {
    Vector r;
    try {
      r = map->evaluate(state.theta);
    } catch (const std::invalid_argument&) {
      throw;  // current state outside the preconditioner domain is a bug
    }
    const Vector rhat = kernel.sample(r, rng);
    try {
      proposal = map->invert(rhat);
      // q(theta'|theta)/q(theta|theta') = |J(theta')| / |J(theta)| for a
      // symmetric reference kernel, so the ratio gains |J(theta)|/|J(theta')|.
      log_ratio_jacobian = map->log_jacobian(state.theta) - map->log_jacobian(proposal);
    } catch (const InversionError&) {
      rng.uniform();  // keep the stream aligned with the accept/reject draw
      return false;
    } catch (const NonMonotoneError&) {
      rng.uniform();
      return false;
    }
  } else {
    proposal = kernel.sample(state.theta, rng);
  }
  const double lp = target.log_target(proposal);
  const double log_alpha = lp - state.log_target + log_ratio_jacobian;
  if (std::log(rng.uniform()) < log_alpha) {
    state.theta = std::move(proposal);
    state.log_target = lp;
    return true;
  }
  return false;
}

namespace detail {

inline Matrix initial_ensemble(const Target& target, const SamplerConfig& config, int m) {
  Matrix states(m, target.dim());
  for (int i = 0; i < m; ++i) {
    Rng rng = Rng::substream(config.seed, 0, static_cast<std::uint64_t>(i));
    if (target.sample_prior) {
      states.row(i) = target.sample_prior(rng).transpose();
    } else {
      Vector center = config.init_point.size() == target.dim()
                          ? config.init_point
                          : Vector::Zero(target.dim());
      ProposalKernel k(target.dim(), config.beta_prop);
      states.row(i) = k.sample(center, rng).transpose();
    }
  }
  return states;
}

/// Weighted history covariance diagonal, used for burn-in adaptation. The
/// kernel proposes in reference space when a map is engaged, so the history
/// is pushed forward through the current map first.
inline Matrix weighted_diag_covariance(const std::vector<Matrix>& samples,
                                       const std::vector<Vector>& log_weights, int dim,
                                       const TriangularMap* map = nullptr) {
  double mx = kNegInf;
  for (const auto& lw : log_weights) mx = std::max(mx, lw.maxCoeff());
  Vector mean = Vector::Zero(dim);
  Vector second = Vector::Zero(dim);
  double total = 0.0;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    for (int i = 0; i < samples[k].rows(); ++i) {
      const double w = std::exp(log_weights[k][i] - mx);
      if (w == 0.0) continue;
      Vector x = samples[k].row(i).transpose();
      if (map) x = map->evaluate(x);
      mean += w * x;
      second += w * x.cwiseProduct(x);
      total += w;
    }
  }
  mean /= total;
  Vector var = second / total - mean.cwiseProduct(mean);
  var = var.cwiseMax(1e-12);
  return var.asDiagonal();
}

}  // namespace detail

/// Run a full sampler per the config. Deterministic given (config, seed),
/// independent of the thread count.
inline SampleLog run_sampler(const SamplerConfig& config, const Target& target) {
  config.validate();
  SampleLog log;
  log.dim = target.dim();
  log.algorithm = config.algorithm;

  const bool is_mh = config.algorithm == Algorithm::kMh || config.algorithm == Algorithm::kTransportMh;
  const bool adapt_map =
      config.algorithm == Algorithm::kTransportMh || config.algorithm == Algorithm::kTetais1 ||
      config.algorithm == Algorithm::kTetais2;
  // The logarithmic preconditioner alone already routes proposals through an
  // intermediate space (the logRW variants), so the map is engaged even when
  // its polynomial part stays the identity.
  const bool use_map = adapt_map || config.preconditioner == Preconditioner::kLogarithmic;
  const int k_stop = config.resolved_map_stop();
  const int burn_in_end = static_cast<int>(config.burn_in_fraction * config.iterations);

  ProposalKernel kernel(config.proposal_covariance.value_or(Matrix::Identity(target.dim(), target.dim())),
                        config.beta_prop);
  TriangularMap map = TriangularMap::identity(target.dim(), config.map_order, config.preconditioner);

  auto refit_map = [&](int iteration) {
    // Rebuild from the capped most-recent history; weights normalized by the
    // global max so zero-weight filtering is scale independent.
    double mx = kNegInf;
    for (const auto& lw : log.log_weights) mx = std::max(mx, lw.maxCoeff());
    std::vector<std::pair<int, int>> rows;  // (iteration, particle)
    for (int k = static_cast<int>(log.samples.size()) - 1;
         k >= 0 && static_cast<int>(rows.size()) < config.map_sample_cap; --k)
      for (int i = 0; i < log.samples[k].rows() && static_cast<int>(rows.size()) < config.map_sample_cap; ++i)
        rows.emplace_back(k, i);
    Matrix pts(static_cast<int>(rows.size()), target.dim());
    Vector w(static_cast<int>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      pts.row(static_cast<int>(r)) = log.samples[rows[r].first].row(rows[r].second);
      w[static_cast<int>(r)] = std::exp(log.log_weights[rows[r].first][rows[r].second] - mx);
    }
    try {
      auto [fitted, report] = fit_map(pts, w, config.map_order, config.map_beta_reg,
                                      config.preconditioner, &map);
      map = std::move(fitted);
      log.fit_reports.push_back(std::move(report));
      log.map_refit_at.push_back(iteration);
    } catch (const FitError&) {
      // Not enough usable history yet, or a transient non-convergent fit on a
      // degenerate weight set. Adaptation is best effort: keep the current
      // map and try again at the next update.
      ++log.skipped_refits;
    }
  };

  if (is_mh) {
    MhState state;
    {
      Rng rng = Rng::substream(config.seed, 0, 0);
      if (target.sample_prior) {
        state.theta = target.sample_prior(rng);
      } else {
        state.theta =
            config.init_point.size() == target.dim() ? config.init_point : Vector::Zero(target.dim());
      }
    }
    state.log_target = target.log_target(state.theta);
    for (int k = 1; k <= config.iterations; ++k) {
      Rng rng = Rng::substream(config.seed, static_cast<std::uint64_t>(k), 0);
      const bool acc = mh_step(state, target, kernel, use_map ? &map : nullptr, rng);
      log.accepted += acc;
      ++log.mh_steps;
      Matrix row(1, target.dim());
      row.row(0) = state.theta.transpose();
      log.samples.push_back(std::move(row));
      log.log_weights.push_back(Vector::Zero(1));
      log.ess.push_back(1.0);
      if (target.has_split()) {
        log.log_prior.push_back(Vector::Constant(1, (*target.log_prior)(state.theta)));
        log.log_like.push_back(Vector::Constant(1, (*target.log_likelihood)(state.theta)));
      }
      if (adapt_map && k % config.map_update_interval == 0 && k < k_stop) refit_map(k);
      if (config.adapt_covariance && k <= burn_in_end && k % config.map_update_interval == 0)
        kernel.set_covariance(detail::weighted_diag_covariance(
            log.samples, log.log_weights, target.dim(), use_map ? &map : nullptr));
    }
    log.final_map = std::move(map);
    return log;
  }

  // Ensemble algorithms.
  const ResampleSpace space = config.algorithm == Algorithm::kTetais2 ? ResampleSpace::kReference
                                                                      : ResampleSpace::kTarget;
  Matrix states = detail::initial_ensemble(target, config, config.ensemble_size);
  for (int k = 1; k <= config.iterations; ++k) {
    StepResult step =
        ensemble_step(states, target, kernel, use_map ? &map : nullptr, space, config.resampler,
                      config.seed, k, config.threads);
    states = std::move(step.next_states);
    log.failed_inversions += step.failed_inversions;
    const double mx = step.log_weights.maxCoeff();
    const Vector w = (step.log_weights.array() - mx).exp().matrix();
    log.ess.push_back(w.sum() * w.sum() / w.squaredNorm());
    if (target.has_split()) {
      Vector lp(w.size()), ll(w.size());
      for (int i = 0; i < w.size(); ++i) {
        const Vector theta = step.proposals.row(i).transpose();
        lp[i] = (*target.log_prior)(theta);
        ll[i] = (*target.log_likelihood)(theta);
      }
      log.log_prior.push_back(std::move(lp));
      log.log_like.push_back(std::move(ll));
    }
    log.samples.push_back(std::move(step.proposals));
    log.log_weights.push_back(std::move(step.log_weights));
    log.log_proposal.push_back(std::move(step.log_proposal));
    if (adapt_map && k % config.map_update_interval == 0 && k < k_stop) refit_map(k);
    if (config.adapt_covariance && k <= burn_in_end && k % config.map_update_interval == 0)
      kernel.set_covariance(detail::weighted_diag_covariance(
          log.samples, log.log_weights, target.dim(), use_map ? &map : nullptr));
  }
  log.final_map = std::move(map);
  return log;
}

}  // namespace tetais

#endif  // TETAIS_SAMPLERS_HPP
