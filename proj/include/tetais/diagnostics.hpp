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

#ifndef TETAIS_DIAGNOSTICS_HPP
#define TETAIS_DIAGNOSTICS_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "tetais/density.hpp"
#include "tetais/samplers.hpp"

namespace tetais {

/// Effective sample size (sum w)^2 / sum w^2; scale-invariant, in [1, M].
inline double ess(const Vector& weights) {
  const double s = weights.sum();
  if (!(s > 0.0)) throw std::invalid_argument("ess: total weight must be positive");
  return s * s / weights.squaredNorm();
}

/// Tensor-product histogram over a box; bins partition the box.
struct HistogramSpec {
  Vector lo, hi;
  std::vector<int> bins;

  int dim() const { return static_cast<int>(lo.size()); }

  void validate() const {
    if (hi.size() != dim() || static_cast<int>(bins.size()) != dim())
      throw std::invalid_argument("HistogramSpec: dimension mismatch");
    for (int i = 0; i < dim(); ++i)
      if (!(hi[i] > lo[i]) || bins[i] < 1)
        throw std::invalid_argument("HistogramSpec: degenerate box or bins");
  }

  long long total_bins() const {
    long long n = 1;
    for (int b : bins) n *= b;
    return n;
  }

  double bin_volume() const {
    double v = 1.0;
    for (int i = 0; i < dim(); ++i) v *= (hi[i] - lo[i]) / bins[i];
    return v;
  }

  /// Flat bin index of a point, or -1 when outside the box.
  long long bin_of(const Vector& x) const {
    long long idx = 0;
    for (int i = 0; i < dim(); ++i) {
      const double t = (x[i] - lo[i]) / (hi[i] - lo[i]);
      if (!(t >= 0.0) || t > 1.0) return -1;
      const int b = std::min(static_cast<int>(t * bins[i]), bins[i] - 1);
      idx = idx * bins[i] + b;
    }
    return idx;
  }
};

namespace detail {

// 5-point Gauss-Legendre nodes/weights on [-1, 1].
inline const double kGlNode[5] = {-0.906179845938663992797626878299,
                                  -0.538469310105683091036314420700, 0.0,
                                  0.538469310105683091036314420700,
                                  0.906179845938663992797626878299};
inline const double kGlWeight[5] = {0.236926885056189087514264040720,
                                    0.478628670499366468041291514836,
                                    0.568888888888888888888888888889,
                                    0.478628670499366468041291514836,
                                    0.236926885056189087514264040720};

/// Integral of exp(log_density) over one box by tensor 5-point quadrature.
inline double box_integral(const LogDensity& density, const Vector& lo, const Vector& hi) {
  const int d = density.dim;
  std::vector<int> idx(d, 0);
  double total = 0.0;
  for (;;) {
    double w = 1.0;
    Vector x(d);
    for (int i = 0; i < d; ++i) {
      const double h = 0.5 * (hi[i] - lo[i]);
      x[i] = lo[i] + h * (1.0 + kGlNode[idx[i]]);
      w *= h * kGlWeight[idx[i]];
    }
    total += w * std::exp(density(x));
    int i = 0;
    for (; i < d; ++i) {
      if (++idx[i] < 5) break;
      idx[i] = 0;
    }
    if (i == d) break;
  }
  return total;
}

}  // namespace detail

/// Normalized weighted sample histogram (mass per bin; in-box mass sums to
/// the fraction of total weight inside the box).
inline std::vector<double> sample_histogram(const Matrix& points, const Vector& weights,
                                            const HistogramSpec& spec) {
  spec.validate();
  if (points.rows() == 0) throw std::invalid_argument("sample_histogram: empty sample");
  if (points.rows() != weights.size() || points.cols() != spec.dim())
    throw std::invalid_argument("sample_histogram: dimension mismatch");
  const double total = weights.sum();
  if (!(total > 0.0)) throw std::invalid_argument("sample_histogram: total weight zero");
  std::vector<double> mass(spec.total_bins(), 0.0);
  for (int k = 0; k < points.rows(); ++k) {
    const long long b = spec.bin_of(points.row(k).transpose());
    if (b >= 0) mass[static_cast<std::size_t>(b)] += weights[k] / total;
  }
  return mass;
}

/// Truth bin masses by per-bin 5-point tensor Gauss-Legendre quadrature of
/// exp(log_density).
inline std::vector<double> density_histogram(const LogDensity& truth, const HistogramSpec& spec) {
  spec.validate();
  if (truth.dim != spec.dim()) throw std::invalid_argument("density_histogram: dimension mismatch");
  const int d = spec.dim();
  std::vector<double> mass(spec.total_bins());
  std::vector<int> idx(d, 0);
  for (long long b = 0; b < spec.total_bins(); ++b) {
    Vector lo(d), hi(d);
    long long rem = b;
    for (int i = d - 1; i >= 0; --i) {
      const int bi = static_cast<int>(rem % spec.bins[i]);
      rem /= spec.bins[i];
      const double w = (spec.hi[i] - spec.lo[i]) / spec.bins[i];
      lo[i] = spec.lo[i] + bi * w;
      hi[i] = lo[i] + w;
    }
    mass[static_cast<std::size_t>(b)] = detail::box_integral(truth, lo, hi);
  }
  return mass;
}

/// Relative L2 error between two bin-mass histograms:
/// E^2 = sum (p_i - q_i)^2 / sum p_i^2 with p the truth.
inline double histogram_l2_error(const std::vector<double>& truth_mass,
                                 const std::vector<double>& sample_mass) {
  if (truth_mass.size() != sample_mass.size())
    throw std::invalid_argument("histogram_l2_error: bin count mismatch");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < truth_mass.size(); ++i) {
    const double d = truth_mass[i] - sample_mass[i];
    num += d * d;
    den += truth_mass[i] * truth_mass[i];
  }
  if (!(den > 0.0)) throw std::invalid_argument("histogram_l2_error: truth histogram is zero");
  return std::sqrt(num / den);
}

inline double histogram_l2_error(const Matrix& points, const Vector& weights,
                                 const LogDensity& truth, const HistogramSpec& spec) {
  return histogram_l2_error(density_histogram(truth, spec),
                            sample_histogram(points, weights, spec));
}

/// Mahalanobis distance of a running mean from the truth.
inline double mahalanobis(const Vector& m, const Vector& mu, const Matrix& sigma) {
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("mahalanobis: covariance not SPD");
  return llt.matrixL().solve(m - mu).norm();
}

/// Average Mahalanobis distance across repeats at each checkpoint.
inline std::vector<double> mahalanobis_convergence(
    const std::vector<std::vector<Vector>>& running_means, const Vector& mu, const Matrix& sigma) {
  if (running_means.empty())
    throw std::invalid_argument("mahalanobis_convergence: no repeats");
  const std::size_t n = running_means.front().size();
  std::vector<double> out(n, 0.0);
  for (const auto& repeat : running_means) {
    if (repeat.size() != n)
      throw std::invalid_argument("mahalanobis_convergence: ragged checkpoint series");
    for (std::size_t c = 0; c < n; ++c) out[c] += mahalanobis(repeat[c], mu, sigma);
  }
  for (double& v : out) v /= static_cast<double>(running_means.size());
  return out;
}

/// Geometric checkpoint schedule, 20 points per decade, ending at n_max.
inline std::vector<long long> checkpoint_schedule(long long n_max, long long n_min = 10) {
  std::vector<long long> pts;
  const double ratio = std::pow(10.0, 1.0 / 20.0);
  double x = static_cast<double>(n_min);
  while (static_cast<long long>(x) < n_max) {
    const long long n = static_cast<long long>(x);
    if (pts.empty() || n > pts.back()) pts.push_back(n);
    x *= ratio;
  }
  if (pts.empty() || pts.back() != n_max) pts.push_back(n_max);
  return pts;
}

struct EvidenceEstimate {
  double value = 0.0;
  double jackknife_se = 0.0;
  long long samples = 0;
};

/// Self-normalized importance estimate of the marginal likelihood
/// Z = E_q[L(theta) pi0(theta) / q(theta)] using the recorded (normalized)
/// mixture proposal density, with a leave-one-iteration-out jackknife
/// standard error over iteration blocks.
inline EvidenceEstimate marginal_likelihood(const std::vector<Vector>& log_like,
                                            const std::vector<Vector>& log_prior,
                                            const std::vector<Vector>& log_proposal) {
  const std::size_t n = log_like.size();
  if (n == 0 || log_prior.size() != n || log_proposal.size() != n)
    throw std::invalid_argument("marginal_likelihood: block count mismatch");

  // Per-block sums of exp(ll + lp - lq), computed with a shared shift for
  // stability.
  double shift = kNegInf;
  for (std::size_t k = 0; k < n; ++k)
    for (int i = 0; i < log_like[k].size(); ++i) {
      const double v = log_like[k][i] + log_prior[k][i] - log_proposal[k][i];
      if (std::isfinite(v)) shift = std::max(shift, v);
    }
  if (!std::isfinite(shift))
    throw std::invalid_argument("marginal_likelihood: all ratios degenerate");

  std::vector<double> block_sum(n, 0.0);
  std::vector<long long> block_count(n, 0);
  double total = 0.0;
  long long count = 0;
  for (std::size_t k = 0; k < n; ++k) {
    block_count[k] = log_like[k].size();
    for (int i = 0; i < log_like[k].size(); ++i) {
      const double v = log_like[k][i] + log_prior[k][i] - log_proposal[k][i];
      if (std::isfinite(v)) block_sum[k] += std::exp(v - shift);
    }
    total += block_sum[k];
    count += block_count[k];
  }
  if (count == 0) throw std::invalid_argument("marginal_likelihood: no samples");

  EvidenceEstimate est;
  est.samples = count;
  est.value = std::exp(shift) * total / static_cast<double>(count);
  if (n < 2) return est;

  // Jackknife over iteration blocks.
  std::vector<double> loo(n);
  double loo_mean = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    loo[k] = (total - block_sum[k]) / static_cast<double>(count - block_count[k]);
    loo_mean += loo[k];
  }
  loo_mean /= static_cast<double>(n);
  double var = 0.0;
  for (std::size_t k = 0; k < n; ++k) var += (loo[k] - loo_mean) * (loo[k] - loo_mean);
  var *= static_cast<double>(n - 1) / static_cast<double>(n);
  est.jackknife_se = std::exp(shift) * std::sqrt(var);
  return est;
}

inline EvidenceEstimate marginal_likelihood(const SampleLog& log) {
  if (log.log_prior.empty() || log.log_like.empty() || log.log_proposal.empty())
    throw std::invalid_argument("marginal_likelihood: log lacks prior/likelihood/proposal records");
  return marginal_likelihood(log.log_like, log.log_prior, log.log_proposal);
}

}  // namespace tetais

#endif  // TETAIS_DIAGNOSTICS_HPP
