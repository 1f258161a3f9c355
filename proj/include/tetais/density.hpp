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

#ifndef TETAIS_DENSITY_HPP
#define TETAIS_DENSITY_HPP

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "tetais/rng.hpp"

namespace tetais {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Evaluable unnormalized log density over R^dim.
///
/// Evaluation returns -infinity outside the support and must be pure:
/// repeated calls at the same point give bitwise-identical results.
struct LogDensity {
  int dim = 0;
  std::function<double(const Vector&)> eval;

  double operator()(const Vector& theta) const {
    if (theta.size() != dim) throw std::invalid_argument("LogDensity: dimension mismatch");
    return eval(theta);
  }
};

/// log N(x; mean, cov) for a fixed SPD covariance, normalized.
class GaussianDensity {
 public:
  GaussianDensity(Vector mean, Matrix cov) : mean_(std::move(mean)) {
    llt_.compute(cov);
    if (llt_.info() != Eigen::Success)
      throw std::invalid_argument("GaussianDensity: covariance not SPD");
    log_norm_ = -0.5 * mean_.size() * std::log(2.0 * M_PI);
    for (int i = 0; i < mean_.size(); ++i)
      log_norm_ -= std::log(llt_.matrixL()(i, i));
  }

  double logpdf(const Vector& x) const {
    const Vector z = llt_.matrixL().solve(x - mean_);
    return log_norm_ - 0.5 * z.squaredNorm();
  }

  LogDensity as_log_density() const {
    return {static_cast<int>(mean_.size()), [g = *this](const Vector& x) { return g.logpdf(x); }};
  }

 private:
  Vector mean_;
  Eigen::LLT<Matrix> llt_;
  double log_norm_ = 0.0;
};

/// log Gamma(x; shape alpha, rate beta); -infinity for x <= 0.
inline double gamma_logpdf(double x, double alpha, double beta) {
  if (!(alpha > 0.0) || !(beta > 0.0))
    throw std::invalid_argument("gamma_logpdf: shape and rate must be positive");
  if (!(x > 0.0)) return kNegInf;
  return alpha * std::log(beta) - std::lgamma(alpha) + (alpha - 1.0) * std::log(x) - beta * x;
}

/// Shape-rate Gamma prior for one coordinate.
struct GammaPrior {
  double alpha;
  double beta;

  GammaPrior(double a, double b) : alpha(a), beta(b) {
    if (!(a > 0.0) || !(b > 0.0))
      throw std::invalid_argument("GammaPrior: parameters must be positive");
  }

  double logpdf(double x) const { return gamma_logpdf(x, alpha, beta); }
  double mean() const { return alpha / beta; }
  double sample(Rng& rng) const { return rng.gamma(alpha, beta); }
};

/// Sum of independent per-coordinate Gamma log densities.
inline double product_prior(const std::vector<GammaPrior>& priors, const Vector& theta) {
  if (static_cast<int>(priors.size()) != theta.size())
    throw std::invalid_argument("product_prior: dimension mismatch");
  double s = 0.0;
  for (int i = 0; i < theta.size(); ++i) {
    const double v = priors[i].logpdf(theta[i]);
    if (v == kNegInf) return kNegInf;
    s += v;
  }
  return s;
}

inline LogDensity product_prior_density(std::vector<GammaPrior> priors) {
  const int d = static_cast<int>(priors.size());
  return {d, [p = std::move(priors)](const Vector& theta) { return product_prior(p, theta); }};
}

/// Normalized Rosenbrock banana density on R^2:
/// pi(t) = sqrt(10)/pi * exp(-(1 - t1)^2 - 10 (t2 - t1^2)^2).
inline double rosenbrock_logpdf(const Vector& theta) {
  if (theta.size() != 2 || !theta.allFinite())
    throw std::invalid_argument("rosenbrock_logpdf: expects a finite point in R^2");
  const double t1 = theta[0];
  const double t2 = theta[1];
  const double d = t2 - t1 * t1;
  return 0.5 * std::log(10.0) - std::log(M_PI) - (1.0 - t1) * (1.0 - t1) - 10.0 * d * d;
}

struct RosenbrockDensity {
  static constexpr int dim = 2;

  LogDensity as_log_density() const {
    return {dim, [](const Vector& theta) { return rosenbrock_logpdf(theta); }};
  }

  /// Exact draw: t1 ~ N(1, 1/2), t2 | t1 ~ N(t1^2, 1/20).
  static Vector sample(Rng& rng) {
    Vector theta(2);
    theta[0] = 1.0 + rng.normal() / std::sqrt(2.0);
    theta[1] = theta[0] * theta[0] + rng.normal() / std::sqrt(20.0);
    return theta;
  }
};

}  // namespace tetais

#endif  // TETAIS_DENSITY_HPP
