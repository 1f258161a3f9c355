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

#include <cmath>
#include <gtest/gtest.h>

#include "tetais/diagnostics.hpp"

namespace tetais {
namespace {

TEST(Ess, HandValuesAndBounds) {
  EXPECT_DOUBLE_EQ(ess((Vector(3) << 2.0, 1.0, 1.0).finished()), 16.0 / 6.0);
  EXPECT_DOUBLE_EQ(ess(Vector::Ones(50)), 50.0);
  EXPECT_DOUBLE_EQ(ess((Vector(4) << 1.0, 0.0, 0.0, 0.0).finished()), 1.0);
  // Scale invariance.
  const Vector w = (Vector(3) << 0.2, 0.5, 0.3).finished();
  EXPECT_DOUBLE_EQ(ess(w), ess(7.0 * w));
  EXPECT_THROW(ess(Vector::Zero(2)), std::invalid_argument);
}

TEST(HistogramSpec, BinIndexingAndEdges) {
  HistogramSpec spec{(Vector(2) << 0.0, 0.0).finished(), (Vector(2) << 1.0, 2.0).finished(),
                     {2, 4}};
  spec.validate();
  EXPECT_EQ(spec.total_bins(), 8);
  EXPECT_DOUBLE_EQ(spec.bin_volume(), 0.25);
  EXPECT_EQ(spec.bin_of((Vector(2) << 0.1, 0.1).finished()), 0);
  EXPECT_EQ(spec.bin_of((Vector(2) << 0.9, 1.9).finished()), 7);
  // The upper boundary belongs to the last bin; outside points get -1.
  EXPECT_EQ(spec.bin_of((Vector(2) << 1.0, 2.0).finished()), 7);
  EXPECT_EQ(spec.bin_of((Vector(2) << 1.1, 0.5).finished()), -1);
  EXPECT_EQ(spec.bin_of((Vector(2) << 0.5, -0.1).finished()), -1);
}

TEST(DensityHistogram, UniformDensityGivesEqualMasses) {
  // Quadrature is exact for constants: every bin holds exactly 1/8.
  HistogramSpec spec{(Vector(2) << -1.0, 0.0).finished(), (Vector(2) << 1.0, 4.0).finished(),
                     {2, 4}};
  const LogDensity uniform{2, [](const Vector&) { return -std::log(8.0); }};
  const std::vector<double> mass = density_histogram(uniform, spec);
  for (double m : mass) EXPECT_NEAR(m, 1.0 / 8.0, 1e-14);
}

TEST(DensityHistogram, GaussianMatchesErf) {
  HistogramSpec spec{Vector::Constant(1, -1.0), Vector::Constant(1, 1.0), {4}};
  const LogDensity gauss{
      1, [](const Vector& x) { return -0.5 * x[0] * x[0] - 0.5 * std::log(2.0 * M_PI); }};
  const std::vector<double> mass = density_histogram(gauss, spec);
  auto cdf = [](double x) { return 0.5 * (1.0 + std::erf(x / std::sqrt(2.0))); };
  for (int b = 0; b < 4; ++b) {
    const double a = -1.0 + 0.5 * b;
    EXPECT_NEAR(mass[b], cdf(a + 0.5) - cdf(a), 1e-12);
  }
}

TEST(SampleHistogram, WeightedHandCase) {
  HistogramSpec spec{Vector::Constant(1, 0.0), Vector::Constant(1, 1.0), {2}};
  Matrix pts(3, 1);
  pts << 0.25, 0.75, 5.0;  // last point outside the box
  const Vector w = (Vector(3) << 1.0, 3.0, 4.0).finished();
  const std::vector<double> mass = sample_histogram(pts, w, spec);
  EXPECT_DOUBLE_EQ(mass[0], 1.0 / 8.0);
  EXPECT_DOUBLE_EQ(mass[1], 3.0 / 8.0);  // out-of-box weight reduces in-box mass
}

TEST(HistogramL2Error, ClosedForms) {
  EXPECT_DOUBLE_EQ(histogram_l2_error({0.5, 0.5}, {0.5, 0.5}), 0.0);
  // (1,0) vs (0.5,0.5): E^2 = (0.25 + 0.25) / 0.5 = 1.
  EXPECT_DOUBLE_EQ(histogram_l2_error({0.5, 0.5}, {1.0, 0.0}), 1.0);
  EXPECT_THROW(histogram_l2_error({1.0}, {0.5, 0.5}), std::invalid_argument);
  EXPECT_THROW(histogram_l2_error({0.0, 0.0}, {0.5, 0.5}), std::invalid_argument);
}

TEST(HistogramL2Error, ExactRosenbrockSamplerIsSmall) {
  // 10^6 draws from the exact sampler against quadrature truth masses.
  Rng rng(101);
  const int n = 1000000;
  Matrix pts(n, 2);
  for (int i = 0; i < n; ++i) pts.row(i) = RosenbrockDensity::sample(rng).transpose();
  HistogramSpec spec{(Vector(2) << -4.0, -2.0).finished(), (Vector(2) << 4.0, 18.0).finished(),
                     {25, 25}};
  const LogDensity truth{2, [](const Vector& x) { return rosenbrock_logpdf(x); }};
  const double err = histogram_l2_error(pts, Vector::Ones(n), truth, spec);
  EXPECT_LE(err, 0.05);
}

TEST(Mahalanobis, IdentityCovarianceIsEuclidean) {
  const Vector m = (Vector(2) << 3.0, 4.0).finished();
  EXPECT_NEAR(mahalanobis(m, Vector::Zero(2), Matrix::Identity(2, 2)), 5.0, 1e-12);
  Matrix sigma(1, 1);
  sigma << 4.0;
  EXPECT_NEAR(mahalanobis(Vector::Constant(1, 2.0), Vector::Zero(1), sigma), 1.0, 1e-12);
  EXPECT_THROW(mahalanobis(Vector::Zero(1), Vector::Zero(1), -sigma), std::invalid_argument);
}

TEST(Mahalanobis, IidRunningMeansDecayAtMonteCarloRate) {
  // Running means of iid N(0, I) draws: the repeat-averaged distance decays
  // like n^{-1/2}, so the log-log slope sits near -0.5.
  const std::vector<long long> checkpoints = checkpoint_schedule(10000);
  std::vector<std::vector<Vector>> runs;
  Rng rng(7);
  for (int r = 0; r < 30; ++r) {
    Vector sum = Vector::Zero(2);
    std::vector<Vector> means;
    long long n = 0;
    std::size_t next = 0;
    while (next < checkpoints.size()) {
      sum += (Vector(2) << rng.normal(), rng.normal()).finished();
      ++n;
      if (n == checkpoints[next]) {
        means.push_back(sum / static_cast<double>(n));
        ++next;
      }
    }
    runs.push_back(std::move(means));
  }
  const std::vector<double> avg = mahalanobis_convergence(runs, Vector::Zero(2),
                                                          Matrix::Identity(2, 2));
  // Least-squares slope of log(avg) against log(n).
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const int m = static_cast<int>(avg.size());
  for (int c = 0; c < m; ++c) {
    const double x = std::log(static_cast<double>(checkpoints[c]));
    const double y = std::log(avg[c]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  EXPECT_NEAR(slope, -0.5, 0.1);
}

TEST(CheckpointSchedule, TwentyPerDecade) {
  const std::vector<long long> pts = checkpoint_schedule(100);
  EXPECT_EQ(pts.front(), 10);
  EXPECT_EQ(pts.back(), 100);
  for (std::size_t i = 1; i < pts.size(); ++i) EXPECT_GT(pts[i], pts[i - 1]);
  // One decade at 20 points per decade, plus the forced endpoint
  // (duplicates from rounding collapse).
  EXPECT_GE(pts.size(), 18u);
  EXPECT_LE(pts.size(), 22u);
  EXPECT_EQ(checkpoint_schedule(7).back(), 7);
}

TEST(MarginalLikelihood, ConstantLikelihoodIsExact) {
  // L = c with proposal equal to the prior: every ratio is exactly c, the
  // estimate is c and the jackknife variance vanishes.
  const double c = 0.37;
  std::vector<Vector> ll, lp, lq;
  Rng rng(3);
  for (int k = 0; k < 10; ++k) {
    Vector prior(20);
    for (int i = 0; i < 20; ++i) prior[i] = rng.normal();
    ll.push_back(Vector::Constant(20, std::log(c)));
    lp.push_back(prior);
    lq.push_back(prior);
  }
  const EvidenceEstimate est = marginal_likelihood(ll, lp, lq);
  EXPECT_NEAR(est.value, c, 1e-14);
  EXPECT_NEAR(est.jackknife_se, 0.0, 1e-14);
  EXPECT_EQ(est.samples, 200);
}

TEST(MarginalLikelihood, GammaConjugateToyWithinJackknifeError) {
  // Likelihood k^R e^{-kG} with a Gamma(a, b) prior has the closed form
  // Z = b^a Gamma(a+R) / (Gamma(a) (b+G)^{a+R}).
  const double a = 3.0, b = 1.0, G = 2.0;
  const long long R = 7;
  const double z = std::exp(a * std::log(b) + std::lgamma(a + R) - std::lgamma(a) -
                            (a + R) * std::log(b + G));
  const GammaPrior proposal(5.0, 2.0);
  Rng rng(19);
  std::vector<Vector> ll, lp, lq;
  for (int k = 0; k < 40; ++k) {
    Vector lls(500), lps(500), lqs(500);
    for (int i = 0; i < 500; ++i) {
      const double x = proposal.sample(rng);
      lls[i] = R * std::log(x) - x * G;
      lps[i] = gamma_logpdf(x, a, b);
      lqs[i] = proposal.logpdf(x);
    }
    ll.push_back(lls);
    lp.push_back(lps);
    lq.push_back(lqs);
  }
  const EvidenceEstimate est = marginal_likelihood(ll, lp, lq);
  EXPECT_GT(est.jackknife_se, 0.0);
  EXPECT_NEAR(est.value, z, 4.0 * est.jackknife_se);
  EXPECT_NEAR(est.value / z, 1.0, 0.05);
}

TEST(MarginalLikelihood, RejectsDegenerateInput) {
  EXPECT_THROW(marginal_likelihood({}, {}, {}), std::invalid_argument);
  const std::vector<Vector> one = {Vector::Constant(1, kNegInf)};
  EXPECT_THROW(marginal_likelihood(one, one, one), std::invalid_argument);
  SampleLog log;
  EXPECT_THROW(marginal_likelihood(log), std::invalid_argument);
}

}  // namespace
}  // namespace tetais
