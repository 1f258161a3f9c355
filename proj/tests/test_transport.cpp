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

#include "tetais/rng.hpp"
#include "tetais/transport.hpp"

namespace tetais {
namespace {

Vector point2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

/// T(theta) = (theta1, theta1^2 + theta2): unit Jacobian, closed-form inverse.
TriangularMap shear_map() {
  TriangularMap map(2, 3, Preconditioner::kNone);
  Vector g2 = Vector::Zero(map.index_set(1).size());
  for (int m = 0; m < map.index_set(1).size(); ++m) {
    const MultiIndex& j = map.index_set(1).indices[m];
    if (j == MultiIndex({2, 0}) || j == MultiIndex({0, 1})) g2[m] = 1.0;
  }
  map.set_coefficients(1, g2);
  map.set_hull(Vector::Constant(2, -3.0), Vector::Constant(2, 3.0));
  return map;
}

TEST(TriangularMap, IdentityEvaluatesToInput) {
  const TriangularMap map(2, 3, Preconditioner::kNone);
  const Vector theta = point2(0.7, -1.3);
  EXPECT_EQ(map.evaluate(theta), theta);
  EXPECT_EQ(map.invert(theta), theta);
  EXPECT_EQ(map.log_jacobian(theta), 0.0);
  EXPECT_TRUE(map.is_identity());
}

TEST(TriangularMap, ShearMapEvaluation) {
  const TriangularMap map = shear_map();
  const Vector theta = point2(1.5, 2.0);
  const Vector r = map.evaluate(theta);
  EXPECT_DOUBLE_EQ(r[0], 1.5);
  EXPECT_DOUBLE_EQ(r[1], 1.5 * 1.5 + 2.0);
  EXPECT_NEAR(map.log_jacobian(theta), 0.0, 1e-15);
}

TEST(TriangularMap, ShearMapClosedFormInverse) {
  const TriangularMap map = shear_map();
  const Vector r = point2(0.8, 2.5);
  const Vector theta = map.invert(r);
  EXPECT_NEAR(theta[0], 0.8, 1e-10);
  EXPECT_NEAR(theta[1], 2.5 - 0.64, 1e-10);
}

TEST(TriangularMap, LogPreconditionerIdentity) {
  const TriangularMap map(2, 3, Preconditioner::kLogarithmic);
  const Vector theta = point2(std::exp(1.0), std::exp(1.0));
  const Vector r = map.evaluate(theta);
  EXPECT_NEAR(r[0], 1.0, 1e-15);
  EXPECT_NEAR(r[1], 1.0, 1e-15);
  // |J| = prod 1/theta_i = e^-2 even though the polynomial part is identity.
  EXPECT_NEAR(map.log_jacobian(theta), -2.0, 1e-14);
  const Vector back = map.invert(point2(1.0, 1.0));
  EXPECT_NEAR(back[0], std::exp(1.0), 1e-12);
  EXPECT_THROW(map.evaluate(point2(-1.0, 1.0)), std::invalid_argument);
}

TEST(TriangularMap, RoundTripInsideHull) {
  // A near-Gaussian cloud keeps the cubic fit monotone across the whole
  // bounding box, so invert(evaluate(.)) must be the identity there.
  Rng rng(42);
  Matrix samples(400, 2);
  for (int i = 0; i < samples.rows(); ++i) {
    samples(i, 0) = rng.normal();
    samples(i, 1) = 0.5 * samples(i, 0) + 0.9 * rng.normal();
  }
  auto [map, report] = fit_map(samples, Vector::Ones(samples.rows()), 3);
  for (int t = 0; t < 1000; ++t) {
    Vector theta(2);
    for (int i = 0; i < 2; ++i) theta[i] = rng.uniform(map.hull_lo()[i], map.hull_hi()[i]);
    const Vector back = map.invert(map.evaluate(theta));
    EXPECT_NEAR(back[0], theta[0], 1e-8);
    EXPECT_NEAR(back[1], theta[1], 1e-8);
  }
}

TEST(TriangularMap, RoundTripOnCurvedFitAtSamplePoints) {
  // On strongly curved data the fitted cubic folds outside the sample cloud;
  // the inverse is only pinned down on the monotone branch the samples sit
  // on, so test the round trip at fresh draws from the same law.
  Rng rng(43);
  Matrix samples(400, 2);
  for (int i = 0; i < samples.rows(); ++i) {
    samples(i, 0) = rng.normal();
    samples(i, 1) = samples(i, 0) * samples(i, 0) + 0.3 * rng.normal();
  }
  auto [map, report] = fit_map(samples, Vector::Ones(samples.rows()), 3);
  for (int t = 0; t < 1000; ++t) {
    Vector theta(2);
    theta[0] = rng.normal();
    theta[1] = theta[0] * theta[0] + 0.3 * rng.normal();
    for (int i = 0; i < 2; ++i)
      theta[i] = std::clamp(theta[i], map.hull_lo()[i], map.hull_hi()[i]);
    const Vector back = map.invert(map.evaluate(theta));
    EXPECT_NEAR(back[0], theta[0], 1e-8);
    EXPECT_NEAR(back[1], theta[1], 1e-8);
  }
}

TEST(Objective, SingleSampleAffineCase) {
  // d=1, p=1, one sample at 0 with weight 1: F = (1, 0), G = (0, 1).
  Matrix F(1, 2), G(1, 2);
  F << 1.0, 0.0;
  G << 0.0, 1.0;
  const Vector w = Vector::Ones(1);
  const Vector iota = (Vector(2) << 0.0, 1.0).finished();
  EXPECT_DOUBLE_EQ(objective(iota, F, G, w, 1.0, iota), 0.0);
}

TEST(Objective, WeightScaleInvariance) {
  Rng rng(3);
  Matrix F(20, 2), G(20, 2);
  Vector w(20);
  for (int k = 0; k < 20; ++k) {
    const double x = rng.normal();
    F.row(k) << 1.0, x;
    G.row(k) << 0.0, 1.0;
    w[k] = rng.uniform();
  }
  const Vector iota = (Vector(2) << 0.0, 1.0).finished();
  const Vector gamma = (Vector(2) << 0.3, 0.9).finished();
  EXPECT_NEAR(objective(gamma, F, G, w, 1.0, iota), objective(gamma, F, G, 7.3 * w, 1.0, iota),
              1e-12);
}

TEST(Objective, InfeasibleIsInfinite) {
  Matrix F(1, 2), G(1, 2);
  F << 1.0, 0.5;
  G << 0.0, 1.0;
  const Vector w = Vector::Ones(1);
  const Vector iota = (Vector(2) << 0.0, 1.0).finished();
  const Vector bad = (Vector(2) << 0.0, -1.0).finished();
  EXPECT_TRUE(std::isinf(objective(bad, F, G, w, 1.0, iota)));
}

TEST(Objective, Convexity) {
  Rng rng(11);
  const MultiIndexSet set = build_index_set(2, 2, 3);
  BasisMatrices bm(2, 3);
  Matrix u(50, 2);
  for (int k = 0; k < 50; ++k) u.row(k) << rng.normal(), rng.normal();
  bm.append(u, Vector::Ones(50));
  const Vector iota = identity_coefficients(set);
  for (int trial = 0; trial < 50; ++trial) {
    Vector a = iota, b = iota;
    for (int m = 0; m < a.size(); ++m) {
      a[m] += 0.05 * rng.normal();
      b[m] += 0.05 * rng.normal();
    }
    const double fa = objective(a, bm.F(1), bm.G(1), bm.weights(), 1.0, iota);
    const double fb = objective(b, bm.F(1), bm.G(1), bm.weights(), 1.0, iota);
    if (std::isinf(fa) || std::isinf(fb)) continue;
    const double t = rng.uniform();
    const Vector mid = t * a + (1.0 - t) * b;
    const double fm = objective(mid, bm.F(1), bm.G(1), bm.weights(), 1.0, iota);
    EXPECT_LE(fm, t * fa + (1.0 - t) * fb + 1e-10);
  }
}

/// Finite-difference oracle for gradient and Hessian over random feasible
/// coefficient vectors across several (d, p) combinations.
TEST(GradientHessian, FiniteDifferenceSuite) {
  Rng rng(2026);
  int tested = 0;
  for (int d : {1, 2, 4}) {
    for (int p : {1, 3}) {
      BasisMatrices bm(d, p);
      Matrix u(80, d);
      for (int k = 0; k < 80; ++k)
        for (int c = 0; c < d; ++c) u(k, c) = rng.normal();
      Vector w(80);
      for (int k = 0; k < 80; ++k) w[k] = 0.2 + rng.uniform();
      bm.append(u, w);
      const int i = d - 1;  // the widest component
      const Vector iota = identity_coefficients(bm.index_set(i));
      while (tested < 50) {
        Vector gamma = iota;
        for (int m = 0; m < gamma.size(); ++m) gamma[m] += 0.03 * rng.normal();
        if (std::isinf(objective(gamma, bm.F(i), bm.G(i), w, 1.0, iota))) continue;
        const Vector g = gradient(gamma, bm.F(i), bm.G(i), w, 1.0, iota);
        const Matrix H = hessian(gamma, bm.F(i), bm.G(i), w, 1.0);
        const double h = 1e-6;
        for (int m = 0; m < gamma.size(); ++m) {
          Vector ep = gamma, em = gamma;
          ep[m] += h;
          em[m] -= h;
          const double fp = objective(ep, bm.F(i), bm.G(i), w, 1.0, iota);
          const double fm = objective(em, bm.F(i), bm.G(i), w, 1.0, iota);
          if (std::isinf(fp) || std::isinf(fm)) continue;
          const double fd = (fp - fm) / (2 * h);
          EXPECT_NEAR(fd, g[m], 1e-5 * std::max(1.0, std::abs(g[m])));
          const Vector gp = gradient(ep, bm.F(i), bm.G(i), w, 1.0, iota);
          const Vector gm = gradient(em, bm.F(i), bm.G(i), w, 1.0, iota);
          const Vector hc = (gp - gm) / (2 * h);
          for (int n = 0; n < gamma.size(); ++n)
            EXPECT_NEAR(hc[n], H(m, n), 1e-4 * std::max(1.0, std::abs(H(m, n))));
        }
        ++tested;
        if (tested % 9 == 0) break;  // spread trials across (d, p) cases
      }
    }
  }
  EXPECT_GE(tested, 50);
}

TEST(GradientHessian, HessianMinimumEigenvalueAtLeastReg) {
  Rng rng(5);
  BasisMatrices bm(2, 3);
  Matrix u(60, 2);
  for (int k = 0; k < 60; ++k) u.row(k) << rng.normal(), rng.normal();
  bm.append(u, Vector::Ones(60));
  const double beta_reg = 0.7;
  const Vector iota = identity_coefficients(bm.index_set(1));
  const Matrix H = hessian(iota, bm.F(1), bm.G(1), bm.weights(), beta_reg);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(H);
  EXPECT_GE(eig.eigenvalues().minCoeff(), beta_reg - 1e-12);
}

TEST(FitMap, StandardNormalStaysNearIdentity) {
  Rng rng(17);
  Matrix samples(20000, 1);
  for (int k = 0; k < samples.rows(); ++k) samples(k, 0) = rng.normal();
  auto [map, report] = fit_map(samples, Vector::Ones(samples.rows()), 3);
  const Vector iota = identity_coefficients(map.index_set(0));
  EXPECT_LE((map.coefficients(0) - iota).norm(), 0.15);

  double mean = 0.0, second = 0.0;
  for (int k = 0; k < samples.rows(); ++k) {
    const double r = map.evaluate(samples.row(k).transpose())[0];
    mean += r;
    second += r * r;
  }
  mean /= samples.rows();
  const double sd = std::sqrt(second / samples.rows() - mean * mean);
  EXPECT_NEAR(sd, 1.0, 0.1);
  // First-order optimality at the returned coefficients, measured by the
  // Newton decrement so the check is invariant to the sample-count scale of
  // the objective.
  BasisMatrices bm(1, 3);
  bm.append(samples, Vector::Ones(samples.rows()));
  const Vector g = gradient(map.coefficients(0), bm.F(0), bm.G(0), bm.weights(), 1.0, iota);
  const Matrix h = hessian(map.coefficients(0), bm.F(0), bm.G(0), bm.weights(), 1.0);
  EXPECT_LE(0.5 * g.dot(h.llt().solve(g)), 1e-8);
}

TEST(FitMap, RecoversAffineStandardization) {
  Rng rng(23);
  const int n = 100000;
  Matrix samples(n, 1);
  for (int k = 0; k < n; ++k) samples(k, 0) = 5.0 + 2.0 * rng.normal();
  auto [map, report] = fit_map(samples, Vector::Ones(n), 1, 0.0);
  // The KL-optimal affine map is (theta - 5) / 2.
  EXPECT_NEAR(map.coefficients(0)[0], -2.5, 0.125);
  EXPECT_NEAR(map.coefficients(0)[1], 0.5, 0.025);
}

TEST(FitMap, ColdAndWarmIterationBudgets) {
  Rng rng(31);
  const int n = 5000;
  Matrix samples(n, 2);
  for (int k = 0; k < n; ++k) {
    samples(k, 0) = rng.normal();
    samples(k, 1) = samples(k, 0) * samples(k, 0) + 0.5 * rng.normal();
  }
  auto [map, cold] = fit_map(samples, Vector::Ones(n), 3);
  for (int it : cold.newton_iterations) EXPECT_LE(it, 30);

  Matrix grown(n + n / 10, 2);
  grown.topRows(n) = samples;
  for (int k = n; k < grown.rows(); ++k) {
    grown(k, 0) = rng.normal();
    grown(k, 1) = grown(k, 0) * grown(k, 0) + 0.5 * rng.normal();
  }
  auto [map2, warm] = fit_map(grown, Vector::Ones(grown.rows()), 3, 1.0, Preconditioner::kNone, &map);
  for (int it : warm.newton_iterations) EXPECT_LE(it, 5);
}

TEST(FitMap, UnderdeterminedThrows) {
  Matrix samples(3, 2);
  samples << 0.1, 0.2, -0.3, 0.4, 0.5, -0.6;
  try {
    fit_map(samples, Vector::Ones(3), 3);
    FAIL() << "expected FitError";
  } catch (const FitError& e) {
    EXPECT_EQ(e.kind, FitError::Kind::kUnderdetermined);
  }
}

TEST(FitMap, FiltersZeroWeights) {
  Rng rng(9);
  Matrix samples(600, 1);
  Vector w(600);
  for (int k = 0; k < 600; ++k) {
    samples(k, 0) = rng.normal();
    w[k] = k % 3 == 0 ? 0.0 : 1.0;
  }
  auto [map, report] = fit_map(samples, w, 3);
  EXPECT_EQ(report.filtered_zero_weight, 200);
}

TEST(FitMap, MonotoneAtSamples) {
  Rng rng(12);
  Matrix samples(3000, 2);
  for (int k = 0; k < samples.rows(); ++k) {
    samples(k, 0) = 0.5 + rng.normal();
    samples(k, 1) = std::exp(0.3 * rng.normal());
  }
  auto [map, report] = fit_map(samples, Vector::Ones(samples.rows()), 3);
  for (int k = 0; k < samples.rows(); ++k) {
    const Vector u = samples.row(k).transpose();
    for (int i = 0; i < 2; ++i) EXPECT_GT(map.diagonal_partial_u(i, u), 0.0);
  }
}

TEST(FitMap, RegularizationLimitPinsIdentity) {
  Rng rng(44);
  Matrix samples(2000, 1);
  for (int k = 0; k < samples.rows(); ++k) samples(k, 0) = 3.0 + 0.5 * rng.normal();
  auto [map, report] = fit_map(samples, Vector::Ones(samples.rows()), 3, 1e6);
  const Vector iota = identity_coefficients(map.index_set(0));
  EXPECT_LE((map.coefficients(0) - iota).lpNorm<Eigen::Infinity>(), 1e-3);
}

TEST(FitMap, WeightScaleInvariance) {
  Rng rng(55);
  Matrix samples(2000, 2);
  Vector w(2000);
  for (int k = 0; k < samples.rows(); ++k) {
    samples(k, 0) = rng.normal();
    samples(k, 1) = 0.5 * samples(k, 0) + rng.normal();
    w[k] = 0.1 + rng.uniform();
  }
  auto [a, ra] = fit_map(samples, w, 3);
  auto [b, rb] = fit_map(samples, 7.3 * w, 3);
  for (int i = 0; i < 2; ++i)
    EXPECT_LE((a.coefficients(i) - b.coefficients(i)).lpNorm<Eigen::Infinity>(), 1e-10);
}

TEST(FitMap, PullbackDensityConsistency) {
  Rng rng(66);
  Matrix samples(4000, 2);
  for (int k = 0; k < samples.rows(); ++k) {
    samples(k, 0) = rng.normal();
    samples(k, 1) = samples(k, 0) + 0.7 * rng.normal();
  }
  auto [map, report] = fit_map(samples, Vector::Ones(samples.rows()), 3);
  auto phi = [](const Vector& r) {
    return -0.5 * r.squaredNorm() - r.size() * 0.5 * std::log(2.0 * M_PI);
  };
  for (int t = 0; t < 1000; ++t) {
    Vector theta(2);
    theta << rng.normal(), rng.normal();
    // Independent composition: evaluate each factor separately.
    const Vector r = map.evaluate(theta);
    double logj = 0.0;
    for (int i = 0; i < 2; ++i) logj += std::log(map.diagonal_partial_u(i, theta));
    const double pullback = std::exp(phi(r) + logj);
    const double composed = std::exp(phi(map.evaluate(theta)) + map.log_jacobian(theta));
    EXPECT_NEAR(composed, pullback, 1e-12 * std::max(1.0, pullback));
  }
}

TEST(BasisMatrices, IncrementalGramMatchesRebuild) {
  Rng rng(77);
  const int d = 2, p = 3;
  BasisMatrices inc(d, p);
  Matrix all(300, d);
  Vector w(300);
  for (int k = 0; k < 300; ++k) {
    all.row(k) << rng.normal(), rng.normal();
    w[k] = rng.uniform();
  }
  // Append in three uneven batches.
  inc.append(all.topRows(100), w.head(100));
  inc.append(all.middleRows(100, 50), w.segment(100, 50));
  inc.append(all.bottomRows(150), w.tail(150));

  BasisMatrices scratch(d, p);
  scratch.append(all, w);
  for (int i = 0; i < d; ++i) {
    const double scale = std::max(1.0, scratch.gram(i).norm());
    EXPECT_LE((inc.gram(i) - scratch.gram(i)).norm() / scale, 1e-12);
  }
}

TEST(BasisMatrices, ZeroWeightAppendLeavesGramUnchanged) {
  BasisMatrices bm(1, 3);
  Matrix u(2, 1);
  u << 0.5, -1.0;
  bm.append(u, (Vector(2) << 1.0, 2.0).finished());
  const Matrix before = bm.gram(0);
  Matrix z(1, 1);
  z << 3.0;
  bm.append(z, Vector::Zero(1));
  EXPECT_EQ(bm.gram(0), before);
  EXPECT_EQ(bm.rows(), 3);

  // Appending nothing is a no-op entirely.
  bm.append(Matrix(0, 1), Vector(0));
  EXPECT_EQ(bm.rows(), 3);
  EXPECT_EQ(bm.gram(0), before);
}

TEST(TriangularMap, JsonRoundTripIsExact) {
  Rng rng(88);
  Matrix samples(2000, 2);
  for (int k = 0; k < samples.rows(); ++k) {
    samples(k, 0) = std::exp(0.2 * rng.normal());
    samples(k, 1) = std::exp(0.3 * rng.normal());
  }
  auto [map, report] = fit_map(samples, Vector::Ones(samples.rows()), 3, 1.0,
                               Preconditioner::kLogarithmic);
  const std::string text = map.to_json().dump();
  const TriangularMap back = TriangularMap::from_json(nlohmann::json::parse(text));
  EXPECT_EQ(back.dim(), map.dim());
  EXPECT_EQ(back.order(), map.order());
  EXPECT_EQ(back.preconditioner(), map.preconditioner());
  for (int i = 0; i < 2; ++i) EXPECT_EQ(back.coefficients(i), map.coefficients(i));
  EXPECT_EQ(back.hull_lo(), map.hull_lo());
  EXPECT_EQ(back.hull_hi(), map.hull_hi());
}

TEST(TriangularMap, InversionFailureSignalsDimension) {
  // Cubic with negative leading coefficient is non-monotone far from the
  // hull; inverting a target beyond the local maximum must fail.
  TriangularMap map(1, 3, Preconditioner::kNone);
  Vector g(4);
  g << 0.0, 1.0, 0.0, -0.2;  // T(u) = u - 0.2 u^3
  map.set_coefficients(0, g);
  map.set_hull(Vector::Constant(1, -1.0), Vector::Constant(1, 1.0));
  try {
    map.invert(Vector::Constant(1, 50.0));
    FAIL() << "expected InversionError";
  } catch (const InversionError& e) {
    EXPECT_EQ(e.dimension, 0);
  }
}

TEST(TriangularMap, NonMonotoneJacobianThrows) {
  TriangularMap map(1, 3, Preconditioner::kNone);
  Vector g(4);
  g << 0.0, 1.0, 0.0, -0.2;
  map.set_coefficients(0, g);
  EXPECT_THROW(map.log_jacobian(Vector::Constant(1, 10.0)), NonMonotoneError);
}

}  // namespace
}  // namespace tetais
