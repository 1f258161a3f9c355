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

#ifndef TETAIS_TRANSPORT_HPP
#define TETAIS_TRANSPORT_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tetais/density.hpp"
#include "tetais/multi_index.hpp"

namespace tetais {

enum class Preconditioner { kNone, kLogarithmic };

inline std::string to_string(Preconditioner p) {
  return p == Preconditioner::kLogarithmic ? "logarithmic" : "none";
}

/// Thrown when a proposal cannot be pulled back through the fitted map.
/// Callers treat the offending proposal as having zero posterior mass.
struct InversionError : std::runtime_error {
  explicit InversionError(int dim_index, const std::string& what)
      : std::runtime_error(what), dimension(dim_index) {}
  int dimension;
};

/// Thrown when a diagonal partial derivative is non-positive at an
/// evaluation point, i.e. the map is not monotone there.
struct NonMonotoneError : std::runtime_error {
  explicit NonMonotoneError(int dim_index)
      : std::runtime_error("map non-monotone in dimension " + std::to_string(dim_index + 1)),
        dimension(dim_index) {}
  int dimension;
};

namespace detail {

inline double monomial(const MultiIndex& j, const Vector& u) {
  double v = 1.0;
  for (std::size_t k = 0; k < j.size(); ++k)
    for (int e = 0; e < j[k]; ++e) v *= u[static_cast<int>(k)];
  return v;
}

/// d psi_j / d u_i where i = j.size() - 1 (the diagonal coordinate).
inline double monomial_diag_derivative(const MultiIndex& j, const Vector& u) {
  const int i = static_cast<int>(j.size()) - 1;
  if (j[i] == 0) return 0.0;
  double v = static_cast<double>(j[i]);
  for (int e = 0; e < j[i] - 1; ++e) v *= u[i];
  for (int k = 0; k < i; ++k)
    for (int e = 0; e < j[k]; ++e) v *= u[k];
  return v;
}

}  // namespace detail

/// Identity coefficient vector iota for one map component.
inline Vector identity_coefficients(const MultiIndexSet& set) {
  Vector iota = Vector::Zero(set.size());
  iota[set.identity_position()] = 1.0;
  return iota;
}

/// Lower-triangular polynomial transport map with monomial basis.
///
/// Components act on u = theta (no preconditioner) or u = log(theta)
/// (logarithmic preconditioner, for strictly positive parameter spaces).
class TriangularMap {
 public:
  TriangularMap(int d, int p, Preconditioner precond)
      : dim_(d), order_(p), precond_(precond) {
    for (int i = 1; i <= d; ++i) {
      sets_.push_back(build_index_set(d, i, p));
      coeffs_.push_back(identity_coefficients(sets_.back()));
    }
    hull_lo_ = Vector::Constant(d, -1.0);
    hull_hi_ = Vector::Constant(d, 1.0);
    identity_ = true;
  }

  static TriangularMap identity(int d, int p, Preconditioner precond) {
    return TriangularMap(d, p, precond);
  }

  int dim() const { return dim_; }
  int order() const { return order_; }
  Preconditioner preconditioner() const { return precond_; }
  bool is_identity() const { return identity_; }
  const MultiIndexSet& index_set(int i) const { return sets_[i]; }
  const Vector& coefficients(int i) const { return coeffs_[i]; }
  const Vector& hull_lo() const { return hull_lo_; }
  const Vector& hull_hi() const { return hull_hi_; }

  void set_coefficients(int i, Vector gamma) {
    if (gamma.size() != sets_[i].size())
      throw std::invalid_argument("TriangularMap: coefficient length mismatch");
    coeffs_[i] = std::move(gamma);
    refresh_identity_flag();
  }

  /// Bounding box of the fitted samples in u-space, used to bracket inversions.
  void set_hull(Vector lo, Vector hi) {
    hull_lo_ = std::move(lo);
    hull_hi_ = std::move(hi);
  }

  Vector to_u(const Vector& theta) const {
    if (precond_ == Preconditioner::kNone) return theta;
    Vector u(theta.size());
    for (int i = 0; i < theta.size(); ++i) {
      if (!(theta[i] > 0.0))
        throw std::invalid_argument("TriangularMap: logarithmic preconditioner requires positive coordinates");
      u[i] = std::log(theta[i]);
    }
    return u;
  }

  Vector from_u(const Vector& u) const {
    if (precond_ == Preconditioner::kNone) return u;
    return u.array().exp().matrix();
  }

  /// r_i = T_i(u_1..u_i) on preconditioned coordinates.
  Vector evaluate_u(const Vector& u) const {
    if (identity_) return u;
    Vector r(dim_);
    for (int i = 0; i < dim_; ++i) {
      double s = 0.0;
      for (int m = 0; m < sets_[i].size(); ++m)
        s += coeffs_[i][m] * detail::monomial(sets_[i].indices[m], u);
      r[i] = s;
    }
    return r;
  }

  Vector evaluate(const Vector& theta) const { return evaluate_u(to_u(theta)); }

  /// Diagonal partial of component i at u.
  double diagonal_partial_u(int i, const Vector& u) const {
    double s = 0.0;
    for (int m = 0; m < sets_[i].size(); ++m)
      s += coeffs_[i][m] * detail::monomial_diag_derivative(sets_[i].indices[m], u);
    return s;
  }

  /// log |J_T(theta)|, including the log-preconditioner Jacobian prod 1/theta_i.
  double log_jacobian(const Vector& theta) const {
    const Vector u = to_u(theta);
    double lj = 0.0;
    if (!identity_) {
      for (int i = 0; i < dim_; ++i) {
        const double d = diagonal_partial_u(i, u);
        if (!(d > 0.0)) throw NonMonotoneError(i);
        lj += std::log(d);
      }
    }
    if (precond_ == Preconditioner::kLogarithmic) lj -= u.sum();
    return lj;
  }

  /// Sequential triangular inversion: find theta with T(theta) = r, to
  /// |T_i(theta) - r_i| <= 1e-10 (1 + |r_i|) per component.
  Vector invert(const Vector& r) const {
    if (r.size() != dim_) throw std::invalid_argument("TriangularMap::invert: dimension mismatch");
    if (identity_) return from_u(r);
    Vector u(dim_);
    for (int i = 0; i < dim_; ++i) u[i] = invert_component(i, u, r[i]);
    return from_u(u);
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["dim"] = dim_;
    j["order"] = order_;
    j["preconditioner"] = to_string(precond_);
    j["indices"] = nlohmann::json::array();
    j["coefficients"] = nlohmann::json::array();
    for (int i = 0; i < dim_; ++i) {
      j["indices"].push_back(sets_[i].indices);
      j["coefficients"].push_back(std::vector<double>(coeffs_[i].begin(), coeffs_[i].end()));
    }
    j["hull_lo"] = std::vector<double>(hull_lo_.begin(), hull_lo_.end());
    j["hull_hi"] = std::vector<double>(hull_hi_.begin(), hull_hi_.end());
    return j;
  }

  static TriangularMap from_json(const nlohmann::json& j) {
    const auto precond = j.at("preconditioner").get<std::string>() == "logarithmic"
                             ? Preconditioner::kLogarithmic
                             : Preconditioner::kNone;
    TriangularMap map(j.at("dim").get<int>(), j.at("order").get<int>(), precond);
    for (int i = 0; i < map.dim_; ++i) {
      const auto c = j.at("coefficients")[i].get<std::vector<double>>();
      map.set_coefficients(i, Eigen::Map<const Vector>(c.data(), c.size()));
    }
    const auto lo = j.at("hull_lo").get<std::vector<double>>();
    const auto hi = j.at("hull_hi").get<std::vector<double>>();
    map.set_hull(Eigen::Map<const Vector>(lo.data(), lo.size()),
                 Eigen::Map<const Vector>(hi.data(), hi.size()));
    return map;
  }

 private:
  void refresh_identity_flag() {
    identity_ = true;
    for (int i = 0; i < dim_ && identity_; ++i)
      identity_ = coeffs_[i] == identity_coefficients(sets_[i]);
  }

  /// 1-D root solve for component i given u_1..u_{i-1} already inverted.
  double invert_component(int i, const Vector& u_prefix, double target) const {
    // Collapse the component to a univariate polynomial in u_i.
    std::vector<double> poly(order_ + 1, 0.0);
    for (int m = 0; m < sets_[i].size(); ++m) {
      const MultiIndex& j = sets_[i].indices[m];
      double c = coeffs_[i][m];
      for (int k = 0; k < i; ++k)
        for (int e = 0; e < j[k]; ++e) c *= u_prefix[k];
      poly[j[i]] += c;
    }
    auto f = [&](double x) {
      double v = 0.0;
      for (int e = order_; e >= 0; --e) v = v * x + poly[e];
      return v - target;
    };
    auto df = [&](double x) {
      double v = 0.0;
      for (int e = order_; e >= 1; --e) v = v * x + poly[e] * e;
      return v;
    };

    // The collapsed polynomial need not be globally monotone; the inverse is
    // only well defined on the increasing branch that covers the fitted
    // samples. Bound that branch by the real roots of the derivative, found
    // via the companion matrix, and solve inside it where f is strictly
    // increasing and the root unique.
    const double mid = 0.5 * (hull_lo_[i] + hull_hi_[i]);
    if (!(df(mid) > 0.0)) throw InversionError(i, "map is not increasing over the sample hull");
    double branch_lo = -std::numeric_limits<double>::infinity();
    double branch_hi = std::numeric_limits<double>::infinity();
    {
      std::vector<double> dcoef(order_);
      for (int e = 1; e <= order_; ++e) dcoef[e - 1] = poly[e] * e;
      int deg = order_ - 1;
      while (deg > 0 && dcoef[deg] == 0.0) --deg;
      if (deg >= 1) {
        Matrix companion = Matrix::Zero(deg, deg);
        for (int r = 1; r < deg; ++r) companion(r, r - 1) = 1.0;
        for (int r = 0; r < deg; ++r) companion(r, deg - 1) = -dcoef[r] / dcoef[deg];
        const Eigen::EigenSolver<Matrix> es(companion);
        for (int r = 0; r < deg; ++r) {
          const auto ev = es.eigenvalues()[r];
          if (std::abs(ev.imag()) > 1e-8 * (1.0 + std::abs(ev.real()))) continue;
          if (ev.real() <= mid)
            branch_lo = std::max(branch_lo, ev.real());
          else
            branch_hi = std::min(branch_hi, ev.real());
        }
      }
    }

    // Bracket from the sample hull expanded by 50%, widened geometrically but
    // never past the branch; f is increasing here so no sign bookkeeping.
    const double range = std::max(hull_hi_[i] - hull_lo_[i], 1e-3);
    double lo = std::max(hull_lo_[i] - 0.5 * range, branch_lo);
    double hi = std::min(hull_hi_[i] + 0.5 * range, branch_hi);
    double flo = f(lo);
    double fhi = f(hi);
    double step = range;
    for (int tries = 0; flo > 0.0 && tries < 60 && lo > branch_lo; ++tries) {
      lo = std::max(lo - step, branch_lo);
      step *= 2.0;
      flo = f(lo);
    }
    step = range;
    for (int tries = 0; fhi < 0.0 && tries < 60 && hi < branch_hi; ++tries) {
      hi = std::min(hi + step, branch_hi);
      step *= 2.0;
      fhi = f(hi);
    }
    if (flo > 0.0 || fhi < 0.0)
      throw InversionError(i, "target outside the range of the monotone branch");
    // Bisection with Newton polish.
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
      const double fx = f(x);
      if (std::abs(fx) <= 1e-12 * (1.0 + std::abs(target))) break;
      if (fx < 0.0)
        lo = x;
      else
        hi = x;
      const double d = df(x);
      double xn = d != 0.0 ? x - fx / d : 0.5 * (lo + hi);
      if (!(xn > std::min(lo, hi) && xn < std::max(lo, hi))) xn = 0.5 * (lo + hi);
      if (xn == x) break;
      x = xn;
    }
    if (std::abs(f(x)) > 1e-10 * (1.0 + std::abs(target)))
      throw InversionError(i, "root finding did not converge");
    if (!(df(x) > 0.0)) throw InversionError(i, "derivative vanishes at the recovered root");
    return x;
  }

  int dim_;
  int order_;
  Preconditioner precond_;
  std::vector<MultiIndexSet> sets_;
  std::vector<Vector> coeffs_;
  Vector hull_lo_, hull_hi_;
  bool identity_ = true;
};

/// Basis evaluations of the fitting samples, one block per map component,
/// with the Gram accumulator F^T W F maintained incrementally.
class BasisMatrices {
 public:
  BasisMatrices(int d, int p, const std::vector<MultiIndexSet>* sets = nullptr) : dim_(d) {
    for (int i = 1; i <= d; ++i)
      sets_.push_back(sets ? (*sets)[i - 1] : build_index_set(d, i, p));
    comps_.resize(d);
    for (int i = 0; i < d; ++i) {
      comps_[i].F.resize(0, sets_[i].size());
      comps_[i].G.resize(0, sets_[i].size());
      comps_[i].gram = Matrix::Zero(sets_[i].size(), sets_[i].size());
    }
  }

  int rows() const { return rows_; }
  int dim() const { return dim_; }
  const MultiIndexSet& index_set(int i) const { return sets_[i]; }
  const Vector weights() const { return weights_.head(rows_); }
  Eigen::Block<const Matrix> F(int i) const { return comps_[i].F.topRows(rows_); }
  Eigen::Block<const Matrix> G(int i) const { return comps_[i].G.topRows(rows_); }
  const Matrix& gram(int i) const { return comps_[i].gram; }
  Eigen::Block<const Matrix> samples() const { return samples_.topRows(rows_); }

  /// Append weighted samples (already in u-space). Zero-weight rows still
  /// occupy a row but contribute nothing to the Gram accumulator.
  void append(const Matrix& u, const Vector& w) {
    if (u.cols() != dim_ || u.rows() != w.size())
      throw std::invalid_argument("BasisMatrices::append: dimension mismatch");
    const int n = static_cast<int>(u.rows());
    reserve(rows_ + n);
    for (int k = 0; k < n; ++k) {
      const Vector uk = u.row(k).transpose();
      for (int i = 0; i < dim_; ++i) {
        auto& c = comps_[i];
        for (int m = 0; m < sets_[i].size(); ++m) {
          c.F(rows_, m) = detail::monomial(sets_[i].indices[m], uk);
          c.G(rows_, m) = detail::monomial_diag_derivative(sets_[i].indices[m], uk);
        }
        c.gram.noalias() += w[k] * c.F.row(rows_).transpose() * c.F.row(rows_);
      }
      samples_.row(rows_) = u.row(k);
      weights_[rows_] = w[k];
      ++rows_;
    }
  }

 private:
  void reserve(int n) {
    const int cap = static_cast<int>(samples_.rows());
    if (n <= cap) return;
    const int new_cap = std::max(n, std::max(64, 2 * cap));
    samples_.conservativeResize(new_cap, dim_);
    weights_.conservativeResize(new_cap);
    for (auto& c : comps_) {
      c.F.conservativeResize(new_cap, Eigen::NoChange);
      c.G.conservativeResize(new_cap, Eigen::NoChange);
    }
  }

  struct Component {
    Matrix F, G, gram;
  };

  int dim_;
  int rows_ = 0;
  std::vector<MultiIndexSet> sets_;
  std::vector<Component> comps_;
  Matrix samples_{0, 0};
  Vector weights_{0};
};

/// Weighted KL fitting objective for one component (Eq. coefficients
/// notation: gamma against basis blocks F, G with diagonal weight W):
///   (1/2w) g'F'WFg - (1/w) sum_k w_k log((Gg)_k) + (b/2) |g - iota|^2,
/// +infinity when any (Gg)_k <= 0. The quadratic penalty carries a 1/2 so
/// that the gradient and Hessian below are its exact derivatives.
inline double objective(const Vector& gamma, const Matrix& F, const Matrix& G, const Vector& w,
                        double beta_reg, const Vector& iota) {
  if (F.cols() != gamma.size() || G.cols() != gamma.size() || F.rows() != w.size() ||
      G.rows() != w.size() || iota.size() != gamma.size())
    throw std::invalid_argument("objective: dimension mismatch");
  const double wbar = w.sum();
  const Vector Gg = G * gamma;
  double barrier = 0.0;
  for (int k = 0; k < Gg.size(); ++k) {
    if (w[k] == 0.0) continue;
    if (!(Gg[k] > 0.0)) return std::numeric_limits<double>::infinity();
    barrier -= w[k] * std::log(Gg[k]);
  }
  const Vector Fg = F * gamma;
  const double quad = 0.5 * Fg.dot(w.cwiseProduct(Fg));
  return (quad + barrier) / wbar + 0.5 * beta_reg * (gamma - iota).squaredNorm();
}

inline Vector gradient(const Vector& gamma, const Matrix& F, const Matrix& G, const Vector& w,
                       double beta_reg, const Vector& iota) {
  const double wbar = w.sum();
  const Vector Gg = G * gamma;
  Vector winv(Gg.size());
  for (int k = 0; k < Gg.size(); ++k) {
    if (w[k] == 0.0) {
      winv[k] = 0.0;
      continue;
    }
    if (!(Gg[k] > 0.0)) throw std::domain_error("gradient: infeasible coefficients");
    winv[k] = w[k] / Gg[k];
  }
  return (F.transpose() * (w.cwiseProduct(F * gamma)) - G.transpose() * winv) / wbar +
         beta_reg * (gamma - iota);
}

inline Matrix hessian(const Vector& gamma, const Matrix& F, const Matrix& G, const Vector& w,
                      double beta_reg) {
  const double wbar = w.sum();
  const Vector Gg = G * gamma;
  Vector wg2(Gg.size());
  for (int k = 0; k < Gg.size(); ++k) {
    if (w[k] == 0.0) {
      wg2[k] = 0.0;
      continue;
    }
    if (!(Gg[k] > 0.0)) throw std::domain_error("hessian: infeasible coefficients");
    wg2[k] = w[k] / (Gg[k] * Gg[k]);
  }
  const Matrix H = (F.transpose() * w.asDiagonal() * F + G.transpose() * wg2.asDiagonal() * G) / wbar;
  return H + beta_reg * Matrix::Identity(gamma.size(), gamma.size());
}

struct FitReport {
  std::vector<int> newton_iterations;
  std::vector<double> final_objective;
  int filtered_zero_weight = 0;
};

struct FitError : std::runtime_error {
  enum class Kind { kUnderdetermined, kNoConvergence };
  FitError(Kind k, const std::string& what, FitReport r)
      : std::runtime_error(what), kind(k), report(std::move(r)) {}
  Kind kind;
  FitReport report;
};

namespace detail {

/// Damped Newton solve of one component problem. Returns iterations used;
/// sets *converged when the decrement criterion was met within the budget.
inline int newton_fit(Vector& gamma, const Matrix& F, const Matrix& G, const Vector& w,
                      double beta_reg, const Vector& iota, double* final_obj, bool* converged) {
  double obj = objective(gamma, F, G, w, beta_reg, iota);
  if (!std::isfinite(obj)) {
    gamma = iota;  // infeasible warm start silently replaced
    obj = objective(gamma, F, G, w, beta_reg, iota);
  }
  *converged = false;
  int iter = 0;
  for (iter = 1; iter <= 50; ++iter) {
    const Vector g = gradient(gamma, F, G, w, beta_reg, iota);
    const Matrix H = hessian(gamma, F, G, w, beta_reg);
    const Vector step = H.llt().solve(-g);
    const double decrement = -0.5 * g.dot(step);
    if (decrement <= 1e-9) {
      *converged = true;
      break;
    }
    double t = 1.0;
    bool accepted = false;
    for (int h = 0; h < 60; ++h) {
      const Vector cand = gamma + t * step;
      const double cobj = objective(cand, F, G, w, beta_reg, iota);
      if (cobj < obj) {
        gamma = cand;
        obj = cobj;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {  // objective flat to machine precision
      *converged = true;
      break;
    }
  }
  if (final_obj) *final_obj = obj;
  return std::min(iter, 50);
}

}  // namespace detail

inline std::pair<TriangularMap, FitReport> fit_map(const BasisMatrices& bm, int p,
                                                   double beta_reg, Preconditioner precond,
                                                   const TriangularMap* warm_start,
                                                   FitReport* pre_report);

/// Fit a lower-triangular map to weighted samples by solving the d separable
/// Newton problems. `samples` are points in theta-space; under the
/// logarithmic preconditioner they must be strictly positive.
inline std::pair<TriangularMap, FitReport> fit_map(const Matrix& samples, const Vector& weights,
                                                   int p, double beta_reg = 1.0,
                                                   Preconditioner precond = Preconditioner::kNone,
                                                   const TriangularMap* warm_start = nullptr) {
  const int d = static_cast<int>(samples.cols());
  FitReport report;

  // Drop numeric-zero weights up front.
  std::vector<int> keep;
  for (int k = 0; k < weights.size(); ++k) {
    if (weights[k] > 0.0)
      keep.push_back(k);
    else
      ++report.filtered_zero_weight;
  }
  Matrix u(static_cast<int>(keep.size()), d);
  Vector w(static_cast<int>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    Vector row = samples.row(keep[k]).transpose();
    if (precond == Preconditioner::kLogarithmic) {
      for (int i = 0; i < d; ++i) {
        if (!(row[i] > 0.0))
          throw std::invalid_argument("fit_map: logarithmic preconditioner requires positive samples");
        row[i] = std::log(row[i]);
      }
    }
    u.row(k) = row.transpose();
    w[k] = weights[keep[k]];
  }

  BasisMatrices bm(d, p);
  bm.append(u, w);
  return fit_map(bm, p, beta_reg, precond, warm_start, &report);
}

/// Fit from pre-accumulated basis matrices (samples already in u-space).
inline std::pair<TriangularMap, FitReport> fit_map(const BasisMatrices& bm, int p,
                                                   double beta_reg, Preconditioner precond,
                                                   const TriangularMap* warm_start,
                                                   FitReport* pre_report = nullptr) {
  const int d = bm.dim();
  FitReport report = pre_report ? *pre_report : FitReport{};
  const Vector w = bm.weights();
  int positive = 0;
  for (int k = 0; k < w.size(); ++k) positive += w[k] > 0.0;

  TriangularMap map(d, p, precond);
  for (int i = 0; i < d; ++i) {
    if (positive < bm.index_set(i).size())
      throw FitError(FitError::Kind::kUnderdetermined,
                     "fit_map: fewer positive-weight samples than coefficients", report);
    const Vector iota = identity_coefficients(bm.index_set(i));
    Vector gamma = warm_start && !warm_start->is_identity() ? warm_start->coefficients(i) : iota;
    double final_obj = 0.0;
    bool converged = false;
    const int iters =
        detail::newton_fit(gamma, bm.F(i), bm.G(i), w, beta_reg, iota, &final_obj, &converged);
    report.newton_iterations.push_back(iters);
    report.final_objective.push_back(final_obj);
    if (!converged)
      throw FitError(FitError::Kind::kNoConvergence,
                     "fit_map: Newton did not converge in 50 iterations", report);
    map.set_coefficients(i, std::move(gamma));
  }

  // Sample hull in u-space for inversion bracketing.
  Vector lo = Vector::Constant(d, std::numeric_limits<double>::infinity());
  Vector hi = Vector::Constant(d, -std::numeric_limits<double>::infinity());
  const auto pts = bm.samples();
  for (int k = 0; k < pts.rows(); ++k) {
    if (w[k] == 0.0) continue;
    lo = lo.cwiseMin(pts.row(k).transpose());
    hi = hi.cwiseMax(pts.row(k).transpose());
  }
  map.set_hull(std::move(lo), std::move(hi));
  return {std::move(map), std::move(report)};
}

}  // namespace tetais

#endif  // TETAIS_TRANSPORT_HPP
