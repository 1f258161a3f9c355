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

#ifndef TETAIS_RESAMPLING_HPP
#define TETAIS_RESAMPLING_HPP

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "tetais/density.hpp"

namespace tetais {

enum class ResampleSpace { kTarget, kReference };

/// A weighted ensemble handed to a resampler. States are rows of `states`.
struct ResampleRequest {
  Matrix states;      // M x d
  Vector weights;     // M, non-negative, at least one positive
  ResampleSpace space = ResampleSpace::kTarget;

  void validate() const {
    if (states.rows() != weights.size())
      throw std::invalid_argument("ResampleRequest: row/weight count mismatch");
    if (!(weights.sum() > 0.0)) throw std::invalid_argument("ResampleRequest: all weights zero");
  }
};

enum class ResamplerKind { kMultinomial, kMultinomialTransform, kDimensionwiseTransform };

inline ResamplerKind resampler_from_string(const std::string& s) {
  if (s == "multinomial") return ResamplerKind::kMultinomial;
  if (s == "mt") return ResamplerKind::kMultinomialTransform;
  if (s == "dimensionwise") return ResamplerKind::kDimensionwiseTransform;
  throw std::invalid_argument("unknown resampler: " + s);
}

/// M independent draws from the normalized discrete distribution.
inline Matrix multinomial_resample(const ResampleRequest& req, Rng& rng) {
  req.validate();
  const int m = static_cast<int>(req.states.rows());
  const double total = req.weights.sum();
  Matrix out(m, req.states.cols());
  for (int i = 0; i < m; ++i) out.row(i) = req.states.row(rng.discrete(req.weights, total));
  return out;
}

/// Exact 1-D ensemble transform: staircase coupling over the sorted states.
/// Each output slot has capacity 1/M and accumulates the capacity-weighted
/// average of the source states that fill it. Deterministic, O(M log M).
inline std::vector<double> etpf_1d(const std::vector<double>& states,
                                   const std::vector<double>& weights) {
  const int m = static_cast<int>(states.size());
  if (m == 0 || static_cast<int>(weights.size()) != m)
    throw std::invalid_argument("etpf_1d: bad input sizes");
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return states[a] < states[b]; });
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) throw std::invalid_argument("etpf_1d: all weights zero");

  // Mass is carried scaled by M so each output slot has capacity exactly 1;
  // a source of weight w then contributes t = M w / sum(w), and the slot
  // value is the plain sum of s * x contributions. Dividing M w by the total
  // in one step keeps the equal-weight case exact for every M.
  std::vector<double> y(m, 0.0);
  int j = 0;
  double c = 0.0;  // mass already placed in slot j
  for (int idx = 0; idx < m; ++idx) {
    const double x = states[order[idx]];
    double t = m * weights[order[idx]] / total;
    while (j < m && t > 0.0) {
      const double s = std::min(1.0 - c, t);
      y[j] += s * x;
      t -= s;
      c += s;
      if (t > 0.0) {
        ++j;
        c = 0.0;
      }
    }
  }
  return y;
}

/// Greedy multinomial-transform resampler: the 1-D staircase generalized to
/// points ordered lexicographically, emitting the capacity-weighted average
/// of the source points contributing to each output slot. Specializes to
/// etpf_1d in one dimension and preserves the weighted mean exactly.
inline Matrix mt_resample(const ResampleRequest& req, Rng& /*rng*/) {
  req.validate();
  const int m = static_cast<int>(req.states.rows());
  const int d = static_cast<int>(req.states.cols());
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    for (int k = 0; k < d; ++k) {
      if (req.states(a, k) != req.states(b, k)) return req.states(a, k) < req.states(b, k);
    }
    return false;
  });
  // Sequential accumulation keeps the slot masses bitwise identical to
  // etpf_1d, which sums the weights the same way.
  double total = 0.0;
  for (int i = 0; i < m; ++i) total += req.weights[i];

  Matrix out = Matrix::Zero(m, d);
  int j = 0;
  double c = 0.0;
  for (int idx = 0; idx < m; ++idx) {
    const int src = order[idx];
    double t = m * req.weights[src] / total;
    while (j < m && t > 0.0) {
      const double s = std::min(1.0 - c, t);
      out.row(j) += s * req.states.row(src);
      t -= s;
      c += s;
      if (t > 0.0) {
        ++j;
        c = 0.0;
      }
    }
  }
  return out;
}

/// Apply etpf_1d independently per coordinate with the shared weight vector.
/// Only valid on reference space, where the pushforward is approximately
/// uncorrelated across dimensions.
inline Matrix dimensionwise_transform(const ResampleRequest& req) {
  if (req.space != ResampleSpace::kReference)
    throw std::invalid_argument("dimensionwise_transform: requires reference-space ensembles");
  req.validate();
  const int m = static_cast<int>(req.states.rows());
  const int d = static_cast<int>(req.states.cols());
  const std::vector<double> w(req.weights.data(), req.weights.data() + m);
  Matrix out(m, d);
  for (int k = 0; k < d; ++k) {
    std::vector<double> col(m);
    for (int i = 0; i < m; ++i) col[i] = req.states(i, k);
    const std::vector<double> y = etpf_1d(col, w);
    for (int i = 0; i < m; ++i) out(i, k) = y[i];
  }
  return out;
}

inline Matrix resample(ResamplerKind kind, const ResampleRequest& req, Rng& rng) {
  switch (kind) {
    case ResamplerKind::kMultinomial:
      return multinomial_resample(req, rng);
    case ResamplerKind::kMultinomialTransform:
      return mt_resample(req, rng);
    case ResamplerKind::kDimensionwiseTransform:
      return dimensionwise_transform(req);
  }
  throw std::logic_error("resample: unreachable");
}

}  // namespace tetais

#endif  // TETAIS_RESAMPLING_HPP
