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

#ifndef TETAIS_MULTI_INDEX_HPP
#define TETAIS_MULTI_INDEX_HPP

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace tetais {

/// One monomial exponent vector. Only the first i coordinates of a map
/// component T_i can appear, so indices are stored with length i.
using MultiIndex = std::vector<int>;

/// Total-order lower-triangular index set for map component i of d:
/// all j in N_0^i with |j|_1 <= p, in graded lexicographic order.
struct MultiIndexSet {
  int dim = 0;        // component index i (indices have this many entries)
  int order = 0;      // total order p
  std::vector<MultiIndex> indices;

  int size() const { return static_cast<int>(indices.size()); }

  /// Position of the degree-1 index in coordinate `dim` (the identity term).
  int identity_position() const {
    for (int m = 0; m < size(); ++m) {
      const MultiIndex& j = indices[m];
      if (std::accumulate(j.begin(), j.end(), 0) == 1 && j[dim - 1] == 1) return m;
    }
    throw std::logic_error("MultiIndexSet: identity term missing");
  }
};

namespace detail {

inline void enumerate_indices(int i, int remaining, MultiIndex& current,
                              std::vector<MultiIndex>& out) {
  if (static_cast<int>(current.size()) == i) {
    out.push_back(current);
    return;
  }
  for (int e = 0; e <= remaining; ++e) {
    current.push_back(e);
    enumerate_indices(i, remaining - e, current, out);
    current.pop_back();
  }
}

}  // namespace detail

/// Build J_i^TO(p) for map component 1 <= i <= d. The total order p must be
/// odd so the map components are surjective.
inline MultiIndexSet build_index_set(int d, int i, int p) {
  if (i < 1 || i > d) throw std::invalid_argument("build_index_set: component out of range");
  if (p < 1 || p % 2 == 0) throw std::invalid_argument("build_index_set: total order must be odd");
  std::vector<MultiIndex> all;
  MultiIndex current;
  detail::enumerate_indices(i, p, current, all);
  std::sort(all.begin(), all.end(), [](const MultiIndex& a, const MultiIndex& b) {
    const int da = std::accumulate(a.begin(), a.end(), 0);
    const int db = std::accumulate(b.begin(), b.end(), 0);
    if (da != db) return da < db;
    return a < b;
  });
  return {i, p, std::move(all)};
}

}  // namespace tetais

#endif  // TETAIS_MULTI_INDEX_HPP
