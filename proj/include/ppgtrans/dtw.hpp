/*
 * Copyright 2026 The ppgtrans Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef PPGTRANS_DTW_HPP_
#define PPGTRANS_DTW_HPP_

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace ppgtrans::features {

struct DtwResult {
  double cost = 0.0;          // total absolute-difference cost of the path
  std::size_t path_length = 0;  // number of aligned index pairs
  double normalized() const { return path_length > 0 ? cost / static_cast<double>(path_length) : 0.0; }
};

// Unconstrained DTW with steps (1,0), (0,1), (1,1). Among minimum-cost
// warping paths the shortest one is reported, so the normalized distance is
// well defined.
inline DtwResult DtwAlign(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size(), m = b.size();
  if (n == 0 || m == 0) return {};
  struct Cell {
    double cost;
    std::uint32_t len;
  };
  auto better = [](const Cell& x, const Cell& y) {
    return x.cost < y.cost || (x.cost == y.cost && x.len < y.len);
  };
  const Cell inf{std::numeric_limits<double>::infinity(), 0};
  std::vector<Cell> prev(m, inf), cur(m, inf);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double d = std::abs(a[i] - b[j]);
      if (i == 0 && j == 0) {
        cur[j] = {d, 1};
        continue;
      }
      Cell best = inf;
      if (i > 0 && better(prev[j], best)) best = prev[j];
      if (j > 0 && better(cur[j - 1], best)) best = cur[j - 1];
      if (i > 0 && j > 0 && better(prev[j - 1], best)) best = prev[j - 1];
      cur[j] = {best.cost + d, best.len + 1};
    }
    std::swap(prev, cur);
  }
  return {prev[m - 1].cost, prev[m - 1].len};
}

inline double DtwDistance(std::span<const double> a, std::span<const double> b) {
  return DtwAlign(a, b).normalized();
}

}  // namespace ppgtrans::features

#endif  // PPGTRANS_DTW_HPP_
