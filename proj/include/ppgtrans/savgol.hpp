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

#ifndef PPGTRANS_SAVGOL_HPP_
#define PPGTRANS_SAVGOL_HPP_

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "ppgtrans/error.hpp"

namespace ppgtrans::filter {

// Savitzky-Golay smoother. Interior samples use the centered least-squares
// kernel; the first and last half-windows are evaluated from the polynomial
// fitted to the first/last full window, so polynomials of degree <= order
// pass through unchanged everywhere.
class SavitzkyGolay {
 public:
  SavitzkyGolay(int window, int order) : window_(window), half_(window / 2) {
    Require(window % 2 == 1 && window > order && order >= 0, ErrorCode::kInvalidParams,
            "Savitzky-Golay window must be odd and larger than the order");
    Eigen::MatrixXd vander(window, order + 1);
    for (int i = 0; i < window; ++i) {
      const double t = i - half_;
      double p = 1.0;
      for (int j = 0; j <= order; ++j) {
        vander(i, j) = p;
        p *= t;
      }
    }
    const Eigen::MatrixXd gram = vander.transpose() * vander;
    projection_ = vander * gram.ldlt().solve(vander.transpose());
  }

  int window() const { return window_; }

  std::vector<double> Apply(std::span<const double> x) const {
    const auto n = static_cast<int>(x.size());
    Require(n >= window_, ErrorCode::kSegmentTooShort,
            "signal shorter than the Savitzky-Golay window");
    std::vector<double> y(x.size());
    auto eval = [&](int row, int first) {
      double acc = 0.0;
      for (int j = 0; j < window_; ++j) acc += projection_(row, j) * x[first + j];
      return acc;
    };
    for (int i = 0; i < half_; ++i) y[i] = eval(i, 0);
    for (int i = half_; i < n - half_; ++i) y[i] = eval(half_, i - half_);
    for (int i = n - half_; i < n; ++i) y[i] = eval(i - (n - window_), n - window_);
    return y;
  }

 private:
  int window_;
  int half_;
  Eigen::MatrixXd projection_;
};

}  // namespace ppgtrans::filter

#endif  // PPGTRANS_SAVGOL_HPP_
