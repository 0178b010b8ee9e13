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

// Butterworth bandpass design (bilinear transform, second-order sections) and
// zero-phase forward-backward application.

#ifndef PPGTRANS_BUTTERWORTH_HPP_
#define PPGTRANS_BUTTERWORTH_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include "ppgtrans/error.hpp"
#include "ppgtrans/types.hpp"

namespace ppgtrans::filter {

// b0 b1 b2 / 1 a1 a2, transposed direct form II.
struct Biquad {
  std::array<double, 3> b{};
  std::array<double, 2> a{};
};

class SosFilter {
 public:
  SosFilter() = default;
  explicit SosFilter(std::vector<Biquad> sections) : sections_(std::move(sections)) {}

  const std::vector<Biquad>& sections() const { return sections_; }

  std::complex<double> Response(double omega) const {
    const std::complex<double> z1 = std::polar(1.0, -omega);
    const std::complex<double> z2 = z1 * z1;
    std::complex<double> h = 1.0;
    for (const auto& s : sections_) {
      h *= (s.b[0] + s.b[1] * z1 + s.b[2] * z2) / (1.0 + s.a[0] * z1 + s.a[1] * z2);
    }
    return h;
  }

  // Per-section steady-state initial conditions for a unit step input.
  std::vector<std::array<double, 2>> StepInitialState() const {
    std::vector<std::array<double, 2>> zi(sections_.size());
    double scale = 1.0;
    for (std::size_t k = 0; k < sections_.size(); ++k) {
      const auto& s = sections_[k];
      // (I - A^T) zi = b[1:] - a[1:] * b0 for the 2x2 companion matrix.
      const double m00 = 1.0 + s.a[0], m01 = -1.0, m10 = s.a[1], m11 = 1.0;
      const double r0 = s.b[1] - s.a[0] * s.b[0];
      const double r1 = s.b[2] - s.a[1] * s.b[0];
      const double det = m00 * m11 - m01 * m10;
      zi[k] = {scale * (r0 * m11 - m01 * r1) / det, scale * (m00 * r1 - m10 * r0) / det};
      scale *= (s.b[0] + s.b[1] + s.b[2]) / (1.0 + s.a[0] + s.a[1]);
    }
    return zi;
  }

  // Causal filtering in place. `state` is consumed and updated.
  void Apply(std::span<double> x, std::vector<std::array<double, 2>>& state) const {
    for (std::size_t k = 0; k < sections_.size(); ++k) {
      const auto& s = sections_[k];
      double z0 = state[k][0], z1 = state[k][1];
      for (double& v : x) {
        const double in = v;
        const double out = s.b[0] * in + z0;
        z0 = s.b[1] * in - s.a[0] * out + z1;
        z1 = s.b[2] * in - s.a[1] * out;
        v = out;
      }
      state[k] = {z0, z1};
    }
  }

  // Zero-phase filtering with odd-extension padding and steady-state initial
  // conditions on both passes.
  std::vector<double> FiltFilt(std::span<const double> x, std::size_t padlen) const {
    const std::size_t n = x.size();
    if (n == 0) return {};
    padlen = std::min(padlen, n - 1);
    std::vector<double> ext;
    ext.reserve(n + 2 * padlen);
    for (std::size_t i = padlen; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
    ext.insert(ext.end(), x.begin(), x.end());
    for (std::size_t i = 1; i <= padlen; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

    const auto zi = StepInitialState();
    auto state = zi;
    for (auto& s : state) s = {s[0] * ext.front(), s[1] * ext.front()};
    Apply(ext, state);

    std::reverse(ext.begin(), ext.end());
    state = zi;
    for (auto& s : state) s = {s[0] * ext.front(), s[1] * ext.front()};
    Apply(ext, state);
    std::reverse(ext.begin(), ext.end());

    return {ext.begin() + static_cast<std::ptrdiff_t>(padlen),
            ext.begin() + static_cast<std::ptrdiff_t>(padlen + n)};
  }

 private:
  std::vector<Biquad> sections_;
};

// Digital Butterworth bandpass of the given prototype order (2*order poles),
// normalized to unit gain at the geometric band center.
inline SosFilter DesignBandpass(double lo_hz, double hi_hz, double rate, int order) {
  Require(rate > 0 && lo_hz > 0 && lo_hz < hi_hz && hi_hz < rate / 2,
          ErrorCode::kBandOutOfRange, "bandpass needs 0 < lo < hi < rate/2");
  Require(order >= 1, ErrorCode::kInvalidParams, "filter order must be >= 1");
  using cd = std::complex<double>;
  const double pi = std::numbers::pi;
  const double fs2 = 2.0 * rate;
  const double w1 = fs2 * std::tan(pi * lo_hz / rate);
  const double w2 = fs2 * std::tan(pi * hi_hz / rate);
  const double w0 = std::sqrt(w1 * w2);
  const double bw = w2 - w1;

  std::vector<cd> upper;  // digital poles with Im > 0
  std::vector<cd> real_poles;
  for (int k = 1; k <= order; ++k) {
    const cd proto = std::polar(1.0, pi * (2.0 * k + order - 1) / (2.0 * order));
    const cd t = proto * bw / 2.0;
    const cd root = std::sqrt(t * t - w0 * w0);
    for (const cd s : {t + root, t - root}) {
      const cd z = (fs2 + s) / (fs2 - s);
      if (z.imag() > 1e-12) {
        upper.push_back(z);
      } else if (std::abs(z.imag()) <= 1e-12) {
        real_poles.push_back(z);
      }
    }
  }

  std::vector<Biquad> sections;
  for (const cd& p : upper) {
    sections.push_back({{1.0, 0.0, -1.0}, {-2.0 * p.real(), std::norm(p)}});
  }
  for (std::size_t i = 0; i + 1 < real_poles.size(); i += 2) {
    const double p = real_poles[i].real(), q = real_poles[i + 1].real();
    sections.push_back({{1.0, 0.0, -1.0}, {-(p + q), p * q}});
  }

  SosFilter raw(sections);
  const double center = 2.0 * std::atan(w0 / fs2);
  const double gain = std::abs(raw.Response(center));
  for (auto& c : sections.front().b) c /= gain;
  return SosFilter(std::move(sections));
}

// Default odd-extension padding: three periods of the low band edge.
inline std::size_t DefaultPadLength(double lo_hz, double rate) {
  return static_cast<std::size_t>(std::ceil(3.0 * rate / lo_hz));
}

inline std::vector<double> Bandpass(std::span<const double> x, double rate, double lo_hz,
                                    double hi_hz, int order) {
  const SosFilter f = DesignBandpass(lo_hz, hi_hz, rate, order);
  return f.FiltFilt(x, DefaultPadLength(lo_hz, rate));
}

inline Segment Bandpass(const Segment& segment, double lo_hz, double hi_hz, int order) {
  Segment out = segment;
  out.samples = Bandpass(segment.samples, segment.rate, lo_hz, hi_hz, order);
  out.stage = SegmentStage::kFiltered;
  return out;
}

// Filters every channel of a uniformly resampled trace.
inline PpgTrace Bandpass(const PpgTrace& trace, double lo_hz, double hi_hz, int order) {
  PpgTrace out = trace;
  const SosFilter f = DesignBandpass(lo_hz, hi_hz, trace.nominal_rate, order);
  for (auto& ch : out.channels) {
    ch = f.FiltFilt(ch, DefaultPadLength(lo_hz, trace.nominal_rate));
  }
  return out;
}

}  // namespace ppgtrans::filter

#endif  // PPGTRANS_BUTTERWORTH_HPP_
