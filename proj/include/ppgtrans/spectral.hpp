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

// Welch power / cross spectral density estimation.

#ifndef PPGTRANS_SPECTRAL_HPP_
#define PPGTRANS_SPECTRAL_HPP_

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include "ppgtrans/error.hpp"
#include "ppgtrans/stats.hpp"

namespace ppgtrans::spectral {

struct WelchParams {
  double segment_s = 4.0;  // Hann sub-window length
  double overlap = 0.5;    // fraction of the sub-window
  // Bin spacing; the sub-window is zero-padded when finer than 1/segment_s.
  double resolution_hz = 0.25;
  // Bins above this frequency are not computed (<= 0 means up to Nyquist).
  double max_freq_hz = 0.0;
};

struct Spectrum {
  std::vector<double> freqs;
  std::vector<double> psd;
  WelchParams params;
  double rate = 0.0;

  double bin_width() const { return freqs.size() > 1 ? freqs[1] - freqs[0] : 0.0; }
};

namespace detail {

struct Plan {
  std::size_t nperseg = 0;
  std::size_t step = 0;
  std::size_t nfft = 0;
  std::size_t n_bins = 0;
  std::size_t n_segments = 0;
  std::vector<double> window;
  double scale = 0.0;
  std::vector<double> cos_table, sin_table;
};

inline Plan MakePlan(std::size_t n, double rate, const WelchParams& p) {
  Plan plan;
  plan.nperseg = static_cast<std::size_t>(std::llround(p.segment_s * rate));
  Require(plan.nperseg >= 2, ErrorCode::kInvalidParams, "Welch sub-window too small");
  Require(n >= plan.nperseg, ErrorCode::kSegmentTooShort,
          "segment of " + std::to_string(n) + " samples is shorter than one Welch sub-window");
  const auto noverlap =
      static_cast<std::size_t>(std::floor(p.overlap * static_cast<double>(plan.nperseg)));
  plan.step = std::max<std::size_t>(1, plan.nperseg - noverlap);
  plan.n_segments = (n - plan.nperseg) / plan.step + 1;
  const double res = p.resolution_hz > 0 ? p.resolution_hz : rate / plan.nperseg;
  plan.nfft = std::max(plan.nperseg, static_cast<std::size_t>(std::llround(rate / res)));
  plan.n_bins = plan.nfft / 2 + 1;
  if (p.max_freq_hz > 0) {
    const auto last = static_cast<std::size_t>(
        std::floor(p.max_freq_hz * static_cast<double>(plan.nfft) / rate + 1e-9));
    plan.n_bins = std::min(plan.n_bins, last + 1);
  }
  plan.window.resize(plan.nperseg);
  double wsum2 = 0.0;
  for (std::size_t i = 0; i < plan.nperseg; ++i) {
    plan.window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                          static_cast<double>(plan.nperseg));
    wsum2 += plan.window[i] * plan.window[i];
  }
  plan.scale = 1.0 / (rate * wsum2);
  plan.cos_table.resize(plan.nfft);
  plan.sin_table.resize(plan.nfft);
  for (std::size_t m = 0; m < plan.nfft; ++m) {
    const double ang = 2.0 * std::numbers::pi * static_cast<double>(m) /
                       static_cast<double>(plan.nfft);
    plan.cos_table[m] = std::cos(ang);
    plan.sin_table[m] = std::sin(ang);
  }
  return plan;
}

// Windowed, mean-removed DFT of one sub-window at bins [0, n_bins).
inline void SegmentDft(const Plan& plan, std::span<const double> x, std::size_t first,
                       std::vector<std::complex<double>>& out) {
  std::vector<double> buf(plan.nperseg);
  const double m = stats::Mean(x.subspan(first, plan.nperseg));
  for (std::size_t i = 0; i < plan.nperseg; ++i) buf[i] = (x[first + i] - m) * plan.window[i];
  out.assign(plan.n_bins, {});
  for (std::size_t k = 0; k < plan.n_bins; ++k) {
    double re = 0.0, im = 0.0;
    std::size_t idx = 0;
    for (std::size_t i = 0; i < plan.nperseg; ++i) {
      re += buf[i] * plan.cos_table[idx];
      im -= buf[i] * plan.sin_table[idx];
      idx += k;
      if (idx >= plan.nfft) idx -= plan.nfft;
    }
    out[k] = {re, im};
  }
}

inline double OneSidedFactor(const Plan& plan, std::size_t k) {
  if (k == 0) return 1.0;
  if (plan.nfft % 2 == 0 && k == plan.nfft / 2) return 1.0;
  return 2.0;
}

}  // namespace detail

inline Spectrum WelchPsd(std::span<const double> x, double rate, const WelchParams& params = {}) {
  const detail::Plan plan = detail::MakePlan(x.size(), rate, params);
  Spectrum s;
  s.params = params;
  s.rate = rate;
  s.freqs.resize(plan.n_bins);
  s.psd.assign(plan.n_bins, 0.0);
  for (std::size_t k = 0; k < plan.n_bins; ++k) {
    s.freqs[k] = static_cast<double>(k) * rate / static_cast<double>(plan.nfft);
  }
  std::vector<std::complex<double>> dft;
  for (std::size_t seg = 0; seg < plan.n_segments; ++seg) {
    detail::SegmentDft(plan, x, seg * plan.step, dft);
    for (std::size_t k = 0; k < plan.n_bins; ++k) s.psd[k] += std::norm(dft[k]);
  }
  for (std::size_t k = 0; k < plan.n_bins; ++k) {
    s.psd[k] *= plan.scale * detail::OneSidedFactor(plan, k) /
                static_cast<double>(plan.n_segments);
  }
  return s;
}

struct CrossSpectra {
  std::vector<double> freqs;
  std::vector<double> pxx, pyy;
  std::vector<std::complex<double>> pxy;
};

inline CrossSpectra WelchCross(std::span<const double> x, std::span<const double> y, double rate,
                               const WelchParams& params = {}) {
  Require(x.size() == y.size(), ErrorCode::kInvalidParams, "cross spectra need equal lengths");
  const detail::Plan plan = detail::MakePlan(x.size(), rate, params);
  CrossSpectra c;
  c.freqs.resize(plan.n_bins);
  c.pxx.assign(plan.n_bins, 0.0);
  c.pyy.assign(plan.n_bins, 0.0);
  c.pxy.assign(plan.n_bins, {});
  for (std::size_t k = 0; k < plan.n_bins; ++k) {
    c.freqs[k] = static_cast<double>(k) * rate / static_cast<double>(plan.nfft);
  }
  std::vector<std::complex<double>> dx, dy;
  for (std::size_t seg = 0; seg < plan.n_segments; ++seg) {
    detail::SegmentDft(plan, x, seg * plan.step, dx);
    detail::SegmentDft(plan, y, seg * plan.step, dy);
    for (std::size_t k = 0; k < plan.n_bins; ++k) {
      c.pxx[k] += std::norm(dx[k]);
      c.pyy[k] += std::norm(dy[k]);
      c.pxy[k] += std::conj(dx[k]) * dy[k];
    }
  }
  for (std::size_t k = 0; k < plan.n_bins; ++k) {
    const double f = plan.scale * detail::OneSidedFactor(plan, k) /
                     static_cast<double>(plan.n_segments);
    c.pxx[k] *= f;
    c.pyy[k] *= f;
    c.pxy[k] *= f;
  }
  return c;
}

// Mean magnitude-squared coherence over bins in [lo, hi]. Bins where either
// auto-spectrum is negligible are skipped; returns 0 if none remain.
inline double BandCoherence(const CrossSpectra& c, double lo_hz, double hi_hz) {
  const double peak_x = *std::max_element(c.pxx.begin(), c.pxx.end());
  const double peak_y = *std::max_element(c.pyy.begin(), c.pyy.end());
  double acc = 0.0;
  int used = 0;
  for (std::size_t k = 0; k < c.freqs.size(); ++k) {
    if (c.freqs[k] < lo_hz - 1e-9 || c.freqs[k] > hi_hz + 1e-9) continue;
    if (c.pxx[k] <= 1e-12 * peak_x || c.pyy[k] <= 1e-12 * peak_y) continue;
    acc += std::clamp(std::norm(c.pxy[k]) / (c.pxx[k] * c.pyy[k]), 0.0, 1.0);
    ++used;
  }
  return used > 0 ? acc / used : 0.0;
}

inline double BandCoherence(std::span<const double> x, std::span<const double> y, double rate,
                            double lo_hz, double hi_hz, const WelchParams& params = {}) {
  return BandCoherence(WelchCross(x, y, rate, params), lo_hz, hi_hz);
}

// Sum of psd * df over bins with lo <= f < hi (or f <= hi when `inclusive_hi`).
inline double BandPower(const Spectrum& s, double lo_hz, double hi_hz, bool inclusive_hi = true) {
  const double df = s.bin_width();
  double acc = 0.0;
  for (std::size_t k = 0; k < s.freqs.size(); ++k) {
    const double f = s.freqs[k];
    if (f < lo_hz - 1e-9) continue;
    if (inclusive_hi ? f > hi_hz + 1e-9 : f >= hi_hz - 1e-9) continue;
    acc += s.psd[k] * df;
  }
  return acc;
}

// Index of the largest psd bin with lo <= f <= hi; npos if the band is empty.
inline std::size_t PeakBin(const Spectrum& s, double lo_hz, double hi_hz) {
  std::size_t best = static_cast<std::size_t>(-1);
  for (std::size_t k = 0; k < s.freqs.size(); ++k) {
    if (s.freqs[k] < lo_hz - 1e-9 || s.freqs[k] > hi_hz + 1e-9) continue;
    if (best == static_cast<std::size_t>(-1) || s.psd[k] > s.psd[best]) best = k;
  }
  return best;
}

}  // namespace ppgtrans::spectral

#endif  // PPGTRANS_SPECTRAL_HPP_
