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

// Verification metrics: balanced accuracy, ROC AUC, EER, threshold selection
// and subject-weighted averaging.

#ifndef PPGTRANS_METRICS_HPP_
#define PPGTRANS_METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ppgtrans/error.hpp"

namespace ppgtrans::eval {

struct ClassCounts {
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

inline ClassCounts CountClasses(std::span<const int> labels) {
  ClassCounts c;
  for (int y : labels) (y == 1 ? c.positives : c.negatives) += 1;
  return c;
}

inline ClassCounts RequireBothClasses(std::span<const double> scores, std::span<const int> labels) {
  Require(scores.size() == labels.size(), ErrorCode::kInvalidParams,
          "scores and labels differ in length");
  const ClassCounts c = CountClasses(labels);
  Require(c.positives > 0 && c.negatives > 0, ErrorCode::kSingleClassInput,
          "metrics need both positive and negative examples");
  return c;
}

// Accept iff score >= threshold.
inline double BacAt(std::span<const double> scores, std::span<const int> labels, double threshold) {
  const ClassCounts c = RequireBothClasses(scores, labels);
  std::size_t tp = 0;
  std::size_t tn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool accept = scores[i] >= threshold;
    if (labels[i] == 1 && accept) ++tp;
    if (labels[i] != 1 && !accept) ++tn;
  }
  return 0.5 * (static_cast<double>(tp) / static_cast<double>(c.positives) +
                static_cast<double>(tn) / static_cast<double>(c.negatives));
}

// {0, 1} plus midpoints between adjacent distinct scores, ascending.
inline std::vector<double> CandidateThresholds(std::span<const double> scores) {
  std::vector<double> s(scores.begin(), scores.end());
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  std::vector<double> out{0.0, 1.0};
  for (std::size_t i = 0; i + 1 < s.size(); ++i) out.push_back(s[i] + 0.5 * (s[i + 1] - s[i]));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

struct ThresholdChoice {
  double threshold = 0.0;
  double bac = 0.0;
};

// BAC-maximizing threshold; ties resolve to the lowest candidate.
inline ThresholdChoice SelectThresholdWithBac(std::span<const double> scores,
                                              std::span<const int> labels) {
  const ClassCounts c = RequireBothClasses(scores, labels);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });
  // Sweep ascending thresholds; everything below t is rejected.
  ThresholdChoice best{0.0, -1.0};
  std::size_t k = 0;
  std::size_t rejected_pos = 0;
  std::size_t rejected_neg = 0;
  for (double t : CandidateThresholds(scores)) {
    while (k < order.size() && scores[order[k]] < t) {
      (labels[order[k]] == 1 ? rejected_pos : rejected_neg) += 1;
      ++k;
    }
    const double tpr = static_cast<double>(c.positives - rejected_pos) / static_cast<double>(c.positives);
    const double tnr = static_cast<double>(rejected_neg) / static_cast<double>(c.negatives);
    const double bac = 0.5 * (tpr + tnr);
    if (bac > best.bac) best = {t, bac};
  }
  return best;
}

inline double SelectThreshold(std::span<const double> scores, std::span<const int> labels) {
  return SelectThresholdWithBac(scores, labels).threshold;
}

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

// ROC from (0,0) to (1,1), one point per distinct score threshold.
inline std::vector<RocPoint> RocCurve(std::span<const double> scores, std::span<const int> labels) {
  const ClassCounts c = RequireBothClasses(scores, labels);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });
  std::vector<RocPoint> roc{{0.0, 0.0}};
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    while (i < order.size() && scores[order[i]] == s) {
      (labels[order[i]] == 1 ? tp : fp) += 1;
      ++i;
    }
    roc.push_back({static_cast<double>(fp) / static_cast<double>(c.negatives),
                   static_cast<double>(tp) / static_cast<double>(c.positives)});
  }
  return roc;
}

inline double Auc(std::span<const double> scores, std::span<const int> labels) {
  const auto roc = RocCurve(scores, labels);
  double area = 0.0;
  for (std::size_t i = 1; i < roc.size(); ++i) {
    area += (roc[i].fpr - roc[i - 1].fpr) * 0.5 * (roc[i].tpr + roc[i - 1].tpr);
  }
  return area;
}

// Linear interpolation on the ROC segment where FRR - FAR changes sign.
inline double Eer(std::span<const double> scores, std::span<const int> labels) {
  const auto roc = RocCurve(scores, labels);
  auto gap = [](const RocPoint& p) { return (1.0 - p.tpr) - p.fpr; };
  for (std::size_t i = 1; i < roc.size(); ++i) {
    const double g0 = gap(roc[i - 1]);
    const double g1 = gap(roc[i]);
    if (g1 > 0) continue;
    if (g0 == g1) return roc[i].fpr;
    const double u = g0 / (g0 - g1);
    return roc[i - 1].fpr + u * (roc[i].fpr - roc[i - 1].fpr);
  }
  return roc.back().fpr;
}

struct BinaryMetrics {
  double bac = 0.0;
  double auc = 0.0;
  double eer = 0.0;
  double threshold = 0.0;
};

// BAC at `threshold` when given, otherwise at the BAC-maximizing threshold.
inline BinaryMetrics ComputeMetrics(std::span<const double> scores, std::span<const int> labels,
                                    std::optional<double> threshold = std::nullopt) {
  BinaryMetrics m;
  if (threshold) {
    m.threshold = *threshold;
    m.bac = BacAt(scores, labels, *threshold);
  } else {
    const auto choice = SelectThresholdWithBac(scores, labels);
    m.threshold = choice.threshold;
    m.bac = choice.bac;
  }
  m.auc = Auc(scores, labels);
  m.eer = Eer(scores, labels);
  return m;
}

struct SubjectMetrics {
  double bac = 0.0;
  double auc = 0.0;
  double eer = 0.0;
  double threshold = 0.0;
  std::size_t n_pairs = 0;
};

struct WeightedMetrics {
  double bac = 0.0;
  double auc = 0.0;
  double eer = 0.0;
};

inline WeightedMetrics WeightedSubjectAverage(const std::map<std::string, SubjectMetrics>& per_subject) {
  Require(!per_subject.empty(), ErrorCode::kInvalidParams, "no subjects to average");
  double total = 0.0;
  for (const auto& [_, m] : per_subject) total += static_cast<double>(m.n_pairs);
  Require(total > 0, ErrorCode::kInvalidParams, "subjects carry no test pairs");
  WeightedMetrics w;
  for (const auto& [_, m] : per_subject) {
    const double wi = static_cast<double>(m.n_pairs) / total;
    w.bac += wi * m.bac;
    w.auc += wi * m.auc;
    w.eer += wi * m.eer;
  }
  return w;
}

}  // namespace ppgtrans::eval

#endif  // PPGTRANS_METRICS_HPP_
