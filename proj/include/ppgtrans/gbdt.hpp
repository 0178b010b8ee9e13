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

// Second-order gradient boosted decision trees for binary logistic loss with
// exact greedy, level-wise split search, plus a versioned text model format.

#ifndef PPGTRANS_GBDT_HPP_
#define PPGTRANS_GBDT_HPP_

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ppgtrans/error.hpp"
#include "ppgtrans/hash.hpp"
#include "ppgtrans/metrics.hpp"

namespace ppgtrans::gbdt {

inline constexpr std::string_view kFormatMagic = "ppgtrans-gbdt";
inline constexpr int kFormatVersion = 1;

struct GbdtConfig {
  int n_trees = 100;
  int max_depth = 6;
  double learning_rate = 0.1;
  double l2_leaf_reg = 1.0;
  int min_samples_leaf = 1;

  void Validate() const {
    Require(n_trees >= 0, ErrorCode::kInvalidConfig, "n_trees must be >= 0");
    Require(max_depth >= 1, ErrorCode::kInvalidConfig, "max_depth must be >= 1");
    Require(learning_rate > 0 && learning_rate <= 1, ErrorCode::kInvalidConfig,
            "learning_rate must lie in (0, 1]");
    Require(l2_leaf_reg >= 0, ErrorCode::kInvalidConfig, "l2_leaf_reg must be >= 0");
    Require(min_samples_leaf >= 1, ErrorCode::kInvalidConfig, "min_samples_leaf must be >= 1");
  }
};

// Row-major dense design matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}

  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(values).subspan(r * cols, cols);
  }
  void AppendRow(std::span<const double> x) {
    if (rows == 0 && cols == 0) cols = x.size();
    Require(x.size() == cols, ErrorCode::kInvalidParams, "row width differs from matrix width");
    values.insert(values.end(), x.begin(), x.end());
    ++rows;
  }
};

struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double weight = 0.0;
  double gain = 0.0;

  bool leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;

  std::size_t LeafIndex(std::span<const double> x) const {
    std::size_t i = 0;
    while (!nodes[i].leaf()) {
      const auto& n = nodes[i];
      i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right);
    }
    return i;
  }
  double Predict(std::span<const double> x) const { return nodes[LeafIndex(x)].weight; }

  int Depth() const {
    std::vector<int> depth(nodes.size(), 0);
    int best = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      best = std::max(best, depth[i]);
      if (!nodes[i].leaf()) {
        depth[static_cast<std::size_t>(nodes[i].left)] = depth[i] + 1;
        depth[static_cast<std::size_t>(nodes[i].right)] = depth[i] + 1;
      }
    }
    return best;
  }
};

inline double Sigmoid(double m) { return 1.0 / (1.0 + std::exp(-m)); }

inline std::string DefaultFeatureHash(std::size_t n_features) {
  Fnv1a h;
  for (std::size_t i = 0; i < n_features; ++i) h.Update("c" + std::to_string(i) + ",");
  return h.hex();
}

struct GbdtModel {
  std::size_t n_features = 0;
  std::string feature_hash;
  GbdtConfig config;
  double base_score = 0.0;
  double threshold = 0.5;
  std::vector<Tree> trees;
  std::vector<double> feature_importance;
  std::vector<double> training_loss;

  double PredictMargin(std::span<const double> x) const {
    Require(x.size() == n_features, ErrorCode::kInvalidParams,
            "feature vector has " + std::to_string(x.size()) + " values, model expects " +
                std::to_string(n_features));
    for (double v : x) {
      Require(std::isfinite(v), ErrorCode::kNonFiniteFeature, "non-finite feature value");
    }
    double m = base_score;
    for (const auto& t : trees) m += config.learning_rate * t.Predict(x);
    return m;
  }

  double PredictScore(std::span<const double> x) const { return Sigmoid(PredictMargin(x)); }

  std::vector<double> PredictScores(const Matrix& X) const {
    std::vector<double> out(X.rows);
    for (std::size_t r = 0; r < X.rows; ++r) out[r] = PredictScore(X.row(r));
    return out;
  }

  bool Accept(std::span<const double> x) const { return PredictScore(x) >= threshold; }

  std::size_t NodeCount() const {
    std::size_t n = 0;
    for (const auto& t : trees) n += t.nodes.size();
    return n;
  }
};

namespace detail {

struct NodeStats {
  double g = 0.0;
  double h = 0.0;
  std::size_t count = 0;
};

struct SplitCandidate {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
};

inline double Score(double g, double h, double lambda) { return g * g / (h + lambda); }

inline double LogLoss(std::span<const double> margin, std::span<const int> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < margin.size(); ++i) {
    // log(1 + e^m) - y m, written to stay finite for large |m|.
    const double m = margin[i];
    const double softplus = m > 0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m));
    s += softplus - (y[i] == 1 ? m : 0.0);
  }
  return s / static_cast<double>(margin.size());
}

// Midpoint between adjacent distinct values; falls back to the upper value
// when rounding collapses the midpoint onto the lower one.
inline double MidThreshold(double a, double b) {
  const double t = a + 0.5 * (b - a);
  return t > a ? t : b;
}

inline constexpr double kMinGain = 1e-12;

}  // namespace detail

inline Tree BuildTree(const Matrix& X, const std::vector<std::vector<std::uint32_t>>& sorted,
                      std::span<const double> grad, std::span<const double> hess,
                      const GbdtConfig& cfg, std::vector<int>& node_of,
                      std::vector<double>& importance) {
  const std::size_t n = X.rows;
  const double lambda = cfg.l2_leaf_reg;
  const auto min_leaf = static_cast<std::size_t>(cfg.min_samples_leaf);

  Tree tree;
  tree.nodes.emplace_back();
  std::vector<detail::NodeStats> stats(1);
  std::fill(node_of.begin(), node_of.end(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    stats[0].g += grad[i];
    stats[0].h += hess[i];
    ++stats[0].count;
  }

  std::vector<int> frontier{0};
  for (int depth = 0; depth < cfg.max_depth && !frontier.empty(); ++depth) {
    std::vector<int> slot_of(tree.nodes.size(), -1);
    for (std::size_t s = 0; s < frontier.size(); ++s) slot_of[static_cast<std::size_t>(frontier[s])] = static_cast<int>(s);
    std::vector<detail::SplitCandidate> best(frontier.size());

    std::vector<detail::NodeStats> left(frontier.size());
    std::vector<double> last(frontier.size());
    std::vector<char> seen(frontier.size());
    for (std::size_t f = 0; f < X.cols; ++f) {
      std::fill(left.begin(), left.end(), detail::NodeStats{});
      std::fill(seen.begin(), seen.end(), 0);
      for (std::uint32_t i : sorted[f]) {
        const int s = slot_of[static_cast<std::size_t>(node_of[i])];
        if (s < 0) continue;
        const auto su = static_cast<std::size_t>(s);
        const double v = X(i, f);
        if (seen[su] && v > last[su]) {
          const auto& tot = stats[static_cast<std::size_t>(frontier[su])];
          const auto& l = left[su];
          if (l.count >= min_leaf && tot.count - l.count >= min_leaf) {
            const double gain =
                0.5 * (detail::Score(l.g, l.h, lambda) +
                       detail::Score(tot.g - l.g, tot.h - l.h, lambda) -
                       detail::Score(tot.g, tot.h, lambda));
            if (gain > best[su].gain) {
              best[su] = {gain, static_cast<int>(f), detail::MidThreshold(last[su], v)};
            }
          }
        }
        left[su].g += grad[i];
        left[su].h += hess[i];
        ++left[su].count;
        last[su] = v;
        seen[su] = 1;
      }
    }

    std::vector<int> next;
    for (std::size_t s = 0; s < frontier.size(); ++s) {
      if (!(best[s].gain > detail::kMinGain)) continue;
      const auto id = static_cast<std::size_t>(frontier[s]);
      const int l = static_cast<int>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      stats.resize(tree.nodes.size());
      auto& node = tree.nodes[id];
      node.feature = best[s].feature;
      node.threshold = best[s].threshold;
      node.gain = best[s].gain;
      node.left = l;
      node.right = l + 1;
      importance[static_cast<std::size_t>(node.feature)] += node.gain;
      next.push_back(l);
      next.push_back(l + 1);
    }
    if (next.empty()) break;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& node = tree.nodes[static_cast<std::size_t>(node_of[i])];
      if (node.leaf()) continue;
      node_of[i] = X(i, static_cast<std::size_t>(node.feature)) < node.threshold ? node.left : node.right;
      auto& st = stats[static_cast<std::size_t>(node_of[i])];
      st.g += grad[i];
      st.h += hess[i];
      ++st.count;
    }
    frontier = std::move(next);
  }

  for (std::size_t id = 0; id < tree.nodes.size(); ++id) {
    if (tree.nodes[id].leaf()) tree.nodes[id].weight = -stats[id].g / (stats[id].h + lambda);
  }
  return tree;
}

// Deterministic for a given input order. The decision threshold is the
// BAC-maximizing cutoff on the training predictions.
inline GbdtModel TrainGbdt(const Matrix& X, std::span<const int> y, const GbdtConfig& cfg = {},
                           std::string feature_hash = {}) {
  cfg.Validate();
  Require(X.rows == y.size(), ErrorCode::kInvalidParams, "feature rows and labels differ in count");
  Require(X.rows > 0 && X.cols > 0, ErrorCode::kSingleClassInput, "empty training set");
  for (double v : X.values) {
    Require(std::isfinite(v), ErrorCode::kNonFiniteFeature, "training features contain NaN or Inf");
  }
  const auto counts = eval::CountClasses(y);
  Require(counts.positives > 0 && counts.negatives > 0, ErrorCode::kSingleClassInput,
          "training labels contain a single class");

  const std::size_t n = X.rows;
  GbdtModel model;
  model.n_features = X.cols;
  model.feature_hash = feature_hash.empty() ? DefaultFeatureHash(X.cols) : std::move(feature_hash);
  model.config = cfg;
  const double prevalence = static_cast<double>(counts.positives) / static_cast<double>(n);
  model.base_score = std::log(prevalence / (1.0 - prevalence));
  model.feature_importance.assign(X.cols, 0.0);

  std::vector<std::vector<std::uint32_t>> sorted(X.cols);
  for (std::size_t f = 0; f < X.cols; ++f) {
    auto& idx = sorted[f];
    idx.resize(n);
    std::iota(idx.begin(), idx.end(), 0U);
    std::stable_sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) {
      return X(a, f) < X(b, f);
    });
  }

  std::vector<double> margin(n, model.base_score);
  std::vector<double> grad(n);
  std::vector<double> hess(n);
  std::vector<int> node_of(n, 0);
  for (int round = 0; round < cfg.n_trees; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = Sigmoid(margin[i]);
      grad[i] = p - (y[i] == 1 ? 1.0 : 0.0);
      hess[i] = std::max(p * (1.0 - p), 1e-16);
    }
    Tree tree = BuildTree(X, sorted, grad, hess, cfg, node_of, model.feature_importance);
    for (std::size_t i = 0; i < n; ++i) {
      margin[i] += cfg.learning_rate * tree.nodes[static_cast<std::size_t>(node_of[i])].weight;
    }
    model.trees.push_back(std::move(tree));
    model.training_loss.push_back(detail::LogLoss(margin, y));
  }

  std::vector<double> scores(n);
  for (std::size_t i = 0; i < n; ++i) scores[i] = Sigmoid(margin[i]);
  model.threshold = eval::SelectThreshold(scores, y);
  return model;
}

namespace detail {

inline std::string FormatDouble(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

inline double ParseDouble(std::string_view s) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  Require(r.ec == std::errc{} && r.ptr == s.data() + s.size(), ErrorCode::kCorruptModelFile,
          "bad number '" + std::string(s) + "' in model file");
  return v;
}

inline long long ParseInt(std::string_view s) {
  long long v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  Require(r.ec == std::errc{} && r.ptr == s.data() + s.size(), ErrorCode::kCorruptModelFile,
          "bad integer '" + std::string(s) + "' in model file");
  return v;
}

class TokenReader {
 public:
  explicit TokenReader(std::istream& in) : in_(in) {}

  std::string Next() {
    std::string t;
    Require(static_cast<bool>(in_ >> t), ErrorCode::kCorruptModelFile, "model file ends early");
    return t;
  }
  void Expect(std::string_view word) {
    const std::string t = Next();
    Require(t == word, ErrorCode::kCorruptModelFile,
            "expected '" + std::string(word) + "' in model file, found '" + t + "'");
  }
  double Double() { return ParseDouble(Next()); }
  long long Int() { return ParseInt(Next()); }

 private:
  std::istream& in_;
};

}  // namespace detail

inline void WriteModel(const GbdtModel& m, std::ostream& out) {
  using detail::FormatDouble;
  out << kFormatMagic << ' ' << kFormatVersion << '\n';
  out << "n_features " << m.n_features << '\n';
  out << "feature_hash " << m.feature_hash << '\n';
  out << "config n_trees " << m.config.n_trees << " max_depth " << m.config.max_depth
      << " learning_rate " << FormatDouble(m.config.learning_rate) << " l2_leaf_reg "
      << FormatDouble(m.config.l2_leaf_reg) << " min_samples_leaf " << m.config.min_samples_leaf
      << '\n';
  out << "base_score " << FormatDouble(m.base_score) << '\n';
  out << "threshold " << FormatDouble(m.threshold) << '\n';
  out << "importance";
  for (double v : m.feature_importance) out << ' ' << FormatDouble(v);
  out << '\n';
  out << "training_loss " << m.training_loss.size();
  for (double v : m.training_loss) out << ' ' << FormatDouble(v);
  out << '\n';
  out << "trees " << m.trees.size() << '\n';
  for (std::size_t t = 0; t < m.trees.size(); ++t) {
    out << "tree " << t << ' ' << m.trees[t].nodes.size() << '\n';
    for (std::size_t i = 0; i < m.trees[t].nodes.size(); ++i) {
      const auto& n = m.trees[t].nodes[i];
      if (n.leaf()) {
        out << "  " << i << " leaf " << FormatDouble(n.weight) << '\n';
      } else {
        out << "  " << i << " split " << n.feature << ' ' << FormatDouble(n.threshold) << ' '
            << n.left << ' ' << n.right << ' ' << FormatDouble(n.gain) << '\n';
      }
    }
  }
  out << "end\n";
}

inline std::string SerializeModel(const GbdtModel& m) {
  std::ostringstream out;
  WriteModel(m, out);
  return out.str();
}

inline GbdtModel ReadModel(std::istream& in) {
  detail::TokenReader r(in);
  r.Expect(kFormatMagic);
  const long long version = r.Int();
  Require(version == kFormatVersion, ErrorCode::kVersionMismatch,
          "model format version " + std::to_string(version) + " is not supported (expected " +
              std::to_string(kFormatVersion) + ")");
  GbdtModel m;
  r.Expect("n_features");
  const long long nf = r.Int();
  Require(nf > 0 && nf < 1'000'000, ErrorCode::kCorruptModelFile, "bad feature count");
  m.n_features = static_cast<std::size_t>(nf);
  r.Expect("feature_hash");
  m.feature_hash = r.Next();
  r.Expect("config");
  r.Expect("n_trees");
  m.config.n_trees = static_cast<int>(r.Int());
  r.Expect("max_depth");
  m.config.max_depth = static_cast<int>(r.Int());
  r.Expect("learning_rate");
  m.config.learning_rate = r.Double();
  r.Expect("l2_leaf_reg");
  m.config.l2_leaf_reg = r.Double();
  r.Expect("min_samples_leaf");
  m.config.min_samples_leaf = static_cast<int>(r.Int());
  r.Expect("base_score");
  m.base_score = r.Double();
  r.Expect("threshold");
  m.threshold = r.Double();
  r.Expect("importance");
  m.feature_importance.resize(m.n_features);
  for (double& v : m.feature_importance) v = r.Double();
  r.Expect("training_loss");
  const long long n_loss = r.Int();
  Require(n_loss >= 0 && n_loss < 1'000'000, ErrorCode::kCorruptModelFile, "bad loss count");
  m.training_loss.resize(static_cast<std::size_t>(n_loss));
  for (double& v : m.training_loss) v = r.Double();
  r.Expect("trees");
  const long long n_trees = r.Int();
  Require(n_trees >= 0 && n_trees < 1'000'000, ErrorCode::kCorruptModelFile, "bad tree count");
  for (long long t = 0; t < n_trees; ++t) {
    r.Expect("tree");
    Require(r.Int() == t, ErrorCode::kCorruptModelFile, "trees out of order");
    const long long n_nodes = r.Int();
    Require(n_nodes > 0 && n_nodes < 1'000'000, ErrorCode::kCorruptModelFile, "bad node count");
    Tree tree;
    tree.nodes.resize(static_cast<std::size_t>(n_nodes));
    for (long long i = 0; i < n_nodes; ++i) {
      Require(r.Int() == i, ErrorCode::kCorruptModelFile, "nodes out of order");
      auto& node = tree.nodes[static_cast<std::size_t>(i)];
      const std::string kind = r.Next();
      if (kind == "leaf") {
        node.weight = r.Double();
      } else if (kind == "split") {
        node.feature = static_cast<int>(r.Int());
        node.threshold = r.Double();
        node.left = static_cast<int>(r.Int());
        node.right = static_cast<int>(r.Int());
        node.gain = r.Double();
        Require(node.feature >= 0 && static_cast<std::size_t>(node.feature) < m.n_features &&
                    node.left > i && node.right > i && node.left < n_nodes && node.right < n_nodes,
                ErrorCode::kCorruptModelFile, "split node references are out of range");
      } else {
        throw Error(ErrorCode::kCorruptModelFile, "unknown node kind '" + kind + "'");
      }
    }
    m.trees.push_back(std::move(tree));
  }
  r.Expect("end");
  return m;
}

inline GbdtModel DeserializeModel(const std::string& text) {
  std::istringstream in(text);
  return ReadModel(in);
}

inline void SaveModel(const GbdtModel& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  Require(static_cast<bool>(out), ErrorCode::kIo, "cannot write model file " + path);
  WriteModel(m, out);
  Require(static_cast<bool>(out), ErrorCode::kIo, "failed writing model file " + path);
}

inline GbdtModel LoadModel(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  Require(static_cast<bool>(in), ErrorCode::kIo, "cannot open model file " + path);
  return ReadModel(in);
}

}  // namespace ppgtrans::gbdt

#endif  // PPGTRANS_GBDT_HPP_
