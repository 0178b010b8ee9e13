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

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Uses the seeded 20-subject synthetic corpus.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "ppgtrans/ppgtrans.hpp"

namespace {

using ppgtrans::ErrorCode;
using ppgtrans::PpgTrace;
using Clock = std::chrono::steady_clock;
namespace eval = ppgtrans::eval;
namespace features = ppgtrans::features;
namespace gbdt = ppgtrans::gbdt;
namespace quality = ppgtrans::quality;
namespace stream = ppgtrans::stream;
namespace synth = ppgtrans::synth;

double Seconds(Clock::time_point since) { return std::chrono::duration<double>(Clock::now() - since).count(); }

int failures = 0;

void Report(int id, bool ok, const std::string& detail) {
  std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  failures += ok ? 0 : 1;
}

std::string Fmt(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), fmt, args...);
  return buf;
}

template <typename F>
bool Throws(ErrorCode code, F&& f) {
  try {
    f();
  } catch (const ppgtrans::Error& e) {
    return e.code() == code;
  }
  return false;
}

struct Shared {
  std::vector<PpgTrace> traces;
  ppgtrans::Corpus corpus;
  eval::PipelineConfig cfg;
  eval::LosoResult loso;
  double seconds = 0;

  const gbdt::GbdtModel& Model(const std::string& subject) const {
    for (const auto& f : loso.folds) {
      if (f.split.test_subject == subject) return f.model;
    }
    throw ppgtrans::Error(ErrorCode::kInvalidParams, "no fold for " + subject);
  }
};

void EndToEndLoso(Shared& s) {
  const auto t0 = Clock::now();
  s.traces = synth::GenCorpusTraces(synth::CorpusSpec{});
  s.corpus = ppgtrans::PreprocessCorpus(s.traces, s.cfg.pre, s.cfg.quality);
  s.loso = eval::RunLoso(s.corpus, s.cfg);
  s.seconds = Seconds(t0);
  const auto& w = s.loso.report.weighted;
  const bool trees = s.cfg.gbdt.n_trees == 100 && s.cfg.gbdt.max_depth == 6 && s.cfg.gbdt.learning_rate == 0.1;
  Report(1, trees && w.bac >= 0.90 && w.auc >= 0.95 && s.seconds <= 300,
         Fmt("LOSO on %zu subjects: weighted BAC %.4f (>= 0.90), AUC %.4f (>= 0.95), %.1f s (<= 300)",
             s.corpus.subjects().size(), w.bac, w.auc, s.seconds));
}

void ReplaySweep(const Shared& s) {
  const std::vector<double> offsets{0, 5, 15, 30, 60};
  const auto rows = eval::ReplaySweep(s.corpus, s.cfg, s.loso, offsets);
  std::string detail = "BAC by offset";
  bool monotone = true;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    detail += Fmt(" %gs=%.4f", offsets[k], rows[k].at("bac"));
    if (k > 0) monotone &= rows[k].at("bac") <= rows[k - 1].at("bac") + 0.02;
  }
  const double drop = rows.front().at("bac") - rows.back().at("bac");
  detail += Fmt("; drop %.4f (>= 0.15), nonincreasing within 0.02: %s", drop, monotone ? "yes" : "no");
  Report(2, drop >= 0.15 && monotone, detail);
}

void IntraInter(const Shared& s) {
  const auto subjects = s.corpus.subjects();
  double intra = 0, inter = 0;
  int n_intra = 0, n_inter = 0;
  const double w = s.cfg.pre.window_feat_s;
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    const auto& other = subjects[(i + 1) % subjects.size()];
    const auto* rec = s.corpus.Find(subjects[i], "phone").front();
    for (double start : rec->WindowStarts(w, w)) {
      const auto token = s.corpus.Window({subjects[i], "phone", start}, w, s.cfg.pre);
      if (!token) continue;
      if (const auto own = s.corpus.Window({subjects[i], "band", start}, w, s.cfg.pre)) {
        intra += oracle::Pearson(token->samples, own->samples);
        ++n_intra;
      }
      if (const auto foreign = s.corpus.Window({other, "band", start}, w, s.cfg.pre)) {
        inter += oracle::Pearson(token->samples, foreign->samples);
        ++n_inter;
      }
    }
  }
  intra /= std::max(n_intra, 1);
  inter /= std::max(n_inter, 1);
  Report(3, n_intra > 0 && n_inter > 0 && intra >= 0.75 && intra <= 0.90 && inter <= 0.60,
         Fmt("mean intra-subject Pearson %.4f in [0.75, 0.90] over %d windows, inter-subject %.4f (<= 0.60) over %d",
             intra, n_intra, inter, n_inter));
}

// Every ordered pair of sequences up to length 8 over {0, 1, 2}. The library
// runs on every pair; the enumeration oracle runs once per orbit under
// swapping, reversal and value reflection, which preserve the optimum.
bool DtwSweep(std::string& detail) {
  const auto seqs = oracle::AllSequences(8, 3);
  std::map<std::vector<double>, std::size_t> index;
  for (std::size_t i = 0; i < seqs.size(); ++i) index[seqs[i]] = i;
  std::vector<std::size_t> rev(seqs.size()), refl(seqs.size());
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    auto r = seqs[i];
    std::reverse(r.begin(), r.end());
    rev[i] = index.at(r);
    auto f = seqs[i];
    for (double& v : f) v = 2.0 - v;
    refl[i] = index.at(f);
  }
  std::size_t pairs = 0, orbits = 0, mismatches = 0;
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    for (std::size_t j = 0; j < seqs.size(); ++j) {
      const std::pair<std::size_t, std::size_t> self{i, j};
      const std::pair<std::size_t, std::size_t> orbit[8] = {
          {i, j}, {j, i}, {rev[i], rev[j]}, {rev[j], rev[i]},
          {refl[i], refl[j]}, {refl[j], refl[i]}, {refl[rev[i]], refl[rev[j]]}, {refl[rev[j]], refl[rev[i]]}};
      if (*std::min_element(std::begin(orbit), std::end(orbit)) != self) continue;
      ++orbits;
      const auto want = oracle::DtwEnumerator(seqs[i], seqs[j]).Run();
      std::pair<std::size_t, std::size_t> seen[8];
      std::size_t n_seen = 0;
      for (const auto& p : orbit) {
        if (std::find(seen, seen + n_seen, p) != seen + n_seen) continue;
        seen[n_seen++] = p;
        ++pairs;
        const auto got = features::DtwAlign(seqs[p.first], seqs[p.second]);
        mismatches += got.cost != want.cost || got.path_length != want.length;
      }
    }
  }
  const std::size_t expected = seqs.size() * seqs.size();
  detail += Fmt("DTW %zu/%zu pairs (%zu oracle orbits), %zu mismatches", pairs, expected, orbits, mismatches);
  return pairs == expected && mismatches == 0;
}

bool AucSweep(std::string& detail) {
  std::mt19937_64 rng(41);
  double worst = 0;
  for (int set = 0; set < 100; ++set) {
    const std::size_t n = 20 + rng() % 200;
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    std::uniform_int_distribution<int> grid(0, 30);
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = static_cast<int>(i % 3 == 0 || rng() % 2);
      // Coarse grid forces ties; odd sets use continuous scores.
      scores[i] = set % 2 ? std::uniform_real_distribution<double>(0, 1)(rng) : grid(rng) / 30.0;
      if (labels[i] == 1) scores[i] = std::min(1.0, scores[i] + 0.1);
    }
    labels[0] = 1;
    labels[1] = 0;
    worst = std::max(worst, std::abs(eval::Auc(scores, labels) - oracle::PairwiseAuc(scores, labels)));
  }
  detail += Fmt("; AUC max deviation %.2e over 100 sets", worst);
  return worst <= 1e-9;
}

bool ButterworthGains(const ppgtrans::PreprocessConfig& pre, std::string& detail) {
  const double rate = pre.target_rate;
  const auto filter = ppgtrans::filter::DesignBandpass(pre.band_lo_hz, pre.band_hi_hz, rate, pre.filter_order);
  double worst = 0;
  for (double hz : {0.05, 0.5, 1.0, 2.0, 5.0}) {
    const std::size_t n = static_cast<std::size_t>(1200 * rate);
    const auto x = oracle::Sine(hz, rate, n);
    const double h = oracle::ButterworthMagnitude(hz, pre.band_lo_hz, pre.band_hi_hz, rate, pre.filter_order);
    // Single causal pass from rest, measured once the transient has decayed.
    auto causal = x;
    std::vector<std::array<double, 2>> state(filter.sections().size(), {0.0, 0.0});
    filter.Apply(causal, state);
    const double g1 = oracle::FitAmplitude(causal, hz, rate, n / 2, n);
    // Zero-phase pass squares the magnitude.
    const auto both = filter.FiltFilt(x, ppgtrans::filter::DefaultPadLength(pre.band_lo_hz, rate));
    const double g2 = oracle::FitAmplitude(both, hz, rate, n / 4, 3 * n / 4);
    worst = std::max({worst, std::abs(oracle::ToDb(g1) - oracle::ToDb(h)),
                      std::abs(oracle::ToDb(g2) - oracle::ToDb(h * h))});
    detail += Fmt("; %.2f Hz %.2f dB", hz, oracle::ToDb(g1));
  }
  detail += Fmt("; Butterworth max gain error %.4f dB (<= 0.5)", worst);
  return worst <= 0.5;
}

void OracleSuite(const Shared& s) {
  std::string detail;
  const bool dtw = DtwSweep(detail);
  const bool auc = AucSweep(detail);
  const bool bw = ButterworthGains(s.cfg.pre, detail);
  Report(4, dtw && auc && bw, detail);
}

void QualityScore() {
  const struct {
    quality::QualityMetrics m;
    double want;
  } worked[] = {{{0.2, 0.5, 0.8, 0.9}, 0.88}, {{1.2, 0.5, 0.8, 0.9}, 0.78}, {{0.0, 0.0, 1.0, 1.0}, 1.0}};
  double worst = 0;
  for (const auto& w : worked) worst = std::max(worst, std::abs(quality::ChannelQualityScore(w.m) - w.want));
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> sk(-2.0, 2.0), ku(-1.5, 3.0), rp(0.0, 1.0), tm(-1.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const quality::QualityMetrics m{sk(rng), ku(rng), rp(rng), tm(rng)};
    const double want = oracle::QualityScore(m.skewness, m.excess_kurtosis, m.relative_power, m.template_match);
    worst = std::max(worst, std::abs(quality::ChannelQualityScore(m) - want));
  }
  Report(5, worst <= 1e-12, Fmt("3 worked examples and 1000 random tuples, max deviation %.2e (<= 1e-12)", worst));
}

// Strictly periodic band trace; the artifact lands in the second 12 s block.
void Triage(const Shared& s) {
  const char* names[3] = {"clean periodic -> Clean", "1 s burst -> Weak", "full-window noise -> Heavy"};
  const quality::ArtifactClass want[3] = {quality::ArtifactClass::kClean, quality::ArtifactClass::kWeak,
                                          quality::ArtifactClass::kHeavy};
  int counts[3][3] = {};
  for (int v = 0; v < 100; ++v) {
    std::mt19937_64 rng(1000 + v);
    std::uniform_real_distribution<double> u(0, 1);
    auto p = synth::DrawSubject(55 + 35 * u(rng), 500 + v);
    p.hrv_std_s = 0;
    p.hr_drift_bpm = 0;
    synth::SiteParams site;
    site.device_id = "band";
    site.rate_hz = 100;
    site.noise_std = 0.02;
    site.colored_noise_std = 0.0;
    site.wander_amplitude = 0.1;
    site.transit_delay_s = 0.2;
    const auto trace = synth::GenSubject(p, {site}, 36.0, "x")[0];
    const double block_s = s.cfg.pre.window_ma_s;
    const PpgTrace family[3] = {
        trace,
        synth::InjectArtifact(trace, synth::ArtifactKind::kBurst, block_s + 1.0 + (block_s - 3.0) * u(rng), 1.0, 2.0,
                              static_cast<std::uint64_t>(v)),
        synth::InjectArtifact(trace, synth::ArtifactKind::kBurst, block_s, block_s, 5.0,
                              static_cast<std::uint64_t>(v))};
    for (int k = 0; k < 3; ++k) {
      const auto rec = ppgtrans::PreprocessTrace(family[k], s.cfg.pre, s.cfg.quality);
      ++counts[k][static_cast<int>(rec.blocks[1].cls)];
    }
  }
  bool ok = true;
  std::string detail;
  for (int k = 0; k < 3; ++k) {
    const int agree = counts[k][static_cast<int>(want[k])];
    ok &= agree >= 95;
    detail += Fmt("%s%s %d/100 (Clean %d Weak %d Heavy %d)", k ? "; " : "", names[k], agree, counts[k][0],
                  counts[k][1], counts[k][2]);
  }
  Report(6, ok, detail + "; need >= 95 each");
}

gbdt::Matrix RandomMatrix(std::mt19937_64& rng, std::size_t n, std::size_t cols, std::vector<int>& y) {
  std::normal_distribution<double> g;
  gbdt::Matrix x(n, cols);
  y.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    double t = 0;
    for (std::size_t c = 0; c < cols; ++c) {
      x(i, c) = g(rng);
      t += (c % 3 == 0 ? 1.0 : 0.2) * x(i, c);
    }
    y[i] = t + 0.5 * g(rng) > 0 ? 1 : 0;
  }
  return x;
}

void GbdtProperties(const Shared& s) {
  std::size_t loss_violations = 0;
  for (const auto& f : s.loso.folds) {
    for (std::size_t r = 1; r < f.model.training_loss.size(); ++r) {
      loss_violations += f.model.training_loss[r] > f.model.training_loss[r - 1];
    }
  }

  std::size_t invariance_mismatches = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    std::mt19937_64 rng(seed);
    std::vector<int> y;
    const auto x = RandomMatrix(rng, 200, 21, y);
    auto t = x;
    for (std::size_t i = 0; i < t.rows; ++i) {
      t(i, 0) = std::exp(t(i, 0));
      t(i, 3) = t(i, 3) * t(i, 3) * t(i, 3) + 5.0;
      t(i, 7) = 10.0 * t(i, 7) - 2.0;
    }
    const auto a = gbdt::TrainGbdt(x, y);
    const auto b = gbdt::TrainGbdt(t, y);
    for (std::size_t i = 0; i < x.rows; ++i) invariance_mismatches += a.PredictScore(x.row(i)) != b.PredictScore(t.row(i));
  }

  const auto& fold = s.loso.folds.front();
  const auto path = std::filesystem::temp_directory_path() / "ppgtrans_acceptance_model.txt";
  gbdt::SaveModel(fold.model, path.string());
  const auto loaded = gbdt::LoadModel(path.string());
  std::filesystem::remove(path);
  std::size_t roundtrip_mismatches = 0;
  for (const auto& row : s.loso.test.rows) {
    const auto v = row.values();
    roundtrip_mismatches += fold.model.PredictScore(v) != loaded.PredictScore(v);
  }
  roundtrip_mismatches += loaded.threshold != fold.model.threshold;

  Report(7, loss_violations == 0 && invariance_mismatches == 0 && roundtrip_mismatches == 0,
         Fmt("loss increases %zu over %zu fold models; monotone-transform mismatches %zu over 10 datasets; "
             "save/load mismatches %zu over %zu test rows",
             loss_violations, s.loso.folds.size(), invariance_mismatches, roundtrip_mismatches,
             s.loso.test.rows.size()));
}

void DurationSweep(const Shared& s) {
  const auto rows = eval::DurationSweep(s.corpus, s.cfg, {3, 6});
  const double bac3 = rows[0].at("bac"), bac6 = rows[1].at("bac");
  const bool rejects = Throws(ErrorCode::kDurationTooShort, [&] { eval::DurationSweep(s.corpus, s.cfg, {2}); });
  Report(8, bac6 >= bac3 && rejects,
         Fmt("BAC(6 s) %.4f >= BAC(3 s) %.4f; 2 s request rejected: %s", bac6, bac3, rejects ? "yes" : "no"));
}

void Streaming(const Shared& s) {
  const stream::ModelLookup lookup = [&](const std::string& subject) -> const gbdt::GbdtModel& {
    return s.Model(subject);
  };
  stream::SessionConfig base;
  base.pre = s.cfg.pre;
  base.quality = s.cfg.quality;
  const auto still = stream::RunHarness(s.traces, lookup, base, stream::AdversaryKind::kBaseline);
  bool ok = still.weighted.has_value();
  const double bac0 = still.weighted ? still.weighted->bac : 0.0;
  std::string detail = Fmt("zero-latency BAC %.4f", bac0);
  for (std::uint64_t seed : {1, 2, 3}) {
    stream::SessionConfig sc = base;
    sc.latency = {12.5, 7.5, 0.0};
    sc.seed = seed;
    const auto r = stream::RunHarness(s.traces, lookup, sc, stream::AdversaryKind::kBaseline);
    const double bac = r.weighted ? r.weighted->bac : 0.0;
    ok &= r.weighted.has_value() && std::abs(bac - bac0) <= 0.01 && r.adversary_accept_rate <= r.legit_accept_rate;
    detail += Fmt("; seed %llu: BAC %.4f, legit accept %.4f, adversary accept %.4f",
                  static_cast<unsigned long long>(seed), bac, r.legit_accept_rate, r.adversary_accept_rate);
  }
  Report(9, ok, detail + " (latency 5-20 ms, BAC within 0.01, adversary <= legit)");
}

void PairLatency(const Shared& s) {
  const auto fcfg = s.cfg.Features();
  const auto& fold = s.loso.folds.front();
  const auto subjects = s.corpus.subjects();
  const double w = s.cfg.pre.window_feat_s;
  std::vector<double> ms;
  double sink = 0;
  for (const auto& subject : subjects) {
    const auto* rec = s.corpus.Find(subject, "phone").front();
    for (double start : rec->WindowStarts(w, w)) {
      const auto a = s.corpus.Window({subject, "phone", start}, w, s.cfg.pre);
      const auto b = s.corpus.Window({subject, "band", start}, w, s.cfg.pre);
      if (!a || !b) continue;
      const auto t0 = Clock::now();
      const auto v = features::ExtractPairFeatures(*a, *b, fcfg).values();
      sink += fold.model.PredictScore(v);
      ms.push_back(1000.0 * Seconds(t0));
      if (ms.size() >= 200) break;
    }
    if (ms.size() >= 200) break;
  }
  std::sort(ms.begin(), ms.end());
  double mean = 0;
  for (double v : ms) mean += v / static_cast<double>(ms.size());
  const double worst = ms.empty() ? 1e9 : ms.back();
  Report(10, !ms.empty() && worst <= 50.0 && sink >= 0,
         Fmt("%zu pairs of %g s at %g Hz: mean %.3f ms, median %.3f ms, max %.3f ms (<= 50)", ms.size(), w,
             s.cfg.pre.target_rate, mean, ms.empty() ? 0.0 : ms[ms.size() / 2], worst));
}

}  // namespace

int main() {
  Shared s;
  try {
    EndToEndLoso(s);
    ReplaySweep(s);
    IntraInter(s);
    OracleSuite(s);
    QualityScore();
    Triage(s);
    GbdtProperties(s);
    DurationSweep(s);
    Streaming(s);
    PairLatency(s);
  } catch (const std::exception& e) {
    std::printf("FAIL aborted: %s\n", e.what());
    return 2;
  }
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
