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

// In-process session simulator: producer threads chunk raw traces and push
// them through a seeded latency/jitter/drop transport; the consumer orders
// messages in virtual time, aligns streams on source timestamps, and emits
// one accept/reject decision per collection window.

#ifndef PPGTRANS_STREAM_HPP_
#define PPGTRANS_STREAM_HPP_

#include <algorithm>
#include <cmath>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "ppgtrans/corpus.hpp"
#include "ppgtrans/error.hpp"
#include "ppgtrans/eval.hpp"
#include "ppgtrans/features.hpp"
#include "ppgtrans/gbdt.hpp"
#include "ppgtrans/metrics.hpp"
#include "ppgtrans/synth.hpp"

namespace ppgtrans::stream {

struct LatencyModel {
  double fixed_delay_ms = 0.0;
  // Half-width of the uniform jitter added to the fixed delay.
  double jitter_ms = 0.0;
  double drop_prob = 0.0;

  void Validate() const {
    Require(fixed_delay_ms >= 0, ErrorCode::kInvalidConfig, "fixed_delay_ms must be >= 0");
    Require(jitter_ms >= 0, ErrorCode::kInvalidConfig, "jitter_ms must be >= 0");
    Require(drop_prob >= 0 && drop_prob < 1, ErrorCode::kInvalidConfig, "drop_prob must lie in [0, 1)");
  }
};

struct Chunk {
  std::size_t stream = 0;
  std::uint64_t seq = 0;
  bool end_of_stream = false;
  double arrival_ms = 0.0;
  std::vector<double> t_ms;
  std::vector<std::vector<double>> values;  // [sample][channel]
};

// Unbounded multi-producer queue that reports exhaustion once every
// producer has closed.
template <typename T>
class MessageQueue {
 public:
  explicit MessageQueue(std::size_t producers) : open_(producers) {}

  void Push(T item) {
    {
      std::lock_guard lock(mu_);
      items_.push_back(std::move(item));
    }
    cv_.notify_one();
  }
  void Close() {
    {
      std::lock_guard lock(mu_);
      --open_;
    }
    cv_.notify_all();
  }
  std::optional<T> Pop() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return !items_.empty() || open_ == 0; });
    if (items_.empty()) return std::nullopt;
    T item = std::move(items_.front());
    items_.pop_front();
    return item;
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<T> items_;
  std::size_t open_;
};

inline void ProduceStream(const PpgTrace& trace, std::size_t stream, double chunk_ms,
                          const LatencyModel& lat, std::uint64_t seed, MessageQueue<Chunk>& q) {
  std::mt19937_64 rng = synth::Stream(seed, 500 + stream);
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  const double t0 = trace.timestamps_ms.front();
  std::uint64_t seq = 0;
  double last_arrival = 0.0;
  for (std::size_t i = 0; i < trace.size();) {
    Chunk c;
    c.stream = stream;
    c.seq = seq;
    const double end = t0 + static_cast<double>(seq + 1) * chunk_ms;
    while (i < trace.size() && trace.timestamps_ms[i] < end) {
      c.t_ms.push_back(trace.timestamps_ms[i]);
      std::vector<double> row;
      for (const auto& ch : trace.channels) row.push_back(ch[i]);
      c.values.push_back(std::move(row));
      ++i;
    }
    const double delay = std::max(0.0, lat.fixed_delay_ms + lat.jitter_ms * jitter(rng));
    const bool dropped = coin(rng) < lat.drop_prob;
    ++seq;
    if (c.t_ms.empty() || dropped) continue;
    c.arrival_ms = c.t_ms.back() + delay;
    last_arrival = std::max(last_arrival, c.arrival_ms);
    q.Push(std::move(c));
  }
  Chunk eos;
  eos.stream = stream;
  eos.seq = seq;
  eos.end_of_stream = true;
  eos.arrival_ms = last_arrival;
  q.Push(std::move(eos));
  q.Close();
}

// Runs one producer thread per trace and returns every delivered message in
// virtual arrival order (ties by stream, then sequence number).
inline std::vector<Chunk> Transport(const std::vector<const PpgTrace*>& traces, double chunk_ms,
                                    const LatencyModel& lat, std::uint64_t seed) {
  lat.Validate();
  Require(chunk_ms > 0, ErrorCode::kInvalidConfig, "chunk length must be positive");
  MessageQueue<Chunk> q(traces.size());
  std::vector<Chunk> received;
  {
    std::vector<std::jthread> producers;
    for (std::size_t s = 0; s < traces.size(); ++s) {
      producers.emplace_back([&, s] { ProduceStream(*traces[s], s, chunk_ms, lat, seed, q); });
    }
    while (auto c = q.Pop()) received.push_back(std::move(*c));
  }
  std::sort(received.begin(), received.end(), [](const Chunk& a, const Chunk& b) {
    return std::tie(a.arrival_ms, a.stream, a.seq) < std::tie(b.arrival_ms, b.stream, b.seq);
  });
  return received;
}

// Per-stream view rebuilt from delivered chunks.
struct ReceivedStream {
  PpgTrace trace;
  double t0_ms = 0.0;
  std::uint64_t total_chunks = 0;
  std::map<std::uint64_t, double> chunk_arrival;  // seq -> arrival
  std::map<std::uint64_t, double> chunk_end;      // seq -> last sample time

  double end_ms() const { return trace.timestamps_ms.empty() ? t0_ms : trace.timestamps_ms.back(); }
};

inline ReceivedStream Reassemble(const std::vector<Chunk>& chunks, std::size_t stream,
                                 const PpgTrace& meta_source, double chunk_ms) {
  ReceivedStream out;
  out.t0_ms = meta_source.timestamps_ms.front();
  PpgTrace& tr = out.trace;
  tr.subject_id = meta_source.subject_id;
  tr.device_id = meta_source.device_id;
  tr.device_kind = meta_source.device_kind;
  tr.tag = meta_source.tag;
  tr.nominal_rate = meta_source.nominal_rate;
  tr.polarity_inverted = meta_source.polarity_inverted;
  tr.channels.assign(meta_source.channels.size(), {});
  std::vector<const Chunk*> mine;
  for (const auto& c : chunks) {
    if (c.stream != stream) continue;
    if (c.end_of_stream) {
      out.total_chunks = c.seq;
      continue;
    }
    mine.push_back(&c);
  }
  std::sort(mine.begin(), mine.end(), [](const Chunk* a, const Chunk* b) { return a->seq < b->seq; });
  for (const Chunk* c : mine) {
    out.chunk_arrival[c->seq] = c->arrival_ms;
    out.chunk_end[c->seq] = c->t_ms.back();
    for (std::size_t i = 0; i < c->t_ms.size(); ++i) {
      tr.timestamps_ms.push_back(c->t_ms[i]);
      for (std::size_t ch = 0; ch < c->values[i].size(); ++ch) tr.channels[ch].push_back(c->values[i][ch]);
    }
  }
  (void)chunk_ms;
  return out;
}

struct Coverage {
  bool complete = false;
  double transport_ms = 0.0;
};

// A window is covered when every chunk overlapping it arrived and the
// stream's samples extend to the window end (within one sample).
inline Coverage WindowCoverage(const ReceivedStream& s, double start_ms, double end_ms, double chunk_ms) {
  Coverage cov;
  const double slack = 1000.0 / s.trace.nominal_rate;
  if (start_ms < s.t0_ms - 1e-6 || end_ms > s.end_ms() + slack) return cov;
  const auto first = static_cast<std::uint64_t>(std::max(0.0, std::floor((start_ms - s.t0_ms) / chunk_ms)));
  const auto last = static_cast<std::uint64_t>(std::max(0.0, std::ceil((end_ms - s.t0_ms) / chunk_ms) - 1));
  for (std::uint64_t k = first; k <= last && k < s.total_chunks; ++k) {
    auto it = s.chunk_arrival.find(k);
    if (it == s.chunk_arrival.end()) return cov;
    cov.transport_ms = std::max(cov.transport_ms, it->second - s.chunk_end.at(k));
  }
  cov.complete = true;
  return cov;
}

enum class Reason { kOk, kMaRejected, kInsufficientData };

inline std::string_view ToString(Reason r) {
  switch (r) {
    case Reason::kOk: return "ok";
    case Reason::kMaRejected: return "ma_rejected";
    case Reason::kInsufficientData: return "insufficient_data";
  }
  return "unknown";
}

enum class AdversaryKind { kNone, kBaseline, kReplay };

inline std::string_view ToString(AdversaryKind a) {
  switch (a) {
    case AdversaryKind::kNone: return "none";
    case AdversaryKind::kBaseline: return "baseline";
    case AdversaryKind::kReplay: return "replay";
  }
  return "unknown";
}

inline AdversaryKind ParseAdversary(std::string_view s) {
  if (s == "none") return AdversaryKind::kNone;
  if (s == "baseline") return AdversaryKind::kBaseline;
  if (s == "replay") return AdversaryKind::kReplay;
  throw Error(ErrorCode::kInvalidConfig, "adversary must be none, baseline or replay");
}

struct SessionConfig {
  LatencyModel latency;
  double chunk_ms = 500.0;
  double window_s = 6.0;
  double hop_s = 6.0;
  // Simulated per-window compute cost in virtual time.
  double compute_ms = 10.0;
  std::uint64_t seed = 1;
  // Aggregated decision: accept when >= k of the last n windows accepted.
  int aggregate_k = 1;
  int aggregate_n = 1;
  PreprocessConfig pre;
  quality::QualityConfig quality;

  void Validate() const {
    latency.Validate();
    pre.Validate();
    Require(chunk_ms > 0 && window_s > 0 && hop_s > 0 && compute_ms >= 0, ErrorCode::kInvalidConfig,
            "chunk, window and hop lengths must be positive");
    Require(aggregate_n >= 1 && aggregate_k >= 1 && aggregate_k <= aggregate_n,
            ErrorCode::kInvalidConfig, "need 1 <= aggregate_k <= aggregate_n");
  }
};

struct SessionDecision {
  std::string subject_id;         // claimed identity (token owner)
  std::string wearable_device;
  std::string wearable_source;    // subject whose wearable data was presented
  AdversaryKind adversary = AdversaryKind::kNone;
  double window_start_ms = 0.0;
  double window_end_ms = 0.0;
  double score = 0.0;
  double threshold = 0.5;
  bool accept = false;
  bool aggregate_accept = false;
  Reason reason = Reason::kInsufficientData;
  double transport_ms = 0.0;
  double latency_ms = 0.0;

  nlohmann::ordered_json ToJson() const {
    return {{"subject", subject_id},
            {"wearable", wearable_device},
            {"wearable_source", wearable_source},
            {"adversary", ToString(adversary)},
            {"window_start_ms", window_start_ms},
            {"window_end_ms", window_end_ms},
            {"score", score},
            {"threshold", threshold},
            {"decision", accept ? "accept" : "reject"},
            {"aggregate_decision", aggregate_accept ? "accept" : "reject"},
            {"reason", ToString(reason)},
            {"transport_ms", transport_ms},
            {"latency_ms", latency_ms}};
  }
};

// Wearable stream of a replay attacker: the recording from `offset_s` later,
// relabeled to start at the original time.
inline PpgTrace ReplayShift(const PpgTrace& trace, double offset_s) {
  Require(offset_s >= 0, ErrorCode::kInvalidParams, "replay offset must be >= 0");
  PpgTrace out = trace;
  out.timestamps_ms.clear();
  for (auto& ch : out.channels) ch.clear();
  const double shift = offset_s * 1000.0;
  const double t0 = trace.timestamps_ms.front();
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (trace.timestamps_ms[i] < t0 + shift) continue;
    out.timestamps_ms.push_back(trace.timestamps_ms[i] - shift);
    for (std::size_t c = 0; c < trace.channels.size(); ++c) out.channels[c].push_back(trace.channels[c][i]);
  }
  return out;
}

// One session: a token stream and wearable streams (already substituted for
// any adversary). Windows follow the epoch-anchored grid of the offline
// pipeline so that complete sessions reproduce offline positives.
inline std::vector<SessionDecision> RunSession(const PpgTrace& token, const std::vector<PpgTrace>& wearables,
                                               const gbdt::GbdtModel& model, const SessionConfig& cfg,
                                               AdversaryKind adversary = AdversaryKind::kNone,
                                               const std::string& claimed_subject = {}) {
  cfg.Validate();
  std::vector<const PpgTrace*> all{&token};
  for (const auto& w : wearables) all.push_back(&w);
  const auto chunks = Transport(all, cfg.chunk_ms, cfg.latency, cfg.seed);

  std::vector<ReceivedStream> streams;
  std::vector<std::optional<Recording>> recs;
  for (std::size_t s = 0; s < all.size(); ++s) {
    streams.push_back(Reassemble(chunks, s, *all[s], cfg.chunk_ms));
    std::optional<Recording> rec;
    try {
      if (streams.back().trace.size() >= 2) rec = PreprocessTrace(streams.back().trace, cfg.pre, cfg.quality);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kTraceTooShort && e.code() != ErrorCode::kEmptyInput) throw;
    }
    recs.push_back(std::move(rec));
  }

  features::FeatureConfig fcfg = features::FeatureConfig::ForWindow(cfg.window_s);
  fcfg.beats = cfg.quality;
  const double window_ms = cfg.window_s * 1000.0;
  const double hop_ms = cfg.hop_s * 1000.0;
  const double t_begin = std::ceil(token.timestamps_ms.front() / hop_ms - 1e-9) * hop_ms;
  const double t_end = token.timestamps_ms.back();

  std::vector<SessionDecision> out;
  for (std::size_t w = 1; w < all.size(); ++w) {
    std::deque<bool> recent;
    for (double t = t_begin; t + window_ms <= t_end + 1e-6; t += hop_ms) {
      SessionDecision d;
      d.subject_id = claimed_subject.empty() ? token.subject_id : claimed_subject;
      d.wearable_device = all[w]->device_id;
      d.wearable_source = all[w]->subject_id;
      d.adversary = adversary;
      d.window_start_ms = t;
      d.window_end_ms = t + window_ms;
      d.threshold = model.threshold;
      const Coverage ct = WindowCoverage(streams[0], t, t + window_ms, cfg.chunk_ms);
      const Coverage cw = WindowCoverage(streams[w], t, t + window_ms, cfg.chunk_ms);
      d.transport_ms = std::max(ct.transport_ms, cw.transport_ms);
      if (!ct.complete || !cw.complete || !recs[0] || !recs[w]) {
        d.reason = Reason::kInsufficientData;
      } else {
        const auto a = recs[0]->Window(t, cfg.window_s, cfg.pre);
        const auto b = recs[w]->Window(t, cfg.window_s, cfg.pre);
        d.reason = Reason::kMaRejected;
        if (a && b) {
          try {
            const auto fv = features::ExtractPairFeatures(*a, *b, fcfg);
            d.score = model.PredictScore(fv.values());
            d.reason = Reason::kOk;
          } catch (const Error& e) {
            if (e.code() != ErrorCode::kNoBeats && e.code() != ErrorCode::kFlatSignal &&
                e.code() != ErrorCode::kNonFiniteFeature) {
              throw;
            }
          }
        }
      }
      d.accept = d.reason == Reason::kOk && d.score >= model.threshold;
      recent.push_back(d.accept);
      if (recent.size() > static_cast<std::size_t>(cfg.aggregate_n)) recent.pop_front();
      d.aggregate_accept = std::count(recent.begin(), recent.end(), true) >= cfg.aggregate_k;
      d.latency_ms = window_ms + d.transport_ms + cfg.compute_ms;
      out.push_back(std::move(d));
    }
  }
  return out;
}

using ModelLookup = std::function<const gbdt::GbdtModel&(const std::string& subject)>;

struct HarnessResult {
  std::vector<SessionDecision> decisions;
  double legit_accept_rate = 0.0;
  double adversary_accept_rate = 0.0;
  std::optional<eval::WeightedMetrics> weighted;
  std::map<std::string, eval::SubjectMetrics> per_subject;
};

// Groups raw traces by subject; each subject needs exactly one token trace
// per tag.
struct SubjectTraces {
  const PpgTrace* token = nullptr;
  std::vector<const PpgTrace*> wearables;
};

inline std::map<std::string, SubjectTraces> GroupTraces(const std::vector<PpgTrace>& traces,
                                                        const std::string& tag = {}) {
  std::map<std::string, SubjectTraces> by;
  for (const auto& t : traces) {
    if (!tag.empty() && t.tag != tag) continue;
    auto& g = by[t.subject_id];
    if (t.device_kind == DeviceKind::kToken) {
      if (g.token == nullptr) g.token = &t;
    } else {
      g.wearables.push_back(&t);
    }
  }
  return by;
}

// Legitimate session per subject plus, when requested, an adversarial
// session: baseline presents the next subject's wearables, replay presents
// the subject's own wearables shifted by `offset_s`. Scores use the model
// returned for the claimed subject; BAC treats legitimate windows as
// positives and adversarial windows as negatives.
inline HarnessResult RunHarness(const std::vector<PpgTrace>& traces, const ModelLookup& models,
                                const SessionConfig& cfg, AdversaryKind adversary = AdversaryKind::kNone,
                                double offset_s = 0.0, const std::string& tag = {}) {
  const auto groups = GroupTraces(traces, tag);
  std::vector<std::string> subjects;
  for (const auto& [s, g] : groups) {
    if (g.token != nullptr && !g.wearables.empty()) subjects.push_back(s);
  }
  Require(!subjects.empty(), ErrorCode::kNoTokenDevice, "no subject has both token and wearable traces");
  HarnessResult res;
  std::size_t legit_ok = 0, legit_acc = 0, adv_ok = 0, adv_acc = 0;
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    const auto& s = subjects[i];
    const auto& g = groups.at(s);
    const auto& model = models(s);
    std::vector<PpgTrace> own;
    for (const auto* w : g.wearables) own.push_back(*w);
    auto legit = RunSession(*g.token, own, model, cfg, AdversaryKind::kNone, s);

    std::vector<SessionDecision> attack;
    if (adversary == AdversaryKind::kBaseline) {
      Require(subjects.size() >= 2, ErrorCode::kTooFewSubjects, "baseline adversary needs two subjects");
      const auto& other = groups.at(subjects[(i + 1) % subjects.size()]);
      std::vector<PpgTrace> foreign;
      for (const auto* w : other.wearables) foreign.push_back(*w);
      attack = RunSession(*g.token, foreign, model, cfg, adversary, s);
    } else if (adversary == AdversaryKind::kReplay) {
      std::vector<PpgTrace> shifted;
      for (const auto* w : g.wearables) shifted.push_back(ReplayShift(*w, offset_s));
      attack = RunSession(*g.token, shifted, model, cfg, adversary, s);
    }

    std::vector<double> scores;
    std::vector<int> labels;
    for (const auto& d : legit) {
      if (d.reason != Reason::kOk) continue;
      ++legit_ok;
      legit_acc += d.accept;
      scores.push_back(d.score);
      labels.push_back(1);
    }
    for (const auto& d : attack) {
      if (d.reason != Reason::kOk) continue;
      ++adv_ok;
      adv_acc += d.accept;
      scores.push_back(d.score);
      labels.push_back(0);
    }
    const auto counts = eval::CountClasses(labels);
    if (counts.positives > 0 && counts.negatives > 0) {
      const auto m = eval::ComputeMetrics(scores, labels, model.threshold);
      res.per_subject[s] = {m.bac, m.auc, m.eer, m.threshold, scores.size()};
    }
    for (auto& d : legit) res.decisions.push_back(std::move(d));
    for (auto& d : attack) res.decisions.push_back(std::move(d));
  }
  res.legit_accept_rate = legit_ok ? static_cast<double>(legit_acc) / static_cast<double>(legit_ok) : 0.0;
  res.adversary_accept_rate = adv_ok ? static_cast<double>(adv_acc) / static_cast<double>(adv_ok) : 0.0;
  if (!res.per_subject.empty()) res.weighted = eval::WeightedSubjectAverage(res.per_subject);
  return res;
}

inline std::string SessionLog(const std::vector<SessionDecision>& decisions) {
  std::string out;
  for (const auto& d : decisions) out += d.ToJson().dump() + "\n";
  return out;
}

}  // namespace ppgtrans::stream

#endif  // PPGTRANS_STREAM_HPP_
