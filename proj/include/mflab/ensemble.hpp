#pragma once

#include "mflab/sde.hpp"
#include "mflab/stats.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace mflab {

inline int default_threads() {
  if (const char* env = std::getenv("THREADS")) {
    const int k = std::atoi(env);
    if (k > 0) return k;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

template <class R>
struct RunOutcome {
  std::optional<R> value;
  std::string error;
};

// Evaluates f(k) for k in [0, runs) on `threads` workers. Results are stored by index, so any
// reduction over them in index order is independent of scheduling.
template <class F>
auto parallel_runs(std::size_t runs, int threads, F f) -> std::vector<RunOutcome<decltype(f(std::size_t{}))>> {
  using R = decltype(f(std::size_t{}));
  std::vector<RunOutcome<R>> out(runs);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < runs;) {
      try {
        out[k].value.emplace(f(k));
      } catch (const std::exception& e) {
        out[k].error = e.what();
      }
    }
  };
  const int nt = std::max(1, std::min<int>(threads, static_cast<int>(runs)));
  if (nt == 1) {
    worker();
    return out;
  }
  std::vector<std::thread> pool;
  for (int i = 0; i < nt; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return out;
}

struct SeedPlan {
  std::uint64_t base_seed = 1;
  std::uint64_t stride = 1;  // 0 repeats the base seed
  std::uint64_t seed(std::size_t k) const { return base_seed + stride * k; }
};

struct SnapshotStatistics {
  double t = 0.0;
  MeanSe I_N, H_N, min_dist;
};

struct EnsembleStatistics {
  std::size_t runs_requested = 0;
  std::size_t runs_ok = 0;
  std::size_t failures = 0;
  std::vector<std::string> failure_messages;
  std::vector<SnapshotStatistics> snapshots;
  // Histogram of log10 of the per-run smallest distance ever observed.
  std::vector<double> histogram_edges;
  std::vector<std::size_t> histogram_counts;
  std::vector<double> collision_deltas{1e-2, 1e-3, 1e-4};
  std::vector<double> collision_fractions;
  double truncation_activation_fraction = 0.0;
  std::vector<TrajectoryRecord> records;  // successful runs in index order
};

inline EnsembleStatistics summarize(std::vector<RunOutcome<TrajectoryRecord>>&& outcomes) {
  EnsembleStatistics st;
  st.runs_requested = outcomes.size();
  for (auto& o : outcomes) {
    if (o.value)
      st.records.push_back(std::move(*o.value));
    else
      st.failure_messages.push_back(o.error);
  }
  st.runs_ok = st.records.size();
  st.failures = st.failure_messages.size();
  if (st.records.empty()) return st;
  const std::size_t ns = st.records.front().snapshots.size();
  for (std::size_t k = 0; k < ns; ++k) {
    std::vector<double> I, H, m;
    for (const auto& r : st.records) {
      I.push_back(r.snapshots[k].diag.I_N);
      H.push_back(r.snapshots[k].diag.H_N);
      m.push_back(r.snapshots[k].diag.min_dist);
    }
    st.snapshots.push_back({st.records.front().snapshots[k].t, mean_se(I), mean_se(H), mean_se(m)});
  }
  for (int e = -10; e <= 2; ++e) st.histogram_edges.push_back(e);
  st.histogram_counts.assign(st.histogram_edges.size() + 1, 0);
  std::size_t activated = 0;
  for (const auto& r : st.records) {
    const double lg = std::log10(r.min_dist_ever);
    std::size_t b = 0;
    while (b < st.histogram_edges.size() && lg >= st.histogram_edges[b]) ++b;
    ++st.histogram_counts[b];
    activated += !r.events.empty() || r.truncation_seen;
  }
  for (double delta : st.collision_deltas) {
    std::size_t hits = 0;
    for (const auto& r : st.records) hits += r.min_dist_ever < delta;
    st.collision_fractions.push_back(double(hits) / st.runs_ok);
  }
  st.truncation_activation_fraction = double(activated) / st.runs_ok;
  return st;
}

inline EnsembleStatistics ensemble(const SdeConfig& cfg, const InitialLaw& law, const PotentialSpec& spec,
                                   const FlowMatrix& M, std::size_t runs, SeedPlan seeds, int threads = 1,
                                   bool store_positions = false) {
  if (runs < 1) throw std::invalid_argument("ensemble: runs >= 1 required");
  cfg.validate();
  auto outcomes = parallel_runs(runs, threads, [&](std::size_t k) {
    SdeConfig c = cfg;
    c.seed = seeds.seed(k);
    return run_trajectory(c, law, spec, M, {}, store_positions);
  });
  return summarize(std::move(outcomes));
}

}  // namespace mflab
