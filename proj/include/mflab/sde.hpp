#pragma once

#include "mflab/flow_matrix.hpp"
#include "mflab/initial_law.hpp"
#include "mflab/potentials.hpp"
#include "mflab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mflab {

enum class EpsPolicy { Fixed, HalveOnApproach };

struct SdeConfig {
  std::size_t N = 64;
  double sigma = 1.0;
  double dt = 1e-3;
  double T = 1.0;
  double eps0 = 1e-3;
  EpsPolicy eps_policy = EpsPolicy::HalveOnApproach;
  std::uint64_t seed = 1;
  std::vector<double> snapshot_times;  // T is always included; empty means {0, T}
  // Each increment sums this many unit normals keyed by step * noise_substeps + j, so a run with
  // (dt, 2) shares its Brownian path with a run with (dt / 2, 1).
  int noise_substeps = 1;

  void validate() const {
    if (noise_substeps < 1) throw std::invalid_argument("sde: noise_substeps >= 1 required");
    if (N < 2) throw std::invalid_argument("sde: N >= 2 required");
    if (!(sigma >= 0.0)) throw std::invalid_argument("sde: sigma >= 0 required");
    if (!(dt > 0.0)) throw std::invalid_argument("sde: dt > 0 required");
    if (!(T >= 0.0)) throw std::invalid_argument("sde: T >= 0 required");
    if (T > 0.0 && dt > T) throw std::invalid_argument("sde: dt <= T required");
    if (!(eps0 > 0.0)) throw std::invalid_argument("sde: eps0 > 0 required");
    for (double t : snapshot_times)
      if (t < 0.0 || t > T) throw std::invalid_argument("sde: snapshot times must lie in [0, T]");
  }

  std::vector<double> resolved_snapshots() const {
    std::vector<double> ts = snapshot_times.empty() ? std::vector<double>{0.0, T} : snapshot_times;
    ts.push_back(T);
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    return ts;
  }
};

struct ParticleState {
  int d = 3;
  std::size_t N = 0;
  std::vector<double> x;  // N x d, row-major
  double t = 0.0;
  std::uint64_t step = 0;
  std::uint64_t seed = 0;
  double eps = 1e-3;
  double min_dist = 0.0;
  bool truncation_seen = false;

  std::span<const double> particle(std::size_t i) const { return {x.data() + i * d, static_cast<std::size_t>(d)}; }
};

namespace detail {

// Smallest pairwise distance by direct O(N^2) scan.
inline double min_pair_distance(const std::vector<double>& x, std::size_t N, int d) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < N; ++i) {
    const double* xi = x.data() + i * d;
    for (std::size_t j = i + 1; j < N; ++j) {
      const double* xj = x.data() + j * d;
      double r2 = 0.0;
      for (int a = 0; a < d; ++a) {
        const double dx = xi[a] - xj[a];
        r2 += dx * dx;
      }
      best = std::min(best, r2);
    }
  }
  return std::sqrt(best);
}

inline std::string dump_state(const ParticleState& s, const std::string& why) {
  std::ostringstream os;
  os.precision(17);
  os << "sde: " << why << " at step " << s.step << ", t=" << s.t << ", eps=" << s.eps << ", min_dist=" << s.min_dist
     << ", seed=" << s.seed;
  for (std::size_t i = 0; i < s.N; ++i) {
    bool bad = false;
    for (int a = 0; a < s.d; ++a) bad |= !std::isfinite(s.x[i * s.d + a]);
    if (bad) {
      os << "; first non-finite particle " << i << " = (";
      for (int a = 0; a < s.d; ++a) os << (a ? ", " : "") << s.x[i * s.d + a];
      os << ")";
      break;
    }
  }
  return os.str();
}

}  // namespace detail

// Draws N iid pairwise-distinct particles; eps = min(eps0, min pairwise distance / 2).
inline ParticleState init_particles(const InitialLaw& law, std::size_t N, std::uint64_t seed, int d = 3,
                                    double eps0 = 1e-3) {
  if (N < 1) throw std::invalid_argument("init_particles: N >= 1 required");
  law.validate(d);
  const CounterRng rng(seed, 1);
  ParticleState s;
  s.d = d;
  s.N = N;
  s.seed = seed;
  s.x.resize(N * d);
  std::vector<std::uint64_t> attempt(N, 0);
  for (std::size_t i = 0; i < N; ++i) {
    const auto p = law.draw(d, rng, i, 0);
    std::copy(p.begin(), p.end(), s.x.begin() + i * d);
  }
  // Exact coincidences have probability zero; redraw the later particle if one occurs.
  for (bool clean = false; !clean;) {
    clean = true;
    for (std::size_t i = 0; i < N && clean; ++i)
      for (std::size_t j = i + 1; j < N; ++j)
        if (std::equal(s.x.begin() + i * d, s.x.begin() + (i + 1) * d, s.x.begin() + j * d)) {
          const auto p = law.draw(d, rng, j, ++attempt[j]);
          std::copy(p.begin(), p.end(), s.x.begin() + j * d);
          clean = false;
          break;
        }
  }
  s.min_dist = N > 1 ? detail::min_pair_distance(s.x, N, d) : std::numeric_limits<double>::infinity();
  s.eps = N > 1 ? std::min(eps0, 0.5 * s.min_dist) : eps0;
  return s;
}

inline ParticleState make_state(std::vector<double> positions, int d, double eps0 = 1e-3, std::uint64_t seed = 0) {
  if (d < 1 || positions.size() % d != 0) throw std::invalid_argument("make_state: positions not a multiple of d");
  ParticleState s;
  s.d = d;
  s.N = positions.size() / d;
  s.x = std::move(positions);
  s.seed = seed;
  s.min_dist = s.N > 1 ? detail::min_pair_distance(s.x, s.N, d) : std::numeric_limits<double>::infinity();
  s.eps = eps0;
  return s;
}

struct DriftResult {
  std::vector<double> b;  // N x d
  bool saw_truncation = false;
};

// b_i = (1/N) sum_{j != i} M grad g_(eps)(x_i - x_j) by direct summation.
inline DriftResult drift_eval(const ParticleState& s, const PotentialSpec& spec, const FlowMatrix& M) {
  const int d = s.d;
  const std::size_t N = s.N;
  if (M.dim() != d || spec.d != d) throw std::invalid_argument("drift: dimension mismatch");
  DriftResult out;
  out.b.assign(N * d, 0.0);
  for (double v : s.x)
    if (!std::isfinite(v)) throw std::domain_error(detail::dump_state(s, "non-finite positions in drift"));
  if (M.is_zero()) return out;
  const TruncationParams tr{s.eps};
  const double eps2 = s.eps * s.eps;
  std::vector<double> G(N * d, 0.0);
  double dx[16];
  if (d > 16) throw std::invalid_argument("drift: d <= 16 supported");
  for (std::size_t i = 0; i < N; ++i) {
    const double* xi = s.x.data() + i * d;
    double* Gi = G.data() + i * d;
    for (std::size_t j = i + 1; j < N; ++j) {
      const double* xj = s.x.data() + j * d;
      double r2 = 0.0;
      for (int a = 0; a < d; ++a) {
        dx[a] = xi[a] - xj[a];
        r2 += dx[a] * dx[a];
      }
      double c;
      if (r2 >= eps2) {
        c = grad_factor_r2(spec, r2);
      } else {
        c = grad_factor_trunc_r2(spec, tr, r2);
        out.saw_truncation = true;
      }
      double* Gj = G.data() + j * d;
      for (int a = 0; a < d; ++a) {
        const double f = c * dx[a];
        Gi[a] += f;
        Gj[a] -= f;
      }
    }
  }
  const auto& m = M.matrix();
  const double invN = 1.0 / static_cast<double>(N);
  for (std::size_t i = 0; i < N; ++i)
    for (int a = 0; a < d; ++a) {
      double acc = 0.0;
      for (int c = 0; c < d; ++c) acc += m(a, c) * G[i * d + c];
      out.b[i * d + a] = acc * invN;
    }
  return out;
}

inline std::vector<double> drift(const ParticleState& s, const PotentialSpec& spec, const FlowMatrix& M) {
  return drift_eval(s, spec, M).b;
}

struct TruncationEvent {
  std::uint64_t step;
  double t;
  double eps_old;
  double eps_new;
  double min_dist;
};

// One Euler-Maruyama step of size dt; the noise of coordinate k at step n is keyed by (seed, n, k).
inline void step_em(ParticleState& s, const SdeConfig& cfg, const PotentialSpec& spec, const FlowMatrix& M, double dt,
                    std::vector<TruncationEvent>* events = nullptr) {
  const auto dr = drift_eval(s, spec, M);
  s.truncation_seen = s.truncation_seen || dr.saw_truncation;
  const CounterRng rng(s.seed, 2);
  const double amp = std::sqrt(2.0 * cfg.sigma * dt);
  const int d = s.d;
  for (std::size_t i = 0; i < s.N; ++i)
    for (int a = 0; a < d; ++a) {
      const std::size_t k = i * d + a;
      double xi = 0.0;
      if (cfg.sigma > 0.0) {
        const int m = cfg.noise_substeps;
        for (int j = 0; j < m; ++j) xi += rng.normal(s.step * m + j, k);
        if (m > 1) xi /= std::sqrt(double(m));
      }
      s.x[k] += dr.b[k] * dt + amp * xi;
    }
  s.t += dt;
  ++s.step;
  for (double v : s.x)
    if (!std::isfinite(v)) throw std::domain_error(detail::dump_state(s, "non-finite update"));
  s.min_dist = detail::min_pair_distance(s.x, s.N, d);
  if (cfg.eps_policy == EpsPolicy::HalveOnApproach && s.min_dist < 2.0 * s.eps) {
    if (!(s.min_dist > 0.0)) throw std::domain_error(detail::dump_state(s, "particle collision"));
    const double old = s.eps;
    while (s.min_dist < 2.0 * s.eps) s.eps *= 0.5;
    if (events) events->push_back({s.step, s.t, old, s.eps, s.min_dist});
  }
}

struct Diagnostics {
  double I_N = 0.0;
  double H_N = 0.0;
  double min_dist = 0.0;
};

inline Diagnostics diagnostics(const ParticleState& s, const PotentialSpec& spec) {
  Diagnostics out;
  const int d = s.d;
  const TruncationParams tr{s.eps};
  for (double v : s.x) out.I_N += v * v;
  double h = 0.0;
  for (std::size_t i = 0; i < s.N; ++i)
    for (std::size_t j = i + 1; j < s.N; ++j) {
      double r2 = 0.0;
      for (int a = 0; a < d; ++a) {
        const double dx = s.x[i * d + a] - s.x[j * d + a];
        r2 += dx * dx;
      }
      h += eval_g_trunc_r(spec, tr, std::sqrt(r2));
    }
  out.H_N = 2.0 * h;
  out.min_dist = s.N > 1 ? detail::min_pair_distance(s.x, s.N, d) : std::numeric_limits<double>::infinity();
  return out;
}

struct TrajectorySnapshot {
  double t = 0.0;
  Diagnostics diag;
  std::vector<double> positions;  // empty unless positions are stored
};

struct TrajectoryRecord {
  std::uint64_t seed = 0;
  int d = 3;
  std::size_t N = 0;
  std::vector<TrajectorySnapshot> snapshots;
  std::vector<TruncationEvent> events;
  double final_eps = 0.0;
  bool truncation_seen = false;
  double min_dist_ever = std::numeric_limits<double>::infinity();
  std::uint64_t steps = 0;
};

// Called at every snapshot with the current state.
using SnapshotObserver = std::function<void(const ParticleState&)>;

inline TrajectoryRecord run_trajectory(ParticleState state, const SdeConfig& cfg, const PotentialSpec& spec,
                                       const FlowMatrix& M, const SnapshotObserver& observer = {},
                                       bool store_positions = true) {
  cfg.validate();
  TrajectoryRecord rec;
  rec.seed = state.seed;
  rec.d = state.d;
  rec.N = state.N;
  rec.min_dist_ever = state.min_dist;
  const auto times = cfg.resolved_snapshots();
  auto record = [&] {
    TrajectorySnapshot snap;
    snap.t = state.t;
    snap.diag = diagnostics(state, spec);
    if (store_positions) snap.positions = state.x;
    rec.snapshots.push_back(std::move(snap));
    if (observer) observer(state);
  };
  std::size_t next = 0;
  while (next < times.size() && times[next] <= state.t) {
    record();
    ++next;
  }
  while (state.t < cfg.T && next < times.size()) {
    const double target = times[next];
    double dt = std::min(cfg.dt, target - state.t);
    const bool lands = target - (state.t + dt) <= 1e-9 * cfg.dt;
    step_em(state, cfg, spec, M, dt, &rec.events);
    if (lands) state.t = target;
    rec.min_dist_ever = std::min(rec.min_dist_ever, state.min_dist);
    if (lands) {
      record();
      ++next;
    }
  }
  rec.final_eps = state.eps;
  rec.truncation_seen = state.truncation_seen;
  rec.steps = state.step;
  return rec;
}

inline TrajectoryRecord run_trajectory(const SdeConfig& cfg, const InitialLaw& law, const PotentialSpec& spec,
                                       const FlowMatrix& M, const SnapshotObserver& observer = {},
                                       bool store_positions = true) {
  cfg.validate();
  return run_trajectory(init_particles(law, cfg.N, cfg.seed, spec.d, cfg.eps0), cfg, spec, M, observer,
                        store_positions);
}

}  // namespace mflab
