#pragma once

#include "mflab/energy.hpp"
#include "mflab/ensemble.hpp"
#include "mflab/initial_law.hpp"
#include "mflab/pde.hpp"
#include "mflab/sde.hpp"
#include "mflab/stats.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <vector>

namespace mflab {

enum class Verdict { Pass, Fail, Inconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

// Coupled SDE/PDE study description. Both dynamics share spec, M, sigma, the initial law and the snapshot grid.
struct ExperimentPlan {
  PotentialSpec spec = PotentialSpec::riesz(0.5, 3);
  FlowMatrix M = FlowMatrix::gradient(3);
  double sigma = 0.5;
  InitialLaw law = InitialLaw::gaussian(1.5);
  GridGeometry geom{64, 32.0};
  KernelMode kernel = KernelMode::FreeSpace;
  double T = 1.0;
  double sde_dt = 0.005;
  double pde_dt = 0.05;
  std::vector<double> snapshot_times;  // T is always included
  std::vector<std::size_t> N_values{32, 64, 128, 256};
  std::size_t runs = 100;
  SeedPlan seeds{1, 1};
  int threads = 1;
  double eps0 = 1e-3;
  EpsPolicy eps_policy = EpsPolicy::HalveOnApproach;
  double fit_time = -1.0;       // time of the rate fit; negative means T
  std::size_t fit_min_N = 0;    // fit window: N >= fit_min_N
  bool dt_gate = true;
  std::size_t gate_runs = 30;
  double beta_floor = 0.15;     // desk-scale target, not a constant of the theory
  double r2_floor = 0.8;
  double eta_scale = 1.0;       // multiplies the balanced smearing radius
  std::vector<double> check_times{0.25, 0.5, 1.0};  // Ito balance check times
  double quadrature_dt = 0.05;  // trapezoid spacing of the Ito balance time integrals
  std::size_t ito_N = 128;

  void validate() const {
    spec.validate();
    M.validate();
    geom.validate();
    law.validate(spec.d);
    if (spec.d != 3) throw std::invalid_argument("plan: coupled studies are specialised to d = 3");
    if (!(sigma >= 0.0)) throw std::invalid_argument("plan: sigma >= 0 required");
    if (!(T > 0.0)) throw std::invalid_argument("plan: T > 0 required");
    if (N_values.empty()) throw std::invalid_argument("plan: empty N sweep");
    for (auto N : N_values)
      if (N < 2) throw std::invalid_argument("plan: N >= 2 required");
    if (runs < 1) throw std::invalid_argument("plan: runs >= 1 required");
    if (!(sde_dt > 0.0 && pde_dt > 0.0)) throw std::invalid_argument("plan: time steps must be > 0");
    if (!(quadrature_dt > 0.0)) throw std::invalid_argument("plan: quadrature_dt > 0 required");
    for (double t : snapshot_times)
      if (t < 0.0 || t > T) throw std::invalid_argument("plan: snapshot times must lie in [0, T]");
    for (double t : check_times)
      if (t < 0.0 || t > T) throw std::invalid_argument("plan: check times must lie in [0, T]");
  }

  std::vector<double> times() const {
    std::vector<double> ts = snapshot_times;
    ts.push_back(0.0);
    ts.push_back(T);
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    return ts;
  }

  SdeConfig sde_config(std::size_t N, std::vector<double> ts) const {
    SdeConfig c;
    c.N = N;
    c.sigma = sigma;
    c.dt = sde_dt;
    c.T = T;
    c.eps0 = eps0;
    c.eps_policy = eps_policy;
    c.snapshot_times = std::move(ts);
    return c;
  }

  PdeConfig pde_config(std::vector<double> ts) const {
    PdeConfig c;
    c.sigma = sigma;
    c.dt = pde_dt;
    c.T = T;
    c.kernel = kernel;
    c.snapshot_times = std::move(ts);
    c.record_steps = false;
    return c;
  }
};

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline ParticleState state_from_snapshot(const TrajectoryRecord& rec, const TrajectorySnapshot& snap) {
  ParticleState ps = make_state(snap.positions, rec.d, 1e-3, rec.seed);
  ps.t = snap.t;
  return ps;
}

// Mean-field data at every snapshot time of the shared PDE solution.
inline std::vector<std::shared_ptr<const MeanFieldData>> mean_field_path(const ExperimentPlan& plan,
                                                                         const std::vector<double>& ts,
                                                                         bool derivatives) {
  const auto series = solve(plan.law.on_grid(plan.geom), plan.pde_config(ts), plan.spec, plan.M);
  if (series.snapshots.size() != ts.size()) throw std::logic_error("harness: PDE snapshot grid mismatch");
  std::vector<std::shared_ptr<const MeanFieldData>> out;
  for (const auto& mu : series.snapshots)
    out.push_back(std::make_shared<const MeanFieldData>(mu, plan.spec, plan.kernel, std::nullopt, derivatives));
  return out;
}

}  // namespace detail

struct TimeProfileEntry {
  double t = 0.0;
  MeanSe F;
  MeanSe absF;
};

struct RateRow {
  std::size_t N = 0;
  std::size_t runs_ok = 0;
  std::size_t failures = 0;
  std::vector<std::string> failure_messages;
  std::vector<TimeProfileEntry> profile;
};

struct DtGateReport {
  bool ran = false;
  std::size_t N = 0;
  double dt = 0.0;
  MeanSe abs_dt, abs_half;  // E|F_N^T| at dt and dt/2 on a shared Brownian path
  double change = 0.0;
  bool pass = true;
};

struct RateReport {
  std::vector<RateRow> rows;
  double fit_time = 0.0;
  LinearFit fit;  // log E|F_N| against log N
  double beta_hat = 0.0;
  double beta_ci_low = 0.0, beta_ci_high = 0.0;
  double beta_floor = 0.15;
  double r2_floor = 0.8;
  Verdict verdict = Verdict::Inconclusive;
  DtGateReport gate;
  double seconds = 0.0;
};

// E|F_N^T| per run for one N; F_N evaluated against the shared mean-field path at each snapshot.
inline RateRow rate_row(const ExperimentPlan& plan, std::size_t N, const std::vector<double>& ts,
                        const std::vector<std::shared_ptr<const MeanFieldData>>& path, double dt,
                        int noise_substeps = 1, std::vector<std::vector<double>>* per_run_F = nullptr) {
  SdeConfig cfg = plan.sde_config(N, ts);
  cfg.dt = dt;
  cfg.noise_substeps = noise_substeps;
  EnergyOptions opt;
  opt.sobolev = false;
  auto outcomes = parallel_runs(plan.runs, plan.threads, [&](std::size_t k) {
    SdeConfig c = cfg;
    c.seed = plan.seeds.seed(k);
    const auto rec = run_trajectory(c, plan.law, plan.spec, plan.M, {}, true);
    if (rec.snapshots.size() != path.size()) throw std::logic_error("harness: SDE snapshot grid mismatch");
    std::vector<double> F;
    for (std::size_t j = 0; j < rec.snapshots.size(); ++j)
      F.push_back(modulated_energy(detail::state_from_snapshot(rec, rec.snapshots[j]), *path[j], opt).F_N);
    return F;
  });
  RateRow row;
  row.N = N;
  std::vector<std::vector<double>> F;
  for (auto& o : outcomes) {
    if (o.value)
      F.push_back(std::move(*o.value));
    else
      row.failure_messages.push_back(o.error);
  }
  row.runs_ok = F.size();
  row.failures = row.failure_messages.size();
  for (std::size_t j = 0; j < ts.size() && !F.empty(); ++j) {
    std::vector<double> v, a;
    for (const auto& f : F) {
      v.push_back(f[j]);
      a.push_back(std::abs(f[j]));
    }
    row.profile.push_back({ts[j], mean_se(v), mean_se(a)});
  }
  if (per_run_F) *per_run_F = std::move(F);
  return row;
}

inline std::size_t time_index(const std::vector<double>& ts, double t) {
  for (std::size_t j = 0; j < ts.size(); ++j)
    if (std::abs(ts[j] - t) <= 1e-9 * std::max(1.0, std::abs(t))) return j;
  throw std::out_of_range("harness: time " + std::to_string(t) + " is not on the snapshot grid");
}

// Halving dt must move E|F_N^T| by less than one standard error; the two runs share Brownian paths.
inline DtGateReport dt_gate(const ExperimentPlan& plan, const std::vector<double>& ts,
                            const std::vector<std::shared_ptr<const MeanFieldData>>& path) {
  DtGateReport g;
  g.ran = true;
  g.N = plan.N_values.front();
  g.dt = plan.sde_dt;
  ExperimentPlan p = plan;
  p.runs = std::max<std::size_t>(plan.gate_runs, 2);
  const auto coarse = rate_row(p, g.N, ts, path, plan.sde_dt, 2);
  const auto fine = rate_row(p, g.N, ts, path, 0.5 * plan.sde_dt, 1);
  if (coarse.profile.empty() || fine.profile.empty()) {
    g.pass = false;
    return g;
  }
  g.abs_dt = coarse.profile.back().absF;
  g.abs_half = fine.profile.back().absF;
  g.change = std::abs(g.abs_dt.mean - g.abs_half.mean);
  g.pass = g.change < g.abs_half.se;
  return g;
}

inline RateReport convergence_study(const ExperimentPlan& plan) {
  plan.validate();
  const auto t0 = std::chrono::steady_clock::now();
  RateReport rep;
  rep.beta_floor = plan.beta_floor;
  rep.r2_floor = plan.r2_floor;
  const auto ts = plan.times();
  rep.fit_time = plan.fit_time < 0.0 ? plan.T : plan.fit_time;
  const std::size_t jfit = time_index(ts, rep.fit_time);
  const auto path = detail::mean_field_path(plan, ts, false);
  if (plan.dt_gate) rep.gate = dt_gate(plan, ts, path);
  std::vector<double> lx, ly;
  for (auto N : plan.N_values) {
    rep.rows.push_back(rate_row(plan, N, ts, path, plan.sde_dt));
    const auto& row = rep.rows.back();
    if (N >= plan.fit_min_N && !row.profile.empty() && row.profile[jfit].absF.mean > 0.0) {
      lx.push_back(std::log(double(N)));
      ly.push_back(std::log(row.profile[jfit].absF.mean));
    }
  }
  if (lx.size() >= 3) {
    rep.fit = linear_fit(lx, ly);
    rep.beta_hat = -rep.fit.slope;
    rep.beta_ci_low = -rep.fit.ci_high;
    rep.beta_ci_high = -rep.fit.ci_low;
    if (rep.fit.r2 < plan.r2_floor)
      rep.verdict = Verdict::Inconclusive;
    else
      rep.verdict = rep.beta_hat > plan.beta_floor ? Verdict::Pass : Verdict::Fail;
  }
  rep.seconds = detail::seconds_since(t0);
  return rep;
}

// sup_t E|F_N^t| relative to E|F_N^{t_ref}|.
inline double uniform_in_time_ratio(const RateRow& row, double t_ref) {
  double sup = 0.0, ref = std::numeric_limits<double>::quiet_NaN();
  for (const auto& e : row.profile) {
    sup = std::max(sup, e.absF.mean);
    if (std::abs(e.t - t_ref) <= 1e-9 * std::max(1.0, t_ref)) ref = e.absF.mean;
  }
  if (std::isnan(ref)) throw std::out_of_range("uniform_in_time_ratio: reference time not on the grid");
  return sup / ref;
}

struct DecayCase {
  std::string name;
  FlowMatrix M;
};

struct DecayStudyReport {
  std::vector<std::string> cases;
  std::vector<std::vector<BoundReport>> bounds;  // per case, per (p, q)
  std::vector<ConservationReport> conservation;
  double max_ratio = 0.0;
  double threshold = 1.02;
  bool pass = true;
  double seconds = 0.0;
};

inline std::vector<DecayCase> default_decay_cases() {
  return {{"interaction disabled", FlowMatrix::zero(3)},
          {"gradient flow", FlowMatrix::gradient(3)},
          {"antisymmetric", FlowMatrix::conservative(3)}};
}

inline DecayStudyReport decay_study(const ExperimentPlan& plan, const std::vector<DecayCase>& cases,
                                    const std::vector<std::pair<double, double>>& pairs = {{1.0, INFINITY},
                                                                                          {1.0, 2.0},
                                                                                          {2.0, INFINITY}},
                                    double threshold = 1.02) {
  plan.validate();
  const auto t0 = std::chrono::steady_clock::now();
  DecayStudyReport rep;
  rep.threshold = threshold;
  const auto mu0 = plan.law.on_grid(plan.geom);
  if (mu0.min_value() < 0.0) throw std::invalid_argument("decay_study: nonnegative initial datum required");
  for (const auto& c : cases) {
    auto cfg = plan.pde_config(plan.times());
    cfg.record_steps = true;
    const auto series = solve(mu0, cfg, plan.spec, c.M);
    rep.cases.push_back(c.name);
    rep.conservation.push_back(conservation_check(series));
    std::vector<BoundReport> row;
    for (auto [p, q] : pairs) {
      row.push_back(decay_check(series, p, q, plan.sigma, threshold));
      rep.max_ratio = std::max(rep.max_ratio, row.back().max_ratio);
      rep.pass = rep.pass && row.back().pass;
    }
    rep.bounds.push_back(std::move(row));
  }
  rep.seconds = detail::seconds_since(t0);
  return rep;
}

struct InequalityRow {
  double t = 0.0;
  MeanSe lhs;   // E[F_N^t - F_N^0]
  MeanSe rhs;   // E int_0^t (2 sigma Lap + |comm|)
  MeanSe diff;  // paired per-run lhs - rhs
  double margin_se = 0.0;  // (rhs - lhs) / SE(diff)
  bool pass = true;
};

struct InequalityReport {
  std::size_t N = 0;
  double sigma = 0.0;
  std::size_t runs_ok = 0;
  std::size_t failures = 0;
  std::vector<std::string> failure_messages;
  std::vector<InequalityRow> rows;
  bool pass = true;
  double seconds = 0.0;
};

inline InequalityReport ito_balance_study(const ExperimentPlan& plan) {
  plan.validate();
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<double> ts = plan.check_times;
  const int nq = static_cast<int>(std::llround(plan.T / plan.quadrature_dt));
  for (int k = 0; k <= nq; ++k) ts.push_back(std::min(plan.T, k * plan.quadrature_dt));
  ExperimentPlan p = plan;
  p.snapshot_times = ts;
  ts = p.times();
  const auto path = detail::mean_field_path(p, ts, true);
  std::vector<CommutatorField> comm;
  for (const auto& d : path) comm.push_back(commutator_field(*d, velocity_field(*d, plan.M)));

  SdeConfig cfg = p.sde_config(plan.ito_N, ts);
  EnergyOptions opt;
  opt.sobolev = false;
  struct RunSeries {
    std::vector<double> F, lap, comm;
  };
  auto outcomes = parallel_runs(plan.runs, plan.threads, [&](std::size_t k) {
    SdeConfig c = cfg;
    c.seed = plan.seeds.seed(k);
    const auto rec = run_trajectory(c, plan.law, plan.spec, plan.M, {}, true);
    RunSeries r;
    for (std::size_t j = 0; j < rec.snapshots.size(); ++j) {
      const auto ps = detail::state_from_snapshot(rec, rec.snapshots[j]);
      r.F.push_back(modulated_energy(ps, *path[j], opt).F_N);
      r.lap.push_back(laplacian_interaction_terms(ps, *path[j]).total);
      r.comm.push_back(commutator_terms(ps, *path[j], comm[j]).total);
    }
    return r;
  });
  InequalityReport rep;
  rep.N = plan.ito_N;
  rep.sigma = plan.sigma;
  std::vector<RunSeries> runs;
  for (auto& o : outcomes) {
    if (o.value)
      runs.push_back(std::move(*o.value));
    else
      rep.failure_messages.push_back(o.error);
  }
  rep.runs_ok = runs.size();
  rep.failures = rep.failure_messages.size();
  if (runs.size() < 2) {
    rep.pass = false;
    rep.seconds = detail::seconds_since(t0);
    return rep;
  }
  for (double tc : plan.check_times) {
    const std::size_t jc = time_index(ts, tc);
    std::vector<double> L, R, D;
    for (const auto& r : runs) {
      double integral = 0.0;
      for (std::size_t j = 1; j <= jc; ++j) {
        const double f0 = 2.0 * plan.sigma * r.lap[j - 1] + std::abs(r.comm[j - 1]);
        const double f1 = 2.0 * plan.sigma * r.lap[j] + std::abs(r.comm[j]);
        integral += 0.5 * (ts[j] - ts[j - 1]) * (f0 + f1);
      }
      L.push_back(r.F[jc] - r.F[0]);
      R.push_back(integral);
      D.push_back(L.back() - R.back());
    }
    InequalityRow row;
    row.t = tc;
    row.lhs = mean_se(L);
    row.rhs = mean_se(R);
    row.diff = mean_se(D);
    row.pass = row.diff.mean <= 3.0 * row.diff.se;
    row.margin_se = row.diff.se > 0.0 ? -row.diff.mean / row.diff.se
                                      : (row.diff.mean <= 0.0 ? std::numeric_limits<double>::infinity()
                                                              : -std::numeric_limits<double>::infinity());
    rep.pass = rep.pass && row.pass;
    rep.rows.push_back(row);
  }
  rep.seconds = detail::seconds_since(t0);
  return rep;
}

// Deterministic quadrature points of a Gaussian law: Halton points in bases 2, 3, 5 pushed through the
// inverse normal CDF, then mapped to mixture components by weight.
inline double halton(std::uint64_t i, int base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= base;
    r += f * static_cast<double>(i % base);
    i /= base;
  }
  return r;
}

inline ParticleState gaussian_quadrature_points(const InitialLaw& law, std::size_t N) {
  if (law.kind != InitialLaw::Kind::Gaussian) throw std::invalid_argument("quadrature points: Gaussian law required");
  std::vector<double> x(3 * N);
  const double W = law.total_weight();
  std::size_t filled = 0;
  for (std::size_t c = 0; c < law.components.size(); ++c) {
    const auto& comp = law.components[c];
    const std::size_t take =
        c + 1 == law.components.size() ? N - filled : static_cast<std::size_t>(std::llround(N * comp.weight / W));
    const double sd = std::sqrt(comp.variance);
    for (std::size_t k = 0; k < take && filled < N; ++k, ++filled)
      for (int a = 0; a < 3; ++a) {
        const double u = halton(k + 1, a == 0 ? 2 : (a == 1 ? 3 : 5));
        x[3 * filled + a] = (comp.mean.empty() ? 0.0 : comp.mean[a]) + sd * std::sqrt(2.0) * boost::math::erf_inv(2.0 * u - 1.0);
      }
  }
  return make_state(std::move(x), 3);
}

struct SobolevRow {
  std::size_t N = 0;
  double eta = 0.0;
  MeanSe metric;       // at T with eta
  MeanSe metric_half;  // at T with eta / 2
  std::size_t runs_ok = 0;
  std::size_t failures = 0;
};

struct SobolevReport {
  std::vector<SobolevRow> rows;
  LinearFit fit;  // log metric against log N
  double decay_rate = 0.0;
  bool monotone = true;        // nonincreasing in N up to one SE
  double quadrature_metric = 0.0;  // deterministic points at t = 0, largest N
  MeanSe iid_metric_t0;            // iid points at t = 0, largest N
  double half_eta_change = 0.0;    // relative change at the largest N
  double seconds = 0.0;
};

inline SobolevReport chaos_metric_study(const ExperimentPlan& plan) {
  plan.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const auto ts = plan.times();
  const auto series = solve(plan.law.on_grid(plan.geom), plan.pde_config(ts), plan.spec, plan.M);
  const auto& muT = series.snapshots.back();
  const auto& mu0 = series.snapshots.front();
  SobolevReport rep;
  std::vector<double> lx, ly;
  for (auto N : plan.N_values) {
    SobolevRow row;
    row.N = N;
    row.eta = plan.eta_scale * eta_balanced(N, plan.spec, muT.max_value(), EtaMode::Local);
    const SdeConfig cfg = plan.sde_config(N, {});
    auto outcomes = parallel_runs(plan.runs, plan.threads, [&](std::size_t k) {
      SdeConfig c = cfg;
      c.seed = plan.seeds.seed(k);
      const auto rec = run_trajectory(c, plan.law, plan.spec, plan.M, {}, true);
      const auto ps = detail::state_from_snapshot(rec, rec.snapshots.back());
      return std::array<double, 2>{smeared_sobolev(ps, muT, std::vector<double>(N, row.eta), plan.spec),
                                   smeared_sobolev(ps, muT, std::vector<double>(N, 0.5 * row.eta), plan.spec)};
    });
    std::vector<double> m, mh;
    for (auto& o : outcomes)
      if (o.value) {
        m.push_back((*o.value)[0]);
        mh.push_back((*o.value)[1]);
      } else {
        ++row.failures;
      }
    row.runs_ok = m.size();
    if (!m.empty()) {
      row.metric = mean_se(m);
      row.metric_half = mean_se(mh);
      lx.push_back(std::log(double(N)));
      ly.push_back(std::log(row.metric.mean));
    }
    rep.rows.push_back(row);
  }
  for (std::size_t k = 1; k < rep.rows.size(); ++k)
    if (rep.rows[k].metric.mean > rep.rows[k - 1].metric.mean + rep.rows[k].metric.se + rep.rows[k - 1].metric.se)
      rep.monotone = false;
  if (lx.size() >= 2) {
    rep.fit = linear_fit(lx, ly);
    rep.decay_rate = -rep.fit.slope;
  }
  const auto& last = rep.rows.back();
  rep.half_eta_change = std::abs(last.metric_half.mean - last.metric.mean) / last.metric.mean;
  const std::size_t Nmax = last.N;
  const double eta0 = plan.eta_scale * eta_balanced(Nmax, plan.spec, mu0.max_value(), EtaMode::Local);
  const std::vector<double> etas(Nmax, eta0);
  rep.quadrature_metric = smeared_sobolev(gaussian_quadrature_points(plan.law, Nmax), mu0, etas, plan.spec);
  std::vector<double> iid;
  for (std::size_t k = 0; k < plan.runs; ++k)
    iid.push_back(smeared_sobolev(init_particles(plan.law, Nmax, plan.seeds.seed(k)), mu0, etas, plan.spec));
  rep.iid_metric_t0 = mean_se(iid);
  rep.seconds = detail::seconds_since(t0);
  return rep;
}

inline nlohmann::json to_json(const MeanSe& m) { return {{"mean", m.mean}, {"se", m.se}, {"n", m.n}}; }

inline nlohmann::json to_json(const RateReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    nlohmann::json prof = nlohmann::json::array();
    for (const auto& e : row.profile) prof.push_back({{"t", e.t}, {"E_F", to_json(e.F)}, {"E_absF", to_json(e.absF)}});
    rows.push_back({{"N", row.N}, {"runs_ok", row.runs_ok}, {"failures", row.failures},
                    {"failure_messages", row.failure_messages}, {"profile", prof}});
  }
  return {{"rows", rows},
          {"fit_time", r.fit_time},
          {"beta_hat", r.beta_hat},
          {"beta_ci95", {r.beta_ci_low, r.beta_ci_high}},
          {"r2", r.fit.r2},
          {"beta_floor", r.beta_floor},
          {"beta_floor_note", "desk-scale target"},
          {"r2_floor", r.r2_floor},
          {"verdict", to_string(r.verdict)},
          {"dt_gate",
           {{"ran", r.gate.ran}, {"N", r.gate.N}, {"dt", r.gate.dt}, {"E_absF_dt", to_json(r.gate.abs_dt)},
            {"E_absF_half_dt", to_json(r.gate.abs_half)}, {"change", r.gate.change}, {"pass", r.gate.pass}}},
          {"seconds", r.seconds}};
}

inline nlohmann::json to_json(const BoundReport& b) {
  nlohmann::json e = nlohmann::json::array();
  for (const auto& x : b.entries) e.push_back({{"t", x.t}, {"norm_q", x.norm_q}, {"bound", x.bound}, {"ratio", x.ratio}});
  auto num = [](double v) { return std::isinf(v) ? nlohmann::json("inf") : nlohmann::json(v); };
  return {{"p", num(b.p)}, {"q", num(b.q)}, {"entries", e}, {"max_ratio", b.max_ratio}, {"pass", b.pass}};
}

inline nlohmann::json to_json(const DecayStudyReport& r) {
  nlohmann::json cases = nlohmann::json::array();
  for (std::size_t i = 0; i < r.cases.size(); ++i) {
    nlohmann::json b = nlohmann::json::array();
    for (const auto& x : r.bounds[i]) b.push_back(to_json(x));
    const auto& c = r.conservation[i];
    cases.push_back({{"case", r.cases[i]},
                     {"bounds", b},
                     {"max_mass_drift", c.max_mass_drift},
                     {"max_step_increase", {{"1.5", c.max_step_increase[0]}, {"2", c.max_step_increase[1]},
                                            {"4", c.max_step_increase[2]}, {"inf", c.max_step_increase[3]}}}});
  }
  return {{"cases", cases}, {"max_ratio", r.max_ratio}, {"threshold", r.threshold}, {"pass", r.pass},
          {"seconds", r.seconds}};
}

inline nlohmann::json to_json(const InequalityReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& x : r.rows)
    rows.push_back({{"t", x.t}, {"lhs", to_json(x.lhs)}, {"rhs", to_json(x.rhs)}, {"diff", to_json(x.diff)},
                    {"margin_se", std::isfinite(x.margin_se) ? nlohmann::json(x.margin_se) : nlohmann::json(nullptr)},
                    {"pass", x.pass}});
  return {{"N", r.N}, {"sigma", r.sigma}, {"runs_ok", r.runs_ok}, {"failures", r.failures},
          {"failure_messages", r.failure_messages}, {"rows", rows}, {"pass", r.pass}, {"seconds", r.seconds}};
}

inline nlohmann::json to_json(const SobolevReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& x : r.rows)
    rows.push_back({{"N", x.N}, {"eta", x.eta}, {"metric", to_json(x.metric)}, {"metric_half_eta", to_json(x.metric_half)},
                    {"runs_ok", x.runs_ok}, {"failures", x.failures}});
  return {{"rows", rows}, {"decay_rate", r.decay_rate}, {"r2", r.fit.r2}, {"monotone", r.monotone},
          {"quadrature_metric", r.quadrature_metric}, {"iid_metric_t0", to_json(r.iid_metric_t0)},
          {"half_eta_change", r.half_eta_change}, {"seconds", r.seconds}};
}

}  // namespace mflab
