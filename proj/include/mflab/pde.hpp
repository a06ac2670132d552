#pragma once

#include "mflab/convolution.hpp"
#include "mflab/flow_matrix.hpp"
#include "mflab/grid.hpp"
#include "mflab/potentials.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mflab {

struct PdeConfig {
  double sigma = 1.0;
  double dt = 0.01;
  double T = 1.0;
  double dealias = 2.0 / 3.0;
  double cfl = 0.5;
  std::vector<double> snapshot_times;  // T is always included; empty means {0, T}
  KernelMode kernel = KernelMode::FreeSpace;
  bool record_steps = true;

  void validate() const {
    if (!(sigma >= 0.0)) throw std::invalid_argument("pde: sigma >= 0 required");
    if (!(dt > 0.0)) throw std::invalid_argument("pde: dt > 0 required");
    if (!(T >= 0.0)) throw std::invalid_argument("pde: T >= 0 required");
    if (!(dealias > 0.0 && dealias <= 1.0)) throw std::invalid_argument("pde: dealias fraction must lie in (0, 1]");
    if (!(cfl > 0.0)) throw std::invalid_argument("pde: cfl > 0 required");
    for (double t : snapshot_times)
      if (t < 0.0 || t > T) throw std::invalid_argument("pde: snapshot times must lie in [0, T]");
  }

  std::vector<double> resolved_snapshots() const {
    std::vector<double> ts = snapshot_times.empty() ? std::vector<double>{0.0, T} : snapshot_times;
    ts.push_back(T);
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    return ts;
  }
};

inline double lp_norm(const GridDensity& mu, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p >= 1 required");
  if (std::isinf(p)) {
    double m = 0.0;
    for (double v : mu.values) m = std::max(m, std::abs(v));
    return m;
  }
  double acc = 0.0;
  if (p == 1.0)
    for (double v : mu.values) acc += std::abs(v);
  else if (p == 2.0)
    for (double v : mu.values) acc += v * v;
  else
    for (double v : mu.values) acc += std::pow(std::abs(v), p);
  return std::pow(acc * mu.geom.cell_volume(), 1.0 / p);
}

inline double log_moment(const GridDensity& mu) {
  const auto& g = mu.geom;
  double acc = 0.0;
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j)
      for (int k = 0; k < g.n; ++k) {
        const double x = g.coord(i), y = g.coord(j), z = g.coord(k);
        acc += std::log1p(std::sqrt(x * x + y * y + z * z)) * mu.values[g.index(i, j, k)];
      }
  return acc * g.cell_volume();
}

struct DensityDiagnostics {
  double t = 0.0;
  double mass = 0.0;
  double l1 = 0.0, l1_5 = 0.0, l2 = 0.0, l4 = 0.0, linf = 0.0;
  double min_value = 0.0;
  double log_moment = 0.0;
};

inline DensityDiagnostics density_diagnostics(const GridDensity& mu, bool with_log_moment = true) {
  DensityDiagnostics d;
  d.t = mu.t;
  d.mass = mu.mass();
  d.l1 = lp_norm(mu, 1.0);
  d.l1_5 = lp_norm(mu, 1.5);
  d.l2 = lp_norm(mu, 2.0);
  d.l4 = lp_norm(mu, 4.0);
  d.linf = lp_norm(mu, std::numeric_limits<double>::infinity());
  d.min_value = mu.min_value();
  d.log_moment = with_log_moment ? log_moment(mu) : 0.0;
  return d;
}

struct DensityTimeSeries {
  GridGeometry geom;
  std::vector<GridDensity> snapshots;
  std::vector<DensityDiagnostics> snapshot_diagnostics;
  std::vector<DensityDiagnostics> steps;  // per step when recorded, starting with the initial state
  double max_speed = 0.0;

  const GridDensity& at(double t) const {
    for (const auto& s : snapshots)
      if (std::abs(s.t - t) <= 1e-9 * std::max(1.0, std::abs(t))) return s;
    throw std::out_of_range("density series: no snapshot at t=" + std::to_string(t));
  }
};

// Strang-split pseudospectral solver for d mu = -div(mu M grad g * mu) + sigma Laplacian mu.
class PdeSolver {
 public:
  PdeSolver(const GridGeometry& geom, const PotentialSpec& spec, const FlowMatrix& M, const PdeConfig& cfg)
      : geom_(geom), spec_(spec), M_(M), cfg_(cfg), fft_(geom.n) {
    geom_.validate();
    cfg_.validate();
    spec_.validate();
    if (spec_.d != 3 || M_.dim() != 3) throw std::invalid_argument("pde: grid solver is specialised to d = 3");
    if (!M_.is_zero()) conv_ = std::make_unique<Convolver>(spec_, geom_, cfg_.kernel);
    const int n = geom_.n, nh = n / 2 + 1;
    k2_.resize(geom_.spectrum_size());
    mask_.resize(geom_.spectrum_size());
    const double cut = cfg_.dealias * (n / 2);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int k = 0; k < nh; ++k) {
          const int fa = geom_.freq(a), fb = geom_.freq(b);
          const std::size_t idx = (static_cast<std::size_t>(a) * n + b) * nh + k;
          k2_[idx] = double(fa * fa + fb * fb + k * k) / (geom_.L * geom_.L);
          mask_[idx] = std::abs(fa) <= cut && std::abs(fb) <= cut && k <= cut;
        }
  }

  const GridGeometry& geometry() const { return geom_; }
  const PdeConfig& config() const { return cfg_; }
  bool has_interaction() const { return conv_ != nullptr; }

  // u = M (grad g * mu); zero when M = 0.
  std::array<Field, 3> velocity(const Field& mu) const {
    std::array<Field, 3> u;
    if (!conv_) {
      for (auto& c : u) c.assign(geom_.size(), 0.0);
      return u;
    }
    const auto gr = conv_->gradient(mu);
    const auto& m = M_.matrix();
    for (int a = 0; a < 3; ++a) {
      u[a].assign(geom_.size(), 0.0);
      for (std::size_t i = 0; i < geom_.size(); ++i) u[a][i] = m(a, 0) * gr[0][i] + m(a, 1) * gr[1][i] + m(a, 2) * gr[2][i];
    }
    return u;
  }

  static double max_speed(const std::array<Field, 3>& u) {
    double m = 0.0;
    for (std::size_t i = 0; i < u[0].size(); ++i)
      m = std::max(m, std::sqrt(u[0][i] * u[0][i] + u[1][i] * u[1][i] + u[2][i] * u[2][i]));
    return m;
  }

  void heat(Field& mu, double tau) const {
    if (cfg_.sigma == 0.0 || tau == 0.0) return;
    Spectrum s;
    fft_.forward(mu, s);
    const double c = -4.0 * std::numbers::pi * std::numbers::pi * cfg_.sigma * tau;
    const double scale = 1.0 / static_cast<double>(geom_.size());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] *= std::exp(c * k2_[i]) * scale;
    fft_.inverse(s, mu);
  }

  // -div(mu u) with the 2/3 rule applied to the flux spectrum; returns max|u| through `speed`.
  Field transport_rhs(const Field& mu, double* speed = nullptr) const {
    const auto u = velocity(mu);
    if (speed) *speed = max_speed(u);
    const int n = geom_.n, nh = n / 2 + 1;
    Spectrum acc(geom_.spectrum_size(), {0.0, 0.0});
    Field flux(geom_.size());
    Spectrum s;
    const double c = 2.0 * std::numbers::pi / geom_.L;
    for (int comp = 0; comp < 3; ++comp) {
      for (std::size_t i = 0; i < flux.size(); ++i) flux[i] = mu[i] * u[comp][i];
      fft_.forward(flux, s);
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
          for (int k = 0; k < nh; ++k) {
            const std::size_t idx = (static_cast<std::size_t>(a) * n + b) * nh + k;
            const int m = comp == 0 ? geom_.freq(a) : (comp == 1 ? geom_.freq(b) : k);
            if (!mask_[idx] || std::abs(m) == n / 2) continue;
            acc[idx] += std::complex<double>(0.0, -c * m) * s[idx];
          }
    }
    Field out;
    fft_.inverse(acc, out);
    const double scale = 1.0 / static_cast<double>(geom_.size());
    for (auto& v : out) v *= scale;
    return out;
  }

  // One Strang step: heat dt/2, RK2 transport dt, heat dt/2.
  void step(GridDensity& mu, double dt) {
    heat(mu.values, 0.5 * dt);
    if (conv_) {
      double speed = 0.0;
      const Field f0 = transport_rhs(mu.values, &speed);
      last_speed_ = speed;
      const double courant = dt * speed * geom_.n / geom_.L;
      if (courant > cfg_.cfl)
        throw std::domain_error("pde: CFL violated, max|u|=" + std::to_string(speed) +
                                ", dt*max|u|*n/L=" + std::to_string(courant) + " > " + std::to_string(cfg_.cfl));
      Field mid(mu.values.size());
      for (std::size_t i = 0; i < mid.size(); ++i) mid[i] = mu.values[i] + dt * f0[i];
      const Field f1 = transport_rhs(mid);
      for (std::size_t i = 0; i < mid.size(); ++i) mu.values[i] += 0.5 * dt * (f0[i] + f1[i]);
    }
    heat(mu.values, 0.5 * dt);
    mu.t += dt;
  }

  double last_speed() const { return last_speed_; }

 private:
  GridGeometry geom_;
  PotentialSpec spec_;
  FlowMatrix M_;
  PdeConfig cfg_;
  Fft3 fft_;
  std::unique_ptr<Convolver> conv_;
  std::vector<double> k2_;
  std::vector<char> mask_;
  double last_speed_ = 0.0;
};

inline void step_pde(GridDensity& mu, const PdeConfig& cfg, const PotentialSpec& spec, const FlowMatrix& M) {
  PdeSolver solver(mu.geom, spec, M, cfg);
  solver.step(mu, cfg.dt);
}

using DensityObserver = std::function<void(const GridDensity&)>;

inline DensityTimeSeries solve(GridDensity mu, const PdeConfig& cfg, const PotentialSpec& spec, const FlowMatrix& M,
                               const DensityObserver& observer = {}) {
  cfg.validate();
  PdeSolver solver(mu.geom, spec, M, cfg);
  DensityTimeSeries series;
  series.geom = mu.geom;
  const auto times = cfg.resolved_snapshots();
  auto record = [&] {
    series.snapshots.push_back(mu);
    series.snapshot_diagnostics.push_back(density_diagnostics(mu));
    if (observer) observer(mu);
  };
  if (cfg.record_steps) series.steps.push_back(density_diagnostics(mu, false));
  std::size_t next = 0;
  while (next < times.size() && times[next] <= mu.t) {
    record();
    ++next;
  }
  while (mu.t < cfg.T && next < times.size()) {
    const double target = times[next];
    const double dt = std::min(cfg.dt, target - mu.t);
    const bool lands = target - (mu.t + dt) <= 1e-9 * cfg.dt;
    solver.step(mu, dt);
    series.max_speed = std::max(series.max_speed, solver.last_speed());
    if (lands) mu.t = target;
    if (cfg.record_steps) series.steps.push_back(density_diagnostics(mu, false));
    if (lands) {
      record();
      ++next;
    }
  }
  return series;
}

struct ConservationReport {
  double max_mass_drift = 0.0;  // relative to the initial mass
  std::array<double, 4> p{1.5, 2.0, 4.0, std::numeric_limits<double>::infinity()};
  std::array<double, 4> max_step_increase{};  // largest relative one-step growth of each norm
  std::size_t steps = 0;

  bool pass(double mass_tol = 1e-10, double monotone_tol = 1e-6) const {
    if (!(max_mass_drift <= mass_tol)) return false;
    for (double v : max_step_increase)
      if (!(v <= monotone_tol)) return false;
    return true;
  }
};

inline ConservationReport conservation_check(const DensityTimeSeries& series) {
  if (series.steps.size() < 2) throw std::invalid_argument("conservation_check: per-step records required");
  ConservationReport rep;
  rep.steps = series.steps.size() - 1;
  const double m0 = series.steps.front().mass;
  auto norms = [](const DensityDiagnostics& d) { return std::array<double, 4>{d.l1_5, d.l2, d.l4, d.linf}; };
  for (std::size_t k = 0; k < series.steps.size(); ++k) {
    rep.max_mass_drift = std::max(rep.max_mass_drift, std::abs(series.steps[k].mass - m0) / std::abs(m0));
    if (k == 0) continue;
    const auto a = norms(series.steps[k - 1]), b = norms(series.steps[k]);
    for (int i = 0; i < 4; ++i) rep.max_step_increase[i] = std::max(rep.max_step_increase[i], (b[i] - a[i]) / a[i]);
  }
  return rep;
}

// Sharp Young/heat constant K(r) = r'^{1/r'} / r^{1/r}, with K(1) = K(inf) = 1.
inline double carlen_loss_K(double r) {
  if (r == 1.0 || std::isinf(r)) return 1.0;
  const double rp = r / (r - 1.0);
  return std::pow(rp, 1.0 / rp) / std::pow(r, 1.0 / r);
}

struct BoundEntry {
  double t;
  double norm_q;
  double bound;
  double ratio;
};

struct BoundReport {
  double p = 1.0, q = 1.0;
  std::vector<BoundEntry> entries;
  double max_ratio = 0.0;
  double threshold = 1.02;
  bool pass = true;
};

inline double decay_bound(double p, double q, double sigma, int d, double t, double norm0_p) {
  const double gap = 1.0 / p - (std::isinf(q) ? 0.0 : 1.0 / q);
  const double kf = std::pow(carlen_loss_K(q) / carlen_loss_K(p), 0.5 * d);
  if (gap == 0.0) return kf * norm0_p;
  return kf * std::pow(4.0 * std::numbers::pi * sigma * t / gap, -0.5 * d * gap) * norm0_p;
}

inline BoundReport decay_check(const DensityTimeSeries& series, double p, double q, double sigma,
                               double threshold = 1.02) {
  if (!(p >= 1.0) || !(q >= 1.0)) throw std::invalid_argument("decay_check: p, q >= 1 required");
  if (p > q) throw std::invalid_argument("decay_check: p <= q required");
  if (series.snapshots.empty()) throw std::invalid_argument("decay_check: empty series");
  BoundReport rep;
  rep.p = p;
  rep.q = q;
  rep.threshold = threshold;
  const auto& mu0 = series.snapshots.front();
  const double n0 = lp_norm(mu0, p);
  for (const auto& mu : series.snapshots) {
    const double t = mu.t - mu0.t;
    if (t <= 0.0) continue;
    const double nq = lp_norm(mu, q);
    const double b = decay_bound(p, q, sigma, 3, t, n0);
    rep.entries.push_back({mu.t, nq, b, nq / b});
    rep.max_ratio = std::max(rep.max_ratio, nq / b);
  }
  rep.pass = rep.max_ratio <= threshold;
  return rep;
}

struct LinfConvReport {
  double grad_conv_linf = 0.0;
  double l1 = 0.0;
  double linf = 0.0;
  double bound = 0.0;
  double implied_constant = 0.0;
};

// ||grad g * mu||_inf against ||mu||_1^{1-(s+1)/d} ||mu||_inf^{(s+1)/d}.
inline LinfConvReport linf_conv_check(const GridDensity& mu, const PotentialSpec& spec,
                                      KernelMode mode = KernelMode::FreeSpace) {
  LinfConvReport rep;
  rep.l1 = lp_norm(mu, 1.0);
  rep.linf = lp_norm(mu, std::numeric_limits<double>::infinity());
  const double theta = (spec.s + 1.0) / spec.d;
  rep.bound = std::pow(rep.l1, 1.0 - theta) * std::pow(rep.linf, theta);
  if (rep.linf == 0.0) return rep;
  Convolver conv(spec, mu.geom, mode);
  const auto gr = conv.gradient(mu.values);
  for (std::size_t i = 0; i < mu.values.size(); ++i)
    rep.grad_conv_linf =
        std::max(rep.grad_conv_linf, std::sqrt(gr[0][i] * gr[0][i] + gr[1][i] * gr[1][i] + gr[2][i] * gr[2][i]));
  rep.implied_constant = rep.grad_conv_linf / rep.bound;
  return rep;
}

}  // namespace mflab
