#pragma once

#include "mflab/convolution.hpp"
#include "mflab/flow_matrix.hpp"
#include "mflab/grid.hpp"
#include "mflab/potentials.hpp"
#include "mflab/sde.hpp"
#include "mflab/stats.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mflab {

enum class EtaMode { Local, Global };

// Exponents of the globally superharmonic lower bound; p = inf is the limit.
inline double gamma_sp(double s, int d, double p) {
  if (std::isinf(p)) return (2.0 + s) / (d + 2.0);
  return (2.0 * p + s * p - s) / (d * p + 2.0 * p - d);
}
inline double lambda_sp(double s, int d, double p) {
  if (std::isinf(p)) return 2.0 * (d - s) / (d + 2.0);
  return 2.0 * p * (d - s) / (d * p + 2.0 * p - d);
}

// Upper cap on a common smearing radius for the global lower bound.
inline double eta_global_cap(int d, double mu_inf, double p) {
  const double e = std::isinf(p) ? (d + 2.0) / d : (d * p - d + 2.0 * p) / (d * (p - 1.0));
  return std::pow(2.0, -e) * std::pow(mu_inf, -1.0 / d);
}

inline double eta_balanced(std::size_t N, const PotentialSpec& spec, double mu_inf, EtaMode mode,
                           double p = std::numeric_limits<double>::infinity()) {
  if (N < 1) throw std::invalid_argument("eta_balanced: N >= 1 required");
  if (mode == EtaMode::Local) return std::pow(double(N), -1.0 / (spec.s + 2.0));
  if (!(mu_inf > 0.0)) throw std::invalid_argument("eta_balanced: mu_inf > 0 required for the global choice");
  if (!(p > double(spec.d) / (spec.s + 2.0))) throw std::invalid_argument("eta_balanced: p > d/(s+2) required");
  const double d = spec.d;
  const double eta = std::pow(mu_inf * double(N), -1.0 / d);
  const double cap = eta_global_cap(spec.d, mu_inf, p);
  if (!(eta < cap)) {
    // eta < cap  <=>  N > cap^{-d} / mu_inf
    const double nmin = std::floor(std::pow(cap, -d) / mu_inf) + 1.0;
    std::ostringstream msg;
    msg << "eta_balanced: global radius " << eta << " violates the cap " << cap << "; need N >= "
        << static_cast<std::uint64_t>(nmin);
    throw std::domain_error(msg.str());
  }
  return eta;
}

struct LowerBoundTerms {
  double eta = 0.0;
  double p = std::numeric_limits<double>::infinity();
  double gamma = 0.0, lambda = 0.0;
  double local_regularization = 0.0;  // eta^2
  double local_self = 0.0;            // eta^{-s}(1 + |log eta| 1_{s=0}) / N
  double local_density = 0.0;         // mu_inf eta^{d-s}(1 + |log eta|(1_{s=0} + 1_{s=d-2}))
  double global_density = 0.0;        // mu_inf^gamma eta^lambda (1 + (|log eta| + |log mu_inf|) 1_{s=0})
  double global_self = 0.0;           // same as local_self

  double local_total() const { return local_regularization + local_self + local_density; }
  double global_total() const { return global_density + global_self; }
};

inline LowerBoundTerms me_lower_bound_terms(std::size_t N, const PotentialSpec& spec, double mu_inf, double eta,
                                            double p = std::numeric_limits<double>::infinity()) {
  if (!(eta > 0.0)) throw std::invalid_argument("me_lower_bound_terms: eta > 0 required");
  const double s = spec.s, d = spec.d;
  const bool s0 = spec.is_log() || s == 0.0;
  const bool coulomb = s == d - 2.0;
  const double le = std::abs(std::log(eta));
  LowerBoundTerms t;
  t.eta = eta;
  t.p = p;
  t.gamma = gamma_sp(s, spec.d, p);
  t.lambda = lambda_sp(s, spec.d, p);
  t.local_regularization = eta * eta;
  t.local_self = std::pow(eta, -s) * (1.0 + (s0 ? le : 0.0)) / double(N);
  t.local_density = mu_inf * std::pow(eta, d - s) * (1.0 + le * ((s0 ? 1.0 : 0.0) + (coulomb ? 1.0 : 0.0)));
  t.global_density = std::pow(mu_inf, t.gamma) * std::pow(eta, t.lambda) *
                     (1.0 + (s0 ? le + std::abs(std::log(mu_inf)) : 0.0));
  t.global_self = t.local_self;
  return t;
}

// Grid fields of mu shared by every energy evaluation against it.
class MeanFieldData {
 public:
  MeanFieldData(GridDensity mu, const PotentialSpec& spec, KernelMode mode = KernelMode::FreeSpace,
                std::optional<TruncationParams> trunc = std::nullopt, bool derivatives = true)
      : mu_(std::move(mu)), spec_(spec), trunc_(trunc), conv_(spec, mu_.geom, mode, trunc) {
    potential_ = conv_.potential(mu_.values);
    mu_mu_ = grid_pair(potential_, mu_.values);
    mu_inf_ = mu_.max_value();
    if (derivatives) {
      gradient_ = conv_.gradient(mu_.values);
      laplacian_ = conv_.laplacian(mu_.values);
      lap_mu_mu_ = grid_pair(laplacian_, mu_.values);
    }
  }

  const GridDensity& density() const { return mu_; }
  const GridGeometry& geometry() const { return mu_.geom; }
  const PotentialSpec& spec() const { return spec_; }
  const std::optional<TruncationParams>& truncation() const { return trunc_; }
  const Convolver& convolver() const { return conv_; }
  const Field& potential() const { return potential_; }
  const std::array<Field, 3>& gradient() const { return require(gradient_[0]), gradient_; }
  const Field& laplacian() const { return require(laplacian_), laplacian_; }
  double mu_mu() const { return mu_mu_; }
  double laplacian_mu_mu() const { return require(laplacian_), lap_mu_mu_; }
  double mu_inf() const { return mu_inf_; }

  double grid_pair(const Field& a, const Field& b) const {
    CompensatedSum acc;
    for (std::size_t i = 0; i < a.size(); ++i) acc.add(a[i] * b[i]);
    return acc.value() * mu_.geom.cell_volume();
  }

 private:
  static void require(const Field& f) {
    if (f.empty()) throw std::logic_error("energy: mean-field data built without derivatives");
  }

  GridDensity mu_;
  PotentialSpec spec_;
  std::optional<TruncationParams> trunc_;
  Convolver conv_;
  Field potential_;
  std::array<Field, 3> gradient_;
  Field laplacian_;
  double mu_mu_ = 0.0, lap_mu_mu_ = 0.0, mu_inf_ = 0.0;
};

namespace detail {

inline void check_particles(const ParticleState& ps, const GridGeometry& g, const char* who) {
  if (ps.d != 3) throw std::invalid_argument(std::string(who) + ": grid-coupled energies need d = 3");
  if (ps.N < 1) throw std::invalid_argument(std::string(who) + ": N >= 1 required");
  for (std::size_t i = 0; i < ps.N; ++i)
    if (!inside_box(g, ps.particle(i)))
      throw std::domain_error(std::string(who) + ": particle " + std::to_string(i) + " lies outside the grid box");
}

// (2/N^2) sum_{i<j} f(x_i - x_j, i, j); throws on coincident particles.
template <class F>
double pair_sum(const ParticleState& ps, const char* who, F f) {
  CompensatedSum acc;
  const int d = ps.d;
  std::vector<double> z(d);
  for (std::size_t i = 0; i < ps.N; ++i)
    for (std::size_t j = i + 1; j < ps.N; ++j) {
      double r2 = 0.0;
      for (int a = 0; a < d; ++a) {
        z[a] = ps.x[i * d + a] - ps.x[j * d + a];
        r2 += z[a] * z[a];
      }
      if (r2 == 0.0)
        throw std::domain_error(std::string(who) + ": coincident particles " + std::to_string(i) + " and " +
                                std::to_string(j));
      acc.add(f(z, r2, i, j));
    }
  const double n = static_cast<double>(ps.N);
  return 2.0 * acc.value() / (n * n);
}

// -(2/N) sum_i field(x_i) by interpolation.
inline double cross_sum(const ParticleState& ps, const GridGeometry& g, const Field& field, Interpolation mode) {
  CompensatedSum acc;
  for (std::size_t i = 0; i < ps.N; ++i) acc.add(interpolate(g, field, ps.particle(i), mode));
  return -2.0 * acc.value() / static_cast<double>(ps.N);
}

}  // namespace detail

struct EnergyOptions {
  std::optional<double> eta;          // common smearing radius; defaults to the local balanced choice
  std::vector<double> eta_per_particle;  // overrides eta when non-empty
  bool sobolev = true;
  double p = std::numeric_limits<double>::infinity();
  Interpolation interpolation = Interpolation::Tricubic;
};

struct ModulatedEnergyReport {
  double t = 0.0;
  std::size_t N = 0;
  double F_N = 0.0;
  double particle_particle = 0.0;
  double cross = 0.0;
  double mu_mu = 0.0;
  std::vector<double> eta_used;
  double sobolev_surrogate = 0.0;
  bool sobolev_computed = false;
  LowerBoundTerms lower_bound_terms;
};

namespace detail {

// Per-particle phases exp(-2 pi i m x / L) for |m| < n/2, indexed by m + n/2 - 1.
inline std::vector<std::complex<double>> axis_phases(double x, int n, double L) {
  const int half = n / 2 - 1;
  std::vector<std::complex<double>> e(2 * half + 1);
  const std::complex<double> w = std::polar(1.0, -2.0 * std::numbers::pi * x / L);
  e[half] = 1.0;
  for (int m = 1; m <= half; ++m) {
    e[half + m] = e[half + m - 1] * w;
    e[half - m] = std::conj(e[half + m]);
  }
  return e;
}

// (1/N) sum_i exp(-2 pi i xi.x_i) S_3(2 pi eta_i |xi|) on the half lattice |m_a| < n/2, m_3 >= 0.
inline std::vector<std::complex<double>> smeared_particle_transform(const ParticleState& ps,
                                                                    const std::vector<double>& eta,
                                                                    const GridGeometry& g) {
  const int n = g.n, half = n / 2 - 1, w = 2 * half + 1;
  std::vector<std::complex<double>> acc(static_cast<std::size_t>(w) * w * (half + 1), 0.0);
  std::vector<double> kmag(acc.size());
  for (int a = -half; a <= half; ++a)
    for (int b = -half; b <= half; ++b)
      for (int c = 0; c <= half; ++c)
        kmag[(static_cast<std::size_t>(a + half) * w + (b + half)) * (half + 1) + c] =
            std::sqrt(double(a * a + b * b + c * c)) / g.L;
  const bool common = std::all_of(eta.begin(), eta.end(), [&](double e) { return e == eta.front(); });
  for (std::size_t i = 0; i < ps.N; ++i) {
    const auto e1 = axis_phases(ps.x[3 * i], n, g.L);
    const auto e2 = axis_phases(ps.x[3 * i + 1], n, g.L);
    const auto e3 = axis_phases(ps.x[3 * i + 2], n, g.L);
    const double eta_i = eta[i];
    for (int a = 0; a < w; ++a)
      for (int b = 0; b < w; ++b) {
        const std::complex<double> p12 = e1[a] * e2[b];
        const std::size_t base = (static_cast<std::size_t>(a) * w + b) * (half + 1);
        if (common)
          for (int c = 0; c <= half; ++c) acc[base + c] += p12 * e3[half + c];
        else
          for (int c = 0; c <= half; ++c)
            acc[base + c] += p12 * e3[half + c] * sphere_transform(3, 2.0 * std::numbers::pi * eta_i * kmag[base + c]);
      }
  }
  const double inv = 1.0 / static_cast<double>(ps.N);
  for (std::size_t q = 0; q < acc.size(); ++q)
    acc[q] *= common ? inv * sphere_transform(3, 2.0 * std::numbers::pi * eta.front() * kmag[q]) : inv;
  return acc;
}

// mu^(m/L) = h^3 sum_j mu_j exp(-2 pi i m.x_j / L) on the same half lattice.
inline std::vector<std::complex<double>> density_transform(const GridDensity& mu) {
  const auto& g = mu.geom;
  const int n = g.n, half = n / 2 - 1, w = 2 * half + 1, nh = n / 2 + 1;
  Spectrum s;
  Fft3(n).forward(mu.values, s);
  std::vector<std::complex<double>> out(static_cast<std::size_t>(w) * w * (half + 1));
  const double h3 = g.cell_volume();
  for (int a = -half; a <= half; ++a)
    for (int b = -half; b <= half; ++b)
      for (int c = 0; c <= half; ++c) {
        const int ia = (a + n) % n, ib = (b + n) % n;
        // Grid origin at -L/2 contributes (-1)^{a+b+c}.
        const double sign = ((a + b + c) & 1) ? -1.0 : 1.0;
        out[(static_cast<std::size_t>(a + half) * w + (b + half)) * (half + 1) + c] =
            sign * h3 * s[(static_cast<std::size_t>(ia) * n + ib) * nh + c];
      }
  return out;
}

inline std::vector<double> resolve_eta(const ParticleState& ps, const PotentialSpec& spec, double mu_inf,
                                       const EnergyOptions& opt) {
  if (!opt.eta_per_particle.empty()) {
    if (opt.eta_per_particle.size() != ps.N) throw std::invalid_argument("energy: eta list must have N entries");
    return opt.eta_per_particle;
  }
  const double eta = opt.eta ? *opt.eta : eta_balanced(ps.N, spec, mu_inf, EtaMode::Local, opt.p);
  return std::vector<double>(ps.N, eta);
}

}  // namespace detail

// (1/L^3) sum over |m_a| < n/2 of |nu^(m/L)|^2 g^(m/L), nu the smeared empirical measure minus mu.
inline double smeared_sobolev(const ParticleState& ps, const GridDensity& mu, const std::vector<double>& eta,
                              const PotentialSpec& spec) {
  detail::check_particles(ps, mu.geom, "smeared_sobolev");
  if (eta.size() != ps.N) throw std::invalid_argument("smeared_sobolev: eta list must have N entries");
  for (double e : eta)
    if (!(e > 0.0)) throw std::invalid_argument("smeared_sobolev: eta_i > 0 required");
  const auto& g = mu.geom;
  const int half = g.n / 2 - 1, w = 2 * half + 1;
  const auto pt = detail::smeared_particle_transform(ps, eta, g);
  const auto mt = detail::density_transform(mu);
  CompensatedSum acc;
  for (int a = 0; a < w; ++a)
    for (int b = 0; b < w; ++b)
      for (int c = 0; c <= half; ++c) {
        const int ma = a - half, mb = b - half;
        if (ma == 0 && mb == 0 && c == 0) continue;
        const std::size_t idx = (static_cast<std::size_t>(a) * w + b) * (half + 1) + c;
        const double k = std::sqrt(double(ma * ma + mb * mb + c * c)) / g.L;
        acc.add((c == 0 ? 1.0 : 2.0) * std::norm(pt[idx] - mt[idx]) * fourier_symbol_g(spec, k));
      }
  return std::max(0.0, acc.value() / (g.L * g.L * g.L));
}

// Band-limited grid density whose lattice transform equals that of the smeared empirical measure.
inline GridDensity smeared_empirical_on_grid(const ParticleState& ps, const std::vector<double>& eta,
                                             const GridGeometry& g) {
  detail::check_particles(ps, g, "smeared_empirical_on_grid");
  const auto pt = detail::smeared_particle_transform(ps, eta, g);
  const int n = g.n, half = n / 2 - 1, w = 2 * half + 1, nh = n / 2 + 1;
  Spectrum s(g.spectrum_size(), {0.0, 0.0});
  const double scale = 1.0 / (g.cell_volume() * static_cast<double>(g.size()));
  for (int a = -half; a <= half; ++a)
    for (int b = -half; b <= half; ++b)
      for (int c = 0; c <= half; ++c) {
        const double sign = ((a + b + c) & 1) ? -1.0 : 1.0;
        s[(static_cast<std::size_t>((a + n) % n) * n + (b + n) % n) * nh + c] =
            sign * scale * pt[(static_cast<std::size_t>(a + half) * w + (b + half)) * (half + 1) + c];
      }
  GridDensity mu;
  mu.geom = g;
  Fft3(n).inverse(s, mu.values);
  return mu;
}

inline ModulatedEnergyReport modulated_energy(const ParticleState& ps, const MeanFieldData& data,
                                              const EnergyOptions& opt = {}) {
  const auto& g = data.geometry();
  const auto& spec = data.spec();
  detail::check_particles(ps, g, "modulated_energy");
  ModulatedEnergyReport rep;
  rep.t = ps.t;
  rep.N = ps.N;
  const auto trunc = data.truncation();
  rep.particle_particle = detail::pair_sum(ps, "modulated_energy", [&](const std::vector<double>&, double r2,
                                                                       std::size_t, std::size_t) {
    const double r = std::sqrt(r2);
    return trunc ? eval_g_trunc_r(spec, *trunc, r) : eval_g(spec, r);
  });
  rep.cross = detail::cross_sum(ps, g, data.potential(), opt.interpolation);
  rep.mu_mu = data.mu_mu();
  rep.F_N = rep.particle_particle + rep.cross + rep.mu_mu;
  rep.eta_used = detail::resolve_eta(ps, spec, data.mu_inf(), opt);
  double eta_mean = 0.0;
  for (double e : rep.eta_used) eta_mean += e / static_cast<double>(rep.eta_used.size());
  rep.lower_bound_terms = me_lower_bound_terms(ps.N, spec, data.mu_inf(), eta_mean, opt.p);
  if (opt.sobolev) {
    rep.sobolev_surrogate = smeared_sobolev(ps, data.density(), rep.eta_used, spec);
    rep.sobolev_computed = true;
  }
  return rep;
}

inline ModulatedEnergyReport modulated_energy(const ParticleState& ps, const GridDensity& mu,
                                              const PotentialSpec& spec, const EnergyOptions& opt = {}) {
  return modulated_energy(ps, MeanFieldData(mu, spec, KernelMode::FreeSpace, std::nullopt, false), opt);
}

struct TermBreakdown {
  double particle_particle = 0.0;
  double cross = 0.0;
  double mu_mu = 0.0;
  double total = 0.0;
};

// Off-diagonal integral of Laplacian g against (mu_N - mu)^2.
inline TermBreakdown laplacian_interaction_terms(const ParticleState& ps, const MeanFieldData& data,
                                                 Interpolation mode = Interpolation::Tricubic) {
  const auto& spec = data.spec();
  detail::check_particles(ps, data.geometry(), "laplacian_interaction");
  TermBreakdown t;
  t.particle_particle = detail::pair_sum(ps, "laplacian_interaction",
                                         [&](const std::vector<double>&, double r2, std::size_t, std::size_t) {
                                           return laplacian_g(spec, std::sqrt(r2));
                                         });
  t.cross = detail::cross_sum(ps, data.geometry(), data.laplacian(), mode);
  t.mu_mu = data.laplacian_mu_mu();
  t.total = t.particle_particle + t.cross + t.mu_mu;
  return t;
}

inline double laplacian_interaction(const ParticleState& ps, const MeanFieldData& data) {
  return laplacian_interaction_terms(ps, data).total;
}

inline double laplacian_interaction(const ParticleState& ps, const GridDensity& mu, const PotentialSpec& spec) {
  return laplacian_interaction(ps, MeanFieldData(mu, spec));
}

using VectorField = std::array<Field, 3>;

// Grid field of the vector x itself.
inline VectorField identity_field(const GridGeometry& g) {
  VectorField v;
  for (auto& c : v) c.assign(g.size(), 0.0);
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j)
      for (int k = 0; k < g.n; ++k) {
        const std::size_t q = g.index(i, j, k);
        v[0][q] = g.coord(i);
        v[1][q] = g.coord(j);
        v[2][q] = g.coord(k);
      }
  return v;
}

// u = M (grad g * mu) on the grid.
inline VectorField velocity_field(const MeanFieldData& data, const FlowMatrix& M) {
  const auto& gr = data.gradient();
  const auto& m = M.matrix();
  VectorField u;
  for (int a = 0; a < 3; ++a) {
    u[a].assign(gr[0].size(), 0.0);
    for (std::size_t i = 0; i < gr[0].size(); ++i) u[a][i] = m(a, 0) * gr[0][i] + m(a, 1) * gr[1][i] + m(a, 2) * gr[2][i];
  }
  return u;
}

// Particle-independent part of the commutator: w(x) = v(x).(grad g * mu)(x) - (grad g * (v mu))(x), so that
// w(x) = int (v(x) - v(y)).grad g(x - y) dmu(y).
struct CommutatorField {
  VectorField v;
  Field w;
  double w_mu_mu = 0.0;  // int w dmu
};

inline CommutatorField commutator_field(const MeanFieldData& data, VectorField v) {
  const auto& g = data.geometry();
  for (const auto& c : v)
    if (c.size() != g.size()) throw std::invalid_argument("commutator_integral: vector field size mismatch");
  const auto& mu = data.density().values;
  const auto& gr = data.gradient();
  CommutatorField cf;
  cf.w.assign(g.size(), 0.0);
  Field vm(g.size());
  for (int a = 0; a < 3; ++a) {
    for (std::size_t i = 0; i < g.size(); ++i) vm[i] = v[a][i] * mu[i];
    const Field gv = data.convolver().gradient_component(vm, a);
    for (std::size_t i = 0; i < g.size(); ++i) cf.w[i] += v[a][i] * gr[a][i] - gv[i];
  }
  cf.w_mu_mu = data.grid_pair(cf.w, mu);
  cf.v = std::move(v);
  return cf;
}

// Off-diagonal integral of (v(x) - v(y)).grad g(x - y) against (mu_N - mu)^2.
inline TermBreakdown commutator_terms(const ParticleState& ps, const MeanFieldData& data, const CommutatorField& cf,
                                      Interpolation mode = Interpolation::Tricubic) {
  const auto& g = data.geometry();
  const auto& spec = data.spec();
  detail::check_particles(ps, g, "commutator_integral");
  std::vector<double> vp(3 * ps.N);
  for (std::size_t i = 0; i < ps.N; ++i)
    for (int a = 0; a < 3; ++a) vp[3 * i + a] = interpolate(g, cf.v[a], ps.particle(i), mode);
  TermBreakdown t;
  t.particle_particle = detail::pair_sum(ps, "commutator_integral",
                                         [&](const std::vector<double>& z, double r2, std::size_t i, std::size_t j) {
                                           const double f = grad_factor_r2(spec, r2);
                                           double acc = 0.0;
                                           for (int a = 0; a < 3; ++a) acc += (vp[3 * i + a] - vp[3 * j + a]) * z[a];
                                           return acc * f;
                                         });
  t.cross = detail::cross_sum(ps, g, cf.w, mode);
  t.mu_mu = cf.w_mu_mu;
  t.total = t.particle_particle + t.cross + t.mu_mu;
  return t;
}

inline double commutator_integral(const ParticleState& ps, const MeanFieldData& data, const VectorField& v) {
  return commutator_terms(ps, data, commutator_field(data, v)).total;
}

inline double commutator_integral(const ParticleState& ps, const GridDensity& mu, const PotentialSpec& spec,
                                  const VectorField& v) {
  return commutator_integral(ps, MeanFieldData(mu, spec), v);
}

// The three-term energy with the truncated kernel in every term.
inline double truncated_modulated_energy(const ParticleState& ps, const GridDensity& mu, const PotentialSpec& spec,
                                         const TruncationParams& trunc) {
  trunc.validate();
  EnergyOptions opt;
  opt.sobolev = false;
  return modulated_energy(ps, MeanFieldData(mu, spec, KernelMode::FreeSpace, trunc, false), opt).F_N;
}

inline nlohmann::json to_json(const LowerBoundTerms& t) {
  return {{"eta", t.eta},
          {"p", std::isinf(t.p) ? nlohmann::json("inf") : nlohmann::json(t.p)},
          {"gamma", t.gamma},
          {"lambda", t.lambda},
          {"local", {{"eta2", t.local_regularization}, {"self", t.local_self}, {"density", t.local_density}}},
          {"global", {{"density", t.global_density}, {"self", t.global_self}}}};
}

inline nlohmann::json to_json(const ModulatedEnergyReport& r) {
  nlohmann::json j{{"t", r.t},
                   {"N", r.N},
                   {"F_N", r.F_N},
                   {"components", {{"particle_particle", r.particle_particle}, {"cross", r.cross}, {"mu_mu", r.mu_mu}}},
                   {"eta_used", r.eta_used},
                   {"lower_bound_terms", to_json(r.lower_bound_terms)}};
  j["sobolev_surrogate"] = r.sobolev_computed ? nlohmann::json(r.sobolev_surrogate) : nlohmann::json(nullptr);
  return j;
}

inline const char* energy_csv_header() { return "t,N,F_N,particle_particle,cross,mu_mu,eta,sobolev_surrogate"; }

inline std::string energy_csv_row(const ModulatedEnergyReport& r) {
  std::ostringstream os;
  os.precision(17);
  os << r.t << ',' << r.N << ',' << r.F_N << ',' << r.particle_particle << ',' << r.cross << ',' << r.mu_mu << ','
     << (r.eta_used.empty() ? 0.0 : r.eta_used.front()) << ',';
  if (r.sobolev_computed) os << r.sobolev_surrogate;
  return os.str();
}

}  // namespace mflab
