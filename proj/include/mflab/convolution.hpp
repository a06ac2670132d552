#pragma once

#include "mflab/grid.hpp"
#include "mflab/potentials.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace mflab {

// Periodic: lattice symbol c |xi|^{s-d} on (Z/L)^3 with the zero mode set to 0.
// FreeSpace: the box is embedded in a doubled box and convolved with g restricted to |x| < L,
// whose transform is computed by radial quadrature; exact whole-space convolution for densities
// supported in the ball of diameter L inscribed in the box.
enum class KernelMode { Periodic, FreeSpace };

inline std::string to_string(KernelMode m) { return m == KernelMode::Periodic ? "periodic" : "free_space"; }

// Transform of a radial profile restricted to |x| < R in d = 3:
// 4 pi int_0^R r^2 f dr at kappa = 0, otherwise (2/kappa) int_0^R r f(r) sin(2 pi kappa r) dr.
template <class F>
double radial_transform_3d(F profile, double R, double kappa, const std::vector<double>& extra_breaks = {}) {
  using Gauss = boost::math::quadrature::gauss<double, 20>;
  const double wmax = kappa > 0.0 ? std::min(R / 16.0, 0.25 / kappa) : R / 16.0;
  std::vector<double> br{0.0};
  double r = R * std::ldexp(1.0, -40);
  while (r < wmax) {
    br.push_back(r);
    r *= 2.0;
  }
  for (double x = br.back() + wmax; x < R; x += wmax) br.push_back(x);
  br.push_back(R);
  for (double e : extra_breaks)
    if (e > 0.0 && e < R) br.push_back(e);
  std::sort(br.begin(), br.end());
  br.erase(std::unique(br.begin(), br.end()), br.end());
  const double q = 2.0 * std::numbers::pi * kappa;
  auto integrand = [&](double x) {
    if (x <= 0.0) return 0.0;
    return kappa > 0.0 ? x * profile(x) * std::sin(q * x) : x * x * profile(x);
  };
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < br.size(); ++i) acc += Gauss::integrate(integrand, br[i], br[i + 1]);
  return kappa > 0.0 ? 2.0 * acc / kappa : 4.0 * std::numbers::pi * acc;
}

class Convolver {
 public:
  Convolver(const PotentialSpec& spec, GridGeometry geom, KernelMode mode,
            std::optional<TruncationParams> trunc = std::nullopt)
      : spec_(spec), geom_(geom), mode_(mode), trunc_(trunc) {
    spec_.validate();
    geom_.validate();
    if (spec_.d != 3) throw std::invalid_argument("convolution: grid work is specialised to d = 3");
    if (trunc_ && mode_ == KernelMode::Periodic)
      throw std::invalid_argument("convolution: truncated kernels require the free-space mode");
    work_ = mode_ == KernelMode::Periodic ? geom_ : GridGeometry{2 * geom_.n, 2.0 * geom_.L};
    fft_ = std::make_unique<Fft3>(work_.n);
    symbol_ = symbol_table(spec_, geom_, work_, mode_, trunc_);
  }

  const GridGeometry& geometry() const { return geom_; }
  KernelMode mode() const { return mode_; }
  const PotentialSpec& spec() const { return spec_; }

  // Symbol value at working-grid half-spectrum index.
  double symbol(std::size_t idx) const { return (*symbol_)[idx]; }

  Field potential(const Field& f) const {
    Spectrum s = transform(f);
    return apply(s, [&](std::size_t idx, int, int, int) { return std::complex<double>((*symbol_)[idx], 0.0); });
  }

  Field laplacian(const Field& f) const {
    Spectrum s = transform(f);
    const double c = -4.0 * std::numbers::pi * std::numbers::pi / (work_.L * work_.L);
    return apply(s, [&](std::size_t idx, int a, int b, int k) {
      return std::complex<double>(c * double(a * a + b * b + k * k) * (*symbol_)[idx], 0.0);
    });
  }

  std::array<Field, 3> gradient(const Field& f) const {
    const Spectrum s = transform(f);
    std::array<Field, 3> out;
    const double c = 2.0 * std::numbers::pi / work_.L;
    const int nyq = work_.n / 2;
    for (int comp = 0; comp < 3; ++comp) {
      Spectrum sc = s;
      out[comp] = apply(sc, [&](std::size_t idx, int a, int b, int k) {
        const int m = comp == 0 ? a : (comp == 1 ? b : k);
        if (std::abs(m) == nyq) return std::complex<double>(0.0, 0.0);
        return std::complex<double>(0.0, c * m * (*symbol_)[idx]);
      });
    }
    return out;
  }

  // Component a of grad g * f.
  Field gradient_component(const Field& f, int comp) const {
    Spectrum s = transform(f);
    const double c = 2.0 * std::numbers::pi / work_.L;
    const int nyq = work_.n / 2;
    return apply(s, [&](std::size_t idx, int a, int b, int k) {
      const int m = comp == 0 ? a : (comp == 1 ? b : k);
      if (std::abs(m) == nyq) return std::complex<double>(0.0, 0.0);
      return std::complex<double>(0.0, c * m * (*symbol_)[idx]);
    });
  }

  // int int g f f as the grid quadrature of (g * f) f.
  double self_energy(const Field& f) const {
    const Field p = potential(f);
    double acc = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) acc += p[i] * f[i];
    return acc * geom_.cell_volume();
  }

 private:
  Spectrum transform(const Field& f) const {
    if (f.size() != geom_.size()) throw std::invalid_argument("convolution: field size does not match the grid");
    Spectrum s;
    if (mode_ == KernelMode::Periodic) {
      fft_->forward(f, s);
      return s;
    }
    Field pad(work_.size(), 0.0);
    const int n = geom_.n;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        std::copy_n(f.data() + geom_.index(i, j, 0), n, pad.data() + work_.index(i, j, 0));
    fft_->forward(pad, s);
    return s;
  }

  template <class Mult>
  Field apply(Spectrum& s, Mult mult) const {
    const int nw = work_.n, nh = nw / 2 + 1;
    for (int a = 0; a < nw; ++a)
      for (int b = 0; b < nw; ++b)
        for (int k = 0; k < nh; ++k) {
          const std::size_t idx = (static_cast<std::size_t>(a) * nw + b) * nh + k;
          s[idx] *= mult(idx, work_.freq(a), work_.freq(b), k);
        }
    Field full;
    fft_->inverse(s, full);
    const double scale = 1.0 / static_cast<double>(work_.size());
    if (mode_ == KernelMode::Periodic) {
      for (auto& v : full) v *= scale;
      return full;
    }
    const int n = geom_.n;
    Field out(geom_.size());
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double* src = full.data() + work_.index(i, j, 0);
        double* dst = out.data() + geom_.index(i, j, 0);
        for (int k = 0; k < n; ++k) dst[k] = src[k] * scale;
      }
    return out;
  }

  static std::shared_ptr<const std::vector<double>> symbol_table(const PotentialSpec& spec, const GridGeometry& geom,
                                                                 const GridGeometry& work, KernelMode mode,
                                                                 const std::optional<TruncationParams>& trunc) {
    static std::mutex mtx;
    static std::map<std::string, std::shared_ptr<const std::vector<double>>> cache;
    std::ostringstream key;
    key.precision(17);
    key << int(spec.kind) << ':' << spec.s << ':' << spec.d << ':' << geom.n << ':' << geom.L << ':' << int(mode)
        << ':' << (trunc ? trunc->eps : -1.0);
    {
      std::lock_guard lock(mtx);
      if (auto it = cache.find(key.str()); it != cache.end()) return it->second;
    }
    const int nw = work.n, nh = nw / 2 + 1;
    const int mmax = nw / 2;
    // The symbol depends on |m|^2 only.
    std::vector<double> by_m2(3 * mmax * mmax + 1, 0.0);
    if (mode == KernelMode::Periodic) {
      for (std::size_t m2 = 1; m2 < by_m2.size(); ++m2)
        by_m2[m2] = fourier_symbol_g(spec, std::sqrt(double(m2)) / work.L);
    } else {
      const double R = geom.L;
      std::vector<double> breaks;
      if (trunc) breaks = {0.5 * trunc->eps, trunc->eps};
      auto profile = [&](double r) { return trunc ? eval_g_trunc_r(spec, *trunc, r) : eval_g(spec, r); };
      std::vector<char> used(by_m2.size(), 0);
      for (int a = -mmax; a <= mmax; ++a)
        for (int b = -mmax; b <= mmax; ++b)
          for (int c = 0; c <= mmax; ++c) used[a * a + b * b + c * c] = 1;
      for (std::size_t m2 = 0; m2 < by_m2.size(); ++m2)
        if (used[m2]) by_m2[m2] = radial_transform_3d(profile, R, std::sqrt(double(m2)) / work.L, breaks);
    }
    auto table = std::make_shared<std::vector<double>>(static_cast<std::size_t>(nw) * nw * nh);
    for (int a = 0; a < nw; ++a)
      for (int b = 0; b < nw; ++b)
        for (int k = 0; k < nh; ++k) {
          const int fa = work.freq(a), fb = work.freq(b);
          (*table)[(static_cast<std::size_t>(a) * nw + b) * nh + k] = by_m2[fa * fa + fb * fb + k * k];
        }
    std::lock_guard lock(mtx);
    cache.emplace(key.str(), table);
    return table;
  }

  PotentialSpec spec_;
  GridGeometry geom_;
  GridGeometry work_;
  KernelMode mode_;
  std::optional<TruncationParams> trunc_;
  std::unique_ptr<Fft3> fft_;
  std::shared_ptr<const std::vector<double>> symbol_;
};

}  // namespace mflab
