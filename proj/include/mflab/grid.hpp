#pragma once

#include <fftw3.h>

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <new>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mflab {

template <class T>
struct FftwAllocator {
  using value_type = T;
  FftwAllocator() = default;
  template <class U>
  FftwAllocator(const FftwAllocator<U>&) {}
  T* allocate(std::size_t n) {
    void* p = fftw_malloc(n * sizeof(T));
    if (!p) throw std::bad_alloc();
    return static_cast<T*>(p);
  }
  void deallocate(T* p, std::size_t) { fftw_free(p); }
  template <class U>
  bool operator==(const FftwAllocator<U>&) const {
    return true;
  }
};

using Field = std::vector<double, FftwAllocator<double>>;
using Spectrum = std::vector<std::complex<double>, FftwAllocator<std::complex<double>>>;

// Periodic cube [-L/2, L/2)^3 sampled at x_j = -L/2 + j h, h = L/n; index (i, j, k) -> (i n + j) n + k.
struct GridGeometry {
  int n = 64;
  double L = 16.0;

  void validate() const {
    if (n < 4 || (n & (n - 1)) != 0) throw std::invalid_argument("grid: n must be a power of two >= 4");
    if (n > 256) throw std::invalid_argument("grid: n above the memory ceiling");
    if (!(L > 0.0)) throw std::invalid_argument("grid: L > 0 required");
  }
  double h() const { return L / n; }
  double cell_volume() const { return h() * h() * h(); }
  double coord(int j) const { return -0.5 * L + j * h(); }
  std::size_t size() const { return static_cast<std::size_t>(n) * n * n; }
  std::size_t spectrum_size() const { return static_cast<std::size_t>(n) * n * (n / 2 + 1); }
  std::size_t index(int i, int j, int k) const { return (static_cast<std::size_t>(i) * n + j) * n + k; }
  // Signed lattice frequency of FFT index a.
  int freq(int a) const { return a <= n / 2 ? a : a - n; }
  bool operator==(const GridGeometry&) const = default;
};

struct GridDensity {
  GridGeometry geom;
  Field values;
  double t = 0.0;

  GridDensity() = default;
  explicit GridDensity(GridGeometry g, double time = 0.0) : geom(g), values(g.size(), 0.0), t(time) {}

  double mass() const {
    double acc = 0.0;
    for (double v : values) acc += v;
    return acc * geom.cell_volume();
  }
  double min_value() const {
    double m = values.front();
    for (double v : values) m = std::min(m, v);
    return m;
  }
  double max_value() const {
    double m = values.front();
    for (double v : values) m = std::max(m, v);
    return m;
  }
  void normalize() {
    const double m = mass();
    if (!(m > 0.0)) throw std::domain_error("grid density: cannot normalize zero mass");
    for (auto& v : values) v /= m;
  }

  template <class F>
  static GridDensity from_function(GridGeometry g, F f) {
    g.validate();
    GridDensity out(g);
    for (int i = 0; i < g.n; ++i)
      for (int j = 0; j < g.n; ++j)
        for (int k = 0; k < g.n; ++k) out.values[g.index(i, j, k)] = f(g.coord(i), g.coord(j), g.coord(k));
    return out;
  }
};

// FFTW r2c/c2r transforms on n^3 grids; plans are cached per n and executed with the new-array API.
class Fft3 {
 public:
  explicit Fft3(int n) : n_(n) {
    static std::mutex mtx;
    static std::map<int, std::shared_ptr<Plans>> cache;
    std::lock_guard lock(mtx);
    auto& slot = cache[n];
    if (!slot) {
      slot = std::make_shared<Plans>();
      const std::size_t nr = static_cast<std::size_t>(n) * n * n, nc = static_cast<std::size_t>(n) * n * (n / 2 + 1);
      Field r(nr);
      Spectrum c(nc);
      auto* cp = reinterpret_cast<fftw_complex*>(c.data());
      slot->fwd = fftw_plan_dft_r2c_3d(n, n, n, r.data(), cp, FFTW_ESTIMATE);
      slot->inv = fftw_plan_dft_c2r_3d(n, n, n, cp, r.data(), FFTW_ESTIMATE);
      if (!slot->fwd || !slot->inv) throw std::runtime_error("fftw: plan creation failed for n=" + std::to_string(n));
    }
    plans_ = slot;
  }

  int n() const { return n_; }

  void forward(const Field& in, Spectrum& out) const {
    out.resize(static_cast<std::size_t>(n_) * n_ * (n_ / 2 + 1));
    // r2c never writes its input; the const_cast only satisfies the C signature.
    fftw_execute_dft_r2c(plans_->fwd, const_cast<double*>(in.data()), reinterpret_cast<fftw_complex*>(out.data()));
  }

  // Unnormalized inverse; the spectrum is consumed.
  void inverse(Spectrum& in, Field& out) const {
    out.resize(static_cast<std::size_t>(n_) * n_ * n_);
    fftw_execute_dft_c2r(plans_->inv, reinterpret_cast<fftw_complex*>(in.data()), out.data());
  }

 private:
  struct Plans {
    fftw_plan fwd = nullptr;
    fftw_plan inv = nullptr;
  };
  int n_;
  std::shared_ptr<Plans> plans_;
};

enum class Interpolation { Trilinear, Tricubic };

namespace detail {

inline void interp_weights_cubic(double f, std::array<double, 4>& w) {
  // Lagrange weights on nodes -1, 0, 1, 2.
  w[0] = -f * (f - 1.0) * (f - 2.0) / 6.0;
  w[1] = (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0;
  w[2] = -(f + 1.0) * f * (f - 2.0) / 2.0;
  w[3] = (f + 1.0) * f * (f - 1.0) / 6.0;
}

}  // namespace detail

inline bool inside_box(const GridGeometry& g, std::span<const double> x) {
  for (int a = 0; a < 3; ++a)
    if (!(x[a] >= -0.5 * g.L && x[a] <= 0.5 * g.L - g.h())) return false;
  return true;
}

// Interpolates a grid field at x. Tricubic falls back to trilinear where the 4-point stencil leaves the box.
inline double interpolate(const GridGeometry& g, const Field& f, std::span<const double> x,
                          Interpolation mode = Interpolation::Tricubic) {
  if (!inside_box(g, x))
    throw std::domain_error("interpolate: point (" + std::to_string(x[0]) + ", " + std::to_string(x[1]) + ", " +
                            std::to_string(x[2]) + ") outside the grid box");
  const double h = g.h();
  std::array<int, 3> base;
  std::array<double, 3> frac;
  bool cubic = mode == Interpolation::Tricubic;
  for (int a = 0; a < 3; ++a) {
    const double u = (x[a] + 0.5 * g.L) / h;
    base[a] = std::min(static_cast<int>(std::floor(u)), g.n - 2);
    frac[a] = u - base[a];
    if (base[a] < 1 || base[a] > g.n - 3) cubic = false;
  }
  if (!cubic) {
    double acc = 0.0;
    for (int di = 0; di < 2; ++di)
      for (int dj = 0; dj < 2; ++dj)
        for (int dk = 0; dk < 2; ++dk) {
          const double w = (di ? frac[0] : 1.0 - frac[0]) * (dj ? frac[1] : 1.0 - frac[1]) *
                           (dk ? frac[2] : 1.0 - frac[2]);
          acc += w * f[g.index(base[0] + di, base[1] + dj, base[2] + dk)];
        }
    return acc;
  }
  std::array<std::array<double, 4>, 3> w;
  for (int a = 0; a < 3; ++a) detail::interp_weights_cubic(frac[a], w[a]);
  double acc = 0.0;
  for (int di = 0; di < 4; ++di) {
    double acc_j = 0.0;
    for (int dj = 0; dj < 4; ++dj) {
      const std::size_t row = g.index(base[0] + di - 1, base[1] + dj - 1, base[2] - 1);
      double acc_k = 0.0;
      for (int dk = 0; dk < 4; ++dk) acc_k += w[2][dk] * f[row + dk];
      acc_j += w[1][dj] * acc_k;
    }
    acc += w[0][di] * acc_j;
  }
  return acc;
}

}  // namespace mflab
