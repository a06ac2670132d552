#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mflab {

enum class KernelKind { Log, Riesz };

// g(x) = -log|x| (Log, s = 0) or |x|^{-s} (Riesz), sub-Coulombic: 0 <= s < d - 2.
struct PotentialSpec {
  KernelKind kind = KernelKind::Riesz;
  double s = 0.5;
  int d = 3;

  static PotentialSpec riesz(double s, int d) {
    PotentialSpec p{KernelKind::Riesz, s, d};
    p.validate();
    return p;
  }
  static PotentialSpec log(int d) {
    PotentialSpec p{KernelKind::Log, 0.0, d};
    p.validate();
    return p;
  }

  void validate() const {
    if (d < 3) throw std::invalid_argument("potential: d >= 3 required, got d=" + std::to_string(d));
    if (!(s >= 0.0) || !(s < d - 2.0))
      throw std::invalid_argument("potential: s < d-2 violated (sub-Coulombic range 0 <= s < d-2), got s=" +
                                  std::to_string(s) + ", d=" + std::to_string(d));
    if (kind == KernelKind::Riesz && s == 0.0)
      throw std::invalid_argument("potential: Riesz kernel needs s > 0; use the Log kind for s = 0");
    if (kind == KernelKind::Log && s != 0.0)
      throw std::invalid_argument("potential: Log kind requires s = 0");
  }

  bool is_log() const { return kind == KernelKind::Log; }
};

// Radial profile f(r) and its first three derivatives.
struct RadialJet {
  double f, d1, d2, d3;
};

namespace detail {

inline void require_positive_radius(double r) {
  if (!(r > 0.0)) throw std::domain_error("potential: evaluation at r <= 0 (kernel singularity)");
}

inline double norm(std::span<const double> x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return std::sqrt(acc);
}

}  // namespace detail

inline RadialJet radial_jet(const PotentialSpec& spec, double r) {
  detail::require_positive_radius(r);
  if (spec.is_log()) return {-std::log(r), -1.0 / r, 1.0 / (r * r), -2.0 / (r * r * r)};
  const double s = spec.s;
  const double p = std::pow(r, -s);
  return {p, -s * p / r, s * (s + 1.0) * p / (r * r), -s * (s + 1.0) * (s + 2.0) * p / (r * r * r)};
}

inline double eval_g(const PotentialSpec& spec, double r) {
  detail::require_positive_radius(r);
  return spec.is_log() ? -std::log(r) : std::pow(r, -spec.s);
}

// g'(r)/r as a function of r^2, so that grad g(x) = grad_factor * x. Hot loop helper.
inline double grad_factor_r2(const PotentialSpec& spec, double r2) {
  if (spec.is_log()) return -1.0 / r2;
  if (spec.s == 0.5) return -0.5 / (r2 * std::sqrt(std::sqrt(r2)));
  return -spec.s * std::pow(r2, -0.5 * spec.s - 1.0);
}

inline std::vector<double> grad_g(const PotentialSpec& spec, std::span<const double> x) {
  const double r = detail::norm(x);
  detail::require_positive_radius(r);
  const double c = grad_factor_r2(spec, r * r);
  std::vector<double> out(x.size());
  for (std::size_t a = 0; a < x.size(); ++a) out[a] = c * x[a];
  return out;
}

inline double laplacian_g(const PotentialSpec& spec, double r) {
  detail::require_positive_radius(r);
  const int d = spec.d;
  if (spec.is_log()) return -(d - 2.0) / (r * r);
  return -spec.s * (d - spec.s - 2.0) * std::pow(r, -spec.s - 2.0);
}

// Hessian of a radial profile at x, row-major d x d.
inline std::vector<double> radial_hessian(const RadialJet& j, std::span<const double> x) {
  const std::size_t d = x.size();
  const double r = detail::norm(x);
  std::vector<double> h(d * d);
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b) {
      const double ua = x[a] / r, ub = x[b] / r;
      h[a * d + b] = (j.d2 - j.d1 / r) * ua * ub + (a == b ? j.d1 / r : 0.0);
    }
  return h;
}

inline std::vector<double> hessian_g(const PotentialSpec& spec, std::span<const double> x) {
  const double r = detail::norm(x);
  return radial_hessian(radial_jet(spec, r), x);
}

// Frobenius norm of the k-th derivative tensor (k = 0..3) of a radial profile at radius r.
inline double radial_tensor_norm(const RadialJet& j, double r, int d, int k) {
  switch (k) {
    case 0:
      return std::abs(j.f);
    case 1:
      return std::abs(j.d1);
    case 2: {
      const double a = j.d2, b = j.d1 / r;
      return std::sqrt(a * a + (d - 1.0) * b * b);
    }
    case 3: {
      // T = A u(x)u(x)u + B sym(delta (x) u) with the closed-form radial coefficients.
      const double A = j.d3 - 3.0 * j.d2 / r + 3.0 * j.d1 / (r * r);
      const double B = j.d2 / r - j.d1 / (r * r);
      // |T|^2 = A^2 + 6AB + 3B^2 (d + 2) in the orthonormal frame aligned with u.
      const double sq = A * A + 6.0 * A * B + 3.0 * B * B * (d + 2.0);
      return std::sqrt(std::max(sq, 0.0));
    }
    default:
      throw std::invalid_argument("radial_tensor_norm: k must be in 0..3");
  }
}

// Riesz symbol constant: FT of |x|^{-s} is c(d,s) |xi|^{s-d} under f^(xi) = int f e^{-2 pi i x.xi}.
inline double riesz_fourier_constant(int d, double s) {
  return std::pow(std::numbers::pi, s - 0.5 * d) * std::tgamma(0.5 * (d - s)) / std::tgamma(0.5 * s);
}

// -log|x| has symbol c_log(d) |xi|^{-d} away from the origin; c_log is the s-derivative of c(d,s) at 0.
inline double log_fourier_constant(int d) {
  return std::tgamma(0.5 * d) / (2.0 * std::pow(std::numbers::pi, 0.5 * d));
}

inline double fourier_constant(const PotentialSpec& spec) {
  return spec.is_log() ? log_fourier_constant(spec.d) : riesz_fourier_constant(spec.d, spec.s);
}

inline double fourier_symbol_g(const PotentialSpec& spec, double k) {
  if (!(k > 0.0)) throw std::domain_error("fourier_symbol_g: k <= 0 (zero mode is handled by callers)");
  return fourier_constant(spec) * std::pow(k, spec.s - spec.d);
}

// Smooth truncation g_(eps) = g * (1 - chi(|x|/eps)); chi = 1 on [0, 1/2], 0 on [1, inf).
struct TruncationParams {
  double eps = 1e-3;

  void validate() const {
    if (!(eps > 0.0) || !std::isfinite(eps)) throw std::invalid_argument("truncation: eps > 0 required");
  }
};

namespace detail {

inline double bump_h(double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; }
inline double bump_dh(double t) { return t > 0.0 ? std::exp(-1.0 / t) / (t * t) : 0.0; }

}  // namespace detail

inline double cutoff_chi(double r) {
  if (r <= 0.5) return 1.0;
  if (r >= 1.0) return 0.0;
  const double a = detail::bump_h(2.0 - 2.0 * r), b = detail::bump_h(2.0 * r - 1.0);
  return a / (a + b);
}

// 1 - chi(r) without cancellation near r = 1/2.
inline double cutoff_chi_complement(double r) {
  if (r <= 0.5) return 0.0;
  if (r >= 1.0) return 1.0;
  const double a = detail::bump_h(2.0 - 2.0 * r), b = detail::bump_h(2.0 * r - 1.0);
  return b / (a + b);
}

inline double cutoff_chi_prime(double r) {
  if (r <= 0.5 || r >= 1.0) return 0.0;
  const double a = detail::bump_h(2.0 - 2.0 * r), b = detail::bump_h(2.0 * r - 1.0);
  const double da = -2.0 * detail::bump_dh(2.0 - 2.0 * r), db = 2.0 * detail::bump_dh(2.0 * r - 1.0);
  const double den = a + b;
  return (da * b - a * db) / (den * den);
}

inline double eval_g_trunc_r(const PotentialSpec& spec, const TruncationParams& tr, double r) {
  if (r >= tr.eps) return eval_g(spec, r);
  if (r <= 0.5 * tr.eps) return 0.0;
  return eval_g(spec, r) * cutoff_chi_complement(r / tr.eps);
}

inline double eval_g_trunc(const PotentialSpec& spec, const TruncationParams& tr, std::span<const double> x) {
  return eval_g_trunc_r(spec, tr, detail::norm(x));
}

// (d/dr g_(eps))(r) / r, so that grad g_(eps)(x) = factor * x.
inline double grad_factor_trunc_r2(const PotentialSpec& spec, const TruncationParams& tr, double r2) {
  const double eps = tr.eps;
  if (r2 >= eps * eps) return grad_factor_r2(spec, r2);
  if (r2 <= 0.25 * eps * eps) return 0.0;
  const double r = std::sqrt(r2);
  const double q = r / eps;
  const double dg = grad_factor_r2(spec, r2) * r;
  const double dtr = dg * cutoff_chi_complement(q) - eval_g(spec, r) * cutoff_chi_prime(q) / eps;
  return dtr / r;
}

inline std::vector<double> grad_g_trunc(const PotentialSpec& spec, const TruncationParams& tr,
                                        std::span<const double> x) {
  double r2 = 0.0;
  for (double v : x) r2 += v * v;
  const double c = grad_factor_trunc_r2(spec, tr, r2);
  std::vector<double> out(x.size());
  for (std::size_t a = 0; a < x.size(); ++a) out[a] = c * x[a];
  return out;
}

// Fourier transform of the uniform probability measure on the unit sphere of R^d at |xi| = z / (2 pi).
inline double sphere_transform(int d, double z) {
  if (z == 0.0) return 1.0;
  if (d == 3) return std::sin(z) / z;
  const double nu = 0.5 * d - 1.0;
  return std::tgamma(0.5 * d) * std::pow(2.0 / z, nu) * std::cyl_bessel_j(nu, z);
}

namespace detail {

// phi_a(u) = ((1+u)^a - (1-u)^a) / (2 a u), u in [0, 1].
inline double smear_phi(double a, double u) {
  if (u < 1e-3) {
    const double u2 = u * u;
    const double c2 = (a - 1.0) * (a - 2.0) / 6.0;
    const double c4 = c2 * (a - 3.0) * (a - 4.0) / 20.0;
    const double c6 = c4 * (a - 5.0) * (a - 6.0) / 42.0;
    return 1.0 + u2 * (c2 + u2 * (c4 + u2 * c6));
  }
  const double plus = std::expm1(a * std::log1p(u));
  const double minus = u >= 1.0 ? -1.0 : std::expm1(a * std::log1p(-u));
  return (plus - minus) / (2.0 * a * u);
}

// psi(u) = 1/2 - ((1+u)^2 log(1+u) - (1-u)^2 log(1-u)) / (4u), the log-kernel analogue.
inline double smear_psi(double u) {
  if (u < 1e-3) {
    // series: -u^2/6 - u^4/60 - u^6/210
    const double u2 = u * u;
    return -u2 * (1.0 / 6.0 + u2 * (1.0 / 60.0 + u2 / 210.0));
  }
  const double lp = (1.0 + u) * (1.0 + u) * std::log1p(u);
  const double lm = u >= 1.0 ? 0.0 : (1.0 - u) * (1.0 - u) * std::log1p(-u);
  return 0.5 - (lp - lm) / (4.0 * u);
}

}  // namespace detail

// Sphere average g_eta(r) of g over the sphere of radius eta centred at distance r from the origin.
inline double smear_g(const PotentialSpec& spec, double eta, double r) {
  if (!(eta > 0.0)) throw std::domain_error("smear_g: eta <= 0");
  if (r < 0.0) throw std::domain_error("smear_g: r < 0");
  if (spec.d == 3) {
    const double big = std::max(r, eta), small = std::min(r, eta);
    const double u = small / big;
    if (spec.is_log()) return -std::log(big) + detail::smear_psi(u);
    return std::pow(big, -spec.s) * detail::smear_phi(2.0 - spec.s, u);
  }
  if (r == 0.0) return eval_g(spec, eta);
  // Polar-angle density on S^{d-1} is proportional to (1 - t^2)^{(d-3)/2}; 128-point Gauss-Legendre.
  static const auto nodes = [] {
    constexpr int n = 128;
    std::vector<std::pair<double, double>> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
      double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
          const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      out.emplace_back(x, 2.0 / ((1.0 - x * x) * dp * dp));
    }
    return out;
  }();
  const double expo = 0.5 * (spec.d - 3.0);
  double num = 0.0, den = 0.0;
  for (const auto& [t, w] : nodes) {
    const double wt = w * std::pow(1.0 - t * t, expo);
    const double rho = std::sqrt(std::max(r * r + eta * eta + 2.0 * r * eta * t, 1e-300));
    num += wt * eval_g(spec, rho);
    den += wt;
  }
  return num / den;
}

}  // namespace mflab
