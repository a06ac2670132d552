#include "mflab/potentials.hpp"
#include "mflab/rng.hpp"
#include "mflab/stats.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

using namespace mflab;

namespace {

const auto kRiesz = PotentialSpec::riesz(0.5, 3);
const auto kLog = PotentialSpec::log(3);

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

std::vector<double> random_point(const CounterRng& rng, std::uint64_t k, double rmin, double rmax) {
  std::vector<double> x(3);
  double r2 = 0.0;
  for (int a = 0; a < 3; ++a) {
    x[a] = rng.normal(k, a);
    r2 += x[a] * x[a];
  }
  const double r = rmin * std::pow(rmax / rmin, rng.uniform(k, 3));
  for (auto& v : x) v *= r / std::sqrt(r2);
  return x;
}

}  // namespace

TEST(Potentials, EvalExamples) {
  EXPECT_DOUBLE_EQ(eval_g(kRiesz, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(eval_g(kLog, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(eval_g(kRiesz, 0.25), 2.0);
  EXPECT_THROW(eval_g(kRiesz, 0.0), std::domain_error);
  EXPECT_THROW(eval_g(kLog, -1.0), std::domain_error);
}

TEST(Potentials, SpecValidation) {
  EXPECT_THROW(PotentialSpec::riesz(1.0, 3), std::invalid_argument);
  EXPECT_THROW(PotentialSpec::riesz(-0.1, 3), std::invalid_argument);
  EXPECT_THROW(PotentialSpec::riesz(0.5, 2), std::invalid_argument);
  EXPECT_NO_THROW(PotentialSpec::riesz(1.5, 4));
}

TEST(Potentials, GradientExamples) {
  const std::vector<double> e1{1.0, 0.0, 0.0}, two{2.0, 0.0, 0.0};
  const auto g1 = grad_g(kRiesz, e1);
  EXPECT_DOUBLE_EQ(g1[0], -0.5);
  EXPECT_DOUBLE_EQ(g1[1], 0.0);
  const auto g2 = grad_g(kLog, two);
  EXPECT_DOUBLE_EQ(g2[0], -0.5);
  EXPECT_THROW(grad_g(kRiesz, std::vector<double>{0.0, 0.0, 0.0}), std::domain_error);
}

TEST(Potentials, GradientMatchesCentralDifferences) {
  const CounterRng rng(11, 0);
  const double h = 1e-5;
  for (const auto& spec : {kRiesz, kLog, PotentialSpec::riesz(1.2, 4)}) {
    for (std::uint64_t k = 0; k < 1000; ++k) {
      auto x = random_point(rng, k, 0.05, 10.0);
      x.resize(spec.d, 0.0);
      if (spec.d == 4) x[3] = 0.3 * x[0];
      const auto g = grad_g(spec, x);
      double err = 0.0, mag = 0.0;
      for (int a = 0; a < spec.d; ++a) {
        auto xp = x, xm = x;
        xp[a] += h;
        xm[a] -= h;
        const double fd = (eval_g(spec, detail::norm(xp)) - eval_g(spec, detail::norm(xm))) / (2 * h);
        err = std::max(err, std::abs(fd - g[a]));
        mag = std::max(mag, std::abs(g[a]));
      }
      ASSERT_LT(err / mag, 1e-6) << "k=" << k;
    }
  }
  const std::vector<double> x{0.3, 0.4, 0.5};
  const auto g = grad_g(kRiesz, x);
  for (int a = 0; a < 3; ++a) {
    auto xp = x, xm = x;
    xp[a] += h;
    xm[a] -= h;
    const double fd = (eval_g(kRiesz, detail::norm(xp)) - eval_g(kRiesz, detail::norm(xm))) / (2 * h);
    EXPECT_LT(rel(g[a], fd), 1e-6);
  }
}

TEST(Potentials, GradientIsOdd) {
  const CounterRng rng(12, 0);
  for (std::uint64_t k = 0; k < 500; ++k) {
    const auto x = random_point(rng, k, 1e-3, 1e2);
    std::vector<double> mx(3);
    for (int a = 0; a < 3; ++a) mx[a] = -x[a];
    for (const auto& spec : {kRiesz, kLog}) {
      const auto gp = grad_g(spec, x), gm = grad_g(spec, mx);
      for (int a = 0; a < 3; ++a) ASSERT_EQ(gp[a], -gm[a]);
    }
  }
}

TEST(Potentials, LaplacianExamples) {
  EXPECT_DOUBLE_EQ(laplacian_g(kRiesz, 1.0), -0.25);
  EXPECT_DOUBLE_EQ(laplacian_g(kLog, 2.0), -0.25);
  EXPECT_DOUBLE_EQ(laplacian_g(PotentialSpec::riesz(1.0, 4), 1.0), -1.0);
  EXPECT_THROW(laplacian_g(kRiesz, 0.0), std::domain_error);
}

TEST(Potentials, LaplacianMatchesRadialDifferences) {
  for (const auto& spec : {kRiesz, kLog, PotentialSpec::riesz(1.0, 4), PotentialSpec::riesz(0.1, 3)}) {
    for (double r : {0.05, 0.3, 1.0, 2.0, 7.5}) {
      const double h = 1e-4 * r;
      const double f0 = eval_g(spec, r), fp = eval_g(spec, r + h), fm = eval_g(spec, r - h);
      const double lap = (fp - 2 * f0 + fm) / (h * h) + (spec.d - 1) / r * (fp - fm) / (2 * h);
      EXPECT_LT(rel(laplacian_g(spec, r), lap), 1e-5) << "r=" << r << " s=" << spec.s;
      EXPECT_LT(laplacian_g(spec, r), 0.0);
    }
  }
}

TEST(Potentials, SymbolHomogeneity) {
  for (const auto& spec : {kRiesz, PotentialSpec::riesz(0.9, 3), PotentialSpec::riesz(1.5, 5)})
    for (double k : {0.01, 0.3, 1.0, 17.0})
      for (double lam : {0.5, 2.0, 3.7}) {
        const double ratio = fourier_symbol_g(spec, lam * k) / fourier_symbol_g(spec, k);
        EXPECT_LT(rel(ratio, std::pow(lam, spec.s - spec.d)), 1e-13);
      }
  EXPECT_THROW(fourier_symbol_g(kRiesz, 0.0), std::domain_error);
}

// Transform of exp(-pi delta |x|^2) |x|^{-s} by radial quadrature, which tends to c(d,s) k^{s-d} as delta -> 0.
TEST(Potentials, RieszSymbolMatchesMollifiedTransform) {
  const double s = 0.5, delta = 1e-4, k = 1.0;
  auto f = [&](double r) { return std::pow(r, 1.0 - s) * std::exp(-std::numbers::pi * delta * r * r) *
                                  std::sin(2 * std::numbers::pi * k * r); };
  const double rmax = std::sqrt(60.0 / (std::numbers::pi * delta));
  double acc = 0.0;
  for (double a = 0.0; a < rmax; a += 0.5)
    acc += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, a + 0.5, 0, 0.0);
  const double numeric = 2.0 / k * acc;
  EXPECT_LT(rel(fourier_symbol_g(kRiesz, k), numeric), 5e-3);
}

// int int g d nu d nu for a Gaussian nu of variance tau: physical side via the chi distribution of x - y,
// Fourier side via the radial Plancherel integral with the symbol.
TEST(Potentials, PlancherelConsistency) {
  const double tau = 0.3;
  for (double s : {0.3, 0.5, 0.8}) {
    const auto spec = PotentialSpec::riesz(s, 3);
    const double physical = std::pow(4.0 * tau, -0.5 * s) * std::tgamma(0.5 * (3.0 - s)) / std::tgamma(1.5);
    // k = t^{1/s} removes the k^{s-1} endpoint singularity
    const double m = 1.0 / s;
    auto integrand = [&](double t) {
      const double k = std::pow(t, m);
      const double nu = std::exp(-2.0 * std::numbers::pi * std::numbers::pi * tau * k * k);
      return 4.0 * std::numbers::pi * m * fourier_symbol_g(spec, 1.0) * nu * nu;
    };
    const double fourier =
        boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 0.0, std::pow(10.0, s), 15, 1e-13);
    EXPECT_LT(rel(fourier, physical), 1e-3) << "s=" << s;
  }
}

TEST(Potentials, TruncationAgreementAndDeadZone) {
  const TruncationParams tr{0.1};
  const std::vector<double> x{0.2, 0.0, 0.0};
  EXPECT_NEAR(eval_g_trunc(kRiesz, tr, x), 2.2360680, 1e-7);
  EXPECT_EQ(eval_g_trunc(kRiesz, tr, std::vector<double>{0.04, 0.0, 0.0}), 0.0);
  EXPECT_EQ(eval_g_trunc(kLog, tr, std::vector<double>{0.0, 0.0, 0.0}), 0.0);
  const CounterRng rng(5, 0);
  for (std::uint64_t k = 0; k < 1000; ++k) {
    const auto p = random_point(rng, k, 1e-3, 1.0);
    const double r = detail::norm(p);
    for (const auto& spec : {kRiesz, kLog}) {
      const double v = eval_g_trunc(spec, tr, p);
      if (r >= tr.eps) ASSERT_EQ(v, eval_g(spec, r));
      if (r <= 0.5 * tr.eps) ASSERT_EQ(v, 0.0);
    }
  }
}

// chi is monotone; g (1 - chi) rises from 0 and, since g decreases, may overshoot g(eps) once before eps.
TEST(Potentials, TruncationTransitionShape) {
  const TruncationParams tr{0.1};
  const double v = eval_g_trunc_r(kRiesz, tr, 0.07);
  EXPECT_GT(v, 0.0);
  EXPECT_LT(v, eval_g(kRiesz, 0.07));
  double prev_chi = 1.0, prev = 0.0;
  int turns = 0;
  bool rising = true;
  for (int i = 0; i <= 5000; ++i) {
    const double r = 0.05 + 0.05 * i / 5000.0;
    const double chi = cutoff_chi(r / tr.eps);
    ASSERT_LE(chi, prev_chi);
    ASSERT_NEAR(cutoff_chi_complement(r / tr.eps), 1.0 - chi, 1e-15);
    prev_chi = chi;
    const double g = eval_g_trunc_r(kRiesz, tr, r);
    if (rising && g < prev) {
      rising = false;
      ++turns;
    } else if (!rising && g > prev) {
      ++turns;
    }
    prev = g;
  }
  EXPECT_LE(turns, 1);
}

TEST(Potentials, TruncatedGradientMatchesDifferences) {
  const TruncationParams tr{0.1};
  const double h = 1e-7;
  for (double r : {0.051, 0.06, 0.07, 0.08, 0.095, 0.2}) {
    const std::vector<double> x{r * 0.6, r * 0.8, 0.0};
    const auto g = grad_g_trunc(kRiesz, tr, x);
    const double radial = (g[0] * x[0] + g[1] * x[1]) / r;
    const double fd = (eval_g_trunc_r(kRiesz, tr, r + h) - eval_g_trunc_r(kRiesz, tr, r - h)) / (2 * h);
    EXPECT_NEAR(radial, fd, 1e-5 * std::max(1.0, std::abs(fd))) << "r=" << r;
  }
}

TEST(Potentials, SphereTransform) {
  EXPECT_EQ(sphere_transform(3, 0.0), 1.0);
  EXPECT_EQ(sphere_transform(5, 0.0), 1.0);
  for (double z : {0.1, 1.0, 4.2, 13.0}) {
    EXPECT_DOUBLE_EQ(sphere_transform(3, z), std::sin(z) / z);
    const double s5 = 3.0 * (std::sin(z) - z * std::cos(z)) / (z * z * z);
    EXPECT_LT(std::abs(sphere_transform(5, z) - s5), 1e-12);
  }
}

TEST(Potentials, SmearedSeriesMatchesDirectFormula) {
  for (double u : {1e-4, 5e-4, 9.99e-4, 1.001e-3, 2e-3}) {
    const long double U = u;
    const long double psi_direct =
        0.5L - ((1 + U) * (1 + U) * std::log1p(U) - (1 - U) * (1 - U) * std::log1p(-U)) / (4 * U);
    EXPECT_NEAR(detail::smear_psi(u), static_cast<double>(psi_direct), 1e-15) << "u=" << u;
    for (double a : {1.5, 1.9, 1.2}) {
      const long double A = a;
      const long double phi = (std::pow(1 + U, A) - std::pow(1 - U, A)) / (2 * A * U);
      EXPECT_NEAR(detail::smear_phi(a, u), static_cast<double>(phi), 1e-14) << "u=" << u << " a=" << a;
    }
  }
  EXPECT_NEAR(detail::smear_psi(1.0), 0.5 - std::log(2.0), 1e-15);
}

TEST(Potentials, SmearedAtCentre) {
  for (double eta : {0.01, 0.1, 0.7}) {
    EXPECT_DOUBLE_EQ(smear_g(kRiesz, eta, 0.0), std::pow(eta, -0.5));
    EXPECT_DOUBLE_EQ(smear_g(kLog, eta, 0.0), -std::log(eta));
  }
  EXPECT_THROW(smear_g(kRiesz, 0.0, 1.0), std::domain_error);
}

// Polar-angle quadrature of the sphere average, then a Monte-Carlo sphere sample.
TEST(Potentials, SmearedMatchesSphereAverage) {
  const double eta = 0.1, r = 0.5;
  const double v = smear_g(kRiesz, eta, r);
  auto f = [&](double t) { return 0.5 * eval_g(kRiesz, std::sqrt(r * r + eta * eta + 2 * r * eta * t)); };
  const double quad = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, -1.0, 1.0, 10, 1e-14);
  EXPECT_LT(rel(v, quad), 1e-12);

  const CounterRng rng(99, 0);
  CompensatedSum acc;
  const std::size_t samples = 1000000;
  for (std::size_t k = 0; k < samples / 2; ++k) {
    std::array<double, 3> u{rng.normal(k, 0), rng.normal(k, 1), rng.normal(k, 2)};
    const double n = std::hypot(u[0], u[1], u[2]);
    for (double sgn : {1.0, -1.0}) {
      const double dx = r + sgn * eta * u[0] / n, dy = sgn * eta * u[1] / n, dz = sgn * eta * u[2] / n;
      acc.add(eval_g(kRiesz, std::hypot(dx, dy, dz)));
    }
  }
  EXPECT_LT(rel(v, acc.value() / samples), 1e-4);

  for (double rr : {0.05, 0.3, 2.0})
    for (double e : {0.1, 0.5}) {
      auto fl = [&](double t) { return 0.5 * eval_g(kLog, std::sqrt(rr * rr + e * e + 2 * rr * e * t)); };
      const double ql = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(fl, -1.0, 1.0, 15, 1e-14);
      EXPECT_NEAR(smear_g(kLog, e, rr), ql, 1e-11);
    }
}

TEST(Potentials, SmearedHigherDimensionMatchesMonteCarlo) {
  const auto spec = PotentialSpec::riesz(1.0, 4);
  const double eta = 0.3, r = 0.8;
  const CounterRng rng(7, 0);
  std::vector<double> vals;
  for (std::uint64_t k = 0; k < 200000; ++k) {
    std::array<double, 4> u;
    double n2 = 0.0;
    for (int a = 0; a < 4; ++a) {
      u[a] = rng.normal(k, a);
      n2 += u[a] * u[a];
    }
    const double n = std::sqrt(n2);
    double d2 = 0.0;
    for (int a = 0; a < 4; ++a) {
      const double c = (a == 0 ? r : 0.0) + eta * u[a] / n;
      d2 += c * c;
    }
    vals.push_back(eval_g(spec, std::sqrt(d2)));
  }
  const auto m = mean_se(vals);
  EXPECT_LT(std::abs(smear_g(spec, eta, r) - m.mean), 5 * m.se);
  EXPECT_LE(smear_g(spec, eta, r), eval_g(spec, r));
}

TEST(Potentials, MeanValueInequality) {
  const CounterRng rng(21, 0);
  for (std::uint64_t k = 0; k < 10000; ++k) {
    const double r = std::pow(10.0, -4.0 + 6.0 * rng.uniform(k, 0));
    const double eta = std::pow(10.0, -4.0 + 4.0 * rng.uniform(k, 1));
    for (const auto& spec : {kRiesz, kLog, PotentialSpec::riesz(0.05, 3), PotentialSpec::riesz(0.95, 3)})
      ASSERT_LE(smear_g(spec, eta, r), eval_g(spec, r)) << "r=" << r << " eta=" << eta;
  }
}

// |g - g_eta| <= C eta^2 r^{-s-2} for r >= 2 eta; C fitted on one half of the sample, checked on the other.
TEST(Potentials, SmearingErrorBound) {
  const CounterRng rng(22, 0);
  for (const auto& spec : {kRiesz, kLog}) {
    double c_fit = 0.0, c_val = 0.0;
    for (std::uint64_t k = 0; k < 10000; ++k) {
      const double eta = std::pow(10.0, -4.0 + 3.5 * rng.uniform(k, 0));
      const double r = 2.0 * eta * std::pow(10.0, 4.0 * rng.uniform(k, 1));
      const double ratio = std::abs(eval_g(spec, r) - smear_g(spec, eta, r)) / (eta * eta * std::pow(r, -spec.s - 2.0));
      (k % 2 ? c_val : c_fit) = std::max(k % 2 ? c_val : c_fit, ratio);
    }
    EXPECT_GT(c_fit, 0.0);
    EXPECT_LE(c_val, 1.05 * c_fit);
    // leading-order constant |Delta g| r^{s+2} / 6
    const double lead = std::abs(laplacian_g(spec, 1.0)) / 6.0;
    EXPECT_NEAR(c_fit, lead, 0.35 * lead);
  }
}

TEST(Potentials, SelfInteractionBound) {
  for (double eta : {1e-3, 0.05, 0.5}) {
    EXPECT_LE(smear_g(kRiesz, eta, 0.0), std::pow(eta, -0.5));
    EXPECT_LE(smear_g(kLog, eta, 0.0), 1.0 + std::abs(std::log(eta)));
  }
}
