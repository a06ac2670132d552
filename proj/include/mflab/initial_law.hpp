#pragma once

#include "mflab/grid.hpp"
#include "mflab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace mflab {

struct GaussianComponent {
  double weight = 1.0;
  std::vector<double> mean;  // empty means the origin
  double variance = 1.0;
};

// Law of the iid initial particles and of the initial PDE datum.
struct InitialLaw {
  enum class Kind { Gaussian, UniformBall, Grid };

  Kind kind = Kind::Gaussian;
  std::vector<GaussianComponent> components{GaussianComponent{}};  // Gaussian (mixture)
  double radius = 1.0;                                              // UniformBall, centred at the origin
  std::shared_ptr<const GridDensity> grid;                          // Grid

  static InitialLaw gaussian(double variance, std::vector<double> mean = {}) {
    InitialLaw law;
    law.components = {GaussianComponent{1.0, std::move(mean), variance}};
    return law;
  }
  static InitialLaw mixture(std::vector<GaussianComponent> comps) {
    InitialLaw law;
    law.components = std::move(comps);
    return law;
  }
  static InitialLaw uniform_ball(double radius) {
    InitialLaw law;
    law.kind = Kind::UniformBall;
    law.radius = radius;
    return law;
  }
  static InitialLaw from_grid(GridDensity mu) {
    InitialLaw law;
    law.kind = Kind::Grid;
    law.grid = std::make_shared<const GridDensity>(std::move(mu));
    return law;
  }

  void validate(int d) const {
    switch (kind) {
      case Kind::Gaussian: {
        double wsum = 0.0;
        for (const auto& c : components) {
          if (!(c.variance > 0.0)) throw std::invalid_argument("initial law: Gaussian variance must be > 0");
          if (!(c.weight >= 0.0)) throw std::invalid_argument("initial law: mixture weights must be >= 0");
          if (!c.mean.empty() && static_cast<int>(c.mean.size()) != d)
            throw std::invalid_argument("initial law: mean has wrong dimension");
          wsum += c.weight;
        }
        if (!(wsum > 0.0)) throw std::invalid_argument("initial law: degenerate sampler (zero total weight)");
        break;
      }
      case Kind::UniformBall:
        if (!(radius > 0.0)) throw std::invalid_argument("initial law: degenerate sampler (ball radius <= 0)");
        break;
      case Kind::Grid:
        if (!grid || d != 3) throw std::invalid_argument("initial law: grid sampler needs a 3-d grid density");
        if (!(grid->max_value() > 0.0)) throw std::invalid_argument("initial law: degenerate sampler (zero support)");
        break;
    }
  }

  double total_weight() const {
    double w = 0.0;
    for (const auto& c : components) w += c.weight;
    return w;
  }

  // Draws one point; `attempt` distinguishes redraws of the same particle.
  std::vector<double> draw(int d, const CounterRng& rng, std::uint64_t particle, std::uint64_t attempt) const {
    std::vector<double> x(d, 0.0);
    const std::uint64_t base = attempt * 64;
    switch (kind) {
      case Kind::Gaussian: {
        double u = rng.uniform(particle, base + 63) * total_weight();
        const GaussianComponent* comp = &components.back();
        for (const auto& c : components) {
          if (u < c.weight) {
            comp = &c;
            break;
          }
          u -= c.weight;
        }
        const double sd = std::sqrt(comp->variance);
        for (int a = 0; a < d; ++a) x[a] = (comp->mean.empty() ? 0.0 : comp->mean[a]) + sd * rng.normal(particle, base + a);
        return x;
      }
      case Kind::UniformBall: {
        double nrm = 0.0;
        for (int a = 0; a < d; ++a) {
          x[a] = rng.normal(particle, base + a);
          nrm += x[a] * x[a];
        }
        const double r = radius * std::pow(rng.uniform(particle, base + 62), 1.0 / d);
        for (auto& v : x) v *= r / std::sqrt(nrm);
        return x;
      }
      case Kind::Grid: {
        const auto& g = grid->geom;
        const double top = grid->max_value();
        for (std::uint64_t k = 0; k < 1000000; ++k) {
          const std::uint64_t c = (attempt << 32) + k;
          for (int a = 0; a < 3; ++a) x[a] = -0.5 * g.L + (g.L - g.h()) * rng.uniform(c, 4 * particle + a);
          const double v = std::max(0.0, interpolate(g, grid->values, x, Interpolation::Trilinear));
          if (rng.uniform(c, 4 * particle + 3) * top < v) return x;
        }
        throw std::runtime_error("initial law: rejection sampling did not accept within 1e6 proposals");
      }
    }
    return x;
  }

  // Pointwise density (Gaussian kinds only), used for analytic grids.
  double density(std::span<const double> x) const {
    if (kind != Kind::Gaussian) throw std::logic_error("initial law: analytic density only for Gaussian laws");
    const int d = static_cast<int>(x.size());
    double acc = 0.0;
    for (const auto& c : components) {
      double r2 = 0.0;
      for (int a = 0; a < d; ++a) {
        const double dx = x[a] - (c.mean.empty() ? 0.0 : c.mean[a]);
        r2 += dx * dx;
      }
      acc += c.weight * std::pow(2.0 * std::numbers::pi * c.variance, -0.5 * d) * std::exp(-0.5 * r2 / c.variance);
    }
    return acc / total_weight();
  }

  // Grid datum normalized to unit mass; the ball indicator is cell-averaged on 8^3 sub-samples.
  GridDensity on_grid(const GridGeometry& g) const {
    g.validate();
    switch (kind) {
      case Kind::Gaussian: {
        auto mu = GridDensity::from_function(g, [&](double x, double y, double z) {
          const double p[3] = {x, y, z};
          return density(p);
        });
        mu.normalize();
        return mu;
      }
      case Kind::UniformBall: {
        const int sub = 8;
        const double h = g.h();
        auto mu = GridDensity::from_function(g, [&](double x, double y, double z) {
          const double rc = std::sqrt(x * x + y * y + z * z);
          if (rc + h > radius) {
            if (rc - h > radius) return 0.0;
            int inside = 0;
            for (int i = 0; i < sub; ++i)
              for (int j = 0; j < sub; ++j)
                for (int k = 0; k < sub; ++k) {
                  const double px = x + h * ((i + 0.5) / sub - 0.5), py = y + h * ((j + 0.5) / sub - 0.5),
                               pz = z + h * ((k + 0.5) / sub - 0.5);
                  inside += px * px + py * py + pz * pz <= radius * radius;
                }
            return double(inside) / (sub * sub * sub);
          }
          return 1.0;
        });
        mu.normalize();
        return mu;
      }
      case Kind::Grid:
        if (!(grid->geom == g)) throw std::invalid_argument("initial law: grid density geometry mismatch");
        {
          GridDensity mu = *grid;
          mu.normalize();
          return mu;
        }
    }
    throw std::logic_error("initial law: unknown kind");
  }
};

}  // namespace mflab
