#pragma once

#include "mflab/flow_matrix.hpp"
#include "mflab/potentials.hpp"
#include "mflab/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace mflab {

struct AssumptionResult {
  std::string assumption;
  bool pass = false;
  double fitted_constant = 0.0;
  std::vector<double> worst_sample;
};

struct AdmissibilityReport {
  std::vector<AssumptionResult> entries;

  bool all_pass() const {
    return std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.pass; });
  }
  const AssumptionResult& at(const std::string& key) const {
    for (const auto& e : entries)
      if (e.assumption == key) return e;
    throw std::out_of_range("admissibility: no entry " + key);
  }
};

inline void to_json(nlohmann::json& j, const AssumptionResult& r) {
  j = nlohmann::json{{"assumption", r.assumption},
                     {"pass", r.pass},
                     {"fitted_constant", r.fitted_constant},
                     {"worst_sample", r.worst_sample}};
}

inline nlohmann::json to_json(const AdmissibilityReport& rep) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& e : rep.entries) arr.push_back(e);
  return arr;
}

// Points with log-uniform radii in [rmin, rmax] and uniform directions.
inline std::vector<std::vector<double>> dyadic_sample(int d, int count, std::uint64_t seed, double rmin = 1e-4,
                                                      double rmax = 1e2) {
  CounterRng rng(seed, 0xad15);
  std::vector<std::vector<double>> pts(count, std::vector<double>(d));
  for (int i = 0; i < count; ++i) {
    double nrm = 0.0;
    for (int a = 0; a < d; ++a) {
      pts[i][a] = rng.normal(i, a);
      nrm += pts[i][a] * pts[i][a];
    }
    const double r = rmin * std::pow(rmax / rmin, rng.uniform(i, 1000));
    const double scale = r / std::sqrt(nrm);
    for (auto& v : pts[i]) v *= scale;
  }
  return pts;
}

namespace detail {

struct RatioFit {
  double c_all = 0.0, c_small = 0.0, c_large = 0.0;
  std::vector<double> worst;
  bool finite = true;
};

// Fits sup of ratio(x) over samples, separately on the smaller-radius and larger-radius halves.
template <class F>
RatioFit fit_ratio(const std::vector<std::vector<double>>& pts, F ratio) {
  std::vector<std::pair<double, std::size_t>> order;
  for (std::size_t i = 0; i < pts.size(); ++i) order.emplace_back(norm(pts[i]), i);
  std::sort(order.begin(), order.end());
  RatioFit fit;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& x = pts[order[k].second];
    const double v = ratio(x);
    if (!std::isfinite(v)) fit.finite = false;
    if (fit.worst.empty() || v > fit.c_all) {
      fit.c_all = v;
      fit.worst = x;
    }
    auto& half = (2 * k < order.size()) ? fit.c_small : fit.c_large;
    half = std::max(half, v);
  }
  return fit;
}

// A constant is credible when it stays bounded as the sampled scale shrinks.
inline bool stable(const RatioFit& f) {
  return f.finite && f.c_small <= 2.0 * std::max(f.c_large, 1e-300);
}

}  // namespace detail

// Numerical screen of the kernel/matrix admissibility conditions on a point sample.
inline AdmissibilityReport check_admissible(const PotentialSpec& spec, const FlowMatrix& M,
                                            const std::vector<std::vector<double>>& sample, double r0 = 0.5) {
  spec.validate();
  if (sample.empty()) throw std::invalid_argument("check_admissible: empty sample");
  const int d = spec.d;
  for (const auto& x : sample)
    if (static_cast<int>(x.size()) != d || !(detail::norm(x) > 0.0))
      throw std::invalid_argument("check_admissible: sample points must be nonzero d-vectors");
  if (M.dim() != d) throw std::invalid_argument("check_admissible: M dimension mismatch");

  AdmissibilityReport rep;
  const double s = spec.s;
  std::vector<std::vector<double>> near;
  for (const auto& x : sample)
    if (detail::norm(x) < r0) near.push_back(x);

  {  // (i) symmetry
    AssumptionResult e{"(i) symmetry", true, 0.0, sample.front()};
    for (const auto& x : sample) {
      std::vector<double> mx(x.size());
      for (std::size_t a = 0; a < x.size(); ++a) mx[a] = -x[a];
      const double diff = std::abs(eval_g(spec, detail::norm(x)) - eval_g(spec, detail::norm(mx)));
      const auto gp = grad_g(spec, x), gm = grad_g(spec, mx);
      double odd = 0.0;
      for (std::size_t a = 0; a < x.size(); ++a) odd = std::max(odd, std::abs(gp[a] + gm[a]));
      if (std::max(diff, odd) > e.fitted_constant) {
        e.fitted_constant = std::max(diff, odd);
        e.worst_sample = x;
      }
    }
    e.pass = e.fitted_constant == 0.0;
    rep.entries.push_back(e);
  }
  {  // (ii) blow-up at the origin: g strictly increases along a dyadic sequence toward 0
    const auto it = std::min_element(sample.begin(), sample.end(),
                                      [](const auto& a, const auto& b) { return detail::norm(a) < detail::norm(b); });
    double r = detail::norm(*it);
    double prev = eval_g(spec, r);
    bool increasing = true;
    for (int k = 0; k < 40; ++k) {
      r *= 0.5;
      const double v = eval_g(spec, r);
      if (!(v > prev)) increasing = false;
      prev = v;
    }
    double gmax_sample = -std::numeric_limits<double>::infinity();
    for (const auto& x : sample) gmax_sample = std::max(gmax_sample, eval_g(spec, detail::norm(x)));
    rep.entries.push_back({"(ii) blow-up at 0", increasing && prev > gmax_sample, prev, *it});
  }
  {  // (iii) superharmonicity
    AssumptionResult e{"(iii) laplacian <= 0", true, -std::numeric_limits<double>::infinity(), sample.front()};
    for (const auto& x : sample) {
      const double v = laplacian_g(spec, detail::norm(x));
      if (v > e.fitted_constant) {
        e.fitted_constant = v;
        e.worst_sample = x;
      }
    }
    e.pass = e.fitted_constant <= 0.0;
    rep.entries.push_back(e);
  }
  for (int k = 0; k <= 3; ++k) {  // (iv) derivative growth
    auto fit = detail::fit_ratio(sample, [&](const std::vector<double>& x) {
      const double r = detail::norm(x);
      const double val = radial_tensor_norm(radial_jet(spec, r), r, d, k);
      const double scale = std::pow(r, -s - k) + ((s == 0.0 && k == 0) ? std::abs(std::log(r)) : 0.0);
      return val / scale;
    });
    rep.entries.push_back({"(iv) derivative growth k=" + std::to_string(k), detail::stable(fit), fit.c_all, fit.worst});
  }
  {  // (v) |x||grad g| + |x|^2 |hess g| <= C g near 0
    if (near.empty()) {
      rep.entries.push_back({"(v) relative derivative bound", false, 0.0, {}});
    } else {
      auto fit = detail::fit_ratio(near, [&](const std::vector<double>& x) {
        const double r = detail::norm(x);
        const auto j = radial_jet(spec, r);
        return (r * radial_tensor_norm(j, r, d, 1) + r * r * radial_tensor_norm(j, r, d, 2)) / j.f;
      });
      rep.entries.push_back({"(v) relative derivative bound", detail::stable(fit), fit.c_all, fit.worst});
    }
  }
  {  // (vi) Fourier sandwich: sample points reused as frequencies
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    std::vector<double> worst = sample.front();
    for (const auto& x : sample) {
      const double k = detail::norm(x);
      const double v = fourier_symbol_g(spec, k) * std::pow(k, d - s);
      if (v < lo) {
        lo = v;
        worst = x;
      }
      hi = std::max(hi, v);
    }
    rep.entries.push_back({"(vi) fourier sandwich", lo > 0.0 && std::isfinite(hi) && hi / lo < 1.0 + 1e-9, hi, worst});
  }
  {  // (vii) scale monotonicity on B(0, r0): g(y) <= c_s g(x), c_s < 1, for |y| >= 2|x| (s > 0);
     // g(x) - g(y) >= c_0 > 0 (s = 0)
    std::vector<std::pair<double, std::size_t>> order;
    for (std::size_t i = 0; i < near.size(); ++i) order.emplace_back(detail::norm(near[i]), i);
    std::sort(order.begin(), order.end());
    double c = s > 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    std::vector<double> worst;
    std::size_t jstart = 0;
    for (std::size_t i = 0; i < order.size(); ++i) {
      const double rx = order[i].first, gx = eval_g(spec, rx);
      while (jstart < order.size() && order[jstart].first < 2.0 * rx) ++jstart;
      for (std::size_t j = jstart; j < order.size(); ++j) {
        const double gy = eval_g(spec, order[j].first);
        if (s > 0.0) {
          if (gy / gx > c) {
            c = gy / gx;
            worst = near[order[i].second];
          }
        } else if (gx - gy < c) {
          c = gx - gy;
          worst = near[order[i].second];
        }
      }
    }
    const bool any_pair = !worst.empty();
    const bool pass = any_pair && (s > 0.0 ? c < 1.0 : c > 0.0);
    rep.entries.push_back({"(vii) scale monotonicity", pass, any_pair ? c : 0.0, worst});
  }
  {  // (x) M : hess g >= 0
    AssumptionResult e{"(x) M:hess g >= 0", true, std::numeric_limits<double>::infinity(), sample.front()};
    for (const auto& x : sample) {
      const double v = M.frobenius_with_symmetric(hessian_g(spec, x));
      if (v < e.fitted_constant) {
        e.fitted_constant = v;
        e.worst_sample = x;
      }
    }
    e.pass = e.fitted_constant >= 0.0;
    rep.entries.push_back(e);
  }
  {  // negativity of M
    const auto [lam, vec] = M.max_symmetric_eigen();
    std::vector<double> v(vec.data(), vec.data() + vec.size());
    rep.entries.push_back({"M xi.xi <= 0", lam <= 1e-12, lam, v});
  }
  return rep;
}

}  // namespace mflab
