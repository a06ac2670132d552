#pragma once

#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace mflab {

// Neumaier-compensated accumulator.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double compensated_sum(std::span<const double> xs) {
  CompensatedSum acc;
  for (double x : xs) acc.add(x);
  return acc.value();
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n = 0;
};

inline MeanSe mean_se(std::span<const double> xs) {
  MeanSe out;
  out.n = xs.size();
  if (xs.empty()) return out;
  out.mean = compensated_sum(xs) / static_cast<double>(xs.size());
  if (xs.size() < 2) return out;
  CompensatedSum sq;
  for (double x : xs) sq.add((x - out.mean) * (x - out.mean));
  const double var = sq.value() / static_cast<double>(xs.size() - 1);
  out.se = std::sqrt(var / static_cast<double>(xs.size()));
  return out;
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double slope_se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

// Ordinary least squares y = intercept + slope x with a 95% Student-t interval on the slope.
inline LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("linear_fit: need >= 2 paired points");
  const double n = static_cast<double>(x.size());
  const double mx = compensated_sum(x) / n, my = compensated_sum(y) / n;
  CompensatedSum sxx, sxy, syy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx.add((x[i] - mx) * (x[i] - mx));
    sxy.add((x[i] - mx) * (y[i] - my));
    syy.add((y[i] - my) * (y[i] - my));
  }
  LinearFit f;
  f.slope = sxy.value() / sxx.value();
  f.intercept = my - f.slope * mx;
  CompensatedSum rss;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - f.intercept - f.slope * x[i];
    rss.add(e * e);
  }
  f.r2 = syy.value() > 0.0 ? 1.0 - rss.value() / syy.value() : 1.0;
  if (x.size() > 2) {
    f.slope_se = std::sqrt(rss.value() / (n - 2.0) / sxx.value());
    boost::math::students_t dist(n - 2.0);
    const double tq = boost::math::quantile(boost::math::complement(dist, 0.025));
    f.ci_low = f.slope - tq * f.slope_se;
    f.ci_high = f.slope + tq * f.slope_se;
  } else {
    f.ci_low = f.ci_high = f.slope;
  }
  return f;
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("pearson: need >= 2 paired points");
  const double n = static_cast<double>(x.size());
  const double mx = compensated_sum(x) / n, my = compensated_sum(y) / n;
  CompensatedSum sxx, sxy, syy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx.add((x[i] - mx) * (x[i] - mx));
    sxy.add((x[i] - mx) * (y[i] - my));
    syy.add((y[i] - my) * (y[i] - my));
  }
  return sxy.value() / std::sqrt(sxx.value() * syy.value());
}

}  // namespace mflab
