#pragma once

// Reference distribution for PG(1, c) built from the truncated gamma-sum
// representation
//   PG(1, c) = 1/(2 pi^2) sum_{k=1}^{K} g_k / ((k - 1/2)^2 + c^2/(4 pi^2)),  g_k ~ Gamma(1, 1).
// The CDF of the truncated sum is obtained by Gil-Pelaez inversion of its
// characteristic function prod_k (1 - i a_k u)^{-1}, tabulated on a grid.

#include "spmnl/rng.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

namespace spmnl::oracle {

inline std::vector<double> gamma_sum_weights(double c, int terms = 2000) {
  const double pi2 = std::numbers::pi * std::numbers::pi;
  std::vector<double> a(static_cast<std::size_t>(terms));
  for (int k = 1; k <= terms; ++k) {
    const double h = k - 0.5;
    a[static_cast<std::size_t>(k - 1)] = 1.0 / (2.0 * pi2 * (h * h + c * c / (4.0 * pi2)));
  }
  return a;
}

/// One draw of the truncated gamma sum.
inline double gamma_sum_draw(Rng& rng, const std::vector<double>& a) {
  double s = 0.0;
  for (double ak : a) s += ak * rng.exponential();
  return s;
}

class GammaSumCdf {
 public:
  explicit GammaSumCdf(double c, int terms = 2000, double x_max = 6.0, int grid = 6000,
                       double h = 0.05, double u_max = 1500.0)
      : x_max_(x_max) {
    const auto a = gamma_sum_weights(c, terms);
    std::vector<std::complex<double>> phi;
    for (int n = 0; (n + 0.5) * h <= u_max; ++n) {
      const double un = (n + 0.5) * h;
      std::complex<double> lg = 0.0;
      for (double ak : a) lg -= std::log(std::complex<double>(1.0, -ak * un));
      phi.push_back(std::exp(lg) / un);
      if (std::abs(phi.back()) < 1e-14) break;
    }
    dx_ = x_max / grid;
    cdf_.resize(static_cast<std::size_t>(grid) + 1);
    for (int g = 0; g <= grid; ++g) {
      const double x = g * dx_;
      const auto step = std::polar(1.0, -h * x);
      auto e = std::polar(1.0, -0.5 * h * x);
      double acc = 0.0;
      for (const auto& p : phi) {
        acc += (e * p).imag();
        e *= step;
      }
      cdf_[static_cast<std::size_t>(g)] = std::clamp(0.5 - h * acc / std::numbers::pi, 0.0, 1.0);
    }
    cdf_.front() = 0.0;
  }

  double operator()(double x) const {
    if (x <= 0.0) return 0.0;
    if (x >= x_max_) return 1.0;
    const double t = x / dx_;
    const auto i = static_cast<std::size_t>(t);
    const double f = t - static_cast<double>(i);
    return cdf_[i] + f * (cdf_[i + 1] - cdf_[i]);
  }

 private:
  double x_max_;
  double dx_;
  std::vector<double> cdf_;
};

/// Kolmogorov-Smirnov distance between a sample and a CDF.
template <class Cdf>
double ks_distance(std::vector<double> sample, const Cdf& cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

/// Two-sample Kolmogorov-Smirnov distance.
inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

}  // namespace spmnl::oracle
