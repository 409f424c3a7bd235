#include "spmnl/polya_gamma.hpp"

#include "spmnl/errors.hpp"

#include <cmath>
#include <numbers>

namespace spmnl {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTrunc = 0.64;

double log_normal_cdf(double x) { return std::log(0.5 * std::erfc(-x / std::numbers::sqrt2)); }

// n-th coefficient of the alternating series for the J*(1, 0) density,
// piecewise in x around the truncation point.
double series_coefficient(int n, double x) {
  const double k = (n + 0.5) * kPi;
  if (x > kTrunc) return k * std::exp(-0.5 * k * k * x);
  if (x <= 0.0) return 0.0;
  const double expnt =
      -1.5 * (std::log(0.5 * kPi) + std::log(x)) + std::log(k) - 2.0 * (n + 0.5) * (n + 0.5) / x;
  return std::exp(expnt);
}

// Probability of drawing from the exponential (right) piece of the proposal.
double right_mass(double z) {
  const double fz = 0.125 * kPi * kPi + 0.5 * z * z;
  const double b = std::sqrt(1.0 / kTrunc) * (kTrunc * z - 1.0);
  const double a = -std::sqrt(1.0 / kTrunc) * (kTrunc * z + 1.0);
  const double x0 = std::log(fz) + fz * kTrunc;
  const double xb = x0 - z + log_normal_cdf(b);
  const double xa = x0 + z + log_normal_cdf(a);
  const double q_over_p = 4.0 / kPi * (std::exp(xb) + std::exp(xa));
  return 1.0 / (1.0 + q_over_p);
}

}  // namespace

double PolyaGammaSampler::truncated_inverse_gaussian(double z) {
  double x = kTrunc + 1.0;
  if (1.0 / kTrunc > z) {
    // mean 1/z beyond the truncation point: inverse-chi-square proposal
    double alpha = 0.0;
    while (rng_.uniform() > alpha) {
      double e1 = rng_.exponential();
      double e2 = rng_.exponential();
      while (e1 * e1 > 2.0 * e2 / kTrunc) {
        e1 = rng_.exponential();
        e2 = rng_.exponential();
      }
      x = 1.0 + e1 * kTrunc;
      x = kTrunc / (x * x);
      alpha = std::exp(-0.5 * z * z * x);
    }
  } else {
    const double mu = 1.0 / z;
    while (x > kTrunc) {
      double y = rng_.normal();
      y *= y;
      const double half_mu = 0.5 * mu;
      const double mu_y = mu * y;
      x = mu + half_mu * mu_y - half_mu * std::sqrt(4.0 * mu_y + mu_y * mu_y);
      if (rng_.uniform() > mu / (mu + x)) x = mu * mu / x;
    }
  }
  return x;
}

double PolyaGammaSampler::draw_jstar(double z) {
  const double fz = 0.125 * kPi * kPi + 0.5 * z * z;
  const double p_right = right_mass(z);
  for (;;) {
    double x;
    if (rng_.uniform() < p_right) {
      x = kTrunc + rng_.exponential() / fz;
    } else {
      x = truncated_inverse_gaussian(z);
    }
    double s = series_coefficient(0, x);
    const double y = rng_.uniform() * s;
    for (int n = 1;; ++n) {
      if (n % 2 == 1) {
        s -= series_coefficient(n, x);
        if (y <= s) return x;
      } else {
        s += series_coefficient(n, x);
        if (y > s) break;
      }
    }
  }
}

double PolyaGammaSampler::draw(double c) {
  if (!std::isfinite(c)) throw DomainError("Polya-Gamma tilt is not finite");
  const double z = std::min(std::abs(c), kTiltCap) * 0.5;
  // PG(1, c) = J*(1, c/2) / 4
  return 0.25 * draw_jstar(z);
}

Eigen::VectorXd PolyaGammaSampler::draw(const Eigen::VectorXd& c) {
  Eigen::VectorXd out(c.size());
  for (Eigen::Index i = 0; i < c.size(); ++i) out[i] = draw(c[i]);
  return out;
}

double pg1_mean(double c) {
  const double a = std::abs(c);
  if (a < 1e-6) return 0.25 - a * a / 48.0;
  return std::tanh(0.5 * a) / (2.0 * a);
}

double pg1_variance(double c) {
  const double a = std::abs(c);
  if (a < 1e-3) return 1.0 / 24.0 - a * a / 120.0;
  // sinh(a) sech^2(a/2) = 2 tanh(a/2); avoids inf * 0 for large a
  const double sech = 1.0 / std::cosh(0.5 * a);
  return (2.0 * std::tanh(0.5 * a) - a * sech * sech) / (4.0 * a * a * a);
}

}  // namespace spmnl
