#pragma once

#include "spmnl/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>

namespace spmnl {

/// Exact sampler for the Polya-Gamma distribution PG(1, c).
///
/// Uses the alternating-series rejection method of Devroye as specialised to
/// PG(1, c) (the same scheme as the BayesLogit package): a proposal mixing a
/// truncated inverse-Gaussian on (0, t] with an exponential tail on (t, inf),
/// accepted via partial sums of the Jacobi density series. t = 0.64.
///
/// One instance per thread. Same seed and call sequence give the same draws.
class PolyaGammaSampler {
 public:
  static constexpr double kTiltCap = 500.0;

  explicit PolyaGammaSampler(std::uint64_t seed) : rng_(seed) {}

  /// One draw from PG(1, |c|). |c| is capped at kTiltCap. Throws DomainError
  /// for non-finite c.
  double draw(double c);

  /// Element-wise draws, in order; equivalent to repeated draw() calls.
  Eigen::VectorXd draw(const Eigen::VectorXd& c);

  Rng& rng() { return rng_; }

 private:
  double draw_jstar(double z);
  double truncated_inverse_gaussian(double z);

  Rng rng_;
};

/// E[PG(1, c)] = tanh(c/2) / (2c), with limit 1/4 at c = 0.
double pg1_mean(double c);

/// Var[PG(1, c)] = (sinh(c) - c) sech^2(c/2) / (4 c^3), limit 1/24 at c = 0.
double pg1_variance(double c);

}  // namespace spmnl
