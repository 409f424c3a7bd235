#pragma once

#include "spmnl/model.hpp"

#include <Eigen/Dense>

#include <vector>

namespace spmnl {

struct GewekeResult {
  double z = 0.0;
  double first_fraction = 0.1;
  double last_fraction = 0.5;
};

/// Spectral density at frequency zero (times 2 pi) by a Bartlett lag window
/// with lag floor(sqrt(n)).
double spectral_variance0(const Eigen::Ref<const Eigen::VectorXd>& x);

/// Geweke z-score comparing the first 10% and last 50% of a chain. Needs at
/// least 100 draws; throws NumericalError if either window has zero variance.
GewekeResult geweke_z(const Eigen::Ref<const Eigen::VectorXd>& chain, double first = 0.1,
                      double last = 0.5);

struct FitStats {
  double mcfadden_r2 = 0.0;
  double mean_loglik = 0.0;
};

/// Log-likelihood of the intercept-only model (class probabilities equal to
/// the column means of y).
double null_loglik(const ShareMatrix& y);

/// 1 - loglik_model / loglik_null. Throws when loglik_null is zero.
double mcfadden_r2(double loglik_model, const ShareMatrix& y);

/// sqrt(mean((estimates - truths)^2)).
double rmse(const std::vector<double>& estimates, const std::vector<double>& truths);

/// Per-element RMSE across runs, then the unweighted mean over elements.
/// estimates[r][e] is run r, element e.
double mean_elementwise_rmse(const std::vector<std::vector<double>>& estimates,
                             const std::vector<std::vector<double>>& truths);

}  // namespace spmnl
