#pragma once

#include "spmnl/spatial_weights.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace spmnl {

enum class Family { MNL, SAR_MNL, SDM_MNL, BIVARIATE_SAR_LOGIT };

std::string to_string(Family f);
Family family_from_string(const std::string& s);

inline bool is_spatial(Family f) { return f != Family::MNL; }

/// Observed shares y_ij, N x J. Rows lie in [0, 1] and sum to one.
class ShareMatrix {
 public:
  /// Rows off by at most `renormalize_tol` are rescaled; beyond that, or
  /// with a final row-sum error above 1e-9, construction throws.
  explicit ShareMatrix(Eigen::MatrixXd y, double renormalize_tol = 0.0);

  const Eigen::MatrixXd& values() const { return y_; }
  Eigen::Index rows() const { return y_.rows(); }
  Eigen::Index classes() const { return y_.cols(); }

 private:
  Eigen::MatrixXd y_;
};

/// Covariates with names and per-column flags. Lag-eligible columns enter
/// the spatial Durbin block W X~; the intercept and dummies do not.
class DesignMatrix {
 public:
  DesignMatrix(Eigen::MatrixXd x, std::vector<std::string> names,
               std::vector<bool> lag_eligible);

  /// Names default to x1..xK, every column lag-eligible.
  explicit DesignMatrix(Eigen::MatrixXd x);

  const Eigen::MatrixXd& values() const { return x_; }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<bool>& lag_eligible() const { return lag_eligible_; }
  Eigen::Index rows() const { return x_.rows(); }
  Eigen::Index cols() const { return x_.cols(); }

  /// Index of an all-ones column named "intercept", if any.
  std::optional<Eigen::Index> intercept_index() const;

  /// Indices of lag-eligible columns, in order.
  std::vector<Eigen::Index> lagged_columns() const;

  /// Returns a copy with a leading all-ones "intercept" column.
  DesignMatrix with_intercept() const;

  /// Returns a copy with lag-eligible columns standardised to mean 0, sd 1.
  DesignMatrix zscored() const;

 private:
  Eigen::MatrixXd x_;
  std::vector<std::string> names_;
  std::vector<bool> lag_eligible_;
};

/// Model family, class count and priors. The last class (index J-1) is the
/// reference with beta = 0, rho = 0, omega = 0; innovation variances are 1.
struct ModelSpec {
  Family family = Family::SAR_MNL;
  int n_classes = 3;
  double prior_beta_variance = 1e8;
  /// Optional full prior over the stacked coefficient vector [beta; theta].
  std::optional<Eigen::VectorXd> prior_mean;
  std::optional<Eigen::MatrixXd> prior_covariance;
  /// Shape d of the symmetric beta prior on (-1, 1).
  double rho_prior_d = 1.01;
  /// Add log|I - rho W| to the rho target (experimental, off by default).
  bool include_logdet = false;

  bool durbin() const { return family == Family::SDM_MNL; }
  void validate() const;
};

/// Current parameter values for the J-1 non-reference classes.
struct ParameterState {
  std::vector<Eigen::VectorXd> beta;   // J-1 vectors of length K
  std::vector<Eigen::VectorXd> theta;  // J-1 vectors of length K' (empty unless SDM)
  Eigen::VectorXd rho;                 // J-1 values in (-1, 1)
  Eigen::MatrixXd omega;               // N x (J-1), positive once drawn

  static ParameterState zeros(Eigen::Index n, int n_classes, Eigen::Index k,
                              Eigen::Index k_lag);
};

/// The spatial Durbin block W X~ over lag-eligible columns.
Eigen::MatrixXd durbin_block(const DesignMatrix& x, const SpatialWeights& w);

/// N x J log-odds. Column j solves (I - rho_j W) mu_j = X beta_j + W X~ theta_j
/// by dense LU; the reference column is zero.
Eigen::MatrixXd log_odds(const ModelSpec& spec, const ParameterState& state,
                         const DesignMatrix& x, const SpatialWeights* w);

/// Row-wise softmax with max subtraction.
Eigen::MatrixXd class_probabilities(const Eigen::MatrixXd& mu);

/// Row-wise log-sum-exp.
Eigen::VectorXd row_logsumexp(const Eigen::MatrixXd& mu);

/// sum_i sum_j y_ij (mu_ij - logsumexp_i(mu)).
double multinomial_loglik(const ShareMatrix& y, const Eigen::MatrixXd& mu);

/// C_ij = log sum_{j' != j} exp mu_ij'.
Eigen::VectorXd competing_logodds_offset(const Eigen::MatrixXd& mu, Eigen::Index j);

}  // namespace spmnl
