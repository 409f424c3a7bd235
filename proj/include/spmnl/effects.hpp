#pragma once

#include "spmnl/model.hpp"
#include "spmnl/sampler.hpp"
#include "spmnl/spatial_weights.hpp"

#include <Eigen/Dense>

#include <complex>
#include <string>
#include <vector>

namespace spmnl {

/// Evaluation point for marginal effects: column means of X and of W X.
struct CovariateMeans {
  Eigen::VectorXd x_bar;   // per design column
  Eigen::VectorXd xw_bar;  // per design column; mean of W x_k (0 without W)
};

CovariateMeans covariate_means(const DesignMatrix& x, const SpatialWeights* w);

/// Position of covariate k inside theta, or -1 when k has no spatial lag.
Eigen::Index theta_index(const ModelSpec& spec, const DesignMatrix& x, Eigen::Index k);

/// The N x N matrices Lambda_kj = d p(y = j) / d x_k' for every class j,
/// reference class included, built densely from A_j^{-1}:
///   mu_kj   = A_j^{-1} (1 xbar_k beta_kj + W 1 xbar_Wk theta_kj)
///   zeta_kj = A_j^{-1} beta_kj + A_j^{-1} W theta_kj
///   Lambda_kj = diag(p_kj) (zeta_kj - sum_j' diag(p_kj') zeta_kj')
/// For the bivariate family each non-reference class is its own binary
/// model, so Lambda for class j uses (beta_j, rho_j) against a zero class;
/// the reference-class matrix is then returned as all zeros.
std::vector<Eigen::MatrixXd> effect_matrix(const ModelSpec& spec, const ParameterState& state,
                                           Eigen::Index k, const DesignMatrix& x,
                                           const SpatialWeights* w, const CovariateMeans& means);

struct EffectScalars {
  double direct = 0.0;
  double indirect = 0.0;
  double total = 0.0;
};

/// direct = tr(L)/N, total = 1'L1/N, indirect = total - direct.
EffectScalars summarize_effects(const Eigen::MatrixXd& lambda);

/// Closed-form direct/indirect/total without forming N x N matrices.
///
/// With W row-stochastic, A^{-1} 1 = 1/(1 - rho), so p_kj is constant over
/// regions and the summaries need only tr(A^{-1}) and tr(A^{-1} W). Both
/// are evaluated from the eigenvalues of W, computed once.
class ImpactEvaluator {
 public:
  ImpactEvaluator(ModelSpec spec, const DesignMatrix& x, const SpatialWeights* w);

  /// Effects of covariate k on every class (J entries, reference last).
  std::vector<EffectScalars> evaluate(const ParameterState& state, Eigen::Index k) const;

  /// tr((I - rho W)^{-1}) and tr((I - rho W)^{-1} W).
  double trace_inverse(double rho) const;
  double trace_inverse_w(double rho) const;

  const CovariateMeans& means() const { return means_; }

 private:
  std::vector<EffectScalars> multinomial(const std::vector<double>& beta_k,
                                         const std::vector<double>& theta_k,
                                         const std::vector<double>& rho, Eigen::Index k) const;

  ModelSpec spec_;
  const DesignMatrix* x_;
  CovariateMeans means_;
  Eigen::Index n_ = 0;
  std::vector<std::complex<double>> eigenvalues_;
};

struct ImpactCell {
  double mean = 0.0;
  double q05 = 0.0;
  double q95 = 0.0;
  bool significant = false;  // 90% equal-tailed interval excludes zero
};

/// Posterior impact table: cells[k][j] for reported covariates k and all J classes.
struct ImpactSummary {
  std::vector<Eigen::Index> covariates;
  std::vector<std::string> covariate_names;
  int n_classes = 0;
  std::vector<std::vector<ImpactCell>> direct;
  std::vector<std::vector<ImpactCell>> indirect;
  std::vector<std::vector<ImpactCell>> total;
  Eigen::Index draws_used = 0;
};

/// Equal-tailed quantile with linear interpolation between order statistics.
double quantile(std::vector<double> values, double prob);

/// Effects per retained draw (every `thin`-th), summarised by posterior mean
/// and 5%/95% quantiles. Covariates default to every non-intercept column.
ImpactSummary posterior_impacts(const ChainOutput& chain, const ModelSpec& spec,
                                const DesignMatrix& x, const SpatialWeights* w, int thin = 1,
                                std::vector<Eigen::Index> covariates = {});

}  // namespace spmnl
