#pragma once

#include "spmnl/model.hpp"
#include "spmnl/polya_gamma.hpp"
#include "spmnl/spatial_weights.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace spmnl {

struct SamplerConfig {
  int n_draws = 1000;
  int n_burnin = 700;
  std::uint64_t seed = 1;
  double rho_proposal_sd = 0.1;
  int adapt_interval = 25;
  double target_acceptance = 0.234;

  void validate() const;
};

/// Retained draws of one chain (or, for the bivariate competitor, of one
/// binary chain per non-reference class stacked side by side).
struct ChainOutput {
  Family family = Family::SAR_MNL;
  int n_classes = 0;
  std::vector<std::string> beta_names;
  std::vector<std::string> theta_names;
  std::vector<Eigen::MatrixXd> beta;   // per class j < J: draws x K
  std::vector<Eigen::MatrixXd> theta;  // per class j < J: draws x K'
  Eigen::MatrixXd rho;                 // draws x (J-1)
  Eigen::VectorXd loglik;              // per draw
  Eigen::VectorXd acceptance;          // post burn-in acceptance rate per class
  Eigen::VectorXd proposal_sd;         // frozen proposal scale per class
  SamplerConfig config;
  double rho_prior_d = 1.01;
  double prior_beta_variance = 1e8;

  Eigen::Index n_retained() const { return rho.rows(); }
  /// Parameters of retained draw t (omega left empty).
  ParameterState draw(Eigen::Index t) const;
  ParameterState posterior_mean() const;
};

/// One Markov chain over (omega, beta, theta, rho) for a spatial or
/// non-spatial multinomial logit.
///
/// Per sweep: for each class j < J, omega_j ~ PG(1, eta_j) and then
/// [beta_j; theta_j] from its Gaussian full conditional; afterwards each
/// rho_j gets a random-walk Metropolis-Hastings step on the multinomial
/// likelihood. The log-odds matrix is kept in sync after every update.
class GibbsSampler {
 public:
  GibbsSampler(ModelSpec spec, const ShareMatrix& y, const DesignMatrix& x,
               const SpatialWeights* w, SamplerConfig config,
               const LogDetGrid* logdet = nullptr);

  void update_omega(int j);
  void update_beta(int j);
  /// Returns whether the proposal was accepted. No-op for non-spatial models.
  bool update_rho(int j);
  /// One full sweep; during burn-in the proposal scale adapts.
  void sweep();

  /// Log acceptance ratio for moving rho_j to `proposal` (without drawing).
  double rho_log_acceptance(int j, double proposal);

  /// log p(rho) up to a constant for the symmetric beta prior on (-1, 1).
  double log_rho_prior(double rho) const;

  const ParameterState& state() const { return state_; }
  /// Replace the state and recompute the log-odds.
  void set_state(ParameterState state);

  const Eigen::MatrixXd& log_odds() const { return mu_; }
  double loglik() const { return loglik_; }
  /// z_j = kappa_j / omega_j for the current omega.
  Eigen::VectorXd working_response(int j) const;
  double proposal_sd(int j) const { return proposal_sd_[j]; }
  void set_proposal_sd(int j, double sd) { proposal_sd_[j] = sd; }
  const ModelSpec& spec() const { return spec_; }
  Eigen::Index n_coefficients() const { return block_cols_; }

 private:
  const Eigen::MatrixXd& design_for(int j);
  Eigen::VectorXd coefficients(int j) const;
  void recompute_log_odds();

  ModelSpec spec_;
  const ShareMatrix* y_;
  const DesignMatrix* x_;
  const SpatialWeights* w_;
  SamplerConfig config_;
  const LogDetGrid* logdet_;

  PolyaGammaSampler pg_;
  std::optional<SpatialMultiplier> multiplier_;
  Eigen::MatrixXd block_;  // [X | W X~] or X
  Eigen::Index block_cols_ = 0;
  Eigen::Index k_beta_ = 0;
  Eigen::MatrixXd prior_precision_;
  Eigen::VectorXd prior_shift_;  // precision * mean

  ParameterState state_;
  Eigen::MatrixXd mu_;
  double loglik_ = 0.0;
  std::vector<Eigen::MatrixXd> design_;  // A_j^{-1} block at current rho_j
  std::vector<bool> design_stale_;
  std::vector<double> proposal_sd_;
  std::vector<int> accepted_;  // in current adaptation window

  friend ChainOutput run_chain(const ModelSpec&, const ShareMatrix&, const DesignMatrix&,
                               const SpatialWeights*, const SamplerConfig&, const LogDetGrid*);
};

/// Runs B sweeps from beta = 0, rho = 0 and keeps the last B - B0.
ChainOutput run_chain(const ModelSpec& spec, const ShareMatrix& y, const DesignMatrix& x,
                      const SpatialWeights* w, const SamplerConfig& config,
                      const LogDetGrid* logdet = nullptr);

/// Binary SAR logit on shares y in [0, 1]: run_chain with J = 2.
ChainOutput run_bivariate_sar_logit(const Eigen::VectorXd& y, const DesignMatrix& x,
                                    const SpatialWeights& w, const SamplerConfig& config,
                                    double rho_prior_d = 1.01, double prior_beta_variance = 1e8);

/// The bivariate competitor for J classes: one binary SAR logit per
/// non-reference class j on y_ij (class j against all others), with seeds
/// derived from config.seed and j. Draws are stacked into one ChainOutput.
ChainOutput run_bivariate_per_class(const ShareMatrix& y, const DesignMatrix& x,
                                    const SpatialWeights& w, const SamplerConfig& config,
                                    double rho_prior_d = 1.01, double prior_beta_variance = 1e8);

/// Writes chain_beta_<j>.csv, chain_rho.csv, chain_loglik.csv and run_meta.json.
void write_chain(const std::string& dir, const ChainOutput& chain,
                 const std::vector<std::string>& class_names);
/// Reads back a chain directory; class names are returned through the pointer.
ChainOutput read_chain(const std::string& dir, std::vector<std::string>* class_names = nullptr);

}  // namespace spmnl
