#pragma once

#include "spmnl/model.hpp"
#include "spmnl/sampler.hpp"
#include "spmnl/spatial_weights.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace spmnl {

struct DgpConfig {
  Eigen::Index n = 400;
  int n_classes = 3;
  Eigen::Index n_covariates = 2;
  double rho = 0.5;  // shared by the non-reference classes
  int k_neighbors = 7;
  std::uint64_t seed = 1;

  void validate() const;
};

struct Dataset {
  ShareMatrix y;
  DesignMatrix x;
  CoordinateSet coords;
  SpatialWeights w;
  ParameterState truth;  // omega left empty
};

/// Simulated shares from the SAR multinomial logit:
///   coordinates and X i.i.d. N(0, 1), W = 7-nearest-neighbour,
///   beta_j = base_j + N(0, [[1, -0.25], [-0.25, 1]]) with base columns
///   (1, 0.5) and (0.5, 1), mu_j = (I - rho W)^{-1} X beta_j,
///   y = softmax(mu) with the last class as reference.
Dataset generate_dataset(const DgpConfig& config);

/// Direct and indirect effects of every covariate on every non-reference
/// class, flattened as [k * (J-1) + j], evaluated at the true parameters.
struct EffectVector {
  std::vector<double> direct;
  std::vector<double> indirect;
};
EffectVector true_effects(const Dataset& data);

struct Scenario {
  Eigen::Index n = 400;
  double rho = 0.5;
};

struct RunRecord {
  std::size_t scenario = 0;
  int run = 0;
  Family model = Family::SAR_MNL;
  std::uint64_t seed = 0;
  bool ok = true;
  std::string error;
  std::vector<double> rho_hat, rho_true;
  std::vector<double> direct_hat, direct_true;
  std::vector<double> indirect_hat, indirect_true;
};

struct McCell {
  Scenario scenario;
  Family model = Family::SAR_MNL;
  double rmse_direct = 0.0;
  double rmse_indirect = 0.0;
  double rmse_rho = 0.0;
  int runs_ok = 0;
  int runs_failed = 0;
};

struct McResult {
  std::vector<Scenario> scenarios;
  std::vector<Family> models;
  std::vector<McCell> cells;  // scenario-major, then model
  std::vector<RunRecord> runs;
  double wall_seconds = 0.0;
};

struct StudyConfig {
  std::vector<Scenario> scenarios;
  std::vector<Family> models{Family::SAR_MNL, Family::MNL, Family::BIVARIATE_SAR_LOGIT};
  int n_runs = 100;
  SamplerConfig sampler;
  std::uint64_t master_seed = 1;
  int threads = 1;
  /// Called once per finished (scenario, run) with a one-line message.
  std::function<void(const std::string&)> progress;
};

/// Fits one model to a dataset and returns its posterior-mean estimates.
RunRecord fit_one(const Dataset& data, const EffectVector& truth, Family model,
                  const SamplerConfig& sampler);

/// Monte Carlo study: for every scenario and run, one dataset shared by all
/// models; seeds come from (master seed, run, scenario) and the model.
/// Output is independent of the thread count.
McResult run_study(const StudyConfig& config);

/// RMSE table layout: one row per (N, model), columns <stat>_rho<value> for
/// each distinct rho, and a `bold` column naming the columns in which the
/// row attains the minimum within its N block.
std::string format_table(const McResult& result);

/// Long-format per-run CSV (one row per run, model and element).
std::string format_runs(const McResult& result);

}  // namespace spmnl
