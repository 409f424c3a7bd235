#pragma once

#include "spmnl/model.hpp"
#include "spmnl/spatial_weights.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace spmnl::cli {

struct SimulateOptions {
  Eigen::Index n = 400;
  double rho = 0.5;
  int n_classes = 3;
  int knn = 7;
  std::uint64_t seed = 1;
  std::string out;
};

/// Inputs shared by `fit` and `impacts`.
struct DataOptions {
  std::string shares;
  std::string covariates;
  std::string coords;
  std::string weights;
  int knn = 7;
  bool zscore = false;
  bool intercept = false;
};

struct FitOptions {
  DataOptions data;
  std::string family = "sar";
  bool durbin = false;
  int draws = 1000;
  int burnin = 700;
  std::uint64_t seed = 1;
  double rho_prior_d = 1.01;
  double beta_prior_var = 1e8;
  std::string out;
};

struct ImpactsOptions {
  DataOptions data;
  std::string chain;
  int thin = 1;
  std::string out;
};

struct BenchmarkOptions {
  std::vector<Eigen::Index> n{400};
  std::vector<double> rho{0.0, 0.5, 0.8};
  std::vector<std::string> models{"sar", "mnl", "bivariate"};
  int runs = 100;
  int draws = 1000;
  int burnin = 700;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out;
};

/// Loaded and cross-checked inputs. Shares are optional for `impacts`.
struct LoadedData {
  std::vector<std::string> ids;
  std::vector<std::string> class_names;
  std::unique_ptr<ShareMatrix> y;
  std::unique_ptr<DesignMatrix> x;
  std::unique_ptr<SpatialWeights> w;
};

/// Reads shares (`id,<class>...`), covariates (`id,<name>...`) and either
/// coordinates (`id,x,y`, turned into k-NN weights) or a dense W CSV.
/// Row counts and ids must agree; the offending file is named otherwise.
/// Columns taking only the values 0 and 1 are treated as dummies: neither
/// spatially lagged nor standardised.
LoadedData load_data(const DataOptions& opt, bool need_shares, bool need_weights);

/// Family from --family, upgraded to sdm by --durbin on a sar model.
Family resolve_family(const std::string& name, bool durbin);

void cmd_simulate(const SimulateOptions& opt, std::ostream& log);
void cmd_fit(const FitOptions& opt, std::ostream& log);
void cmd_impacts(const ImpactsOptions& opt, std::ostream& log);
void cmd_benchmark(const BenchmarkOptions& opt, std::ostream& log);

}  // namespace spmnl::cli
