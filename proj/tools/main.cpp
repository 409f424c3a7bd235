#include "spmnl/cli.hpp"
#include "spmnl/errors.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

void add_data_flags(CLI::App* app, spmnl::cli::DataOptions& d, bool shares_required) {
  auto* s = app->add_option("--shares", d.shares, "Shares CSV (id,<class>...; last class is the reference)");
  if (shares_required) s->required();
  app->add_option("--covariates", d.covariates, "Covariates CSV (id,<name>...)")->required();
  app->add_option("--coords", d.coords, "Coordinates CSV (id,x,y) for k-NN weights");
  app->add_option("--weights", d.weights, "Dense row-stochastic W as CSV");
  app->add_option("--knn", d.knn, "Neighbours for k-NN weights")->capture_default_str();
  app->add_flag("--zscore", d.zscore, "Standardise non-dummy covariates");
  app->add_flag("--intercept", d.intercept, "Prepend an intercept column");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian spatial multinomial logit for share data"};
  app.require_subcommand(1);

  spmnl::cli::SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Simulate a SAR multinomial-logit share dataset");
  simulate->add_option("--n", sim.n, "Number of regions")->capture_default_str();
  simulate->add_option("--rho", sim.rho, "Spatial dependence of the non-reference classes")
      ->capture_default_str();
  simulate->add_option("--classes", sim.n_classes, "Number of classes (must be 3)")->capture_default_str();
  simulate->add_option("--knn", sim.knn, "Neighbours for the weight matrix")->capture_default_str();
  simulate->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
  simulate->add_option("--out", sim.out, "Output directory")->required();

  spmnl::cli::FitOptions fit;
  auto* fitc = app.add_subcommand("fit", "Run the Gibbs sampler and write chains and summaries");
  add_data_flags(fitc, fit.data, true);
  fitc->add_option("--family", fit.family, "mnl, sar, sdm or bivariate")
      ->check(CLI::IsMember({"mnl", "sar", "sdm", "bivariate"}))
      ->capture_default_str();
  fitc->add_flag("--durbin", fit.durbin, "Add spatially lagged covariates (sar becomes sdm)");
  fitc->add_option("--draws", fit.draws, "Total draws B")->capture_default_str();
  fitc->add_option("--burnin", fit.burnin, "Burn-in draws B0")->capture_default_str();
  fitc->add_option("--seed", fit.seed, "Random seed")->capture_default_str();
  fitc->add_option("--rho-prior-d", fit.rho_prior_d, "Shape of the beta prior on rho")
      ->capture_default_str();
  fitc->add_option("--beta-prior-var", fit.beta_prior_var, "Prior variance of coefficients")
      ->capture_default_str();
  fitc->add_option("--out", fit.out, "Output directory")->required();

  spmnl::cli::ImpactsOptions imp;
  auto* impacts = app.add_subcommand("impacts", "Posterior direct, indirect and total effects");
  add_data_flags(impacts, imp.data, false);
  impacts->add_option("--chain", imp.chain, "Directory written by fit")->required();
  impacts->add_option("--thin", imp.thin, "Use every n-th retained draw")->capture_default_str();
  impacts->add_option("--out", imp.out, "Output directory")->required();

  spmnl::cli::BenchmarkOptions bench;
  bool full = false;
  auto* benchmark = app.add_subcommand("benchmark", "Monte Carlo RMSE study");
  benchmark->add_option("--n", bench.n, "Sample sizes")->capture_default_str();
  benchmark->add_option("--rho", bench.rho, "Spatial dependence scenarios")->capture_default_str();
  benchmark->add_option("--models", bench.models, "Models to compare")
      ->check(CLI::IsMember({"mnl", "sar", "sdm", "bivariate"}))
      ->capture_default_str();
  benchmark->add_option("--runs", bench.runs, "Monte Carlo runs per scenario")->capture_default_str();
  benchmark->add_option("--draws", bench.draws, "Total draws per chain")->capture_default_str();
  benchmark->add_option("--burnin", bench.burnin, "Burn-in draws per chain")->capture_default_str();
  benchmark->add_option("--seed", bench.seed, "Master seed")->capture_default_str();
  benchmark->add_option("--threads", bench.threads, "Worker threads")->capture_default_str();
  benchmark->add_flag("--full", full, "1000 runs at N = 400 and 1000");
  benchmark->add_option("--out", bench.out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate) spmnl::cli::cmd_simulate(sim, std::cerr);
    if (*fitc) spmnl::cli::cmd_fit(fit, std::cout);
    if (*impacts) spmnl::cli::cmd_impacts(imp, std::cerr);
    if (*benchmark) {
      if (full) {
        bench.runs = 1000;
        bench.n = {400, 1000};
      }
      spmnl::cli::cmd_benchmark(bench, std::cerr);
    }
  } catch (const spmnl::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
