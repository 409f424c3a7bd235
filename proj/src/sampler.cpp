#include "spmnl/sampler.hpp"

#include "spmnl/csv.hpp"
#include "spmnl/errors.hpp"
#include "spmnl/rng.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>

namespace spmnl {

void SamplerConfig::validate() const {
  if (n_draws < 1) throw InvalidArgument("number of draws must be positive");
  if (n_burnin < 0 || n_burnin >= n_draws) {
    throw InvalidArgument("burn-in must satisfy 0 <= B0 < B");
  }
  if (!(rho_proposal_sd > 0.0)) throw InvalidArgument("rho proposal sd must be positive");
  if (adapt_interval < 1) throw InvalidArgument("adapt interval must be positive");
  if (!(target_acceptance > 0.0 && target_acceptance < 1.0)) {
    throw InvalidArgument("target acceptance must lie in (0, 1)");
  }
}

ParameterState ChainOutput::draw(Eigen::Index t) const {
  ParameterState s;
  const auto m = static_cast<std::size_t>(n_classes - 1);
  s.beta.resize(m);
  s.theta.resize(m);
  s.rho = rho.row(t).transpose();
  for (std::size_t j = 0; j < m; ++j) {
    s.beta[j] = beta[j].row(t).transpose();
    s.theta[j] = theta[j].row(t).transpose();
  }
  return s;
}

ParameterState ChainOutput::posterior_mean() const {
  ParameterState s;
  const auto m = static_cast<std::size_t>(n_classes - 1);
  s.beta.resize(m);
  s.theta.resize(m);
  s.rho = rho.colwise().mean().transpose();
  for (std::size_t j = 0; j < m; ++j) {
    s.beta[j] = beta[j].colwise().mean().transpose();
    s.theta[j] = theta[j].rows() > 0 ? Eigen::VectorXd(theta[j].colwise().mean().transpose())
                                     : Eigen::VectorXd::Zero(theta[j].cols());
  }
  return s;
}

GibbsSampler::GibbsSampler(ModelSpec spec, const ShareMatrix& y, const DesignMatrix& x,
                           const SpatialWeights* w, SamplerConfig config,
                           const LogDetGrid* logdet)
    : spec_(std::move(spec)),
      y_(&y),
      x_(&x),
      w_(w),
      config_(config),
      logdet_(logdet),
      pg_(config.seed) {
  spec_.validate();
  config_.validate();
  if (spec_.family == Family::BIVARIATE_SAR_LOGIT) {
    if (spec_.n_classes != 2) {
      throw InvalidArgument("a single bivariate chain has J = 2; use run_bivariate_per_class");
    }
  }
  if (y.classes() != spec_.n_classes) throw InvalidArgument("share columns != J");
  if (y.rows() != x.rows()) throw InvalidArgument("shares and covariates differ in N");
  if (is_spatial(spec_.family)) {
    if (!w) throw ConfigError("spatial model requires a weight matrix");
    if (w->size() != x.rows()) throw InvalidArgument("W dimension does not match N");
  } else {
    w_ = nullptr;
  }
  if (spec_.include_logdet && !logdet_ && is_spatial(spec_.family)) {
    throw ConfigError("log-determinant term requested without a grid");
  }

  k_beta_ = x.cols();
  if (spec_.durbin()) {
    const Eigen::MatrixXd lag = durbin_block(x, *w_);
    block_.resize(x.rows(), x.cols() + lag.cols());
    block_ << x.values(), lag;
  } else {
    block_ = x.values();
  }
  block_cols_ = block_.cols();
  if (w_) multiplier_.emplace(*w_, block_);

  if (spec_.prior_covariance) {
    if (spec_.prior_covariance->rows() != block_cols_ || spec_.prior_covariance->cols() != block_cols_) {
      throw InvalidArgument("prior covariance dimension != number of coefficients");
    }
    prior_precision_ = spec_.prior_covariance->inverse();
  } else {
    prior_precision_ =
        Eigen::MatrixXd::Identity(block_cols_, block_cols_) / spec_.prior_beta_variance;
  }
  Eigen::VectorXd prior_mean = Eigen::VectorXd::Zero(block_cols_);
  if (spec_.prior_mean) {
    if (spec_.prior_mean->size() != block_cols_) {
      throw InvalidArgument("prior mean length != number of coefficients");
    }
    prior_mean = *spec_.prior_mean;
  }
  prior_shift_ = prior_precision_ * prior_mean;

  const int m = spec_.n_classes - 1;
  state_ = ParameterState::zeros(x.rows(), spec_.n_classes, k_beta_, block_cols_ - k_beta_);
  design_.assign(static_cast<std::size_t>(m), Eigen::MatrixXd());
  design_stale_.assign(static_cast<std::size_t>(m), true);
  proposal_sd_.assign(static_cast<std::size_t>(m), config_.rho_proposal_sd);
  accepted_.assign(static_cast<std::size_t>(m), 0);
  recompute_log_odds();
}

Eigen::VectorXd GibbsSampler::coefficients(int j) const {
  Eigen::VectorXd g(block_cols_);
  g.head(k_beta_) = state_.beta[j];
  g.tail(block_cols_ - k_beta_) = state_.theta[j];
  return g;
}

const Eigen::MatrixXd& GibbsSampler::design_for(int j) {
  if (design_stale_[j]) {
    const double rho = state_.rho[j];
    design_[j] = (w_ && rho != 0.0) ? multiplier_->apply(rho) : block_;
    design_stale_[j] = false;
  }
  return design_[j];
}

void GibbsSampler::recompute_log_odds() {
  mu_ = Eigen::MatrixXd::Zero(x_->rows(), spec_.n_classes);
  for (int j = 0; j < spec_.n_classes - 1; ++j) {
    design_stale_[j] = true;
    mu_.col(j) = design_for(j) * coefficients(j);
  }
  loglik_ = multinomial_loglik(*y_, mu_);
}

void GibbsSampler::set_state(ParameterState state) {
  const int m = spec_.n_classes - 1;
  if (static_cast<int>(state.beta.size()) != m || state.rho.size() != m) {
    throw InvalidArgument("state has wrong class count");
  }
  if (state.omega.size() == 0) state.omega = Eigen::MatrixXd::Zero(x_->rows(), m);
  for (int j = 0; j < m; ++j) {
    if (!(std::abs(state.rho[j]) < 1.0)) throw InvalidArgument("rho outside (-1, 1)");
    if (!is_spatial(spec_.family)) state.rho[j] = 0.0;
  }
  state_ = std::move(state);
  recompute_log_odds();
}

void GibbsSampler::update_omega(int j) {
  const Eigen::VectorXd c = competing_logodds_offset(mu_, j);
  for (Eigen::Index i = 0; i < mu_.rows(); ++i) {
    const double eta = mu_(i, j) - c[i];
    if (!std::isfinite(eta)) {
      throw DomainError("non-finite eta at (" + std::to_string(i + 1) + "," +
                        std::to_string(j + 1) + ")");
    }
    state_.omega(i, j) = pg_.draw(eta);
  }
}

Eigen::VectorXd GibbsSampler::working_response(int j) const {
  const Eigen::ArrayXd kappa = y_->values().col(j).array() - 0.5;
  return (kappa / state_.omega.col(j).array()).matrix();
}

void GibbsSampler::update_beta(int j) {
  const Eigen::MatrixXd& z = design_for(j);
  const Eigen::VectorXd c = competing_logodds_offset(mu_, j);
  const auto omega = state_.omega.col(j);
  const Eigen::VectorXd kappa = y_->values().col(j).array() - 0.5;
  // eta = Z g - C, so the linear term of the augmented log-density is
  // Z'(kappa + Omega C).
  const Eigen::MatrixXd precision =
      z.transpose() * omega.asDiagonal() * z + prior_precision_;
  const Eigen::VectorXd rhs =
      z.transpose() * (kappa + omega.cwiseProduct(c)) + prior_shift_;
  const Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("posterior precision not positive definite for class " +
                         std::to_string(j + 1));
  }
  const Eigen::VectorXd mean = llt.solve(rhs);
  Eigen::VectorXd eps(block_cols_);
  for (Eigen::Index r = 0; r < block_cols_; ++r) eps[r] = pg_.rng().normal();
  const Eigen::VectorXd g = mean + llt.matrixU().solve(eps);
  state_.beta[j] = g.head(k_beta_);
  state_.theta[j] = g.tail(block_cols_ - k_beta_);
  mu_.col(j) = z * g;
  loglik_ = multinomial_loglik(*y_, mu_);
}

double GibbsSampler::log_rho_prior(double rho) const {
  const double d = spec_.rho_prior_d;
  const double log_beta_fn = 2.0 * std::lgamma(d) - std::lgamma(2.0 * d);
  return (d - 1.0) * std::log((1.0 + rho) * (1.0 - rho)) - (2.0 * d - 1.0) * std::log(2.0) -
         log_beta_fn;
}

double GibbsSampler::rho_log_acceptance(int j, double proposal) {
  if (!(std::abs(proposal) < 1.0)) return -std::numeric_limits<double>::infinity();
  Eigen::MatrixXd mu_new = mu_;
  const Eigen::VectorXd g = coefficients(j);
  mu_new.col(j) = proposal == 0.0 ? Eigen::VectorXd(block_ * g) : multiplier_->apply(proposal, g);
  const double ll_new = multinomial_loglik(*y_, mu_new);
  double log_ratio = ll_new - loglik_ + log_rho_prior(proposal) - log_rho_prior(state_.rho[j]);
  if (spec_.include_logdet) log_ratio += (*logdet_)(proposal) - (*logdet_)(state_.rho[j]);
  return log_ratio;
}

bool GibbsSampler::update_rho(int j) {
  if (!is_spatial(spec_.family)) return false;
  const double proposal = state_.rho[j] + proposal_sd_[j] * pg_.rng().normal();
  const double u = pg_.rng().uniform();
  if (!(std::abs(proposal) < 1.0)) return false;
  if (spec_.include_logdet &&
      (proposal < logdet_->rho_values().front() || proposal > logdet_->rho_values().back())) {
    return false;
  }
  const Eigen::VectorXd g = coefficients(j);
  Eigen::VectorXd mu_j = proposal == 0.0 ? Eigen::VectorXd(block_ * g)
                                         : multiplier_->apply(proposal, g);
  Eigen::VectorXd saved = mu_.col(j);
  mu_.col(j) = mu_j;
  const double ll_new = multinomial_loglik(*y_, mu_);
  double log_ratio = ll_new - loglik_ + log_rho_prior(proposal) - log_rho_prior(state_.rho[j]);
  if (spec_.include_logdet) log_ratio += (*logdet_)(proposal) - (*logdet_)(state_.rho[j]);
  if (std::log(u) < log_ratio) {
    state_.rho[j] = proposal;
    loglik_ = ll_new;
    design_stale_[j] = true;
    return true;
  }
  mu_.col(j) = saved;
  return false;
}

void GibbsSampler::sweep() {
  const int m = spec_.n_classes - 1;
  for (int j = 0; j < m; ++j) {
    update_omega(j);
    update_beta(j);
  }
  for (int j = 0; j < m; ++j) {
    if (update_rho(j)) ++accepted_[j];
  }
}

ChainOutput run_chain(const ModelSpec& spec, const ShareMatrix& y, const DesignMatrix& x,
                      const SpatialWeights* w, const SamplerConfig& config,
                      const LogDetGrid* logdet) {
  if (spec.family == Family::BIVARIATE_SAR_LOGIT && spec.n_classes > 2) {
    if (!w) throw ConfigError("spatial model requires a weight matrix");
    return run_bivariate_per_class(y, x, *w, config, spec.rho_prior_d, spec.prior_beta_variance);
  }
  GibbsSampler sampler(spec, y, x, w, config, logdet);
  const int m = spec.n_classes - 1;
  const int kept = config.n_draws - config.n_burnin;

  ChainOutput out;
  out.family = spec.family;
  out.n_classes = spec.n_classes;
  out.config = config;
  out.rho_prior_d = spec.rho_prior_d;
  out.prior_beta_variance = spec.prior_beta_variance;
  out.beta_names = x.names();
  for (auto c : x.lagged_columns()) {
    if (spec.durbin()) out.theta_names.push_back("W_" + x.names()[c]);
  }
  const auto k_lag = static_cast<Eigen::Index>(out.theta_names.size());
  out.beta.assign(static_cast<std::size_t>(m), Eigen::MatrixXd(kept, x.cols()));
  out.theta.assign(static_cast<std::size_t>(m), Eigen::MatrixXd(kept, k_lag));
  out.rho.resize(kept, m);
  out.loglik.resize(kept);
  Eigen::VectorXd accepted_after = Eigen::VectorXd::Zero(m);

  for (int t = 0; t < config.n_draws; ++t) {
    try {
      sampler.sweep();
    } catch (const std::exception& e) {
      throw NumericalError("iteration " + std::to_string(t + 1) + ": " + e.what());
    }
    if (t < config.n_burnin) {
      if ((t + 1) % config.adapt_interval == 0) {
        for (int j = 0; j < m; ++j) {
          const double rate = static_cast<double>(sampler.accepted_[j]) / config.adapt_interval;
          if (rate > config.target_acceptance) {
            sampler.proposal_sd_[j] *= 1.1;
          } else {
            sampler.proposal_sd_[j] /= 1.1;
          }
          sampler.accepted_[j] = 0;
        }
      }
      if (t + 1 == config.n_burnin) std::fill(sampler.accepted_.begin(), sampler.accepted_.end(), 0);
      continue;
    }
    const int r = t - config.n_burnin;
    const auto& s = sampler.state();
    for (int j = 0; j < m; ++j) {
      out.beta[j].row(r) = s.beta[j].transpose();
      out.theta[j].row(r) = s.theta[j].transpose();
    }
    out.rho.row(r) = s.rho.transpose();
    out.loglik[r] = sampler.loglik();
  }
  out.acceptance.resize(m);
  out.proposal_sd.resize(m);
  for (int j = 0; j < m; ++j) {
    out.acceptance[j] = is_spatial(spec.family)
                            ? static_cast<double>(sampler.accepted_[j]) / kept
                            : 0.0;
    out.proposal_sd[j] = sampler.proposal_sd_[j];
  }
  return out;
}

ChainOutput run_bivariate_sar_logit(const Eigen::VectorXd& y, const DesignMatrix& x,
                                    const SpatialWeights& w, const SamplerConfig& config,
                                    double rho_prior_d, double prior_beta_variance) {
  Eigen::MatrixXd shares(y.size(), 2);
  shares.col(0) = y;
  shares.col(1) = (1.0 - y.array()).matrix();
  const ShareMatrix ys(shares);
  ModelSpec spec;
  spec.family = Family::SAR_MNL;
  spec.n_classes = 2;
  spec.rho_prior_d = rho_prior_d;
  spec.prior_beta_variance = prior_beta_variance;
  auto out = run_chain(spec, ys, x, &w, config);
  out.family = Family::BIVARIATE_SAR_LOGIT;
  return out;
}

ChainOutput run_bivariate_per_class(const ShareMatrix& y, const DesignMatrix& x,
                                    const SpatialWeights& w, const SamplerConfig& config,
                                    double rho_prior_d, double prior_beta_variance) {
  const int m = static_cast<int>(y.classes()) - 1;
  ChainOutput out;
  out.family = Family::BIVARIATE_SAR_LOGIT;
  out.n_classes = m + 1;
  out.config = config;
  out.rho_prior_d = rho_prior_d;
  out.prior_beta_variance = prior_beta_variance;
  out.beta_names = x.names();
  const int kept = config.n_draws - config.n_burnin;
  out.rho.resize(kept, m);
  out.loglik = Eigen::VectorXd::Zero(kept);
  out.acceptance.resize(m);
  out.proposal_sd.resize(m);
  for (int j = 0; j < m; ++j) {
    SamplerConfig cj = config;
    cj.seed = derive_seed(config.seed, static_cast<std::uint64_t>(j));
    auto chain = run_bivariate_sar_logit(y.values().col(j), x, w, cj, rho_prior_d,
                                         prior_beta_variance);
    out.beta.push_back(chain.beta[0]);
    out.theta.push_back(chain.theta[0]);
    out.rho.col(j) = chain.rho.col(0);
    out.loglik += chain.loglik;
    out.acceptance[j] = chain.acceptance[0];
    out.proposal_sd[j] = chain.proposal_sd[0];
  }
  return out;
}

namespace {

namespace fs = std::filesystem;

void write_matrix(const fs::path& path, const std::vector<std::string>& header,
                  const Eigen::MatrixXd& m) {
  auto out = csv::open_output(path.string());
  csv::write_row(out, header);
  std::vector<std::string> fields(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) fields[c] = csv::format_full(m(r, c));
    csv::write_row(out, fields);
  }
}

std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

void write_chain(const std::string& dir, const ChainOutput& chain,
                 const std::vector<std::string>& class_names) {
  fs::create_directories(dir);
  const int m = chain.n_classes - 1;
  std::vector<std::string> header = chain.beta_names;
  header.insert(header.end(), chain.theta_names.begin(), chain.theta_names.end());
  for (int j = 0; j < m; ++j) {
    Eigen::MatrixXd block(chain.n_retained(), chain.beta[j].cols() + chain.theta[j].cols());
    block << chain.beta[j], chain.theta[j];
    write_matrix(fs::path(dir) / ("chain_beta_" + std::to_string(j + 1) + ".csv"), header, block);
  }
  std::vector<std::string> rho_header;
  for (int j = 0; j < m; ++j) rho_header.push_back("rho_" + std::to_string(j + 1));
  write_matrix(fs::path(dir) / "chain_rho.csv", rho_header, chain.rho);
  write_matrix(fs::path(dir) / "chain_loglik.csv", {"loglik"}, chain.loglik);

  nlohmann::ordered_json meta;
  meta["family"] = to_string(chain.family);
  meta["n_classes"] = chain.n_classes;
  meta["class_names"] = class_names;
  meta["beta_names"] = chain.beta_names;
  meta["theta_names"] = chain.theta_names;
  meta["config"] = {{"n_draws", chain.config.n_draws},
                    {"n_burnin", chain.config.n_burnin},
                    {"seed", chain.config.seed},
                    {"rho_proposal_sd", chain.config.rho_proposal_sd},
                    {"adapt_interval", chain.config.adapt_interval},
                    {"target_acceptance", chain.config.target_acceptance}};
  meta["rho_prior_d"] = chain.rho_prior_d;
  meta["prior_beta_variance"] = chain.prior_beta_variance;
  meta["acceptance"] = to_vec(chain.acceptance);
  meta["proposal_sd"] = to_vec(chain.proposal_sd);
  auto out = csv::open_output((fs::path(dir) / "run_meta.json").string());
  out << meta.dump(2) << '\n';
}

ChainOutput read_chain(const std::string& dir, std::vector<std::string>* class_names) {
  const fs::path base(dir);
  std::ifstream meta_in(base / "run_meta.json");
  if (!meta_in) throw ConfigError("chain directory '" + dir + "' has no run_meta.json");
  nlohmann::json meta;
  try {
    meta_in >> meta;
  } catch (const std::exception& e) {
    throw ConfigError("cannot parse run_meta.json: " + std::string(e.what()));
  }
  ChainOutput out;
  out.family = family_from_string(meta.at("family").get<std::string>());
  out.n_classes = meta.at("n_classes").get<int>();
  out.beta_names = meta.at("beta_names").get<std::vector<std::string>>();
  out.theta_names = meta.at("theta_names").get<std::vector<std::string>>();
  const auto& cfg = meta.at("config");
  out.config.n_draws = cfg.at("n_draws").get<int>();
  out.config.n_burnin = cfg.at("n_burnin").get<int>();
  out.config.seed = cfg.at("seed").get<std::uint64_t>();
  out.config.rho_proposal_sd = cfg.at("rho_proposal_sd").get<double>();
  out.config.adapt_interval = cfg.at("adapt_interval").get<int>();
  out.config.target_acceptance = cfg.at("target_acceptance").get<double>();
  out.rho_prior_d = meta.at("rho_prior_d").get<double>();
  out.prior_beta_variance = meta.at("prior_beta_variance").get<double>();
  const auto acc = meta.at("acceptance").get<std::vector<double>>();
  const auto sd = meta.at("proposal_sd").get<std::vector<double>>();
  out.acceptance = Eigen::Map<const Eigen::VectorXd>(acc.data(), static_cast<Eigen::Index>(acc.size()));
  out.proposal_sd = Eigen::Map<const Eigen::VectorXd>(sd.data(), static_cast<Eigen::Index>(sd.size()));
  if (class_names) *class_names = meta.at("class_names").get<std::vector<std::string>>();

  const int m = out.n_classes - 1;
  const auto kb = static_cast<Eigen::Index>(out.beta_names.size());
  const auto kt = static_cast<Eigen::Index>(out.theta_names.size());
  for (int j = 0; j < m; ++j) {
    const auto path = (base / ("chain_beta_" + std::to_string(j + 1) + ".csv")).string();
    const auto block = csv::numeric_block(csv::read(path), path, 0);
    if (block.cols() != kb + kt) throw InvalidArgument(path + ": column count mismatch");
    out.beta.push_back(block.leftCols(kb));
    out.theta.push_back(block.rightCols(kt));
  }
  const auto rho_path = (base / "chain_rho.csv").string();
  out.rho = csv::numeric_block(csv::read(rho_path), rho_path, 0);
  const auto ll_path = (base / "chain_loglik.csv").string();
  out.loglik = csv::numeric_block(csv::read(ll_path), ll_path, 0).col(0);
  if (out.rho.cols() != m) throw InvalidArgument(rho_path + ": expected J-1 columns");
  for (const auto& b : out.beta) {
    if (b.rows() != out.rho.rows()) throw InvalidArgument("chain files disagree on draw count");
  }
  if (out.loglik.size() != out.rho.rows()) throw InvalidArgument("loglik draw count mismatch");
  return out;
}

}  // namespace spmnl
