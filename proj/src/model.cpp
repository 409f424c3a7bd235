#include "spmnl/model.hpp"

#include "spmnl/csv.hpp"
#include "spmnl/errors.hpp"

#include <cmath>
#include <limits>

namespace spmnl {

std::string to_string(Family f) {
  switch (f) {
    case Family::MNL: return "mnl";
    case Family::SAR_MNL: return "sar";
    case Family::SDM_MNL: return "sdm";
    case Family::BIVARIATE_SAR_LOGIT: return "bivariate";
  }
  return "unknown";
}

Family family_from_string(const std::string& s) {
  if (s == "mnl") return Family::MNL;
  if (s == "sar") return Family::SAR_MNL;
  if (s == "sdm") return Family::SDM_MNL;
  if (s == "bivariate") return Family::BIVARIATE_SAR_LOGIT;
  throw ConfigError("unknown model family '" + s + "' (expected mnl, sar, sdm, bivariate)");
}

ShareMatrix::ShareMatrix(Eigen::MatrixXd y, double renormalize_tol) : y_(std::move(y)) {
  if (y_.cols() < 2) throw InvalidArgument("share matrix needs at least 2 classes");
  if (y_.rows() < 1) throw InvalidArgument("share matrix has no rows");
  for (Eigen::Index i = 0; i < y_.rows(); ++i) {
    for (Eigen::Index j = 0; j < y_.cols(); ++j) {
      const double v = y_(i, j);
      if (!std::isfinite(v)) {
        throw DomainError("share (" + std::to_string(i + 1) + "," + std::to_string(j + 1) +
                          ") is not finite");
      }
      if (v < 0.0 || v > 1.0) {
        throw InvalidArgument("share (" + std::to_string(i + 1) + "," + std::to_string(j + 1) +
                              ") = " + csv::format_full(v) + " outside [0, 1]");
      }
    }
    const double s = y_.row(i).sum();
    const double err = std::abs(s - 1.0);
    if (err > 1e-9) {
      if (err > renormalize_tol) {
        throw InvalidArgument("share row " + std::to_string(i + 1) + " sums to " +
                              csv::format_full(s));
      }
      y_.row(i) /= s;
    }
  }
}

DesignMatrix::DesignMatrix(Eigen::MatrixXd x, std::vector<std::string> names,
                           std::vector<bool> lag_eligible)
    : x_(std::move(x)), names_(std::move(names)), lag_eligible_(std::move(lag_eligible)) {
  if (static_cast<Eigen::Index>(names_.size()) != x_.cols() ||
      static_cast<Eigen::Index>(lag_eligible_.size()) != x_.cols()) {
    throw InvalidArgument("design matrix names/flags do not match column count");
  }
  for (Eigen::Index i = 0; i < x_.rows(); ++i) {
    for (Eigen::Index c = 0; c < x_.cols(); ++c) {
      if (!std::isfinite(x_(i, c))) {
        throw DomainError("covariate '" + names_[c] + "' row " + std::to_string(i + 1) +
                          " is not finite");
      }
    }
  }
  for (Eigen::Index c = 0; c < x_.cols(); ++c) {
    if (names_[c] == "intercept" && !(x_.col(c).array() == 1.0).all()) {
      throw InvalidArgument("column 'intercept' must be all ones");
    }
  }
}

DesignMatrix::DesignMatrix(Eigen::MatrixXd x)
    : DesignMatrix(x, [&] {
        std::vector<std::string> n;
        for (Eigen::Index c = 0; c < x.cols(); ++c) n.push_back("x" + std::to_string(c + 1));
        return n;
      }(), std::vector<bool>(static_cast<std::size_t>(x.cols()), true)) {}

std::optional<Eigen::Index> DesignMatrix::intercept_index() const {
  for (Eigen::Index c = 0; c < cols(); ++c) {
    if (names_[c] == "intercept") return c;
  }
  return std::nullopt;
}

std::vector<Eigen::Index> DesignMatrix::lagged_columns() const {
  std::vector<Eigen::Index> out;
  for (Eigen::Index c = 0; c < cols(); ++c) {
    if (lag_eligible_[c]) out.push_back(c);
  }
  return out;
}

DesignMatrix DesignMatrix::with_intercept() const {
  if (intercept_index()) return *this;
  Eigen::MatrixXd x(rows(), cols() + 1);
  x.col(0).setOnes();
  x.rightCols(cols()) = x_;
  std::vector<std::string> names{"intercept"};
  names.insert(names.end(), names_.begin(), names_.end());
  std::vector<bool> flags{false};
  flags.insert(flags.end(), lag_eligible_.begin(), lag_eligible_.end());
  return DesignMatrix(std::move(x), std::move(names), std::move(flags));
}

DesignMatrix DesignMatrix::zscored() const {
  Eigen::MatrixXd x = x_;
  for (Eigen::Index c = 0; c < cols(); ++c) {
    if (!lag_eligible_[c]) continue;
    const double mean = x.col(c).mean();
    const double sd =
        std::sqrt((x.col(c).array() - mean).square().sum() / std::max<Eigen::Index>(1, rows() - 1));
    if (sd == 0.0) throw InvalidArgument("covariate '" + names_[c] + "' is constant");
    x.col(c) = (x.col(c).array() - mean) / sd;
  }
  return DesignMatrix(std::move(x), names_, lag_eligible_);
}

void ModelSpec::validate() const {
  if (n_classes < 2) throw InvalidArgument("model needs at least 2 classes");
  if (!(rho_prior_d >= 1.0)) throw InvalidArgument("rho prior shape d must be >= 1");
  if (!(prior_beta_variance > 0.0)) throw InvalidArgument("prior variance must be positive");
}

ParameterState ParameterState::zeros(Eigen::Index n, int n_classes, Eigen::Index k,
                                     Eigen::Index k_lag) {
  ParameterState s;
  const auto m = static_cast<std::size_t>(n_classes - 1);
  s.beta.assign(m, Eigen::VectorXd::Zero(k));
  s.theta.assign(m, Eigen::VectorXd::Zero(k_lag));
  s.rho = Eigen::VectorXd::Zero(n_classes - 1);
  s.omega = Eigen::MatrixXd::Zero(n, n_classes - 1);
  return s;
}

Eigen::MatrixXd durbin_block(const DesignMatrix& x, const SpatialWeights& w) {
  const auto cols = x.lagged_columns();
  Eigen::MatrixXd xt(x.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) xt.col(c) = x.values().col(cols[c]);
  return w.sparse() * xt;
}

Eigen::MatrixXd log_odds(const ModelSpec& spec, const ParameterState& state,
                         const DesignMatrix& x, const SpatialWeights* w) {
  const auto n = x.rows();
  const int j_count = spec.n_classes;
  if (static_cast<int>(state.beta.size()) != j_count - 1) {
    throw InvalidArgument("parameter state has wrong class count");
  }
  if (is_spatial(spec.family) != (w != nullptr)) {
    throw InvalidArgument("weights must be given exactly for spatial families");
  }
  if (w && w->size() != n) throw InvalidArgument("W dimension does not match N");
  Eigen::MatrixXd lag;
  if (spec.durbin()) lag = durbin_block(x, *w);
  Eigen::MatrixXd mu = Eigen::MatrixXd::Zero(n, j_count);
  for (int j = 0; j < j_count - 1; ++j) {
    if (state.beta[j].size() != x.cols()) throw InvalidArgument("beta length != K");
    Eigen::VectorXd rhs = x.values() * state.beta[j];
    if (spec.durbin()) {
      if (state.theta[j].size() != lag.cols()) throw InvalidArgument("theta length != K'");
      rhs += lag * state.theta[j];
    }
    const double rho = is_spatial(spec.family) ? state.rho[j] : 0.0;
    if (rho == 0.0) {
      mu.col(j) = rhs;
      continue;
    }
    const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) - rho * w->dense();
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
    const auto& u = lu.matrixLU();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (u(i, i) == 0.0) {
        throw NumericalError("I - rho W singular for class " + std::to_string(j + 1));
      }
    }
    mu.col(j) = lu.solve(rhs);
  }
  return mu;
}

Eigen::VectorXd row_logsumexp(const Eigen::MatrixXd& mu) {
  const Eigen::VectorXd m = mu.rowwise().maxCoeff();
  return m.array() + (mu.colwise() - m).array().exp().rowwise().sum().log();
}

Eigen::MatrixXd class_probabilities(const Eigen::MatrixXd& mu) {
  const Eigen::VectorXd m = mu.rowwise().maxCoeff();
  Eigen::MatrixXd p = (mu.colwise() - m).array().exp().matrix();
  const Eigen::VectorXd s = p.rowwise().sum();
  for (Eigen::Index i = 0; i < p.rows(); ++i) p.row(i) /= s[i];
  return p;
}

double multinomial_loglik(const ShareMatrix& y, const Eigen::MatrixXd& mu) {
  if (mu.rows() != y.rows() || mu.cols() != y.classes()) {
    throw InvalidArgument("log-odds and shares have different shapes");
  }
  const Eigen::VectorXd lse = row_logsumexp(mu);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < mu.rows(); ++i) {
    for (Eigen::Index j = 0; j < mu.cols(); ++j) {
      const double yij = y.values()(i, j);
      if (yij != 0.0) acc += yij * (mu(i, j) - lse[i]);
    }
  }
  return acc;
}

Eigen::VectorXd competing_logodds_offset(const Eigen::MatrixXd& mu, Eigen::Index j) {
  const auto jc = mu.cols();
  if (jc < 2) throw InvalidArgument("need at least 2 classes");
  if (j < 0 || j >= jc) throw InvalidArgument("class index out of range");
  Eigen::VectorXd out(mu.rows());
  for (Eigen::Index i = 0; i < mu.rows(); ++i) {
    double m = -std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < jc; ++c) {
      if (c != j) m = std::max(m, mu(i, c));
    }
    double s = 0.0;
    for (Eigen::Index c = 0; c < jc; ++c) {
      if (c != j) s += std::exp(mu(i, c) - m);
    }
    out[i] = m + std::log(s);
  }
  return out;
}

}  // namespace spmnl
