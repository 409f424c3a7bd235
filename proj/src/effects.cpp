#include "spmnl/effects.hpp"

#include "spmnl/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace spmnl {

CovariateMeans covariate_means(const DesignMatrix& x, const SpatialWeights* w) {
  CovariateMeans m;
  m.x_bar = x.values().colwise().mean().transpose();
  if (w) {
    m.xw_bar = (w->sparse() * x.values()).colwise().mean().transpose();
  } else {
    m.xw_bar = Eigen::VectorXd::Zero(x.cols());
  }
  return m;
}

Eigen::Index theta_index(const ModelSpec& spec, const DesignMatrix& x, Eigen::Index k) {
  if (!spec.durbin()) return -1;
  const auto cols = x.lagged_columns();
  const auto it = std::find(cols.begin(), cols.end(), k);
  return it == cols.end() ? -1 : static_cast<Eigen::Index>(it - cols.begin());
}

namespace {

struct ClassTerms {
  double beta = 0.0;
  double theta = 0.0;
  double rho = 0.0;
};

ClassTerms class_terms(const ModelSpec& spec, const ParameterState& state, Eigen::Index k,
                       Eigen::Index ti, int j) {
  ClassTerms t;
  t.beta = state.beta[j][k];
  t.theta = ti >= 0 ? state.theta[j][ti] : 0.0;
  t.rho = is_spatial(spec.family) ? state.rho[j] : 0.0;
  return t;
}

Eigen::MatrixXd inverse_multiplier(const SpatialWeights* w, double rho, Eigen::Index n) {
  if (rho == 0.0) return Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) - rho * w->dense();
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (lu.matrixLU()(i, i) == 0.0) throw NumericalError("singular spatial multiplier");
  }
  return lu.inverse();
}

// Dense Lambda for a set of classes given (beta, theta, rho) per class.
std::vector<Eigen::MatrixXd> dense_lambda(const std::vector<ClassTerms>& terms,
                                          const SpatialWeights* w, Eigen::Index n, double x_bar,
                                          double xw_bar) {
  const auto jc = terms.size();
  std::vector<Eigen::MatrixXd> zeta(jc);
  Eigen::MatrixXd mu(n, static_cast<Eigen::Index>(jc));
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  for (std::size_t j = 0; j < jc; ++j) {
    const auto& t = terms[j];
    const Eigen::MatrixXd ainv = inverse_multiplier(w, t.rho, n);
    zeta[j] = t.beta * ainv;
    Eigen::VectorXd rhs = ones * (x_bar * t.beta);
    if (t.theta != 0.0) {
      const Eigen::MatrixXd ainv_w = ainv * w->dense();
      zeta[j] += t.theta * ainv_w;
      rhs += (w->dense() * ones) * (xw_bar * t.theta);
    }
    mu.col(static_cast<Eigen::Index>(j)) = ainv * rhs;
  }
  const Eigen::MatrixXd p = class_probabilities(mu);
  // zeta_j - sum_j' p_j' zeta_j' written as sum_{j' != j} p_j' (zeta_j - zeta_j'),
  // which avoids 1 - p_j cancelling when class j saturates
  std::vector<Eigen::MatrixXd> lambda(jc);
  for (std::size_t j = 0; j < jc; ++j) {
    Eigen::MatrixXd centred = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t jj = 0; jj < jc; ++jj) {
      if (jj != j) centred += p.col(static_cast<Eigen::Index>(jj)).asDiagonal() * (zeta[j] - zeta[jj]);
    }
    lambda[j] = p.col(static_cast<Eigen::Index>(j)).asDiagonal() * centred;
  }
  return lambda;
}

}  // namespace

std::vector<Eigen::MatrixXd> effect_matrix(const ModelSpec& spec, const ParameterState& state,
                                           Eigen::Index k, const DesignMatrix& x,
                                           const SpatialWeights* w, const CovariateMeans& means) {
  if (k < 0 || k >= x.cols()) throw InvalidArgument("covariate index out of range");
  if (is_spatial(spec.family) && !w) throw InvalidArgument("spatial effects need W");
  const auto n = x.rows();
  const int jc = spec.n_classes;
  const Eigen::Index ti = theta_index(spec, x, k);
  if (spec.family == Family::BIVARIATE_SAR_LOGIT) {
    std::vector<Eigen::MatrixXd> out;
    for (int j = 0; j < jc - 1; ++j) {
      const std::vector<ClassTerms> pair{class_terms(spec, state, k, ti, j), ClassTerms{}};
      out.push_back(dense_lambda(pair, w, n, means.x_bar[k], means.xw_bar[k])[0]);
    }
    out.push_back(Eigen::MatrixXd::Zero(n, n));
    return out;
  }
  std::vector<ClassTerms> terms;
  for (int j = 0; j < jc - 1; ++j) terms.push_back(class_terms(spec, state, k, ti, j));
  terms.emplace_back();
  return dense_lambda(terms, w, n, means.x_bar[k], means.xw_bar[k]);
}

EffectScalars summarize_effects(const Eigen::MatrixXd& lambda) {
  if (lambda.rows() != lambda.cols()) throw InvalidArgument("effect matrix must be square");
  const auto n = static_cast<double>(lambda.rows());
  EffectScalars s;
  s.direct = lambda.trace() / n;
  s.total = lambda.sum() / n;
  s.indirect = s.total - s.direct;
  return s;
}

ImpactEvaluator::ImpactEvaluator(ModelSpec spec, const DesignMatrix& x, const SpatialWeights* w)
    : spec_(std::move(spec)), x_(&x), means_(covariate_means(x, w)), n_(x.rows()) {
  if (is_spatial(spec_.family)) {
    if (!w) throw InvalidArgument("spatial effects need W");
    const Eigen::EigenSolver<Eigen::MatrixXd> es(w->dense(), false);
    if (es.info() != Eigen::Success) throw NumericalError("eigenvalues of W did not converge");
    const auto& ev = es.eigenvalues();
    eigenvalues_.assign(ev.data(), ev.data() + ev.size());
  }
}

double ImpactEvaluator::trace_inverse_w(double rho) const {
  if (rho == 0.0 || eigenvalues_.empty()) return 0.0;
  std::complex<double> acc = 0.0;
  for (const auto& l : eigenvalues_) acc += l / (1.0 - rho * l);
  return acc.real();
}

double ImpactEvaluator::trace_inverse(double rho) const {
  // A^{-1} = I + rho A^{-1} W
  return static_cast<double>(n_) + rho * trace_inverse_w(rho);
}

std::vector<EffectScalars> ImpactEvaluator::multinomial(const std::vector<double>& beta_k,
                                                        const std::vector<double>& theta_k,
                                                        const std::vector<double>& rho,
                                                        Eigen::Index k) const {
  const auto jc = beta_k.size();
  const double nd = static_cast<double>(n_);
  std::vector<double> level(jc), diag(jc), row(jc);
  for (std::size_t j = 0; j < jc; ++j) {
    const double scale = 1.0 / (1.0 - rho[j]);
    level[j] = (means_.x_bar[k] * beta_k[j] + means_.xw_bar[k] * theta_k[j]) * scale;
    // tr(A^{-1})/N is exactly 1 at rho = 0, which keeps indirect = 0 exact there
    diag[j] = beta_k[j] * (trace_inverse(rho[j]) / nd) + theta_k[j] * (trace_inverse_w(rho[j]) / nd);
    row[j] = (beta_k[j] + theta_k[j]) * scale;
  }
  const double top = *std::max_element(level.begin(), level.end());
  std::vector<double> p(jc);
  double norm = 0.0;
  for (std::size_t j = 0; j < jc; ++j) norm += (p[j] = std::exp(level[j] - top));
  for (auto& pj : p) pj /= norm;
  std::vector<EffectScalars> out(jc);
  for (std::size_t j = 0; j < jc; ++j) {
    double d = 0.0, r = 0.0;
    for (std::size_t jj = 0; jj < jc; ++jj) {
      if (jj == j) continue;
      d += p[jj] * (diag[j] - diag[jj]);
      r += p[jj] * (row[j] - row[jj]);
    }
    out[j].direct = p[j] * d;
    out[j].total = p[j] * r;
    out[j].indirect = out[j].total - out[j].direct;
  }
  return out;
}

std::vector<EffectScalars> ImpactEvaluator::evaluate(const ParameterState& state,
                                                     Eigen::Index k) const {
  if (k < 0 || k >= x_->cols()) throw InvalidArgument("covariate index out of range");
  const int jc = spec_.n_classes;
  const Eigen::Index ti = theta_index(spec_, *x_, k);
  if (spec_.family == Family::BIVARIATE_SAR_LOGIT) {
    std::vector<EffectScalars> out;
    for (int j = 0; j < jc - 1; ++j) {
      const auto t = class_terms(spec_, state, k, ti, j);
      out.push_back(multinomial({t.beta, 0.0}, {t.theta, 0.0}, {t.rho, 0.0}, k)[0]);
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    out.push_back({nan, nan, nan});
    return out;
  }
  std::vector<double> b, th, r;
  for (int j = 0; j < jc - 1; ++j) {
    const auto t = class_terms(spec_, state, k, ti, j);
    b.push_back(t.beta);
    th.push_back(t.theta);
    r.push_back(t.rho);
  }
  b.push_back(0.0);
  th.push_back(0.0);
  r.push_back(0.0);
  return multinomial(b, th, r, k);
}

double quantile(std::vector<double> values, double prob) {
  if (values.empty()) throw InvalidArgument("quantile of empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

namespace {

ImpactCell summarize_draws(const std::vector<double>& v) {
  ImpactCell c;
  if (v.empty() || std::isnan(v.front())) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return {nan, nan, nan, false};
  }
  double s = 0.0;
  for (double x : v) s += x;
  c.mean = s / static_cast<double>(v.size());
  c.q05 = quantile(v, 0.05);
  c.q95 = quantile(v, 0.95);
  c.significant = c.q05 > 0.0 || c.q95 < 0.0;
  return c;
}

}  // namespace

ImpactSummary posterior_impacts(const ChainOutput& chain, const ModelSpec& spec,
                                const DesignMatrix& x, const SpatialWeights* w, int thin,
                                std::vector<Eigen::Index> covariates) {
  if (chain.n_retained() == 0) throw InvalidArgument("chain has no retained draws");
  if (thin < 1) throw InvalidArgument("thinning factor must be >= 1");
  if (chain.beta.empty() || chain.beta[0].cols() != x.cols()) {
    throw InvalidArgument("chain coefficients do not match the design matrix");
  }
  if (covariates.empty()) {
    const auto icpt = x.intercept_index();
    for (Eigen::Index k = 0; k < x.cols(); ++k) {
      if (!icpt || *icpt != k) covariates.push_back(k);
    }
  }
  const ImpactEvaluator eval(spec, x, w);
  const int jc = spec.n_classes;
  const auto nk = covariates.size();
  using Draws = std::vector<std::vector<std::vector<double>>>;
  Draws dir(nk, std::vector<std::vector<double>>(static_cast<std::size_t>(jc)));
  Draws ind = dir, tot = dir;
  Eigen::Index used = 0;
  for (Eigen::Index t = 0; t < chain.n_retained(); t += thin) {
    const auto state = chain.draw(t);
    for (std::size_t a = 0; a < nk; ++a) {
      const auto fx = eval.evaluate(state, covariates[a]);
      for (int j = 0; j < jc; ++j) {
        dir[a][j].push_back(fx[j].direct);
        ind[a][j].push_back(fx[j].indirect);
        tot[a][j].push_back(fx[j].total);
      }
    }
    ++used;
  }
  ImpactSummary out;
  out.covariates = covariates;
  out.n_classes = jc;
  out.draws_used = used;
  for (std::size_t a = 0; a < nk; ++a) {
    out.covariate_names.push_back(x.names()[covariates[a]]);
    std::vector<ImpactCell> d, i, tt;
    for (int j = 0; j < jc; ++j) {
      d.push_back(summarize_draws(dir[a][j]));
      i.push_back(summarize_draws(ind[a][j]));
      tt.push_back(summarize_draws(tot[a][j]));
    }
    out.direct.push_back(std::move(d));
    out.indirect.push_back(std::move(i));
    out.total.push_back(std::move(tt));
  }
  return out;
}

}  // namespace spmnl
