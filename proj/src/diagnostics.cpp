#include "spmnl/diagnostics.hpp"

#include "spmnl/errors.hpp"

#include <cmath>

namespace spmnl {

double spectral_variance0(const Eigen::Ref<const Eigen::VectorXd>& x) {
  const auto n = x.size();
  const double mean = x.mean();
  const Eigen::VectorXd d = x.array() - mean;
  const auto lag = static_cast<Eigen::Index>(std::floor(std::sqrt(static_cast<double>(n))));
  double s = d.squaredNorm() / static_cast<double>(n);
  for (Eigen::Index h = 1; h <= lag && h < n; ++h) {
    const double gamma = d.head(n - h).dot(d.tail(n - h)) / static_cast<double>(n);
    s += 2.0 * (1.0 - static_cast<double>(h) / static_cast<double>(lag + 1)) * gamma;
  }
  return s;
}

GewekeResult geweke_z(const Eigen::Ref<const Eigen::VectorXd>& chain, double first,
                      double last) {
  const auto n = chain.size();
  if (n < 100) throw InvalidArgument("Geweke diagnostic needs at least 100 draws");
  if (!(first > 0.0 && last > 0.0 && first + last <= 1.0)) {
    throw InvalidArgument("Geweke window fractions must be positive and sum to <= 1");
  }
  const auto na = static_cast<Eigen::Index>(std::floor(first * static_cast<double>(n)));
  const auto nb = static_cast<Eigen::Index>(std::floor(last * static_cast<double>(n)));
  const auto a = chain.head(na);
  const auto b = chain.tail(nb);
  const double va = spectral_variance0(a);
  const double vb = spectral_variance0(b);
  if (!(va > 0.0) || !(vb > 0.0)) {
    throw NumericalError("Geweke diagnostic undefined: zero variance in a window");
  }
  GewekeResult r;
  r.first_fraction = first;
  r.last_fraction = last;
  r.z = (a.mean() - b.mean()) /
        std::sqrt(va / static_cast<double>(na) + vb / static_cast<double>(nb));
  return r;
}

double null_loglik(const ShareMatrix& y) {
  const Eigen::VectorXd pbar = y.values().colwise().mean().transpose();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    for (Eigen::Index j = 0; j < y.classes(); ++j) {
      const double v = y.values()(i, j);
      if (v != 0.0) acc += v * std::log(pbar[j]);
    }
  }
  return acc;
}

double mcfadden_r2(double loglik_model, const ShareMatrix& y) {
  const double l0 = null_loglik(y);
  if (l0 == 0.0) throw NumericalError("McFadden R2 undefined: null log-likelihood is zero");
  return 1.0 - loglik_model / l0;
}

double rmse(const std::vector<double>& estimates, const std::vector<double>& truths) {
  if (estimates.size() != truths.size()) throw InvalidArgument("rmse: length mismatch");
  if (estimates.empty()) throw InvalidArgument("rmse: empty input");
  double acc = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    const double e = estimates[i] - truths[i];
    acc += e * e;
  }
  return std::sqrt(acc / static_cast<double>(estimates.size()));
}

double mean_elementwise_rmse(const std::vector<std::vector<double>>& estimates,
                             const std::vector<std::vector<double>>& truths) {
  if (estimates.size() != truths.size() || estimates.empty()) {
    throw InvalidArgument("rmse: run count mismatch or empty");
  }
  const auto m = estimates.front().size();
  if (m == 0) throw InvalidArgument("rmse: no elements");
  double acc = 0.0;
  for (std::size_t e = 0; e < m; ++e) {
    std::vector<double> est, tru;
    for (std::size_t r = 0; r < estimates.size(); ++r) {
      if (estimates[r].size() != m || truths[r].size() != m) {
        throw InvalidArgument("rmse: element count differs between runs");
      }
      est.push_back(estimates[r][e]);
      tru.push_back(truths[r][e]);
    }
    acc += rmse(est, tru);
  }
  return acc / static_cast<double>(m);
}

}  // namespace spmnl
