#include "spmnl/spatial_weights.hpp"

#include "spmnl/csv.hpp"
#include "spmnl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <utility>

namespace spmnl {

CoordinateSet::CoordinateSet(std::vector<Point> points) : points_(std::move(points)) {
  if (points_.size() < 2) throw InvalidArgument("coordinate set needs at least 2 points");
  std::set<std::pair<double, double>> seen;
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const auto& p = points_[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw DomainError("coordinate " + std::to_string(i) + " is not finite");
    }
    if (!seen.emplace(p.x, p.y).second) {
      throw InvalidArgument("duplicate coordinate at point " + std::to_string(i) +
                            "; nearest-neighbour sets would be ambiguous");
    }
  }
}

SpatialWeights::SpatialWeights(Eigen::MatrixXd w, int k) : dense_(std::move(w)), k_(k) {
  sparse_ = dense_.sparseView(0.0, 0.0);
  sparse_.makeCompressed();
}

SpatialWeights SpatialWeights::from_dense(Eigen::MatrixXd w, double renormalize_tol) {
  if (w.rows() != w.cols()) throw InvalidArgument("weight matrix must be square");
  if (w.rows() < 2) throw InvalidArgument("weight matrix needs N >= 2");
  const auto n = w.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!std::isfinite(w(i, j))) {
        throw DomainError("W(" + std::to_string(i) + "," + std::to_string(j) + ") is not finite");
      }
      if (w(i, j) < 0.0) {
        throw InvalidArgument("W(" + std::to_string(i) + "," + std::to_string(j) +
                              ") is negative");
      }
    }
    if (w(i, i) != 0.0) throw InvalidArgument("W has nonzero diagonal at row " + std::to_string(i));
    const double s = w.row(i).sum();
    if (std::abs(s - 1.0) > renormalize_tol) {
      throw InvalidArgument("W row " + std::to_string(i) + " sums to " + csv::format_full(s) +
                            ", not 1");
    }
    if (std::abs(s - 1.0) > 1e-12) w.row(i) /= s;
  }
  // Recognise the k-nearest-neighbour pattern: k equal entries per row.
  int k = 0;
  bool knn = true;
  for (Eigen::Index i = 0; i < n && knn; ++i) {
    const auto nz = static_cast<int>((w.row(i).array() != 0.0).count());
    if (i == 0) k = nz;
    if (nz != k) knn = false;
    for (Eigen::Index j = 0; j < n && knn; ++j) {
      if (w(i, j) != 0.0 && w(i, j) != 1.0 / k) knn = false;
    }
  }
  return SpatialWeights(std::move(w), knn ? k : 0);
}

SpatialWeights build_knn_weights(const CoordinateSet& coords, int k) {
  const auto n = static_cast<int>(coords.size());
  if (k < 1 || k >= n) {
    throw InvalidArgument("k-nearest-neighbour count must satisfy 1 <= k < N (k=" +
                          std::to_string(k) + ", N=" + std::to_string(n) + ")");
  }
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  const double weight = 1.0 / k;
  std::vector<std::pair<double, int>> dist;
  dist.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    dist.clear();
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const double dx = coords[i].x - coords[j].x;
      const double dy = coords[i].y - coords[j].y;
      dist.emplace_back(dx * dx + dy * dy, j);
    }
    // pair ordering = (distance, index): ties resolved by lower index
    std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
    for (int m = 0; m < k; ++m) w(i, dist[m].second) = weight;
  }
  return SpatialWeights(std::move(w), k);
}

double log_det_dense(const Eigen::MatrixXd& w, double rho) {
  const auto n = w.rows();
  const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) - rho * w;
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  const auto& u = lu.matrixLU();
  const double tiny = static_cast<double>(n) * std::numeric_limits<double>::epsilon() *
                      u.diagonal().cwiseAbs().maxCoeff();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = std::abs(u(i, i));
    if (!(d > tiny) || !std::isfinite(d)) {
      throw NumericalError("I - rho W is singular at rho = " + csv::format_full(rho));
    }
    acc += std::log(d);
  }
  return acc;
}

LogDetGrid::LogDetGrid(const SpatialWeights& w, int n_points, double bound) {
  if (n_points < 3) throw InvalidArgument("log-determinant grid needs at least 3 points");
  if (!(bound > 0.0 && bound < 1.0)) throw InvalidArgument("grid bound must lie in (0, 1)");
  const double step = 2.0 * bound / (n_points - 1);
  rho_.reserve(static_cast<std::size_t>(n_points));
  for (int i = 0; i < n_points; ++i) rho_.push_back(-bound + step * i);
  rho_.back() = bound;
  logdet_.resize(rho_.size());
  for (std::size_t i = 0; i < rho_.size(); ++i) {
    logdet_[i] = log_det_dense(w.dense(), rho_[i]);
  }
}

double LogDetGrid::operator()(double rho) const {
  if (!(rho >= rho_.front() && rho <= rho_.back())) {
    throw InvalidArgument("rho = " + csv::format_full(rho) + " outside the log-determinant grid");
  }
  auto it = std::lower_bound(rho_.begin(), rho_.end(), rho);
  const auto hi = static_cast<std::ptrdiff_t>(it - rho_.begin());
  if (*it == rho) return logdet_[static_cast<std::size_t>(hi)];
  const auto n = static_cast<std::ptrdiff_t>(rho_.size());
  // nodes hi-2 .. hi+1 surround the bracket [hi-1, hi]; shift inward at the ends
  std::ptrdiff_t first = std::clamp<std::ptrdiff_t>(hi - 2, 0, n - 4);
  double acc = 0.0;
  for (std::ptrdiff_t a = first; a < first + 4; ++a) {
    double basis = 1.0;
    for (std::ptrdiff_t b = first; b < first + 4; ++b) {
      if (b != a) basis *= (rho - rho_[b]) / (rho_[a] - rho_[b]);
    }
    acc += basis * logdet_[static_cast<std::size_t>(a)];
  }
  return acc;
}

SpatialMultiplier::SpatialMultiplier(const SpatialWeights& w, Eigen::MatrixXd block,
                                     double tolerance, std::size_t max_cached_doubles)
    : w_(&w), tolerance_(tolerance) {
  if (block.rows() != w.size()) throw InvalidArgument("multiplier block row count != N");
  block_norm_ = block.size() == 0 ? 0.0 : block.cwiseAbs().rowwise().sum().maxCoeff();
  const auto per_term = std::max<std::size_t>(1, static_cast<std::size_t>(block.size()));
  max_order_ = static_cast<int>(std::min<std::size_t>(4000, max_cached_doubles / per_term));
  powers_.push_back(std::move(block));
}

int SpatialMultiplier::series_order(double rho) const {
  const double a = std::abs(rho);
  if (a == 0.0 || block_norm_ == 0.0) return 0;
  if (a >= 1.0) return -1;
  // smallest R with a^(R+1) / (1 - a) * ||B|| <= tol * max(1, ||B||)
  const double target = tolerance_ * std::max(1.0, block_norm_) * (1.0 - a) / block_norm_;
  const double r = std::ceil(std::log(target) / std::log(a)) - 1.0;
  if (r > max_order_) return -1;
  return std::max(0, static_cast<int>(r));
}

void SpatialMultiplier::extend_to(int order) {
  while (static_cast<int>(powers_.size()) <= order) {
    powers_.push_back(w_->sparse() * powers_.back());
  }
}

Eigen::MatrixXd SpatialMultiplier::apply(double rho) {
  const int order = series_order(rho);
  if (order < 0) {
    const auto n = w_->size();
    const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) - rho * w_->dense();
    return a.partialPivLu().solve(powers_.front());
  }
  extend_to(order);
  Eigen::MatrixXd acc = powers_[static_cast<std::size_t>(order)];
  for (int r = order - 1; r >= 0; --r) {
    acc *= rho;
    acc += powers_[static_cast<std::size_t>(r)];
  }
  return acc;
}

Eigen::VectorXd SpatialMultiplier::apply(double rho, const Eigen::VectorXd& v) {
  const int order = series_order(rho);
  if (order < 0) {
    const auto n = w_->size();
    const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) - rho * w_->dense();
    return a.partialPivLu().solve(powers_.front() * v);
  }
  extend_to(order);
  Eigen::VectorXd acc = powers_[static_cast<std::size_t>(order)] * v;
  for (int r = order - 1; r >= 0; --r) {
    acc *= rho;
    acc.noalias() += powers_[static_cast<std::size_t>(r)] * v;
  }
  return acc;
}

void write_weights_csv(const std::string& path, const SpatialWeights& w) {
  auto out = csv::open_output(path);
  const auto n = w.size();
  std::vector<std::string> fields(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) fields[j] = "w" + std::to_string(j);
  csv::write_row(out, fields);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) fields[j] = csv::format_full(w.dense()(i, j));
    csv::write_row(out, fields);
  }
}

SpatialWeights read_weights_csv(const std::string& path) {
  const auto table = csv::read(path);
  if (table.rows.size() != table.header.size()) {
    throw InvalidArgument(path + ": weight matrix must be square (" +
                          std::to_string(table.rows.size()) + " rows, " +
                          std::to_string(table.header.size()) + " columns)");
  }
  return SpatialWeights::from_dense(csv::numeric_block(table, path, 0));
}

CoordinateTable read_coordinates_csv(const std::string& path) {
  const auto table = csv::read(path);
  if (table.header.size() != 3 || table.header[0] != "id" || table.header[1] != "x" ||
      table.header[2] != "y") {
    throw InvalidArgument(path + ": coordinates need header 'id,x,y'");
  }
  const auto values = csv::numeric_block(table, path, 1);
  std::vector<std::string> ids;
  std::vector<Point> pts;
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    ids.push_back(table.rows[i][0]);
    pts.push_back({values(i, 0), values(i, 1)});
  }
  return {std::move(ids), CoordinateSet(std::move(pts))};
}

void write_coordinates_csv(const std::string& path, const std::vector<std::string>& ids,
                           const CoordinateSet& coords) {
  auto out = csv::open_output(path);
  csv::write_row(out, {"id", "x", "y"});
  for (std::size_t i = 0; i < coords.size(); ++i) {
    csv::write_row(out, {ids[i], csv::format_full(coords[i].x), csv::format_full(coords[i].y)});
  }
}

}  // namespace spmnl
