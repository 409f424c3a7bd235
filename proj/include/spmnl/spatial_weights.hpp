#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstddef>
#include <string>
#include <vector>

namespace spmnl {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Planar point pattern. At least two points, all finite, no duplicates.
class CoordinateSet {
 public:
  explicit CoordinateSet(std::vector<Point> points);

  std::size_t size() const { return points_.size(); }
  const Point& operator[](std::size_t i) const { return points_[i]; }
  const std::vector<Point>& points() const { return points_; }

 private:
  std::vector<Point> points_;
};

/// Row-stochastic, zero-diagonal, non-negative N x N neighbourhood matrix.
///
/// Instances are immutable once built. Besides the dense matrix a row-major
/// sparse copy is kept for the repeated products W * B in the samplers.
class SpatialWeights {
 public:
  /// Validates and adopts a dense matrix. Rows whose sum is off by at most
  /// `renormalize_tol` are rescaled to sum to one; larger deviations throw.
  static SpatialWeights from_dense(Eigen::MatrixXd w, double renormalize_tol = 1e-6);

  Eigen::Index size() const { return dense_.rows(); }
  const Eigen::MatrixXd& dense() const { return dense_; }
  const Eigen::SparseMatrix<double, Eigen::RowMajor>& sparse() const { return sparse_; }

  /// Neighbour count for k-nearest-neighbour matrices, 0 for general input.
  int k() const { return k_; }

 private:
  friend SpatialWeights build_knn_weights(const CoordinateSet& coords, int k);
  SpatialWeights(Eigen::MatrixXd w, int k);

  Eigen::MatrixXd dense_;
  Eigen::SparseMatrix<double, Eigen::RowMajor> sparse_;
  int k_ = 0;
};

/// k-nearest-neighbour weights under planar Euclidean distance. Ties in
/// distance are broken by ascending point index. Each row carries exactly k
/// entries equal to 1/k.
SpatialWeights build_knn_weights(const CoordinateSet& coords, int k);

/// log|I - rho W| by dense LU. Throws NumericalError if I - rho W is singular.
double log_det_dense(const Eigen::MatrixXd& w, double rho);

/// Tabulated log|I - rho W| over a uniform rho grid (rho = 0 always a node).
class LogDetGrid {
 public:
  static constexpr double kDefaultBound = 0.999;
  static constexpr int kDefaultPoints = 2000;

  LogDetGrid(const SpatialWeights& w, int n_points = kDefaultPoints,
             double bound = kDefaultBound);

  const std::vector<double>& rho_values() const { return rho_; }
  const std::vector<double>& logdet_values() const { return logdet_; }

  /// Interpolated log-determinant. Uses the four surrounding nodes (cubic
  /// Lagrange); exact at nodes. Throws outside the tabulated range.
  double operator()(double rho) const;

 private:
  std::vector<double> rho_;
  std::vector<double> logdet_;
};

/// Applies the spatial multiplier (I - rho W)^{-1} to a fixed N x M block B.
///
/// Powers W^r B are cached so that each evaluation is a Horner sum over the
/// truncated Neumann series; the truncation order is chosen from the bound
/// |rho|^(R+1) / (1 - |rho|) * ||B||_inf, valid because ||W||_inf = 1. When the
/// order needed exceeds the memory budget the evaluation falls back to a
/// dense LU solve.
class SpatialMultiplier {
 public:
  SpatialMultiplier(const SpatialWeights& w, Eigen::MatrixXd block,
                    double tolerance = 1e-13, std::size_t max_cached_doubles = 1u << 23);

  const Eigen::MatrixXd& block() const { return powers_.front(); }

  /// (I - rho W)^{-1} B.
  Eigen::MatrixXd apply(double rho);

  /// (I - rho W)^{-1} B v without forming the full product.
  Eigen::VectorXd apply(double rho, const Eigen::VectorXd& v);

  /// Series order that `apply` would use at rho, or -1 for the LU fallback.
  int series_order(double rho) const;

 private:
  void extend_to(int order);

  const SpatialWeights* w_;
  std::vector<Eigen::MatrixXd> powers_;
  double tolerance_;
  double block_norm_;
  int max_order_;
};

/// Dense CSV round-trip of W (header row of column indices, N rows).
void write_weights_csv(const std::string& path, const SpatialWeights& w);
SpatialWeights read_weights_csv(const std::string& path);

/// Coordinates CSV with header `id,x,y`. Returns ids alongside the points.
struct CoordinateTable {
  std::vector<std::string> ids;
  CoordinateSet coords;
};
CoordinateTable read_coordinates_csv(const std::string& path);
void write_coordinates_csv(const std::string& path, const std::vector<std::string>& ids,
                           const CoordinateSet& coords);

}  // namespace spmnl
