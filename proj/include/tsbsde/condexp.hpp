#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "tsbsde/stochastic.hpp"

namespace tsbsde {

/// Gauss-Hermite rule rescaled for a standard normal: E[f(Z)] ~ sum_k weight[k] f(abscissa[k]).
/// Exact for polynomials of degree < 2n. Nodes are symmetric about 0 bit-for-bit.
class GaussHermite {
 public:
  explicit GaussHermite(std::size_t n);

  std::size_t size() const { return abscissa_.size(); }
  std::span<const double> abscissa() const { return abscissa_; }
  std::span<const double> weight() const { return weight_; }

 private:
  std::vector<double> abscissa_;
  std::vector<double> weight_;
};

/// C1 piecewise-cubic Hermite interpolant on a uniform node set.
///
/// Node slopes come from fourth-order finite differences, so cubic data are
/// reproduced exactly. On monotone stretches the slopes pass through Hyman's
/// filter; at data extrema they are kept, and for nonnegative data clipped to
/// |m| <= 3 f / h, which keeps every cell nonnegative. Outside the nodes the
/// edge value, slope and curvature give a quadratic extension.
class MonotoneCubic {
 public:
  MonotoneCubic(double first, double spacing, std::span<const double> values);

  double operator()(double x) const;
  std::size_t size() const { return values_.size(); }

 private:
  double first_;
  double spacing_;
  std::vector<double> values_;
  std::vector<double> slopes_;
  double left_curvature_ = 0.0;
  double right_curvature_ = 0.0;
};

/// Values of a function of the current driver state w on a uniform node grid, at time `time`.
struct SpatialMesh {
  std::vector<double> nodes;
  std::vector<double> values;
  double time = 0.0;

  /// 'count' nodes on [-half_width * sqrt(horizon), +half_width * sqrt(horizon)]; count must be odd so 0 is a node.
  static SpatialMesh uniform(double half_width, double horizon, std::size_t count, double time = 0.0);

  double spacing() const { return nodes[1] - nodes[0]; }
  /// Throws ValidationError unless nodes are strictly increasing, uniform and match values.
  void validate() const;
  MonotoneCubic interpolant() const { return MonotoneCubic(nodes.front(), spacing(), values); }
};

/// E[f(w + dW) | w] with dW ~ normal(0, variance) at every node, f interpolated from `next`.
/// variance == 0 returns `next` unchanged. The result is stamped at next.time - variance.
SpatialMesh quadrature_condexp(const SpatialMesh& next, double variance, const GaussHermite& rule);

/// Monomials of total degree <= degree in the standardized state w / sqrt(t).
class RegressionBasis {
 public:
  RegressionBasis(std::size_t dims, std::size_t degree);

  std::size_t dims() const { return dims_; }
  std::size_t degree() const { return degree_; }
  std::size_t size() const { return exponents_.size() / dims_; }
  /// Writes every basis function at state w (already standardized) into out.
  void evaluate(std::span<const double> w, std::span<double> out) const;

 private:
  std::size_t dims_;
  std::size_t degree_;
  std::vector<unsigned> exponents_;  // size() rows of dims_ exponents
};

/// Least-squares projection onto basis functions of W_{t_index}; minimum-norm
/// when the design is rank deficient (always the case at t = 0).
class Projection {
 public:
  Projection(const PathEnsemble& ensemble, std::size_t t_index, const RegressionBasis& basis);

  std::vector<double> fit(std::span<const double> target) const;
  Eigen::VectorXd coefficients(std::span<const double> target) const;
  std::size_t rank() const { return rank_; }

 private:
  void features(std::size_t path, std::span<double> out) const;

  const PathEnsemble* ensemble_;
  std::size_t t_index_;
  RegressionBasis basis_;
  double scale_;
  Eigen::MatrixXd gram_pinv_;
  std::size_t rank_ = 0;
};

/// Fitted E[target | W_{t_index}] per path. Throws ValidationError when paths < basis size.
std::vector<double> lsmc_condexp(const PathEnsemble& ensemble, std::size_t t_index, std::span<const double> target,
                                 const RegressionBasis& basis);

}  // namespace tsbsde
