#pragma once

#include <utility>

#include <Eigen/Dense>

#include "gds/gaussian.hpp"

namespace gds {

/// Per-node Gaussian marginals N(means_i, stds_i^2).
///
/// Standard deviations are floored at `sigma_floor`; the default floor is
/// 1e-6 * (1 + max_i |means_i|).
class Marginals {
 public:
  Marginals(Eigen::VectorXd means, Eigen::VectorXd stds);
  Marginals(Eigen::VectorXd means, Eigen::VectorXd stds, double sigma_floor);

  static double default_floor(const Eigen::VectorXd& means);

  Eigen::Index size() const { return means_.size(); }
  const Eigen::VectorXd& means() const { return means_; }
  const Eigen::VectorXd& stds() const { return stds_; }
  double sigma_floor() const { return floor_; }

 private:
  Eigen::VectorXd means_;
  Eigen::VectorXd stds_;
  double floor_;
};

/// Correlation matrix of a Gaussian copula: symmetric, unit diagonal,
/// eigenvalues >= -1e-8.
class CorrelationMatrix {
 public:
  explicit CorrelationMatrix(Eigen::MatrixXd r);

  static CorrelationMatrix identity(Eigen::Index n);

  Eigen::Index size() const { return r_.rows(); }
  const Eigen::MatrixXd& matrix() const { return r_; }

 private:
  Eigen::MatrixXd r_;
};

/// Joint Gaussian N(m, D R D) with D = diag(stds). Its coordinate marginals
/// are exactly the inputs (Sklar consistency of the Gaussian copula).
GaussianMeasure assemble_joint(const Marginals& marg, const CorrelationMatrix& r);

/// Mean and variance of coordinate `i` of a Gaussian.
std::pair<double, double> marginal_of(const GaussianMeasure& mu, Eigen::Index i);

/// Nearest-correlation style projection in four passes: symmetrize, clamp
/// eigenvalues at `delta`, rescale to unit diagonal with S^-1 R S^-1, then
/// set the diagonal to exactly one.
CorrelationMatrix project_correlation(const Eigen::MatrixXd& m, double delta = 1e-6);

}  // namespace gds
