#pragma once

#include <vector>

#include <Eigen/Dense>

#include "gds/graph.hpp"

namespace gds {

/// Column-aligned input/target signal pairs (n x T each).
struct PairedData {
  Eigen::MatrixXd x;
  Eigen::MatrixXd x_star;

  void validate() const;
};

/// Least squares over the Chebyshev coefficients: min ||F(theta) X - X*||_F^2.
ChebFilter gsp_ls(const SpectralDecomp& sd, const PairedData& d);

/// The least-squares objective ||F(theta) X - X*||_F^2.
double ls_objective(const SpectralDecomp& sd, const PairedData& d, const Eigen::Vector3d& theta);

/// l1-regularized least squares solved by proximal gradient (soft
/// thresholding) started from the least-squares solution.
ChebFilter gsp_rls(const SpectralDecomp& sd, const PairedData& d, double lambda);

/// Default l1 weight: 0.1 * ||gradient of the data term at theta = 0||_inf.
double default_rls_lambda(const SpectralDecomp& sd, const PairedData& d);

/// Least squares plus lambda * ||F Sigma_X F^T - Sigma_X*||_F^2.
ChebFilter gsp_lscm(const SpectralDecomp& sd, const PairedData& d, double lambda);

double lscm_objective(const SpectralDecomp& sd, const PairedData& d, double lambda,
                      const Eigen::Vector3d& theta);
Eigen::Vector3d lscm_gradient(const SpectralDecomp& sd, const PairedData& d, double lambda,
                              const Eigen::Vector3d& theta);

/// Column sample covariance (1/(T-1)) plus 1e-8 I.
Eigen::MatrixXd column_covariance(const Eigen::MatrixXd& x);

/// Heat kernel exp(-tau L) from the spectral decomposition; tau = 0 gives I
/// exactly.
Eigen::MatrixXd heat_kernel(const SpectralDecomp& sd, double tau);

struct LevModel {
  std::vector<double> taus;
  std::vector<double> weights;  // on the simplex
  double alpha = 1.0;
  double gamma = 1.0;
  Eigen::MatrixXd filter;
  double log_evidence = 0.0;
};

/// Heat-kernel mixture fitted by maximizing the column-wise log evidence
/// sum_t log N(x*_t | H x_t, alpha^-1 I + gamma^-1 X X^T).
LevModel gsp_lev(const SpectralDecomp& sd, const PairedData& d, const std::vector<double>& taus);

/// Column-wise log evidence of the mixture parameters.
double lev_log_evidence(const SpectralDecomp& sd, const PairedData& d,
                        const std::vector<double>& taus, const std::vector<double>& weights,
                        double alpha, double gamma);

/// filter_matrix * x
Eigen::MatrixXd predict(const Eigen::MatrixXd& filter_matrix, const Eigen::MatrixXd& x);

}  // namespace gds
