#pragma once

#include <optional>

#include <Eigen/Dense>

namespace gds {

/// Optimal assignment between two equal-size point clouds (rows are points)
/// under squared Euclidean cost. Returns the mean matched cost.
double exact_assignment_cost(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

struct SinkhornResult {
  double value = 0.0;  // entropic transport value <f, a> + <g, b>
  int iterations = 0;
};

/// Entropic transport between uniform measures on the rows of `a` and `b`
/// with regularization `eps`, using a stabilized kernel and eps-scaling.
SinkhornResult sinkhorn(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double eps,
                        double tol = 1e-5);

/// Default regularization: 0.01 times the median squared distance between
/// points of `a` and points of `b`.
double default_sinkhorn_reg(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Sample-based 2-Wasserstein estimate between uniform empirical measures.
///
/// In one dimension the sorted matching is exact. Otherwise, up to 64 points
/// the assignment problem is solved exactly; larger clouds
/// use the debiased Sinkhorn divergence
/// S = OT(a,b) - OT(a,a)/2 - OT(b,b)/2, with `reg` defaulting to
/// default_sinkhorn_reg. Returns sqrt(max(S, 0)). Intended as a test oracle.
double empirical_w2_oracle(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                           std::optional<double> reg = std::nullopt);

}  // namespace gds
