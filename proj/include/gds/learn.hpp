#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "gds/copula.hpp"
#include "gds/error.hpp"
#include "gds/graph.hpp"

namespace gds {

/// Filter-learning problem: find Chebyshev coefficients theta and a copula
/// correlation R so that the pushforward of N(m, D R D) under F(theta) is
/// close in W2 to the target N(target_mean, target_cov).
class GdsCopProblem {
 public:
  GdsCopProblem(SpectralDecomp sd, Marginals marg, Eigen::VectorXd target_mean,
                Eigen::MatrixXd target_cov);

  Eigen::Index size() const { return sd_.size(); }
  const SpectralDecomp& spectral() const { return sd_; }
  const Marginals& marginals() const { return marg_; }
  const Eigen::VectorXd& target_mean() const { return target_mean_; }
  const Eigen::MatrixXd& target_cov() const { return target_cov_; }
  /// Cached principal square root of target_cov.
  const Eigen::MatrixXd& target_root() const { return target_root_; }

 private:
  SpectralDecomp sd_;
  Marginals marg_;
  Eigen::VectorXd target_mean_;
  Eigen::MatrixXd target_cov_;
  Eigen::MatrixXd target_root_;
};

enum class GradMode { kAnalytic, kFiniteDifference };

struct LearnSettings {
  double eta1 = 1e-3;  // step on the filter coefficients
  double eta2 = 1e-3;  // step on the correlation matrix
  double epsilon = 1e-8;
  double delta = 1e-6;
  int max_iters = 5000;
  // The start (identity filter, independence copula) is deterministic, so
  // the seed does not influence the result.
  std::uint64_t seed = 0;
  GradMode grad_mode = GradMode::kAnalytic;

  void validate() const;
};

struct LearnTrace {
  std::vector<double> loss_history;
  Eigen::Vector3d final_theta = Eigen::Vector3d(1.0, 0.0, 0.0);
  CorrelationMatrix final_r = CorrelationMatrix::identity(0);
  int iterations = 0;
  bool converged = false;
};

/// Thrown when the loss becomes non-finite or exceeds 1e12. Carries the trace
/// up to the last finite iterate.
class LearnDivergence : public NumericalError {
 public:
  LearnDivergence(const std::string& what, LearnTrace trace)
      : NumericalError(what), trace_(std::move(trace)) {}
  const LearnTrace& trace() const { return trace_; }

 private:
  LearnTrace trace_;
};

/// W2^2 between the filtered copula model and the target.
double bures_objective(const GdsCopProblem& p, const Eigen::Vector3d& theta,
                       const CorrelationMatrix& r);

/// Same objective on an unconstrained matrix; the model covariance is built
/// from (R + R^T)/2, so entrywise derivatives match grad_r.
double bures_objective_raw(const GdsCopProblem& p, const Eigen::Vector3d& theta,
                           const Eigen::MatrixXd& r);

Eigen::Vector3d grad_theta(const GdsCopProblem& p, const Eigen::Vector3d& theta,
                           const Eigen::MatrixXd& r, GradMode mode = GradMode::kAnalytic);
Eigen::MatrixXd grad_r(const GdsCopProblem& p, const Eigen::Vector3d& theta,
                       const Eigen::MatrixXd& r, GradMode mode = GradMode::kAnalytic);

/// Called once per iteration with the iterate whose loss was just recorded.
using LearnObserver = std::function<void(int iteration, const Eigen::Vector3d& theta,
                                         const CorrelationMatrix& r, double loss)>;

/// Alternating gradient steps on theta and R with a correlation projection
/// after each R step; stops when |L_u - L_{u-1}| <= epsilon or after
/// max_iters loss evaluations.
LearnTrace learn_gds_cop(const GdsCopProblem& p, const LearnSettings& s,
                         const LearnObserver& observer = {});

}  // namespace gds
