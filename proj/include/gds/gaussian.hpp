#pragma once

#include <Eigen/Dense>

namespace gds {

/// Gaussian measure N(mean, cov) on R^n. A zero covariance is the Dirac
/// measure at `mean`; rank-deficient covariances are allowed.
///
/// Construction symmetrizes `cov`, rejects eigenvalues below
/// -1e-10 * max(1, |cov|_max) and clamps the remaining negative round-off
/// to zero.
class GaussianMeasure {
 public:
  GaussianMeasure(Eigen::VectorXd mean, Eigen::MatrixXd cov);

  static GaussianMeasure dirac(Eigen::VectorXd point);
  static GaussianMeasure standard(Eigen::Index n);

  Eigen::Index dim() const { return mean_.size(); }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& cov() const { return cov_; }

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
};

/// Principal square root of a symmetric PSD matrix via eigendecomposition.
/// Eigenvalues are clamped at zero; inputs asymmetric beyond
/// 1e-10 * (1 + |S|_max) or with eigenvalues below -1e-8 * (1 + |S|_max) are
/// rejected.
Eigen::MatrixXd sqrtm_psd(const Eigen::MatrixXd& s);

/// Trace of sqrtm_psd(s), computed from the clamped spectrum.
double trace_sqrtm_psd(const Eigen::MatrixXd& s);

/// Squared Bures term Tr(S1 + S2 - 2 (S2^1/2 S1 S2^1/2)^1/2), clamped at 0.
double bures_squared(const Eigen::MatrixXd& cov1, const Eigen::MatrixXd& cov2);

/// Closed-form 2-Wasserstein distance between Gaussian measures.
double w2(const GaussianMeasure& mu1, const GaussianMeasure& mu2);

/// Law of F X for X ~ mu: N(F m, F S F^T).
GaussianMeasure pushforward(const Eigen::MatrixXd& f, const GaussianMeasure& mu);

/// (M + M^T) / 2
inline Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m) {
  return 0.5 * (m + m.transpose());
}

}  // namespace gds
