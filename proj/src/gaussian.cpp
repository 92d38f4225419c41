#include "gds/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gds/error.hpp"

namespace gds {

namespace {

double max_abs(const Eigen::MatrixXd& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> checked_psd_eig(const Eigen::MatrixXd& s) {
  if (s.rows() != s.cols()) throw ValidationError("matrix square root needs a square matrix");
  if (!s.allFinite()) throw ValidationError("matrix has non-finite entries");
  const double scale = 1.0 + max_abs(s);
  if (max_abs(s - s.transpose()) > 1e-10 * scale) {
    throw ValidationError("matrix square root input is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(symmetrize(s));
  if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  if (s.rows() > 0 && eig.eigenvalues()(0) < -1e-8 * scale) {
    throw ValidationError("matrix is not positive semidefinite (eigenvalue " +
                          std::to_string(eig.eigenvalues()(0)) + ")");
  }
  return eig;
}

}  // namespace

GaussianMeasure::GaussianMeasure(Eigen::VectorXd mean, Eigen::MatrixXd cov)
    : mean_(std::move(mean)), cov_(std::move(cov)) {
  if (cov_.rows() != cov_.cols() || cov_.rows() != mean_.size()) {
    throw ValidationError("Gaussian mean/covariance dimensions disagree");
  }
  if (!mean_.allFinite() || !cov_.allFinite()) {
    throw ValidationError("Gaussian parameters must be finite");
  }
  const double scale = std::max(1.0, max_abs(cov_));
  if (max_abs(cov_ - cov_.transpose()) > 1e-10 * scale) {
    throw ValidationError("covariance is not symmetric");
  }
  cov_ = symmetrize(cov_);
  if (cov_.size() == 0 || cov_.isZero(0.0)) return;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov_);
  const double lo = eig.eigenvalues()(0);
  if (lo < -1e-10 * scale) {
    throw ValidationError("covariance is not positive semidefinite (eigenvalue " +
                          std::to_string(lo) + ")");
  }
  if (lo < 0.0) {
    const auto& v = eig.eigenvectors();
    cov_ = symmetrize(v * eig.eigenvalues().cwiseMax(0.0).asDiagonal() * v.transpose());
  }
}

GaussianMeasure GaussianMeasure::dirac(Eigen::VectorXd point) {
  const Eigen::Index n = point.size();
  return {std::move(point), Eigen::MatrixXd::Zero(n, n)};
}

GaussianMeasure GaussianMeasure::standard(Eigen::Index n) {
  return {Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Identity(n, n)};
}

Eigen::MatrixXd sqrtm_psd(const Eigen::MatrixXd& s) {
  const auto eig = checked_psd_eig(s);
  const auto& v = eig.eigenvectors();
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return symmetrize(v * root.asDiagonal() * v.transpose());
}

double trace_sqrtm_psd(const Eigen::MatrixXd& s) {
  return checked_psd_eig(s).eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
}

double bures_squared(const Eigen::MatrixXd& cov1, const Eigen::MatrixXd& cov2) {
  if (cov1.rows() != cov2.rows() || cov1.cols() != cov2.cols()) {
    throw ValidationError("covariance dimensions disagree");
  }
  const Eigen::MatrixXd root2 = sqrtm_psd(cov2);
  const double cross = trace_sqrtm_psd(symmetrize(root2 * cov1 * root2));
  return std::max(0.0, cov1.trace() + cov2.trace() - 2.0 * cross);
}

double w2(const GaussianMeasure& mu1, const GaussianMeasure& mu2) {
  if (mu1.dim() != mu2.dim()) {
    throw ValidationError("w2: dimension mismatch (" + std::to_string(mu1.dim()) + " vs " +
                          std::to_string(mu2.dim()) + ")");
  }
  const double mean_part = (mu1.mean() - mu2.mean()).squaredNorm();
  return std::sqrt(mean_part + bures_squared(mu1.cov(), mu2.cov()));
}

GaussianMeasure pushforward(const Eigen::MatrixXd& f, const GaussianMeasure& mu) {
  if (f.cols() != mu.dim()) {
    throw ValidationError("pushforward: operator has " + std::to_string(f.cols()) +
                          " columns, measure has dimension " + std::to_string(mu.dim()));
  }
  return {f * mu.mean(), symmetrize(f * mu.cov() * f.transpose())};
}

}  // namespace gds
