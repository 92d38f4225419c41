#include "gds/copula.hpp"

#include <cmath>
#include <string>

#include "gds/error.hpp"

namespace gds {

Marginals::Marginals(Eigen::VectorXd means, Eigen::VectorXd stds)
    : Marginals(means, std::move(stds), default_floor(means)) {}

Marginals::Marginals(Eigen::VectorXd means, Eigen::VectorXd stds, double sigma_floor)
    : means_(std::move(means)), stds_(std::move(stds)), floor_(sigma_floor) {
  if (means_.size() != stds_.size()) throw ValidationError("marginal means/stds sizes differ");
  if (!(floor_ > 0.0) || !std::isfinite(floor_)) {
    throw ValidationError("sigma floor must be positive");
  }
  if (!means_.allFinite() || !stds_.allFinite()) {
    throw ValidationError("marginal parameters must be finite");
  }
  if ((stds_.array() < 0.0).any()) throw ValidationError("marginal stds must be nonnegative");
  stds_ = stds_.cwiseMax(floor_);
}

double Marginals::default_floor(const Eigen::VectorXd& means) {
  const double biggest = means.size() == 0 ? 0.0 : means.cwiseAbs().maxCoeff();
  return 1e-6 * (1.0 + biggest);
}

CorrelationMatrix::CorrelationMatrix(Eigen::MatrixXd r) : r_(std::move(r)) {
  if (r_.rows() != r_.cols()) throw ValidationError("correlation matrix must be square");
  if (!r_.allFinite()) throw ValidationError("correlation matrix has non-finite entries");
  if (r_.size() > 0 && (r_ - r_.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
    throw ValidationError("correlation matrix is not symmetric");
  }
  for (Eigen::Index i = 0; i < r_.rows(); ++i) {
    if (r_(i, i) != 1.0) throw ValidationError("correlation matrix diagonal must be 1");
  }
  if (r_.size() > 0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(r_, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues()(0) < -1e-8) {
      throw ValidationError("correlation matrix is not positive semidefinite");
    }
  }
}

CorrelationMatrix CorrelationMatrix::identity(Eigen::Index n) {
  return CorrelationMatrix(Eigen::MatrixXd::Identity(n, n));
}

GaussianMeasure assemble_joint(const Marginals& marg, const CorrelationMatrix& r) {
  if (marg.size() != r.size()) {
    throw ValidationError("assemble_joint: " + std::to_string(marg.size()) +
                          " marginals but correlation matrix of size " +
                          std::to_string(r.size()));
  }
  const auto d = marg.stds().asDiagonal();
  Eigen::MatrixXd cov = d * r.matrix() * d;
  // Diagonal set directly so the marginal variances are exact.
  cov.diagonal() = marg.stds().array().square().matrix();
  return {marg.means(), cov};
}

std::pair<double, double> marginal_of(const GaussianMeasure& mu, Eigen::Index i) {
  if (i < 0 || i >= mu.dim()) {
    throw ValidationError("marginal index " + std::to_string(i) + " out of range for dimension " +
                          std::to_string(mu.dim()));
  }
  return {mu.mean()(i), mu.cov()(i, i)};
}

CorrelationMatrix project_correlation(const Eigen::MatrixXd& m, double delta) {
  if (m.rows() != m.cols()) throw ValidationError("projection needs a square matrix");
  if (!(delta > 0.0)) throw ValidationError("projection threshold delta must be positive");
  if (!m.allFinite()) throw NumericalError("projection input has non-finite entries");

  Eigen::MatrixXd r = symmetrize(m);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(r);
  if (eig.info() != Eigen::Success) throw NumericalError("correlation eigendecomposition failed");
  const auto& v = eig.eigenvectors();
  r = v * eig.eigenvalues().cwiseMax(delta).asDiagonal() * v.transpose();

  const Eigen::VectorXd diag = r.diagonal();
  if ((diag.array() <= 0.0).any()) {
    throw NumericalError("non-positive diagonal after PSD projection");
  }
  const Eigen::VectorXd inv_s = diag.cwiseSqrt().cwiseInverse();
  r = inv_s.asDiagonal() * r * inv_s.asDiagonal();

  r = symmetrize(r);
  r.diagonal().setOnes();
  return CorrelationMatrix(std::move(r));
}

}  // namespace gds
