#include "gds/learn.hpp"

#include <cmath>
#include <string>

#include "gds/error.hpp"
#include "gds/gaussian.hpp"

namespace gds {

namespace {

constexpr double kSqrtFloor = 1e-12;
constexpr double kDivergence = 1e12;
constexpr double kFdStep = 1e-5;

struct Terms {
  Eigen::MatrixXd filter;
  Eigen::MatrixXd sigma;  // D sym(R) D
  Eigen::VectorXd residual;
  Eigen::MatrixXd inner;  // sym(B M B), B = target_root, M = F sigma F^T
  double loss = 0.0;
};

Terms evaluate(const GdsCopProblem& p, const Eigen::Vector3d& theta, const Eigen::MatrixXd& r) {
  if (r.rows() != p.size() || r.cols() != p.size()) {
    throw ValidationError("correlation matrix size does not match the problem");
  }
  Terms t;
  t.filter = materialize_filter(p.spectral(), ChebFilter::from_vector(theta));
  const auto d = p.marginals().stds().asDiagonal();
  t.sigma = d * symmetrize(r) * d;
  const Eigen::MatrixXd pushed = symmetrize(t.filter * t.sigma * t.filter.transpose());
  t.residual = t.filter * p.marginals().means() - p.target_mean();
  const Eigen::MatrixXd& root = p.target_root();
  t.inner = symmetrize(root * pushed * root);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(t.inner, Eigen::EigenvaluesOnly);
  const double cross = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  t.loss = t.residual.squaredNorm() + pushed.trace() + p.target_cov().trace() - 2.0 * cross;
  return t;
}

// dL/dM for M = F sigma F^T: I - B A^{-1/2} B with A = B M B.
Eigen::MatrixXd cov_sensitivity(const GdsCopProblem& p, const Terms& t) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(t.inner);
  if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition failed in gradient");
  const auto& v = eig.eigenvectors();
  const Eigen::VectorXd inv_root = eig.eigenvalues().cwiseMax(kSqrtFloor).cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd& root = p.target_root();
  const Eigen::MatrixXd g = root * (v * inv_root.asDiagonal() * v.transpose()) * root;
  return Eigen::MatrixXd::Identity(p.size(), p.size()) - symmetrize(g);
}

void require_finite(const Eigen::MatrixXd& g, const char* what) {
  if (!g.allFinite()) throw NumericalError(std::string("non-finite gradient with respect to ") + what);
}

double fd_step(double x) { return kFdStep * std::max(1.0, std::abs(x)); }

}  // namespace

GdsCopProblem::GdsCopProblem(SpectralDecomp sd, Marginals marg, Eigen::VectorXd target_mean,
                             Eigen::MatrixXd target_cov)
    : sd_(std::move(sd)),
      marg_(std::move(marg)),
      target_mean_(std::move(target_mean)),
      target_cov_(std::move(target_cov)) {
  const Eigen::Index n = sd_.size();
  if (marg_.size() != n || target_mean_.size() != n || target_cov_.rows() != n ||
      target_cov_.cols() != n) {
    throw ValidationError("GdsCopProblem: dimensions disagree with the graph size " +
                          std::to_string(n));
  }
  if (!target_mean_.allFinite()) throw ValidationError("target mean must be finite");
  // Validates symmetry / PSD of the target.
  const GaussianMeasure target(target_mean_, target_cov_);
  target_cov_ = target.cov();
  target_root_ = sqrtm_psd(target_cov_);
}

void LearnSettings::validate() const {
  if (!(eta1 >= 0.0) || !(eta2 >= 0.0)) throw ValidationError("learning rates must be >= 0");
  if (!(epsilon > 0.0)) throw ValidationError("convergence tolerance must be positive");
  if (!(delta > 0.0)) throw ValidationError("projection threshold must be positive");
  if (max_iters < 1) throw ValidationError("max_iters must be >= 1");
}

double bures_objective_raw(const GdsCopProblem& p, const Eigen::Vector3d& theta,
                           const Eigen::MatrixXd& r) {
  return evaluate(p, theta, r).loss;
}

double bures_objective(const GdsCopProblem& p, const Eigen::Vector3d& theta,
                       const CorrelationMatrix& r) {
  return bures_objective_raw(p, theta, r.matrix());
}

Eigen::Vector3d grad_theta(const GdsCopProblem& p, const Eigen::Vector3d& theta,
                           const Eigen::MatrixXd& r, GradMode mode) {
  Eigen::Vector3d g;
  if (mode == GradMode::kFiniteDifference) {
    for (int k = 0; k < 3; ++k) {
      const double h = fd_step(theta(k));
      Eigen::Vector3d hi = theta, lo = theta;
      hi(k) += h;
      lo(k) -= h;
      g(k) = (bures_objective_raw(p, hi, r) - bures_objective_raw(p, lo, r)) / (2.0 * h);
    }
  } else {
    const Terms t = evaluate(p, theta, r);
    const Eigen::MatrixXd w = cov_sensitivity(p, t);
    const Eigen::MatrixXd grad_f = 2.0 * t.residual * p.marginals().means().transpose() +
                                   2.0 * w * t.filter * t.sigma;
    for (int k = 0; k < 3; ++k) g(k) = grad_f.cwiseProduct(p.spectral().cheb_basis[k]).sum();
  }
  require_finite(g, "theta");
  return g;
}

Eigen::MatrixXd grad_r(const GdsCopProblem& p, const Eigen::Vector3d& theta,
                       const Eigen::MatrixXd& r, GradMode mode) {
  const Eigen::Index n = p.size();
  Eigen::MatrixXd g(n, n);
  if (mode == GradMode::kFiniteDifference) {
    Eigen::MatrixXd probe = r;
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) {
        const double x = probe(i, j);
        const double h = fd_step(x);
        probe(i, j) = x + h;
        const double hi = bures_objective_raw(p, theta, probe);
        probe(i, j) = x - h;
        const double lo = bures_objective_raw(p, theta, probe);
        probe(i, j) = x;
        g(i, j) = (hi - lo) / (2.0 * h);
      }
    }
  } else {
    const Terms t = evaluate(p, theta, r);
    const Eigen::MatrixXd w = cov_sensitivity(p, t);
    const auto d = p.marginals().stds().asDiagonal();
    g = d * (t.filter.transpose() * w * t.filter) * d;
  }
  require_finite(g, "R");
  return g;
}

LearnTrace learn_gds_cop(const GdsCopProblem& p, const LearnSettings& s,
                         const LearnObserver& observer) {
  s.validate();
  const Eigen::Index n = p.size();
  LearnTrace trace;
  Eigen::Vector3d theta(1.0, 0.0, 0.0);
  CorrelationMatrix r = CorrelationMatrix::identity(n);
  trace.final_r = r;

  for (int u = 0; u < s.max_iters; ++u) {
    const double loss = bures_objective(p, theta, r);
    if (!std::isfinite(loss) || loss > kDivergence) {
      const std::string last =
          trace.loss_history.empty() ? "none" : std::to_string(trace.loss_history.back());
      throw LearnDivergence("GDS-Cop diverged at iteration " + std::to_string(u) + " (loss " +
                                std::to_string(loss) + ", last finite loss " + last + ")",
                            trace);
    }
    trace.loss_history.push_back(loss);
    trace.final_theta = theta;
    trace.final_r = r;
    trace.iterations = u + 1;
    if (observer) observer(u, theta, r, loss);
    if (u > 0 && std::abs(loss - trace.loss_history[u - 1]) <= s.epsilon) {
      trace.converged = true;
      break;
    }

    Eigen::Vector3d g_theta;
    Eigen::MatrixXd g_r;
    try {
      g_theta = grad_theta(p, theta, r.matrix(), s.grad_mode);
      g_r = grad_r(p, theta, r.matrix(), s.grad_mode);
    } catch (const NumericalError& e) {
      throw LearnDivergence(std::string(e.what()) + " at iteration " + std::to_string(u), trace);
    }
    theta -= s.eta1 * g_theta;
    r = project_correlation(r.matrix() - s.eta2 * g_r, s.delta);
  }
  return trace;
}

}  // namespace gds
