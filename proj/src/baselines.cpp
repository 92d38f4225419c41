#include "gds/baselines.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "gds/error.hpp"
#include "gds/gaussian.hpp"

namespace gds {

namespace {

constexpr int kRlsMaxIters = 10000;
constexpr double kRlsTol = 1e-10;
constexpr int kLscmMaxIters = 10000;
constexpr double kLscmStep = 1e-3;
constexpr double kLscmTol = 1e-10;
constexpr int kLevMaxIters = 5000;
constexpr double kLevStep = 1e-2;
constexpr double kLevTol = 1e-9;
constexpr double kPrecisionFloor = 1e-8;

void check_graph(const SpectralDecomp& sd, const PairedData& d) {
  d.validate();
  if (d.x.rows() != sd.size()) {
    throw ValidationError("paired data has " + std::to_string(d.x.rows()) +
                          " rows but the graph has " + std::to_string(sd.size()) + " vertices");
  }
}

// Normal equations of the least-squares term in the 3 coefficients:
// ||F X - X*||^2 = theta^T G theta - 2 b^T theta + c.
struct Quadratic {
  Eigen::Matrix3d gram;
  Eigen::Vector3d linear;
  double constant = 0.0;
};

Quadratic ls_quadratic(const SpectralDecomp& sd, const PairedData& d) {
  std::array<Eigen::MatrixXd, 3> basis;
  for (int k = 0; k < 3; ++k) basis[k] = sd.cheb_basis[k] * d.x;
  Quadratic q;
  for (int j = 0; j < 3; ++j) {
    q.linear(j) = basis[j].cwiseProduct(d.x_star).sum();
    for (int k = 0; k <= j; ++k) {
      q.gram(j, k) = q.gram(k, j) = basis[j].cwiseProduct(basis[k]).sum();
    }
  }
  q.constant = d.x_star.squaredNorm();
  return q;
}

double quad_value(const Quadratic& q, const Eigen::Vector3d& t) {
  return t.dot(q.gram * t) - 2.0 * q.linear.dot(t) + q.constant;
}

Eigen::Vector3d solve_ridge(const Quadratic& q) {
  const double trace = q.gram.trace();
  if (!(trace > 0.0)) return Eigen::Vector3d::Zero();
  const Eigen::Matrix3d reg = q.gram + (1e-10 * trace / 3.0) * Eigen::Matrix3d::Identity();
  return reg.ldlt().solve(q.linear);
}

double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

// Quartic covariance-matching term in the 3 coefficients:
// ||sum_jk t_j t_k P_jk - S*||^2 with P_jk = T_j S_x T_k.
struct Quartic {
  double q4[3][3][3][3];
  double q2[3][3];
  double constant = 0.0;

  double value(const Eigen::Vector3d& t) const {
    double v = constant;
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) {
        v -= 2.0 * t(j) * t(k) * q2[j][k];
        for (int l = 0; l < 3; ++l)
          for (int m = 0; m < 3; ++m) v += t(j) * t(k) * t(l) * t(m) * q4[j][k][l][m];
      }
    return v;
  }

  Eigen::Vector3d gradient(const Eigen::Vector3d& t) const {
    Eigen::Vector3d g = Eigen::Vector3d::Zero();
    for (int a = 0; a < 3; ++a) {
      for (int k = 0; k < 3; ++k) g(a) -= 2.0 * (q2[a][k] + q2[k][a]) * t(k);
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l)
          for (int m = 0; m < 3; ++m) {
            const double tri = t(k) * t(l) * t(m);
            g(a) += tri * (q4[a][k][l][m] + q4[k][a][l][m] + q4[k][l][a][m] + q4[k][l][m][a]);
          }
    }
    return g;
  }
};

Quartic cov_quartic(const SpectralDecomp& sd, const Eigen::MatrixXd& sx, const Eigen::MatrixXd& ss) {
  std::array<std::array<Eigen::MatrixXd, 3>, 3> p;
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k) p[j][k] = sd.cheb_basis[j] * sx * sd.cheb_basis[k];
  Quartic q;
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k) {
      q.q2[j][k] = p[j][k].cwiseProduct(ss).sum();
      for (int l = 0; l < 3; ++l)
        for (int m = 0; m < 3; ++m) q.q4[j][k][l][m] = p[j][k].cwiseProduct(p[l][m]).sum();
    }
  q.constant = ss.squaredNorm();
  return q;
}

struct LscmModel {
  Quadratic data;
  Quartic cov;
  double lambda;

  double value(const Eigen::Vector3d& t) const { return quad_value(data, t) + lambda * cov.value(t); }
  Eigen::Vector3d gradient(const Eigen::Vector3d& t) const {
    return 2.0 * (data.gram * t - data.linear) + lambda * cov.gradient(t);
  }
};

LscmModel lscm_model(const SpectralDecomp& sd, const PairedData& d, double lambda) {
  if (d.x.cols() < 2) throw ValidationError("covariance needs >= 2 columns");
  return {ls_quadratic(sd, d),
          cov_quartic(sd, column_covariance(d.x), column_covariance(d.x_star)), lambda};
}

// Parameters of the heat-kernel mixture in unconstrained coordinates.
struct LevParams {
  Eigen::VectorXd logits;
  double log_alpha = 0.0;
  double log_gamma = 0.0;
};

Eigen::VectorXd softmax(const Eigen::VectorXd& z) {
  const Eigen::VectorXd e = (z.array() - z.maxCoeff()).exp();
  return e / e.sum();
}

struct LevData {
  std::vector<Eigen::MatrixXd> kernels;
  Eigen::MatrixXd xx;    // X X^T
  Eigen::MatrixXd sx;    // X X*^T
  Eigen::MatrixXd ss;    // X* X*^T
  double columns = 0.0;  // T
  double rows = 0.0;     // n
};

struct LevEval {
  double log_evidence = 0.0;
  LevParams grad;
};

LevEval lev_evaluate(const LevData& ld, const LevParams& p, bool with_grad) {
  const Eigen::Index n = ld.xx.rows();
  const Eigen::VectorXd w = softmax(p.logits);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t k = 0; k < ld.kernels.size(); ++k) h += w(static_cast<Eigen::Index>(k)) * ld.kernels[k];

  const double inv_alpha = 1.0 / std::max(std::exp(p.log_alpha), kPrecisionFloor);
  const double inv_gamma = 1.0 / std::max(std::exp(p.log_gamma), kPrecisionFloor);
  Eigen::MatrixXd c = inv_gamma * ld.xx;
  c.diagonal().array() += inv_alpha;
  // Residual scatter E E^T with E = X* - H X.
  const Eigen::MatrixXd hsx = h * ld.sx;
  const Eigen::MatrixXd scatter = symmetrize(ld.ss - hsx - hsx.transpose() + h * ld.xx * h.transpose());

  Eigen::LLT<Eigen::MatrixXd> llt(c);
  if (llt.info() != Eigen::Success) throw NumericalError("log-evidence covariance is singular");
  const Eigen::MatrixXd c_inv = llt.solve(Eigen::MatrixXd::Identity(n, n));
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) log_det += 2.0 * std::log(llt.matrixL()(i, i));

  LevEval out;
  out.log_evidence = -0.5 * ld.columns * (ld.rows * std::log(2.0 * std::numbers::pi) + log_det) -
                     0.5 * c_inv.cwiseProduct(scatter).sum();
  if (!std::isfinite(out.log_evidence)) throw NumericalError("non-finite log evidence");
  if (!with_grad) return out;

  const Eigen::MatrixXd q = -0.5 * ld.columns * c_inv + 0.5 * c_inv * scatter * c_inv;
  const Eigen::MatrixXd grad_h = c_inv * (ld.sx.transpose() - h * ld.xx);
  Eigen::VectorXd grad_w(static_cast<Eigen::Index>(ld.kernels.size()));
  for (std::size_t k = 0; k < ld.kernels.size(); ++k) {
    grad_w(static_cast<Eigen::Index>(k)) = grad_h.cwiseProduct(ld.kernels[k]).sum();
  }
  out.grad.logits = (w.array() * (grad_w.array() - w.dot(grad_w))).matrix();
  out.grad.log_alpha = -inv_alpha * q.trace();
  out.grad.log_gamma = -inv_gamma * q.cwiseProduct(ld.xx).sum();
  return out;
}

LevData lev_data(const SpectralDecomp& sd, const PairedData& d, const std::vector<double>& taus) {
  if (taus.empty()) throw ValidationError("gsp_lev needs at least one diffusion scale");
  LevData ld;
  for (double tau : taus) {
    if (!(tau >= 0.0) || !std::isfinite(tau)) throw ValidationError("diffusion scales must be >= 0");
    ld.kernels.push_back(heat_kernel(sd, tau));
  }
  ld.xx = d.x * d.x.transpose();
  ld.sx = d.x * d.x_star.transpose();
  ld.ss = d.x_star * d.x_star.transpose();
  ld.columns = static_cast<double>(d.x.cols());
  ld.rows = static_cast<double>(d.x.rows());
  return ld;
}

}  // namespace

void PairedData::validate() const {
  if (x.rows() != x_star.rows() || x.cols() != x_star.cols()) {
    throw ValidationError("paired data shapes differ");
  }
  if (x.cols() < 1) throw ValidationError("paired data needs at least one column");
  if (!x.allFinite() || !x_star.allFinite()) throw ValidationError("paired data must be finite");
}

double ls_objective(const SpectralDecomp& sd, const PairedData& d, const Eigen::Vector3d& theta) {
  check_graph(sd, d);
  return (materialize_filter(sd, ChebFilter::from_vector(theta)) * d.x - d.x_star).squaredNorm();
}

ChebFilter gsp_ls(const SpectralDecomp& sd, const PairedData& d) {
  check_graph(sd, d);
  return ChebFilter::from_vector(solve_ridge(ls_quadratic(sd, d)));
}

double default_rls_lambda(const SpectralDecomp& sd, const PairedData& d) {
  check_graph(sd, d);
  return 0.1 * (2.0 * ls_quadratic(sd, d).linear).cwiseAbs().maxCoeff();
}

ChebFilter gsp_rls(const SpectralDecomp& sd, const PairedData& d, double lambda) {
  check_graph(sd, d);
  if (!(lambda >= 0.0)) throw ValidationError("gsp_rls: lambda must be >= 0");
  const Quadratic q = ls_quadratic(sd, d);
  Eigen::Vector3d theta = solve_ridge(q);
  const double top = Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(q.gram).eigenvalues()(2);
  if (!(top > 0.0)) return ChebFilter::from_vector(Eigen::Vector3d::Zero());
  const double step = 1.0 / (2.0 * top);
  for (int it = 0; it < kRlsMaxIters; ++it) {
    const Eigen::Vector3d moved = theta - step * 2.0 * (q.gram * theta - q.linear);
    Eigen::Vector3d next;
    for (int k = 0; k < 3; ++k) next(k) = soft_threshold(moved(k), step * lambda);
    const double change = (next - theta).cwiseAbs().maxCoeff();
    theta = next;
    if (change <= kRlsTol) break;
  }
  return ChebFilter::from_vector(theta);
}

Eigen::MatrixXd column_covariance(const Eigen::MatrixXd& x) {
  if (x.cols() < 2) throw ValidationError("covariance needs >= 2 columns");
  const Eigen::MatrixXd centered = x.colwise() - x.rowwise().mean();
  Eigen::MatrixXd cov = symmetrize(centered * centered.transpose() / static_cast<double>(x.cols() - 1));
  cov.diagonal().array() += 1e-8;
  return cov;
}

double lscm_objective(const SpectralDecomp& sd, const PairedData& d, double lambda,
                      const Eigen::Vector3d& theta) {
  check_graph(sd, d);
  const Eigen::MatrixXd f = materialize_filter(sd, ChebFilter::from_vector(theta));
  const Eigen::MatrixXd mismatch =
      f * column_covariance(d.x) * f.transpose() - column_covariance(d.x_star);
  return (f * d.x - d.x_star).squaredNorm() + lambda * mismatch.squaredNorm();
}

Eigen::Vector3d lscm_gradient(const SpectralDecomp& sd, const PairedData& d, double lambda,
                              const Eigen::Vector3d& theta) {
  check_graph(sd, d);
  return lscm_model(sd, d, lambda).gradient(theta);
}

ChebFilter gsp_lscm(const SpectralDecomp& sd, const PairedData& d, double lambda) {
  check_graph(sd, d);
  if (!(lambda >= 0.0)) throw ValidationError("gsp_lscm: lambda must be >= 0");
  const LscmModel model = lscm_model(sd, d, lambda);
  Eigen::Vector3d theta = solve_ridge(model.data);
  double loss = model.value(theta);
  for (int it = 0; it < kLscmMaxIters; ++it) {
    double step = kLscmStep;
    const Eigen::Vector3d g = model.gradient(theta);
    if (!g.allFinite()) throw NumericalError("gsp_lscm: non-finite gradient");
    // Backtrack until the step decreases the loss.
    Eigen::Vector3d next = theta - step * g;
    double next_loss = model.value(next);
    int halvings = 0;
    while (!(next_loss <= loss) && halvings < 60) {
      step *= 0.5;
      next = theta - step * g;
      next_loss = model.value(next);
      ++halvings;
    }
    if (!(next_loss <= loss)) break;
    const double change = loss - next_loss;
    theta = next;
    loss = next_loss;
    if (change <= kLscmTol * std::max(1.0, std::abs(loss))) break;
  }
  return ChebFilter::from_vector(theta);
}

Eigen::MatrixXd heat_kernel(const SpectralDecomp& sd, double tau) {
  if (tau == 0.0) return Eigen::MatrixXd::Identity(sd.size(), sd.size());
  const Eigen::VectorXd decay = (-tau * sd.eigvals.array()).exp();
  return symmetrize(sd.eigvecs * decay.asDiagonal() * sd.eigvecs.transpose());
}

double lev_log_evidence(const SpectralDecomp& sd, const PairedData& d,
                        const std::vector<double>& taus, const std::vector<double>& weights,
                        double alpha, double gamma) {
  check_graph(sd, d);
  if (weights.size() != taus.size()) throw ValidationError("weights and taus sizes differ");
  LevParams p;
  p.logits = Eigen::Map<const Eigen::VectorXd>(weights.data(), static_cast<Eigen::Index>(weights.size()))
                 .array()
                 .max(1e-300)
                 .log()
                 .matrix();
  p.log_alpha = std::log(alpha);
  p.log_gamma = std::log(gamma);
  return lev_evaluate(lev_data(sd, d, taus), p, false).log_evidence;
}

LevModel gsp_lev(const SpectralDecomp& sd, const PairedData& d, const std::vector<double>& taus) {
  check_graph(sd, d);
  const LevData ld = lev_data(sd, d, taus);
  const Eigen::Index k = static_cast<Eigen::Index>(taus.size());
  const double entries = ld.columns * ld.rows;

  LevParams p;
  p.logits = Eigen::VectorXd::Zero(k);
  {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(sd.size(), sd.size());
    for (const auto& kern : ld.kernels) h += kern / static_cast<double>(k);
    const double resid = (d.x_star - h * d.x).squaredNorm() / entries;
    const double alpha = 1.0 / std::max(resid, kPrecisionFloor);
    p.log_alpha = std::log(alpha);
    p.log_gamma = std::log(std::max(alpha * ld.xx.trace() / ld.rows, kPrecisionFloor));
  }
  const double log_floor = std::log(kPrecisionFloor);

  // Ascent on the per-entry log evidence; same maximizer, scale-free step.
  LevEval cur = lev_evaluate(ld, p, true);
  for (int it = 0; it < kLevMaxIters; ++it) {
    double step = kLevStep;
    const double value = cur.log_evidence / entries;
    LevParams next;
    LevEval cand;
    bool accepted = false;
    for (int halvings = 0; halvings < 60; ++halvings) {
      next.logits = p.logits + step * cur.grad.logits / entries;
      next.log_alpha = std::max(log_floor, p.log_alpha + step * cur.grad.log_alpha / entries);
      next.log_gamma = std::max(log_floor, p.log_gamma + step * cur.grad.log_gamma / entries);
      try {
        cand = lev_evaluate(ld, next, true);
        if (cand.log_evidence / entries >= value) {
          accepted = true;
          break;
        }
      } catch (const NumericalError&) {
      }
      step *= 0.5;
    }
    if (!accepted) break;
    const double gain = cand.log_evidence / entries - value;
    p = next;
    cur = cand;
    if (gain <= kLevTol) break;
  }

  LevModel model;
  model.taus = taus;
  const Eigen::VectorXd w = softmax(p.logits);
  model.weights.assign(w.data(), w.data() + w.size());
  model.alpha = std::max(std::exp(p.log_alpha), kPrecisionFloor);
  model.gamma = std::max(std::exp(p.log_gamma), kPrecisionFloor);
  model.filter = Eigen::MatrixXd::Zero(sd.size(), sd.size());
  for (Eigen::Index j = 0; j < k; ++j) model.filter += w(j) * ld.kernels[static_cast<std::size_t>(j)];
  model.log_evidence = cur.log_evidence;
  return model;
}

Eigen::MatrixXd predict(const Eigen::MatrixXd& filter_matrix, const Eigen::MatrixXd& x) {
  if (filter_matrix.cols() != x.rows()) {
    throw ValidationError("predict: filter is " + std::to_string(filter_matrix.rows()) + "x" +
                          std::to_string(filter_matrix.cols()) + " but signal has " +
                          std::to_string(x.rows()) + " rows");
  }
  return filter_matrix * x;
}

}  // namespace gds
