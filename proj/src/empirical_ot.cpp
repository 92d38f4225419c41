#include "gds/empirical_ot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "gds/error.hpp"

namespace gds {

namespace {

constexpr Eigen::Index kExactLimit = 64;
// Scalings are folded into the potentials once |log u| exceeds this; keeps
// the single-precision kernel products far from overflow.
constexpr double kAbsorbLog = 30.0;
// Geometric decay of the regularization between eps-scaling stages.
constexpr double kEpsDecay = 0.25;
// L1 marginal tolerance used by the oracle; ample for percent-level checks.
constexpr double kOracleTol = 1e-3;

Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const Eigen::VectorXd na = a.rowwise().squaredNorm();
  const Eigen::VectorXd nb = b.rowwise().squaredNorm();
  Eigen::MatrixXd c = -2.0 * a * b.transpose();
  c.colwise() += na;
  c.rowwise() += nb.transpose();
  return c.cwiseMax(0.0);
}

void check_clouds(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() == 0 || b.rows() == 0) throw ValidationError("empty point set");
  if (a.rows() != b.rows()) throw ValidationError("point sets must have equal size");
  if (a.cols() != b.cols()) throw ValidationError("point sets have different dimension");
}

// 0.01 * median entry; degenerate (all-zero) costs fall back to 0.01.
double median_reg(const Eigen::MatrixXd& c) {
  std::vector<double> values(c.data(), c.data() + c.size());
  auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
  std::nth_element(values.begin(), mid, values.end());
  const double median = *mid > 0.0 ? *mid : 1.0;
  return 0.01 * median;
}

// In one dimension the monotone (sorted) matching is optimal.
double sorted_matching_cost(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  std::vector<double> x(a.data(), a.data() + a.rows());
  std::vector<double> y(b.data(), b.data() + b.rows());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) total += (x[i] - y[i]) * (x[i] - y[i]);
  return total / static_cast<double>(x.size());
}

// Shortest augmenting path assignment (Jonker-Volgenant style), O(n^3).
double hungarian(const Eigen::MatrixXd& cost) {
  const Eigen::Index n = cost.rows();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<Eigen::Index> p(n + 1, 0), way(n + 1, 0);
  std::vector<bool> used(n + 1);
  for (Eigen::Index i = 1; i <= n; ++i) {
    p[0] = i;
    Eigen::Index j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), false);
    do {
      used[j0] = true;
      const Eigen::Index i0 = p[j0];
      double delta = inf;
      Eigen::Index j1 = 0;
      for (Eigen::Index j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (Eigen::Index j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const Eigen::Index j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  double total = 0.0;
  for (Eigen::Index j = 1; j <= n; ++j) total += cost(p[j] - 1, j - 1);
  return total / static_cast<double>(n);
}

// Sinkhorn on a precomputed cost matrix with uniform weights.
SinkhornResult sinkhorn_cost(const Eigen::MatrixXd& c, double eps_target, double tol) {
  const Eigen::Index n = c.rows();
  const Eigen::Index m = c.cols();
  const double wa = 1.0 / static_cast<double>(n);
  const double wb = 1.0 / static_cast<double>(m);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(m);
  const Eigen::MatrixXf cf = c.cast<float>();
  Eigen::MatrixXf kernel(n, m);
  SinkhornResult result;

  double eps = std::max(c.maxCoeff(), eps_target);
  for (bool last = false; !last;) {
    eps = std::max(kEpsDecay * eps, eps_target);
    last = eps == eps_target;
    const double stage_tol = last ? tol : std::max(tol, 1e-2);
    bool done = false;
    while (!done) {
      const float inv = static_cast<float>(1.0 / eps);
      kernel = ((((-cf).colwise() + f.cast<float>()).rowwise() + g.transpose().cast<float>()) * inv)
                   .array()
                   .exp()
                   .matrix();
      Eigen::VectorXf u = Eigen::VectorXf::Ones(n);
      Eigen::VectorXf v = Eigen::VectorXf::Ones(m);
      bool absorb = false;
      for (int it = 0; it < 100000; ++it) {
        ++result.iterations;
        const Eigen::VectorXf kv = static_cast<float>(wb) * (kernel * v);
        // Column marginals are exact after each v update; rows are checked
        // with the product already needed for the u update.
        if (it > 0 && wa * (u.cwiseProduct(kv).cast<double>().array() - 1.0).abs().sum() < stage_tol) {
          break;
        }
        u = kv.cwiseInverse();
        v = (static_cast<float>(wa) * (kernel.transpose() * u)).cwiseInverse();
        if (!u.allFinite() || !v.allFinite()) {
          throw NumericalError("Sinkhorn scaling overflowed");
        }
        const double lu = u.array().log().abs().maxCoeff();
        const double lv = v.array().log().abs().maxCoeff();
        if (lu > kAbsorbLog || lv > kAbsorbLog) {
          absorb = true;
          break;
        }
      }
      f += eps * u.cast<double>().array().log().matrix();
      g += eps * v.cast<double>().array().log().matrix();
      done = !absorb;
    }
  }
  result.value = wa * f.sum() + wb * g.sum();
  return result;
}

// Symmetric problem OT(a, a): a single potential updated with the averaged
// fixed-point map f <- (f + T(f)) / 2, which converges in a few sweeps.
SinkhornResult sinkhorn_symmetric_cost(const Eigen::MatrixXd& c, double eps_target, double tol) {
  const Eigen::Index n = c.rows();
  const double w = 1.0 / static_cast<double>(n);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
  const Eigen::MatrixXf cf = c.cast<float>();
  Eigen::MatrixXf kernel(n, n);
  SinkhornResult result;

  double eps = std::max(c.maxCoeff(), eps_target);
  for (bool last = false; !last;) {
    eps = std::max(kEpsDecay * eps, eps_target);
    last = eps == eps_target;
    const double stage_tol = last ? tol : std::max(tol, 1e-2);
    bool done = false;
    while (!done) {
      const float inv = static_cast<float>(1.0 / eps);
      const Eigen::VectorXf ff = f.cast<float>();
      kernel = ((((-cf).colwise() + ff).rowwise() + ff.transpose()) * inv).array().exp().matrix();
      Eigen::VectorXd u = Eigen::VectorXd::Ones(n);
      bool absorb = false;
      for (int it = 0; it < 100000; ++it) {
        ++result.iterations;
        const Eigen::VectorXd ku = w * (kernel * u.cast<float>()).cast<double>();
        const double err = (w * u.cwiseProduct(ku).array() - w).abs().sum();
        if (err < stage_tol) break;
        u = u.cwiseQuotient(ku).cwiseSqrt();
        if (!u.allFinite()) throw NumericalError("Sinkhorn scaling overflowed");
        if (u.array().log().abs().maxCoeff() > kAbsorbLog) {
          absorb = true;
          break;
        }
      }
      f += eps * u.array().log().matrix();
      done = !absorb;
    }
  }
  result.value = 2.0 * w * f.sum();
  return result;
}

}  // namespace

double exact_assignment_cost(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  check_clouds(a, b);
  return hungarian(squared_distances(a, b));
}

SinkhornResult sinkhorn(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double eps,
                        double tol) {
  check_clouds(a, b);
  if (!(eps > 0.0)) throw ValidationError("Sinkhorn regularization must be positive");
  return sinkhorn_cost(squared_distances(a, b), eps, tol);
}

double default_sinkhorn_reg(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  check_clouds(a, b);
  return median_reg(squared_distances(a, b));
}

double empirical_w2_oracle(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                           std::optional<double> reg) {
  check_clouds(a, b);
  if (a.cols() == 1) return std::sqrt(sorted_matching_cost(a, b));
  if (a.rows() <= kExactLimit) return std::sqrt(std::max(0.0, exact_assignment_cost(a, b)));
  const Eigen::MatrixXd cross = squared_distances(a, b);
  const double eps = reg ? *reg : median_reg(cross);
  if (!(eps > 0.0)) throw ValidationError("Sinkhorn regularization must be positive");
  const double ab = sinkhorn_cost(cross, eps, kOracleTol).value;
  const double aa = sinkhorn_symmetric_cost(squared_distances(a, a), eps, kOracleTol).value;
  const double bb = sinkhorn_symmetric_cost(squared_distances(b, b), eps, kOracleTol).value;
  return std::sqrt(std::max(0.0, ab - 0.5 * aa - 0.5 * bb));
}

}  // namespace gds
