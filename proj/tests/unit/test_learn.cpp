#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gds/error.hpp"
#include "gds/learn.hpp"
#include "gds/transform.hpp"
#include "test_util.hpp"

using namespace gds;
using gds::testing::max_abs;
using gds::testing::random_vector;

namespace {

struct Instance {
  SpectralDecomp sd;
  Marginals marg;
  CorrelationMatrix r;
};

Instance random_instance(Eigen::Index n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.3, 1.5);
  Eigen::VectorXd s(n);
  for (Eigen::Index i = 0; i < n; ++i) s(i) = u(rng);
  return {build_laplacian(gds::testing::random_connected_graph(n, rng)),
          Marginals(random_vector(n, rng), s),
          CorrelationMatrix(gds::testing::random_correlation_matrix(n, rng))};
}

// Target = exact pushforward of the copula model under F(theta).
GdsCopProblem realizable(const Instance& in, const Eigen::Vector3d& theta) {
  const GaussianMeasure target =
      gds_filter(assemble_joint(in.marg, in.r), in.sd, ChebFilter::from_vector(theta));
  return GdsCopProblem(in.sd, in.marg, target.mean(), target.cov());
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8}); }

}  // namespace

TEST(BuresObjective, ZeroAtPerfectMatch) {
  std::mt19937_64 rng(1);
  const Instance in = random_instance(5, rng);
  const GdsCopProblem p = realizable(in, Eigen::Vector3d(1, 0, 0));
  EXPECT_LE(bures_objective(p, Eigen::Vector3d(1, 0, 0), in.r), 1e-12);
}

TEST(BuresObjective, DiracsReduceToLeastSquares) {
  std::mt19937_64 rng(2);
  const SpectralDecomp sd = build_laplacian(gds::testing::random_connected_graph(4, rng));
  const Eigen::VectorXd m = random_vector(4, rng);
  const Eigen::VectorXd ms = random_vector(4, rng);
  // Zero stds are floored at about 1e-6, so the covariance term is ~1e-12.
  const GdsCopProblem p(sd, Marginals(m, Eigen::VectorXd::Zero(4)), ms, Eigen::MatrixXd::Zero(4, 4));
  const Eigen::Vector3d th(0.4, 0.3, -0.2);
  const Eigen::VectorXd res = materialize_filter(sd, ChebFilter::from_vector(th)) * m - ms;
  EXPECT_NEAR(bures_objective(p, th, CorrelationMatrix::identity(4)), res.squaredNorm(), 1e-9);
}

TEST(BuresObjective, MatchesClosedFormW2) {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 10; ++rep) {
    const Instance in = random_instance(6, rng);
    const Eigen::MatrixXd sc = gds::testing::random_spd(6, rng);
    const Eigen::VectorXd mc = random_vector(6, rng);
    const GdsCopProblem p(in.sd, in.marg, mc, sc);
    const Eigen::Vector3d th(0.7, -0.4, 0.2);
    const GaussianMeasure model = gds_filter(assemble_joint(in.marg, in.r), in.sd, ChebFilter::from_vector(th));
    const double d = w2(model, GaussianMeasure(mc, sc));
    EXPECT_NEAR(bures_objective(p, th, in.r), d * d, 1e-8);
  }
}

TEST(Gradients, MatchCentralDifferencesOnRandomInstances) {
  std::mt19937_64 rng(4);
  for (int rep = 0; rep < 10; ++rep) {
    const Instance in = random_instance(5, rng);
    const GdsCopProblem p(in.sd, in.marg, random_vector(5, rng), gds::testing::random_spd(5, rng));
    const Eigen::Vector3d th = Eigen::Vector3d(1, 0, 0) + 0.3 * Eigen::Vector3d(random_vector(3, rng));
    const Eigen::Vector3d ga = grad_theta(p, th, in.r.matrix());
    const Eigen::Vector3d gf = grad_theta(p, th, in.r.matrix(), GradMode::kFiniteDifference);
    for (int k = 0; k < 3; ++k) EXPECT_LE(rel_err(ga(k), gf(k)), 1e-4) << "theta " << k;
    const Eigen::MatrixXd ra = grad_r(p, th, in.r.matrix());
    const Eigen::MatrixXd rf = grad_r(p, th, in.r.matrix(), GradMode::kFiniteDifference);
    for (Eigen::Index i = 0; i < 5; ++i) {
      for (Eigen::Index j = 0; j < 5; ++j) EXPECT_LE(rel_err(ra(i, j), rf(i, j)), 1e-4);
    }
  }
}

TEST(Gradients, VanishAtGlobalMinimum) {
  std::mt19937_64 rng(5);
  const Instance in = random_instance(5, rng);
  const Eigen::Vector3d th(0.8, -0.3, 0.1);
  const GdsCopProblem p = realizable(in, th);
  EXPECT_LE(grad_theta(p, th, in.r.matrix()).norm(), 1e-6);
  EXPECT_LE(grad_r(p, th, in.r.matrix()).norm(), 1e-6);
}

TEST(Gradients, ScalarProblemClosedForm) {
  // n = 1: F = theta0 - theta1 + theta2, loss (F m - m*)^2 + (F s - s*)^2.
  const SpectralDecomp sd = build_laplacian(Graph{Eigen::MatrixXd::Zero(1, 1)});
  const double m = 2.0, s = 0.5, ms = 1.0, ss = 0.8;
  const GdsCopProblem p(sd, Marginals(Eigen::VectorXd::Constant(1, m), Eigen::VectorXd::Constant(1, s)),
                        Eigen::VectorXd::Constant(1, ms), Eigen::MatrixXd::Constant(1, 1, ss * ss));
  const Eigen::Vector3d th(1.3, 0.0, 0.0);
  const double f = 1.3;
  const double loss = (f * m - ms) * (f * m - ms) + (f * s - ss) * (f * s - ss);
  EXPECT_NEAR(bures_objective(p, th, CorrelationMatrix::identity(1)), loss, 1e-12);
  const double g0 = 2 * m * (f * m - ms) + 2 * s * (f * s - ss);
  const Eigen::Vector3d g = grad_theta(p, th, Eigen::MatrixXd::Identity(1, 1));
  EXPECT_NEAR(g(0), g0, 1e-10);
  EXPECT_NEAR(g(1), -g0, 1e-10);
  EXPECT_NEAR(g(2), g0, 1e-10);
}

TEST(LearnGdsCop, AlreadyOptimalStart) {
  std::mt19937_64 rng(6);
  Instance in = random_instance(5, rng);
  in.r = CorrelationMatrix::identity(5);
  const GdsCopProblem p = realizable(in, Eigen::Vector3d(1, 0, 0));
  const LearnTrace t = learn_gds_cop(p, LearnSettings{});
  EXPECT_TRUE(t.converged);
  EXPECT_LE(t.iterations, 2);
  EXPECT_LE(t.loss_history.back(), 1e-12);
}

TEST(LearnGdsCop, FrozenDynamics) {
  std::mt19937_64 rng(7);
  const Instance in = random_instance(4, rng);
  const GdsCopProblem p(in.sd, in.marg, random_vector(4, rng), gds::testing::random_spd(4, rng));
  LearnSettings s;
  s.eta1 = 0.0;
  s.eta2 = 0.0;
  const LearnTrace t = learn_gds_cop(p, s);
  EXPECT_TRUE(t.converged);
  EXPECT_EQ(t.iterations, 2);
  EXPECT_EQ(t.loss_history[0], t.loss_history[1]);
}

TEST(LearnGdsCop, SmallStepsDecreaseLossAndKeepValidR) {
  std::mt19937_64 rng(8);
  const Instance in = random_instance(5, rng);
  const GdsCopProblem p = realizable(in, Eigen::Vector3d(0.8, -0.2, 0.1));
  LearnSettings s;
  s.eta1 = 1e-4;
  s.eta2 = 1e-4;
  s.max_iters = 300;
  int checked = 0;
  const LearnTrace t = learn_gds_cop(p, s, [&](int, const Eigen::Vector3d&, const CorrelationMatrix& r, double) {
    const Eigen::MatrixXd& m = r.matrix();
    EXPECT_EQ(m, m.transpose());
    for (Eigen::Index i = 0; i < m.rows(); ++i) EXPECT_EQ(m(i, i), 1.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10);
    ++checked;
  });
  EXPECT_EQ(checked, t.iterations);
  EXPECT_LE(t.loss_history.back(), t.loss_history.front());
  for (std::size_t k = 1; k < t.loss_history.size(); ++k) {
    EXPECT_LE(t.loss_history[k], t.loss_history[k - 1] + 1e-6);
  }
}

TEST(LearnGdsCop, RecoversRealizableTarget) {
  std::mt19937_64 rng(9);
  const Instance in = random_instance(5, rng);
  const Eigen::Vector3d th(0.9, -0.15, 0.05);
  const GdsCopProblem p = realizable(in, th);
  LearnSettings s;
  s.eta1 = 0.05;
  s.eta2 = 0.05;
  s.epsilon = 1e-14;
  s.max_iters = 20000;
  const LearnTrace t = learn_gds_cop(p, s);
  EXPECT_LE(t.loss_history.back(), 1e-6 * t.loss_history.front());
}

TEST(LearnGdsCop, DivergenceCarriesTrace) {
  std::mt19937_64 rng(10);
  const Instance in = random_instance(4, rng);
  const GdsCopProblem p(in.sd, in.marg, 10.0 * random_vector(4, rng), gds::testing::random_spd(4, rng));
  LearnSettings s;
  s.eta1 = 1e3;
  s.eta2 = 1e-3;
  try {
    learn_gds_cop(p, s);
    FAIL() << "expected divergence";
  } catch (const LearnDivergence& e) {
    EXPECT_FALSE(e.trace().loss_history.empty());
    for (double l : e.trace().loss_history) EXPECT_TRUE(std::isfinite(l));
  }
}

TEST(LearnSettings, Validation) {
  LearnSettings s;
  s.max_iters = 0;
  EXPECT_THROW(s.validate(), ValidationError);
  s = LearnSettings{};
  s.epsilon = 0.0;
  EXPECT_THROW(s.validate(), ValidationError);
  s = LearnSettings{};
  s.eta1 = -1.0;
  EXPECT_THROW(s.validate(), ValidationError);
}
