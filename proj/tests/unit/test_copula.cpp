#include <gtest/gtest.h>

#include <random>

#include "gds/copula.hpp"
#include "gds/error.hpp"
#include "test_util.hpp"

using namespace gds;
using gds::testing::max_abs;

TEST(Marginals, FloorsStandardDeviations) {
  Eigen::VectorXd m(2), s(2);
  m << 3.0, -9.0;
  s << 0.0, 2.0;
  const Marginals marg(m, s);
  EXPECT_DOUBLE_EQ(marg.sigma_floor(), 1e-6 * 10.0);
  EXPECT_DOUBLE_EQ(marg.stds()(0), 1e-5);
  EXPECT_DOUBLE_EQ(marg.stds()(1), 2.0);
  EXPECT_THROW(Marginals(m, Eigen::VectorXd::Ones(3)), ValidationError);
}

TEST(CorrelationMatrix, Validates) {
  Eigen::MatrixXd d(2, 2);
  d << 1, 0.5, 0.5, 0.9;
  EXPECT_THROW(CorrelationMatrix{d}, ValidationError);
  Eigen::MatrixXd indef(2, 2);
  indef << 1, 1.2, 1.2, 1;
  EXPECT_THROW(CorrelationMatrix{indef}, ValidationError);
  EXPECT_NO_THROW(CorrelationMatrix::identity(3));
}

TEST(AssembleJoint, IndependenceCopula) {
  Eigen::VectorXd m(3), s(3);
  m << 1, 2, 3;
  s << 0.5, 1.0, 2.0;
  const GaussianMeasure mu = assemble_joint(Marginals(m, s), CorrelationMatrix::identity(3));
  EXPECT_EQ(mu.cov(), Eigen::MatrixXd(Eigen::Vector3d(0.25, 1.0, 4.0).asDiagonal()));
}

TEST(AssembleJoint, HandMultipliedTwoByTwo) {
  Eigen::VectorXd m(2), s(2);
  m << 0.0, 7.0;
  s << 1.0, 2.0;
  Eigen::MatrixXd r(2, 2);
  r << 1, 0.5, 0.5, 1;
  const GaussianMeasure mu = assemble_joint(Marginals(m, s), CorrelationMatrix(r));
  Eigen::MatrixXd expected(2, 2);
  expected << 1, 1, 1, 4;
  EXPECT_LE(max_abs(mu.cov() - expected), 1e-15);
  const auto [mean1, var1] = marginal_of(mu, 1);
  EXPECT_EQ(mean1, 7.0);
  EXPECT_EQ(var1, 4.0);
}

TEST(AssembleJoint, SklarConsistencyOnRandomInstances) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  for (int rep = 0; rep < 100; ++rep) {
    const Eigen::Index n = 1 + rep % 7;
    Eigen::VectorXd m = gds::testing::random_vector(n, rng);
    Eigen::VectorXd s(n);
    for (Eigen::Index i = 0; i < n; ++i) s(i) = u(rng);
    const CorrelationMatrix r(gds::testing::random_correlation_matrix(n, rng));
    const GaussianMeasure mu = assemble_joint(Marginals(m, s), r);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto [mi, vi] = marginal_of(mu, i);
      EXPECT_EQ(mi, m(i));
      EXPECT_EQ(vi, s(i) * s(i));
    }
  }
}

TEST(MarginalOf, StandardAndDiracAndRange) {
  const auto [m, v] = marginal_of(GaussianMeasure::standard(3), 1);
  EXPECT_EQ(m, 0.0);
  EXPECT_EQ(v, 1.0);
  const auto [dm, dv] = marginal_of(GaussianMeasure::dirac(Eigen::Vector3d(4, 5, 6)), 2);
  EXPECT_EQ(dm, 6.0);
  EXPECT_EQ(dv, 0.0);
  EXPECT_THROW(marginal_of(GaussianMeasure::standard(3), 3), ValidationError);
}

TEST(ProjectCorrelation, FixedPointOnValidInput) {
  std::mt19937_64 rng(2);
  const Eigen::MatrixXd r = gds::testing::random_correlation_matrix(6, rng);
  EXPECT_LE(max_abs(project_correlation(r).matrix() - r), 1e-10);
}

TEST(ProjectCorrelation, ClampsIndefiniteTwoByTwo) {
  // Eigenpairs of [[1,1.2],[1.2,1]]: -0.2 on (1,-1)/sqrt2 and 2.2 on (1,1)/sqrt2.
  // Clamping gives diag (1.1+d/2) and off-diagonal (1.1-d/2); normalizing
  // yields off-diagonal (2.2-d)/(2.2+d).
  Eigen::MatrixXd m(2, 2);
  m << 1, 1.2, 1.2, 1;
  const double d = 1e-6;
  const CorrelationMatrix r = project_correlation(m, d);
  EXPECT_EQ(r.matrix()(0, 0), 1.0);
  EXPECT_EQ(r.matrix()(1, 1), 1.0);
  EXPECT_NEAR(r.matrix()(0, 1), (2.2 - d) / (2.2 + d), 1e-12);
  EXPECT_LT(r.matrix()(0, 1), 1.0);
}

TEST(ProjectCorrelation, SymmetrizesFirst) {
  Eigen::MatrixXd m(2, 2);
  m << 1, 0.5, 0.1, 1;
  EXPECT_NEAR(project_correlation(m).matrix()(0, 1), 0.3, 1e-12);
}

TEST(ProjectCorrelation, OutputInvariantsOnArbitraryMatrices) {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 50; ++rep) {
    const Eigen::MatrixXd m = gds::testing::random_matrix(6, 6, rng);
    const CorrelationMatrix r = project_correlation(m);
    EXPECT_EQ(r.matrix(), r.matrix().transpose());
    for (Eigen::Index i = 0; i < 6; ++i) EXPECT_EQ(r.matrix()(i, i), 1.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r.matrix());
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10);
  }
}

TEST(ProjectCorrelation, RejectsBadDelta) {
  EXPECT_THROW(project_correlation(Eigen::MatrixXd::Identity(2, 2), 0.0), ValidationError);
}
