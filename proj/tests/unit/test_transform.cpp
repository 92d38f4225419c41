#include <gtest/gtest.h>

#include <random>

#include "gds/error.hpp"
#include "gds/transform.hpp"
#include "test_util.hpp"

using namespace gds;
using gds::testing::max_abs;
using gds::testing::random_spd;
using gds::testing::random_vector;

TEST(GdsFt, DiracMatchesClassicalTransform) {
  std::mt19937_64 rng(1);
  const SpectralDecomp sd = build_laplacian(gds::testing::random_connected_graph(8, rng));
  const Eigen::VectorXd x = random_vector(8, rng);
  const GaussianMeasure hat = gds_ft(GaussianMeasure::dirac(x), sd);
  EXPECT_LE((hat.mean() - sd.eigvecs.transpose() * x).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_EQ(max_abs(hat.cov()), 0.0);
}

TEST(GdsFt, WhiteNoiseIsInvariant) {
  std::mt19937_64 rng(2);
  const SpectralDecomp sd = build_laplacian(gds::testing::random_connected_graph(6, rng));
  const GaussianMeasure hat = gds_ft(GaussianMeasure::standard(6), sd);
  EXPECT_LE(hat.mean().cwiseAbs().maxCoeff(), 0.0);
  EXPECT_LE(max_abs(hat.cov() - Eigen::MatrixXd::Identity(6, 6)), 1e-12);
}

TEST(GdsFt, PreservesCovarianceSpectrumOnTriangle) {
  std::mt19937_64 rng(3);
  const SpectralDecomp sd = build_laplacian(adjacency_from_geography(3, {{0, 1}, {1, 2}, {0, 2}}));
  const GaussianMeasure mu(random_vector(3, rng), random_spd(3, rng));
  const GaussianMeasure hat = gds_ft(mu, sd);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> a(mu.cov()), b(hat.cov());
  EXPECT_LE((a.eigenvalues() - b.eigenvalues()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(GdsIft, RoundTrip) {
  std::mt19937_64 rng(4);
  for (Eigen::Index n : {2, 10}) {
    const SpectralDecomp sd = build_laplacian(gds::testing::random_connected_graph(n, rng));
    const GaussianMeasure mu(random_vector(n, rng), random_spd(n, rng));
    const GaussianMeasure back = gds_ift(gds_ft(mu, sd), sd);
    EXPECT_LE((back.mean() - mu.mean()).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE(max_abs(back.cov() - mu.cov()), 1e-10);
    const Eigen::VectorXd x = random_vector(n, rng);
    const GaussianMeasure d = gds_ift(gds_ft(GaussianMeasure::dirac(x), sd), sd);
    EXPECT_LE((d.mean() - x).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(GdsTransforms, DimensionMismatchThrows) {
  const SpectralDecomp sd = build_laplacian(gds::testing::path_graph(3));
  EXPECT_THROW(gds_ft(GaussianMeasure::standard(2), sd), ValidationError);
  EXPECT_THROW(gds_ift(GaussianMeasure::standard(4), sd), ValidationError);
  EXPECT_THROW(gds_filter(GaussianMeasure::standard(2), sd, ChebFilter::identity()), ValidationError);
}

TEST(GdsFilter, IdentityCoefficientsAndDirac) {
  std::mt19937_64 rng(5);
  const SpectralDecomp sd = build_laplacian(gds::testing::random_connected_graph(7, rng));
  const GaussianMeasure mu(random_vector(7, rng), random_spd(7, rng));
  const GaussianMeasure same = gds_filter(mu, sd, ChebFilter::identity());
  EXPECT_LE(max_abs(same.cov() - mu.cov()), 1e-14);
  const ChebFilter f{{0.2, -0.5, 0.3}};
  const Eigen::VectorXd x = random_vector(7, rng);
  const GaussianMeasure out = gds_filter(GaussianMeasure::dirac(x), sd, f);
  EXPECT_LE((out.mean() - materialize_filter(sd, f) * x).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_EQ(max_abs(out.cov()), 0.0);
}

TEST(GdsFilter, MonteCarloCovariance) {
  std::mt19937_64 rng(6);
  const Eigen::Index n = 4;
  const Eigen::Index N = 100000;
  const SpectralDecomp sd = build_laplacian(gds::testing::random_connected_graph(n, rng));
  const ChebFilter f{{0.6, 0.4, -0.2}};
  const GaussianMeasure mu(random_vector(n, rng), random_spd(n, rng));
  const Eigen::MatrixXd l = mu.cov().llt().matrixL();
  const Eigen::MatrixXd y =
      materialize_filter(sd, f) * ((l * gds::testing::random_matrix(n, N, rng)).colwise() + mu.mean());
  const Eigen::VectorXd mean = y.rowwise().mean();
  const Eigen::MatrixXd c = (y.colwise() - mean) * (y.colwise() - mean).transpose() / double(N - 1);
  const GaussianMeasure out = gds_filter(mu, sd, f);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double se =
          std::sqrt((out.cov()(i, i) * out.cov()(j, j) + out.cov()(i, j) * out.cov()(i, j)) / N);
      EXPECT_LE(std::abs(c(i, j) - out.cov()(i, j)), 3.0 * se);
    }
  }
}

TEST(GdsFilter, ActsDiagonallyInFrequencyDomain) {
  std::mt19937_64 rng(7);
  const SpectralDecomp sd = build_laplacian(gds::testing::random_connected_graph(9, rng));
  const ChebFilter f{{0.1, 0.8, -0.35}};
  const GaussianMeasure mu(random_vector(9, rng), random_spd(9, rng));
  Eigen::VectorXd resp(9);
  const Eigen::VectorXd lt = sd.rescaled_eigvals();
  for (Eigen::Index k = 0; k < 9; ++k) resp(k) = chebyshev_response(f, lt(k));
  const GaussianMeasure lhs = gds_ft(gds_filter(mu, sd, f), sd);
  const GaussianMeasure rhs = pushforward(resp.asDiagonal().toDenseMatrix(), gds_ft(mu, sd));
  EXPECT_LE((lhs.mean() - rhs.mean()).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LE(max_abs(lhs.cov() - rhs.cov()), 1e-8);
}
