#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gds/baselines.hpp"
#include "gds/error.hpp"
#include "test_util.hpp"

using namespace gds;
using gds::testing::max_abs;
using gds::testing::random_matrix;

namespace {

struct Instance {
  SpectralDecomp sd;
  PairedData d;
};

Instance realizable(Eigen::Index n, Eigen::Index T, const Eigen::Vector3d& th, double noise,
                 std::mt19937_64& rng) {
  Instance s{build_laplacian(gds::testing::random_connected_graph(n, rng)), {}};
  s.d.x = random_matrix(n, T, rng);
  s.d.x_star = materialize_filter(s.sd, ChebFilter::from_vector(th)) * s.d.x +
               noise * random_matrix(n, T, rng);
  return s;
}

// Coarse grid over [-2,2]^3 followed by a shrinking pattern search.
double grid_refine_minimum(const Instance& s) {
  Eigen::Vector3d best(0, 0, 0);
  double best_val = ls_objective(s.sd, s.d, best);
  for (int a = 0; a <= 40; ++a) {
    for (int b = 0; b <= 40; ++b) {
      for (int c = 0; c <= 40; ++c) {
        const Eigen::Vector3d th(-2 + 0.1 * a, -2 + 0.1 * b, -2 + 0.1 * c);
        const double v = ls_objective(s.sd, s.d, th);
        if (v < best_val) {
          best_val = v;
          best = th;
        }
      }
    }
  }
  for (double h = 0.05; h > 1e-12; h *= 0.5) {
    bool moved = true;
    while (moved) {
      moved = false;
      for (int k = 0; k < 3; ++k) {
        for (double sgn : {-1.0, 1.0}) {
          Eigen::Vector3d cand = best;
          cand(k) += sgn * h;
          const double v = ls_objective(s.sd, s.d, cand);
          if (v < best_val) {
            best_val = v;
            best = cand;
            moved = true;
          }
        }
      }
    }
  }
  return best_val;
}

}  // namespace

TEST(GspLs, IdentityTarget) {
  std::mt19937_64 rng(1);
  Instance s = realizable(6, 20, Eigen::Vector3d(1, 0, 0), 0.0, rng);
  const ChebFilter f = gsp_ls(s.sd, s.d);
  EXPECT_LE((f.as_vector() - Eigen::Vector3d(1, 0, 0)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(GspLs, FirstOrderTarget) {
  std::mt19937_64 rng(2);
  Instance s = realizable(6, 20, Eigen::Vector3d(0, 1, 0), 0.0, rng);
  EXPECT_LE((gsp_ls(s.sd, s.d).as_vector() - Eigen::Vector3d(0, 1, 0)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(GspLs, MatchesGridRefineOracle) {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 3; ++rep) {
    Instance s = realizable(5, 12, Eigen::Vector3d(0.6, -0.8, 0.35), 0.3, rng);
    const double ls = ls_objective(s.sd, s.d, gsp_ls(s.sd, s.d).as_vector());
    const double oracle = grid_refine_minimum(s);
    EXPECT_LE(ls, oracle + 1e-9);
    EXPECT_NEAR(ls, oracle, 1e-6);
  }
}

TEST(GspLs, LocalMinimumProbe) {
  std::mt19937_64 rng(4);
  for (int rep = 0; rep < 100; ++rep) {
    Instance s = realizable(4, 8, Eigen::Vector3d(gds::testing::random_vector(3, rng)), 0.5, rng);
    const Eigen::Vector3d th = gsp_ls(s.sd, s.d).as_vector();
    const double base = ls_objective(s.sd, s.d, th);
    for (int k = 0; k < 3; ++k) {
      for (double sgn : {-1.0, 1.0}) {
        Eigen::Vector3d p = th;
        p(k) += sgn * 1e-3;
        EXPECT_GE(ls_objective(s.sd, s.d, p), base - 1e-12 * std::max(1.0, base));
      }
    }
  }
}

TEST(GspLs, RankDeficientGramIsSolvable) {
  // On P2 the basis T0 = T2 = I, so the Gram matrix is singular.
  const SpectralDecomp sd = build_laplacian(gds::testing::path_graph(2));
  PairedData d{Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(2, 2)};
  const ChebFilter f = gsp_ls(sd, d);
  EXPECT_NEAR(ls_objective(sd, d, f.as_vector()), 0.0, 1e-12);
}

TEST(GspRls, ZeroLambdaEqualsLs) {
  std::mt19937_64 rng(5);
  Instance s = realizable(6, 15, Eigen::Vector3d(0.7, 0.2, -0.1), 0.2, rng);
  EXPECT_LE((gsp_rls(s.sd, s.d, 0.0).as_vector() - gsp_ls(s.sd, s.d).as_vector()).cwiseAbs().maxCoeff(),
            1e-6);
}

TEST(GspRls, HugeLambdaShrinksToZero) {
  std::mt19937_64 rng(6);
  Instance s = realizable(6, 15, Eigen::Vector3d(0.7, 0.2, -0.1), 0.2, rng);
  const double big = 20.0 * default_rls_lambda(s.sd, s.d);
  EXPECT_EQ(gsp_rls(s.sd, s.d, big).as_vector(), Eigen::Vector3d::Zero());
}

TEST(GspRls, MidLambdaBeatsLsCandidate) {
  std::mt19937_64 rng(7);
  Instance s = realizable(8, 20, Eigen::Vector3d(0.9, 0.0, 0.05), 0.1, rng);
  const double lambda = default_rls_lambda(s.sd, s.d);
  const auto obj = [&](const Eigen::Vector3d& th) {
    return ls_objective(s.sd, s.d, th) + lambda * th.cwiseAbs().sum();
  };
  EXPECT_LE(obj(gsp_rls(s.sd, s.d, lambda).as_vector()), obj(gsp_ls(s.sd, s.d).as_vector()) + 1e-12);
}

TEST(GspLscm, ZeroLambdaMatchesLs) {
  std::mt19937_64 rng(8);
  Instance s = realizable(6, 15, Eigen::Vector3d(0.5, 0.3, 0.1), 0.2, rng);
  EXPECT_LE((gsp_lscm(s.sd, s.d, 0.0).as_vector() - gsp_ls(s.sd, s.d).as_vector()).cwiseAbs().maxCoeff(),
            1e-4);
}

TEST(GspLscm, RecoversRealizableTheta) {
  std::mt19937_64 rng(9);
  const Eigen::Vector3d th(0.8, -0.3, 0.15);
  Instance s = realizable(7, 25, th, 0.0, rng);
  EXPECT_LE((gsp_lscm(s.sd, s.d, 1.0).as_vector() - th).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(GspLscm, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(10);
  Instance s = realizable(6, 12, Eigen::Vector3d(0.4, 0.4, -0.2), 0.3, rng);
  const Eigen::Vector3d th(0.3, -0.5, 0.8);
  const double lambda = 0.7;
  const Eigen::Vector3d g = lscm_gradient(s.sd, s.d, lambda, th);
  for (int k = 0; k < 3; ++k) {
    const double h = 1e-5 * std::max(1.0, std::abs(th(k)));
    Eigen::Vector3d hi = th, lo = th;
    hi(k) += h;
    lo(k) -= h;
    const double fd = (lscm_objective(s.sd, s.d, lambda, hi) - lscm_objective(s.sd, s.d, lambda, lo)) / (2 * h);
    EXPECT_LE(std::abs(g(k) - fd), 1e-4 * std::max(std::abs(g(k)), std::abs(fd)));
  }
}

TEST(GspLscm, NeedsTwoColumns) {
  const SpectralDecomp sd = build_laplacian(gds::testing::path_graph(3));
  PairedData d{Eigen::MatrixXd::Ones(3, 1), Eigen::MatrixXd::Ones(3, 1)};
  try {
    gsp_lscm(sd, d, 1.0);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("covariance needs >= 2 columns"), std::string::npos);
  }
}

TEST(HeatKernel, ZeroScaleIsIdentityAndConstantsArePreserved) {
  std::mt19937_64 rng(11);
  const SpectralDecomp sd = build_laplacian(gds::testing::random_connected_graph(8, rng));
  EXPECT_EQ(heat_kernel(sd, 0.0), Eigen::MatrixXd::Identity(8, 8));
  for (double tau : {0.1, 1.0, 5.0}) {
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(8);
    EXPECT_LE((heat_kernel(sd, tau) * ones - ones).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(GspLev, SingleScaleHasUnitWeight) {
  std::mt19937_64 rng(12);
  Instance s = realizable(5, 20, Eigen::Vector3d(1, 0, 0), 0.1, rng);
  const LevModel m = gsp_lev(s.sd, s.d, {0.5});
  ASSERT_EQ(m.weights.size(), 1u);
  EXPECT_EQ(m.weights[0], 1.0);
  EXPECT_GT(m.alpha, 0.0);
  EXPECT_GT(m.gamma, 0.0);
}

TEST(GspLev, RecoversPlantedScale) {
  std::mt19937_64 rng(13);
  const SpectralDecomp sd = build_laplacian(gds::testing::random_connected_graph(8, rng));
  PairedData d;
  d.x = random_matrix(8, 60, rng);
  d.x_star = heat_kernel(sd, 0.5) * d.x + 0.01 * random_matrix(8, 60, rng);
  const LevModel m = gsp_lev(sd, d, {0.5, 2.0});
  EXPECT_GE(m.weights[0], 0.99);
  double sum = 0.0;
  for (double w : m.weights) {
    EXPECT_GE(w, 0.0);
    sum += w;
  }
  EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST(GspLev, EvidenceImprovesOverUniformStart) {
  std::mt19937_64 rng(14);
  const SpectralDecomp sd = build_laplacian(gds::testing::random_connected_graph(6, rng));
  PairedData d;
  d.x = random_matrix(6, 30, rng);
  d.x_star = heat_kernel(sd, 1.0) * d.x + 0.05 * random_matrix(6, 30, rng);
  const std::vector<double> taus{0.1, 1.0, 3.0};
  const LevModel m = gsp_lev(sd, d, taus);
  EXPECT_NEAR(lev_log_evidence(sd, d, taus, m.weights, m.alpha, m.gamma), m.log_evidence,
              1e-8 * std::abs(m.log_evidence));
  EXPECT_GE(m.log_evidence, lev_log_evidence(sd, d, taus, {1.0 / 3, 1.0 / 3, 1.0 / 3}, m.alpha, m.gamma));
}

TEST(Predict, IdentityAndShapeCheck) {
  std::mt19937_64 rng(15);
  const Eigen::MatrixXd x = random_matrix(4, 6, rng);
  EXPECT_EQ(predict(Eigen::MatrixXd::Identity(4, 4), x), x);
  EXPECT_THROW(predict(Eigen::MatrixXd::Identity(3, 3), x), ValidationError);
  const SpectralDecomp sd = build_laplacian(gds::testing::path_graph(2));
  const Eigen::MatrixXd y = random_matrix(2, 3, rng);
  EXPECT_LE(max_abs(predict(materialize_filter(sd, {{0, 1, 0}}), y) - sd.rescaled_laplacian() * y), 1e-15);
}
