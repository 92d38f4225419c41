#pragma once

#include <cstdint>
#include <optional>

#include <Eigen/Dense>

#include "gds/copula.hpp"
#include "gds/data.hpp"
#include "gds/graph.hpp"

namespace gds {

struct SyntheticTruth {
  ChebFilter theta;
  CorrelationMatrix r = CorrelationMatrix::identity(0);
  Eigen::VectorXd means;
  Eigen::VectorXd stds;
  Eigen::Index window = 0;
  double noise = 0.0;
  std::uint64_t seed = 0;
};

struct SyntheticData {
  SignalMatrix signals;
  Graph graph;
  EdgeList edges;
  SyntheticTruth truth;
};

/// Random correlation matrix from a two-factor model plus a diagonal part.
CorrelationMatrix random_correlation(Eigen::Index n, std::uint64_t seed);

/// Synthetic signals on a random connected geometric graph. The first
/// `window` columns are i.i.d. N(m, D R D); every later column is
/// F(theta_true) applied to the column one window earlier plus `noise` times
/// standard normal noise, so window s+1 is the pushforward of window s.
/// Without `r_true` a random correlation is drawn from the seed. Dates start
/// at 2020-01-01 and node ids are "v0", "v1", ...
SyntheticData gen_synthetic(Eigen::Index n, Eigen::Index T, const ChebFilter& theta_true,
                            const std::optional<CorrelationMatrix>& r_true, double noise,
                            std::uint64_t seed, Eigen::Index window = 30);

}  // namespace gds
