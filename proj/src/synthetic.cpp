#include "gds/synthetic.hpp"

#include <cmath>
#include <random>

#include "gds/error.hpp"
#include "gds/gaussian.hpp"

namespace gds {

namespace {

constexpr long long kFirstDay = 18262;  // 2020-01-01

EdgeList geometric_graph(Eigen::Index n, std::mt19937_64& rng) {
  EdgeList list;
  list.n = static_cast<std::size_t>(n);
  for (Eigen::Index i = 0; i < n; ++i) list.labels.push_back("v" + std::to_string(i));
  if (n == 1) return list;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::MatrixXd pts(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    pts(i, 0) = unit(rng);
    pts(i, 1) = unit(rng);
  }
  double radius = std::sqrt(2.0 * std::log(static_cast<double>(n) + 1.0) /
                            (3.14159265358979 * static_cast<double>(n)));
  for (;;) {
    list.edges.clear();
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        if ((pts.row(i) - pts.row(j)).norm() <= radius) {
          list.edges.emplace_back(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
        }
      }
    }
    if (adjacency_from_geography(list.n, list.edges).is_connected()) return list;
    radius *= 1.1;
  }
}

}  // namespace

CorrelationMatrix random_correlation(Eigen::Index n, std::uint64_t seed) {
  if (n < 1) throw ValidationError("random_correlation needs n >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  Eigen::MatrixXd b(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    b(i, 0) = gauss(rng);
    b(i, 1) = gauss(rng);
  }
  Eigen::MatrixXd c = b * b.transpose();
  c.diagonal().array() += 0.5;
  const Eigen::VectorXd inv = c.diagonal().cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd r = inv.asDiagonal() * c * inv.asDiagonal();
  r = symmetrize(r);
  r.diagonal().setOnes();
  return CorrelationMatrix(r);
}

SyntheticData gen_synthetic(Eigen::Index n, Eigen::Index T, const ChebFilter& theta_true,
                            const std::optional<CorrelationMatrix>& r_true, double noise,
                            std::uint64_t seed, Eigen::Index window) {
  if (n < 1) throw ValidationError("synthetic data needs at least one node");
  if (T < 1) throw ValidationError("synthetic data needs at least one day");
  if (window < 1) throw ValidationError("synthetic window must be >= 1");
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw ValidationError("noise must be >= 0");
  for (double c : theta_true.coeffs) {
    if (!std::isfinite(c)) throw ValidationError("theta_true has non-finite coefficients");
  }
  if (r_true && r_true->size() != n) throw ValidationError("r_true has the wrong dimension");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  EdgeList edges = geometric_graph(n, rng);
  Graph graph = adjacency_from_geography(edges.n, edges.edges);
  const SpectralDecomp sd = build_laplacian(graph);
  const Eigen::MatrixXd F = materialize_filter(sd, theta_true);

  SyntheticTruth truth;
  truth.theta = theta_true;
  truth.r = r_true ? *r_true : random_correlation(n, rng());
  truth.means.resize(n);
  truth.stds.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    truth.means(i) = 1.0 + 2.0 * unit(rng);
    truth.stds(i) = 0.2 + 0.3 * unit(rng);
  }
  truth.window = window;
  truth.noise = noise;
  truth.seed = seed;

  const Eigen::MatrixXd root = truth.stds.asDiagonal() * sqrtm_psd(truth.r.matrix());
  SignalMatrix sm;
  sm.values.resize(n, T);
  sm.node_ids = edges.labels;
  Eigen::VectorXd z(n);
  for (Eigen::Index t = 0; t < T; ++t) {
    for (Eigen::Index i = 0; i < n; ++i) z(i) = gauss(rng);
    if (t < window) {
      sm.values.col(t) = truth.means + root * z;
    } else {
      sm.values.col(t) = F * sm.values.col(t - window) + noise * z;
    }
    sm.dates.push_back(format_iso_date(kFirstDay + t));
  }
  return {std::move(sm), std::move(graph), std::move(edges), std::move(truth)};
}

}  // namespace gds
