#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace gds {

/// Simple undirected weighted graph on `n` vertices.
///
/// The adjacency matrix must be symmetric, nonnegative and have an exactly
/// zero diagonal. Connectivity is queried with `is_connected()` and enforced
/// by `build_laplacian`.
class Graph {
 public:
  explicit Graph(Eigen::MatrixXd adjacency);

  Eigen::Index size() const { return adjacency_.rows(); }
  const Eigen::MatrixXd& adjacency() const { return adjacency_; }
  bool is_connected() const;

 private:
  Eigen::MatrixXd adjacency_;
};

/// Laplacian L = D - A together with its symmetric eigendecomposition.
///
/// Eigenvalues ascend; the first entry of each eigenvector with magnitude
/// above 1e-10 is positive. `cheb_basis` caches T_0, T_1, T_2 evaluated on
/// the rescaled Laplacian 2L/lambda_max - I.
struct SpectralDecomp {
  Eigen::MatrixXd laplacian;
  Eigen::MatrixXd eigvecs;
  Eigen::VectorXd eigvals;
  double lambda_max = 0.0;
  std::array<Eigen::MatrixXd, 3> cheb_basis;

  Eigen::Index size() const { return laplacian.rows(); }
  /// Rescaled Laplacian with spectrum in [-1, 1]. A single-vertex graph has
  /// L = 0, for which the rescaling limit -I is used.
  Eigen::MatrixXd rescaled_laplacian() const;
  /// Eigenvalues mapped through the same rescaling.
  Eigen::VectorXd rescaled_eigvals() const;
};

/// Degree-2 Chebyshev filter F = sum_k coeffs[k] T_k(L~).
struct ChebFilter {
  std::array<double, 3> coeffs{1.0, 0.0, 0.0};

  static ChebFilter identity() { return {}; }
  Eigen::Vector3d as_vector() const { return {coeffs[0], coeffs[1], coeffs[2]}; }
  static ChebFilter from_vector(const Eigen::Vector3d& v) { return {{v(0), v(1), v(2)}}; }
};

SpectralDecomp build_laplacian(const Graph& g);

Eigen::MatrixXd materialize_filter(const SpectralDecomp& sd, const ChebFilter& f);

/// Frequency response sum_k theta_k T_k(x) of the filter at scalar x.
double chebyshev_response(const ChebFilter& f, double x);

using Edge = std::pair<std::size_t, std::size_t>;

/// Unit-weight graph from an undirected edge list. Duplicate and reversed
/// pairs collapse into one edge; self-loops are rejected.
Graph adjacency_from_geography(std::size_t n, const std::vector<Edge>& edges);

/// Contents of an edge-list file: "i j" pairs, 0-based, with '#' comments.
/// Lines of the form "# label <id> <name>" attach a name to a vertex.
struct EdgeList {
  std::size_t n = 0;
  std::vector<Edge> edges;
  std::vector<std::string> labels;  // empty when the file carries none
};

EdgeList read_edge_list(const std::string& path);
EdgeList parse_edge_list(const std::string& text);
void write_edge_list(const std::string& path, const EdgeList& list);

}  // namespace gds
