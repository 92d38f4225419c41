#include "gds/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>

#include "gds/error.hpp"

namespace gds {

namespace {

constexpr double kSymmetryTol = 1e-12;
constexpr double kSignTol = 1e-10;

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

}  // namespace

Graph::Graph(Eigen::MatrixXd adjacency) : adjacency_(std::move(adjacency)) {
  if (adjacency_.rows() != adjacency_.cols()) {
    throw ValidationError("adjacency matrix must be square");
  }
  if (adjacency_.size() == 0) throw ValidationError("graph has no vertices");
  if (!adjacency_.allFinite()) throw ValidationError("adjacency has non-finite entries");
  const Eigen::Index n = adjacency_.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (adjacency_(i, i) != 0.0) {
      throw ValidationError("adjacency diagonal must be zero (self-loop at vertex " +
                            std::to_string(i) + ")");
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      if (adjacency_(i, j) < 0.0) throw ValidationError("adjacency has negative weights");
      if (std::abs(adjacency_(i, j) - adjacency_(j, i)) > kSymmetryTol) {
        throw ValidationError("adjacency matrix is not symmetric");
      }
    }
  }
}

bool Graph::is_connected() const {
  const Eigen::Index n = size();
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  std::queue<Eigen::Index> frontier;
  frontier.push(0);
  seen[0] = true;
  Eigen::Index visited = 1;
  while (!frontier.empty()) {
    const Eigen::Index v = frontier.front();
    frontier.pop();
    for (Eigen::Index u = 0; u < n; ++u) {
      if (adjacency_(v, u) != 0.0 && !seen[static_cast<std::size_t>(u)]) {
        seen[static_cast<std::size_t>(u)] = true;
        ++visited;
        frontier.push(u);
      }
    }
  }
  return visited == n;
}

Eigen::MatrixXd SpectralDecomp::rescaled_laplacian() const {
  const Eigen::Index n = size();
  if (lambda_max <= 0.0) {
    if (n == 1) return -Eigen::MatrixXd::Identity(1, 1);
    throw ValidationError("rescaled Laplacian needs lambda_max > 0");
  }
  return (2.0 / lambda_max) * laplacian - Eigen::MatrixXd::Identity(n, n);
}

Eigen::VectorXd SpectralDecomp::rescaled_eigvals() const {
  if (lambda_max <= 0.0) {
    if (size() == 1) return Eigen::VectorXd::Constant(1, -1.0);
    throw ValidationError("rescaled Laplacian needs lambda_max > 0");
  }
  return (2.0 / lambda_max) * eigvals.array() - 1.0;
}

SpectralDecomp build_laplacian(const Graph& g) {
  if (!g.is_connected()) throw ValidationError("graph not connected");

  const Eigen::MatrixXd& a = g.adjacency();
  const Eigen::Index n = g.size();
  SpectralDecomp sd;
  sd.laplacian = -a;
  sd.laplacian.diagonal() = a.rowwise().sum();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sd.laplacian);
  if (eig.info() != Eigen::Success) throw NumericalError("Laplacian eigendecomposition failed");
  sd.eigvals = eig.eigenvalues();
  sd.eigvecs = eig.eigenvectors();
  for (Eigen::Index k = 0; k < n; ++k) {
    auto col = sd.eigvecs.col(k);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(col(i)) > kSignTol) {
        if (col(i) < 0.0) col = -col;
        break;
      }
    }
  }
  // L is PSD; clip round-off below zero so the spectrum is reported nonnegative.
  sd.eigvals = sd.eigvals.cwiseMax(0.0);
  sd.lambda_max = sd.eigvals(n - 1);

  const Eigen::MatrixXd scaled = sd.rescaled_laplacian();
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd sq = scaled * scaled;
  sq = 0.5 * (sq + sq.transpose()).eval();
  sd.cheb_basis = {eye, scaled, 2.0 * sq - eye};
  return sd;
}

Eigen::MatrixXd materialize_filter(const SpectralDecomp& sd, const ChebFilter& f) {
  return f.coeffs[0] * sd.cheb_basis[0] + f.coeffs[1] * sd.cheb_basis[1] +
         f.coeffs[2] * sd.cheb_basis[2];
}

double chebyshev_response(const ChebFilter& f, double x) {
  return f.coeffs[0] + f.coeffs[1] * x + f.coeffs[2] * (2.0 * x * x - 1.0);
}

Graph adjacency_from_geography(std::size_t n, const std::vector<Edge>& edges) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                            static_cast<Eigen::Index>(n));
  for (const auto& [i, j] : edges) {
    if (i >= n || j >= n) {
      throw ValidationError("edge (" + std::to_string(i) + "," + std::to_string(j) +
                            ") out of range for " + std::to_string(n) + " vertices");
    }
    if (i == j) throw ValidationError("self-loop at vertex " + std::to_string(i));
    a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0;
    a(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = 1.0;
  }
  return Graph(std::move(a));
}

EdgeList parse_edge_list(const std::string& text) {
  EdgeList out;
  std::vector<std::pair<std::size_t, std::string>> labels;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::size_t max_id = 0;
  bool any = false;
  while (std::getline(in, line)) {
    ++line_no;
    std::string body = trim(line);
    if (body.empty()) continue;
    if (body[0] == '#') {
      std::istringstream comment(body.substr(1));
      std::string keyword;
      comment >> keyword;
      if (keyword == "label") {
        std::size_t id = 0;
        if (!(comment >> id)) {
          throw DataError("edge list line " + std::to_string(line_no) + ": bad label line");
        }
        std::string name;
        std::getline(comment, name);
        labels.emplace_back(id, trim(name));
        max_id = std::max(max_id, id);
        any = true;
      }
      continue;
    }
    std::istringstream fields(body);
    long long i = -1;
    long long j = -1;
    if (!(fields >> i >> j) || i < 0 || j < 0) {
      throw DataError("edge list line " + std::to_string(line_no) + ": expected \"i j\"");
    }
    std::string rest;
    if (fields >> rest && rest[0] != '#') {
      throw DataError("edge list line " + std::to_string(line_no) + ": trailing fields");
    }
    out.edges.emplace_back(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    max_id = std::max({max_id, static_cast<std::size_t>(i), static_cast<std::size_t>(j)});
    any = true;
  }
  out.n = any ? max_id + 1 : 0;
  if (!labels.empty()) {
    out.labels.assign(out.n, std::string{});
    for (auto& [id, name] : labels) out.labels[id] = std::move(name);
    for (std::size_t k = 0; k < out.n; ++k) {
      if (out.labels[k].empty()) {
        throw DataError("edge list labels vertex set partially; vertex " + std::to_string(k) +
                        " has no label");
      }
    }
  }
  return out;
}

EdgeList read_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open edge list: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_edge_list(buf.str());
}

void write_edge_list(const std::string& path, const EdgeList& list) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write edge list: " + path);
  for (std::size_t k = 0; k < list.labels.size(); ++k) {
    out << "# label " << k << ' ' << list.labels[k] << '\n';
  }
  for (const auto& [i, j] : list.edges) out << i << ' ' << j << '\n';
  if (!out) throw DataError("failed writing edge list: " + path);
}

}  // namespace gds
