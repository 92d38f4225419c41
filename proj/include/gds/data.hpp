#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gds/copula.hpp"
#include "gds/graph.hpp"

namespace gds {

using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Node x day signal matrix. `mask(i, t)` is true where the entry was
/// observed; an absent mask means everything was observed.
struct SignalMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> node_ids;
  std::vector<std::string> dates;  // ISO yyyy-mm-dd, one per column
  std::optional<BoolMatrix> mask;

  Eigen::Index nodes() const { return values.rows(); }
  Eigen::Index days() const { return values.cols(); }
  bool observed(Eigen::Index i, Eigen::Index t) const { return !mask || (*mask)(i, t); }
  BoolMatrix mask_or_full() const;
  /// Values with unobserved entries replaced by zero.
  Eigen::MatrixXd zero_filled() const;
  /// Columns [first, first + count).
  SignalMatrix slice(Eigen::Index first, Eigen::Index count) const;
  /// Column-wise concatenation.
  static SignalMatrix concat(const std::vector<SignalMatrix>& parts);

  void validate() const;
};

struct WindowSet {
  std::vector<SignalMatrix> windows;
  Eigen::Index window_size = 0;

  Eigen::Index count() const { return static_cast<Eigen::Index>(windows.size()); }
};

/// Days since 1970-01-01 for an ISO date; throws DataError when malformed.
long long parse_iso_date(const std::string& iso);
std::string format_iso_date(long long days_since_epoch);

struct LoadedData {
  SignalMatrix signals;
  Graph graph;
};

/// Reads the cumulative county-level case file (columns
/// date,county,state,fips,cases,deaths), keeps rows of `state_filter`,
/// orders counties by the labels of `edge_file`, and converts cumulative
/// counts to daily new cases clamped at zero. Missing county-days are
/// unobserved.
LoadedData load_nyt_csv(const std::string& path, const std::string& state_filter,
                        const std::string& edge_file);
LoadedData parse_nyt_csv(const std::string& text, const std::string& state_filter,
                         const EdgeList& edges);

/// Wide CSV: header "node,<date>,<date>,...", one row per node, empty cell
/// for an unobserved entry.
SignalMatrix read_wide_csv(const std::string& path);
SignalMatrix parse_wide_csv(const std::string& text);
void write_wide_csv(const std::string& path, const SignalMatrix& sm);
std::string format_wide_csv(const SignalMatrix& sm);

/// Training part holds the dates before `split_date`; the test part holds
/// `split_date` onwards.
std::pair<SignalMatrix, SignalMatrix> split_train_test(const SignalMatrix& sm,
                                                       const std::string& split_date);

/// floor(T / w) consecutive, non-overlapping windows; the remainder at the end
/// is dropped.
WindowSet make_windows(const SignalMatrix& sm, Eigen::Index w);

/// Per-node mean and sample standard deviation over observed entries.
/// Nodes without observations fall back to the mean of the other node means.
Marginals estimate_marginals(const SignalMatrix& window);

struct TargetStats {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// Column mean and pairwise-complete sample covariance (1/(k-1)), then
/// symmetrized, repaired to PSD when masking made it indefinite, and
/// jittered by max(1e-8, 1e-6 tr/n) I.
TargetStats estimate_target(const SignalMatrix& window);

/// Per-node scaling x / (1 + max_t |x|), fitted on training data.
struct Normalization {
  Eigen::VectorXd scales;

  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd invert(const Eigen::MatrixXd& x) const;
  SignalMatrix apply(const SignalMatrix& sm) const;
};

std::pair<Normalization, SignalMatrix> normalize(const SignalMatrix& train);

/// Bernoulli masking: each column draws p ~ U[p_low, p_high] and keeps each
/// entry with probability p. Existing masks are intersected.
SignalMatrix apply_mask(const SignalMatrix& sm, double p_low, double p_high, std::uint64_t seed);

/// Independently permutes the columns inside every window.
WindowSet shuffle_windows(const WindowSet& ws, std::uint64_t seed);

}  // namespace gds
