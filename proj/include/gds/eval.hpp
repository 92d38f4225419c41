#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "gds/baselines.hpp"
#include "gds/data.hpp"
#include "gds/graph.hpp"
#include "gds/learn.hpp"

namespace gds {

enum class Method { kGdsCop, kGspLs, kGspRls, kGspLscm, kGspLev };
enum class Stress { kNone, kMasking, kShuffling };
enum class RseConvention { kCorrected, kPaperLiteral };

std::string to_string(Method m);
std::string to_string(Stress s);
std::string to_string(RseConvention c);
Method parse_method(const std::string& name);
Stress parse_stress(const std::string& name);
RseConvention parse_rse_convention(const std::string& name);
const std::vector<Method>& all_methods();

struct MethodParams {
  LearnSettings gds;
  std::optional<double> rls_lambda;  // default_rls_lambda when unset
  double lscm_lambda = 1.0;
  std::vector<double> lev_taus{0.01, 0.1, 0.5, 1.0};
};

struct ExperimentConfig {
  std::vector<Eigen::Index> window_sizes{30};
  std::vector<Method> methods;
  std::vector<Stress> stresses{Stress::kNone};
  int repeats = 10;
  std::uint64_t seed = 0;
  MethodParams params;
  double mask_low = 0.6;
  double mask_high = 0.9;
  RseConvention rse_convention = RseConvention::kCorrected;
  std::string split_date;  // first test date

  void validate() const;
};

nlohmann::json config_to_json(const ExperimentConfig& cfg);
/// Keys missing from `j` keep their defaults; unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& j);

/// A fitted filter plus whatever the method exposes about it.
struct FittedModel {
  Method method = Method::kGspLs;
  Eigen::MatrixXd filter;
  std::optional<ChebFilter> theta;
  std::optional<CorrelationMatrix> r;
  std::optional<LevModel> lev;
  std::vector<double> loss_trace;
  int iterations = 0;
  bool converged = true;
};

/// GDS-Cop training problem: per-transition moments (window s marginals,
/// window s+1 target) averaged over all consecutive pairs. Standard
/// deviations are averaged as variances.
GdsCopProblem build_gds_problem(const SpectralDecomp& sd, const WindowSet& train);

/// Stacks window s as inputs and window s+1 as targets, unobserved entries
/// set to zero.
PairedData build_paired_data(const WindowSet& train);

FittedModel fit_method(Method m, const SpectralDecomp& sd, const WindowSet& train,
                       const MethodParams& params);

/// ||pred - actual||_F^2 / ||reference||_F^2
double rse(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& actual,
           const Eigen::MatrixXd& reference);
double arse(const std::vector<double>& rses);

/// RSE of predicting window s+1 from window s for every consecutive test
/// pair. Filters act on normalized data; errors are measured in original
/// units.
std::vector<double> evaluate_windows(const Eigen::MatrixXd& filter, const Normalization& norm,
                                     const WindowSet& test, RseConvention convention);

/// Mixes a base seed with a label and cell coordinates (splitmix64 over an
/// FNV-1a hash of the label), independent of execution order.
std::uint64_t cell_seed(std::uint64_t base, const std::string& label, Eigen::Index window,
                        int repeat);

struct CellResult {
  Method method = Method::kGspLs;
  Eigen::Index window_size = 0;
  Stress stress = Stress::kNone;
  int repeat = 0;
  std::uint64_t seed = 0;
  std::vector<double> rse;
  double arse = 0.0;
  std::optional<std::string> error;
  double runtime_sec = 0.0;  // kept out of report.json
  std::vector<double> theta;    // Chebyshev coefficients or heat-kernel weights
  int iterations = 0;
  bool converged = true;
};

struct AggregateRow {
  Method method = Method::kGspLs;
  Eigen::Index window_size = 0;
  Stress stress = Stress::kNone;
  double arse_mean = 0.0;
  double arse_std = 0.0;  // population std over successful repeats
  int ok = 0;
  int failed = 0;
};

struct Report {
  ExperimentConfig config;
  std::vector<CellResult> cells;

  std::vector<AggregateRow> aggregate() const;
  bool any_error() const;
  nlohmann::json to_json() const;
};

/// Split, normalize, window, stress, fit and score every
/// (method, window size, stress, repeat) cell. A failing cell records its
/// error and the remaining cells still run.
Report run_protocol(const ExperimentConfig& cfg, const SignalMatrix& data, const Graph& graph);

/// Writes <dir>/report.json and <dir>/arse_vs_window.csv, creating `dir`.
void emit_report(const Report& report, const std::string& dir);

}  // namespace gds
