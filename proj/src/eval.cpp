#include "gds/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>

#include "gds/error.hpp"

namespace gds {

namespace {

using nlohmann::json;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// JSON numbers cannot be NaN; failed aggregates are written as null.
json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (allowed.count(key) == 0) throw ValidationError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
T get_as(const json& j, const std::string& key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError("bad value for '" + key + "' in " + where);
  }
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::kGdsCop: return "gds-cop";
    case Method::kGspLs: return "gsp-ls";
    case Method::kGspRls: return "gsp-rls";
    case Method::kGspLscm: return "gsp-lscm";
    case Method::kGspLev: return "gsp-lev";
  }
  return "?";
}

std::string to_string(Stress s) {
  switch (s) {
    case Stress::kNone: return "none";
    case Stress::kMasking: return "masking";
    case Stress::kShuffling: return "shuffling";
  }
  return "?";
}

std::string to_string(RseConvention c) {
  return c == RseConvention::kCorrected ? "corrected" : "paper-literal";
}

const std::vector<Method>& all_methods() {
  static const std::vector<Method> methods{Method::kGdsCop, Method::kGspLs, Method::kGspRls,
                                           Method::kGspLscm, Method::kGspLev};
  return methods;
}

Method parse_method(const std::string& name) {
  for (Method m : all_methods()) {
    if (to_string(m) == name) return m;
  }
  throw ValidationError("unknown method '" + name +
                        "' (expected gds-cop, gsp-ls, gsp-rls, gsp-lscm or gsp-lev)");
}

Stress parse_stress(const std::string& name) {
  for (Stress s : {Stress::kNone, Stress::kMasking, Stress::kShuffling}) {
    if (to_string(s) == name) return s;
  }
  throw ValidationError("unknown stress '" + name + "' (expected none, masking or shuffling)");
}

RseConvention parse_rse_convention(const std::string& name) {
  if (name == "corrected") return RseConvention::kCorrected;
  if (name == "paper-literal") return RseConvention::kPaperLiteral;
  throw ValidationError("unknown rse convention '" + name +
                        "' (expected corrected or paper-literal)");
}

void ExperimentConfig::validate() const {
  if (repeats < 1) throw ValidationError("repeats must be >= 1");
  if (window_sizes.empty()) throw ValidationError("at least one window size is required");
  for (Eigen::Index w : window_sizes) {
    if (w < 2) throw ValidationError("window sizes must be >= 2");
  }
  if (stresses.empty()) throw ValidationError("at least one stress setting is required");
  if (!(mask_low > 0.0 && mask_low <= mask_high && mask_high <= 1.0)) {
    throw ValidationError("mask probabilities need 0 < low <= high <= 1");
  }
  if (split_date.empty()) throw ValidationError("split_date is required");
  parse_iso_date(split_date);
  params.gds.validate();
  if (params.rls_lambda && !(*params.rls_lambda >= 0.0)) {
    throw ValidationError("rls lambda must be >= 0");
  }
  if (!(params.lscm_lambda >= 0.0)) throw ValidationError("lscm lambda must be >= 0");
  if (params.lev_taus.empty()) throw ValidationError("lev taus must be nonempty");
  for (double t : params.lev_taus) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw ValidationError("lev taus must be >= 0");
  }
}

json config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["window_sizes"] = cfg.window_sizes;
  json methods = json::array();
  for (Method m : cfg.methods) methods.push_back(to_string(m));
  j["methods"] = methods;
  json stresses = json::array();
  for (Stress s : cfg.stresses) stresses.push_back(to_string(s));
  j["stresses"] = stresses;
  j["repeats"] = cfg.repeats;
  j["seed"] = cfg.seed;
  j["mask_low"] = cfg.mask_low;
  j["mask_high"] = cfg.mask_high;
  j["rse_convention"] = to_string(cfg.rse_convention);
  j["split_date"] = cfg.split_date;
  const auto& g = cfg.params.gds;
  j["gds_cop"] = {{"eta1", g.eta1},
                  {"eta2", g.eta2},
                  {"epsilon", g.epsilon},
                  {"delta", g.delta},
                  {"max_iters", g.max_iters}};
  j["rls_lambda"] = cfg.params.rls_lambda ? json(*cfg.params.rls_lambda) : json(nullptr);
  j["lscm_lambda"] = cfg.params.lscm_lambda;
  j["lev_taus"] = cfg.params.lev_taus;
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  const std::string where = "experiment config";
  check_keys(j,
             {"window_sizes", "methods", "stresses", "repeats", "seed", "mask_low", "mask_high",
              "rse_convention", "split_date", "gds_cop", "rls_lambda", "lscm_lambda", "lev_taus"},
             where);
  ExperimentConfig cfg;
  if (j.contains("window_sizes")) {
    cfg.window_sizes = get_as<std::vector<Eigen::Index>>(j, "window_sizes", where);
  }
  if (j.contains("methods")) {
    cfg.methods.clear();
    for (const auto& name : get_as<std::vector<std::string>>(j, "methods", where)) {
      cfg.methods.push_back(parse_method(name));
    }
  }
  if (j.contains("stresses")) {
    cfg.stresses.clear();
    for (const auto& name : get_as<std::vector<std::string>>(j, "stresses", where)) {
      cfg.stresses.push_back(parse_stress(name));
    }
  }
  if (j.contains("repeats")) cfg.repeats = get_as<int>(j, "repeats", where);
  if (j.contains("seed")) cfg.seed = get_as<std::uint64_t>(j, "seed", where);
  if (j.contains("mask_low")) cfg.mask_low = get_as<double>(j, "mask_low", where);
  if (j.contains("mask_high")) cfg.mask_high = get_as<double>(j, "mask_high", where);
  if (j.contains("rse_convention")) {
    cfg.rse_convention = parse_rse_convention(get_as<std::string>(j, "rse_convention", where));
  }
  if (j.contains("split_date")) cfg.split_date = get_as<std::string>(j, "split_date", where);
  if (j.contains("gds_cop")) {
    const json& g = j.at("gds_cop");
    const std::string gw = "gds_cop settings";
    check_keys(g, {"eta1", "eta2", "epsilon", "delta", "max_iters"}, gw);
    auto& s = cfg.params.gds;
    if (g.contains("eta1")) s.eta1 = get_as<double>(g, "eta1", gw);
    if (g.contains("eta2")) s.eta2 = get_as<double>(g, "eta2", gw);
    if (g.contains("epsilon")) s.epsilon = get_as<double>(g, "epsilon", gw);
    if (g.contains("delta")) s.delta = get_as<double>(g, "delta", gw);
    if (g.contains("max_iters")) s.max_iters = get_as<int>(g, "max_iters", gw);
  }
  if (j.contains("rls_lambda") && !j.at("rls_lambda").is_null()) {
    cfg.params.rls_lambda = get_as<double>(j, "rls_lambda", where);
  }
  if (j.contains("lscm_lambda")) cfg.params.lscm_lambda = get_as<double>(j, "lscm_lambda", where);
  if (j.contains("lev_taus")) cfg.params.lev_taus = get_as<std::vector<double>>(j, "lev_taus", where);
  return cfg;
}

GdsCopProblem build_gds_problem(const SpectralDecomp& sd, const WindowSet& train) {
  if (train.count() < 2) throw ValidationError("training needs at least two windows");
  const Eigen::Index n = sd.size();
  Eigen::VectorXd means = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd vars = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd target_mean = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd target_cov = Eigen::MatrixXd::Zero(n, n);
  const Eigen::Index pairs = train.count() - 1;
  for (Eigen::Index s = 0; s < pairs; ++s) {
    const auto& in = train.windows[static_cast<std::size_t>(s)];
    const auto& out = train.windows[static_cast<std::size_t>(s + 1)];
    if (in.nodes() != n) throw ValidationError("training windows do not match the graph size");
    const Marginals m = estimate_marginals(in);
    const TargetStats t = estimate_target(out);
    means += m.means();
    vars += m.stds().cwiseAbs2();
    target_mean += t.mean;
    target_cov += t.cov;
  }
  const double inv = 1.0 / static_cast<double>(pairs);
  return GdsCopProblem(sd, Marginals(means * inv, (vars * inv).cwiseSqrt()), target_mean * inv,
                       target_cov * inv);
}

PairedData build_paired_data(const WindowSet& train) {
  if (train.count() < 2) throw ValidationError("training needs at least two windows");
  std::vector<SignalMatrix> inputs(train.windows.begin(), train.windows.end() - 1);
  std::vector<SignalMatrix> targets(train.windows.begin() + 1, train.windows.end());
  return {SignalMatrix::concat(inputs).zero_filled(), SignalMatrix::concat(targets).zero_filled()};
}

FittedModel fit_method(Method m, const SpectralDecomp& sd, const WindowSet& train,
                       const MethodParams& params) {
  FittedModel fm;
  fm.method = m;
  if (m == Method::kGdsCop) {
    const GdsCopProblem problem = build_gds_problem(sd, train);
    const LearnTrace trace = learn_gds_cop(problem, params.gds);
    fm.theta = ChebFilter::from_vector(trace.final_theta);
    fm.r = trace.final_r;
    fm.loss_trace = trace.loss_history;
    fm.iterations = trace.iterations;
    fm.converged = trace.converged;
    fm.filter = materialize_filter(sd, *fm.theta);
    return fm;
  }
  const PairedData d = build_paired_data(train);
  switch (m) {
    case Method::kGspLs:
      fm.theta = gsp_ls(sd, d);
      break;
    case Method::kGspRls:
      fm.theta = gsp_rls(sd, d, params.rls_lambda ? *params.rls_lambda : default_rls_lambda(sd, d));
      break;
    case Method::kGspLscm:
      fm.theta = gsp_lscm(sd, d, params.lscm_lambda);
      break;
    case Method::kGspLev:
      fm.lev = gsp_lev(sd, d, params.lev_taus);
      fm.filter = fm.lev->filter;
      return fm;
    case Method::kGdsCop:
      break;
  }
  fm.filter = materialize_filter(sd, *fm.theta);
  return fm;
}

double rse(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& actual,
           const Eigen::MatrixXd& reference) {
  if (pred.rows() != actual.rows() || pred.cols() != actual.cols() ||
      reference.rows() != actual.rows() || reference.cols() != actual.cols()) {
    throw ValidationError("rse: shapes disagree");
  }
  const double denom = reference.squaredNorm();
  if (!(denom > 0.0)) throw ValidationError("rse: reference has zero norm");
  return (pred - actual).squaredNorm() / denom;
}

double arse(const std::vector<double>& rses) {
  if (rses.empty()) throw ValidationError("arse of an empty list");
  double sum = 0.0;
  for (double v : rses) sum += v;
  return sum / static_cast<double>(rses.size());
}

std::vector<double> evaluate_windows(const Eigen::MatrixXd& filter, const Normalization& norm,
                                     const WindowSet& test, RseConvention convention) {
  if (test.count() < 2) throw ValidationError("test split yields fewer than two windows");
  std::vector<double> out;
  for (Eigen::Index s = 0; s + 1 < test.count(); ++s) {
    const Eigen::MatrixXd cur = test.windows[static_cast<std::size_t>(s)].zero_filled();
    const Eigen::MatrixXd next = test.windows[static_cast<std::size_t>(s + 1)].zero_filled();
    const Eigen::MatrixXd pred = norm.invert(predict(filter, norm.apply(cur)));
    const Eigen::MatrixXd& target = convention == RseConvention::kCorrected ? next : cur;
    out.push_back(rse(pred, target, target));
  }
  return out;
}

std::uint64_t cell_seed(std::uint64_t base, const std::string& label, Eigen::Index window,
                        int repeat) {
  std::uint64_t h = splitmix64(base);
  h = splitmix64(h ^ fnv1a(label));
  h = splitmix64(h ^ static_cast<std::uint64_t>(window));
  return splitmix64(h ^ static_cast<std::uint64_t>(repeat));
}

std::vector<AggregateRow> Report::aggregate() const {
  std::vector<AggregateRow> rows;
  for (const auto& c : cells) {
    auto it = std::find_if(rows.begin(), rows.end(), [&c](const AggregateRow& r) {
      return r.method == c.method && r.window_size == c.window_size && r.stress == c.stress;
    });
    if (it == rows.end()) {
      rows.push_back({c.method, c.window_size, c.stress, 0.0, 0.0, 0, 0});
      it = rows.end() - 1;
    }
    if (c.error) {
      ++it->failed;
    } else {
      ++it->ok;
    }
  }
  for (auto& r : rows) {
    std::vector<double> vals;
    for (const auto& c : cells) {
      if (c.method == r.method && c.window_size == r.window_size && c.stress == r.stress &&
          !c.error) {
        vals.push_back(c.arse);
      }
    }
    if (vals.empty()) {
      r.arse_mean = std::numeric_limits<double>::quiet_NaN();
      r.arse_std = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    double sum = 0.0;
    for (double v : vals) sum += v;
    r.arse_mean = sum / static_cast<double>(vals.size());
    double ss = 0.0;
    for (double v : vals) ss += (v - r.arse_mean) * (v - r.arse_mean);
    r.arse_std = std::sqrt(ss / static_cast<double>(vals.size()));
  }
  return rows;
}

bool Report::any_error() const {
  return std::any_of(cells.begin(), cells.end(), [](const CellResult& c) { return c.error.has_value(); });
}

json Report::to_json() const {
  json j;
  j["config"] = config_to_json(config);
  json cells_j = json::array();
  for (const auto& c : cells) {
    json cj;
    cj["method"] = to_string(c.method);
    cj["window_size"] = c.window_size;
    cj["stress"] = to_string(c.stress);
    cj["repeat"] = c.repeat;
    cj["seed"] = c.seed;
    if (c.error) {
      cj["status"] = "error";
      cj["error"] = *c.error;
    } else {
      cj["status"] = "ok";
      cj["rse"] = c.rse;
      cj["arse"] = c.arse;
      cj[c.method == Method::kGspLev ? "weights" : "theta"] = c.theta;
      if (c.method == Method::kGdsCop) {
        cj["iterations"] = c.iterations;
        cj["converged"] = c.converged;
      }
    }
    cells_j.push_back(cj);
  }
  j["cells"] = cells_j;
  json agg = json::array();
  for (const auto& r : aggregate()) {
    agg.push_back({{"method", to_string(r.method)},
                   {"window_size", r.window_size},
                   {"stress", to_string(r.stress)},
                   {"arse_mean", number_or_null(r.arse_mean)},
                   {"arse_std", number_or_null(r.arse_std)},
                   {"repeats_ok", r.ok},
                   {"repeats_failed", r.failed}});
  }
  j["aggregate"] = agg;
  return j;
}

Report run_protocol(const ExperimentConfig& cfg, const SignalMatrix& data, const Graph& graph) {
  cfg.validate();
  data.validate();
  if (data.nodes() != graph.size()) {
    throw DataError("signal has " + std::to_string(data.nodes()) + " nodes but the graph has " +
                    std::to_string(graph.size()));
  }
  const SpectralDecomp sd = build_laplacian(graph);
  const auto [train, test] = split_train_test(data, cfg.split_date);

  Report report;
  report.config = cfg;
  for (Eigen::Index w : cfg.window_sizes) {
    for (Stress stress : cfg.stresses) {
      for (int rep = 0; rep < cfg.repeats; ++rep) {
        const std::uint64_t stress_seed = cell_seed(cfg.seed, "stress", w, rep);
        // Shared preprocessing for every method of this (window, stress, repeat).
        std::optional<std::string> prep_error;
        Normalization norm;
        WindowSet train_w;
        WindowSet test_w;
        try {
          const SignalMatrix stressed =
              stress == Stress::kMasking ? apply_mask(train, cfg.mask_low, cfg.mask_high, stress_seed)
                                         : train;
          auto [nm, normalized] = normalize(stressed);
          norm = std::move(nm);
          train_w = make_windows(normalized, w);
          if (stress == Stress::kShuffling) train_w = shuffle_windows(train_w, stress_seed);
          test_w = make_windows(test, w);
        } catch (const Error& e) {
          prep_error = e.what();
        }
        for (Method m : cfg.methods) {
          CellResult cell;
          cell.method = m;
          cell.window_size = w;
          cell.stress = stress;
          cell.repeat = rep;
          cell.seed = cell_seed(cfg.seed, to_string(m), w, rep);
          const auto t0 = std::chrono::steady_clock::now();
          if (prep_error) {
            cell.error = *prep_error;
          } else {
            try {
              const FittedModel fm = fit_method(m, sd, train_w, cfg.params);
              if (fm.theta) {
                cell.theta.assign(fm.theta->coeffs.begin(), fm.theta->coeffs.end());
              } else if (fm.lev) {
                cell.theta = fm.lev->weights;
              }
              cell.iterations = fm.iterations;
              cell.converged = fm.converged;
              cell.rse = evaluate_windows(fm.filter, norm, test_w, cfg.rse_convention);
              cell.arse = arse(cell.rse);
            } catch (const Error& e) {
              cell.error = e.what();
            }
          }
          cell.runtime_sec =
              std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
          report.cells.push_back(std::move(cell));
        }
      }
    }
  }
  std::stable_sort(report.cells.begin(), report.cells.end(),
                   [](const CellResult& a, const CellResult& b) { return a.method < b.method; });
  return report;
}

void emit_report(const Report& report, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory " + dir + ": " + ec.message());
  const fs::path json_path = fs::path(dir) / "report.json";
  {
    std::ofstream out(json_path, std::ios::binary);
    if (!out) throw DataError("cannot write " + json_path.string());
    out << report.to_json().dump(2) << '\n';
    if (!out) throw DataError("failed writing " + json_path.string());
  }
  const fs::path csv_path = fs::path(dir) / "arse_vs_window.csv";
  std::ofstream out(csv_path, std::ios::binary);
  if (!out) throw DataError("cannot write " + csv_path.string());
  out << "method,window_size,stress,arse_mean,arse_std\n";
  char buf[64];
  for (const auto& r : report.aggregate()) {
    out << to_string(r.method) << ',' << r.window_size << ',' << to_string(r.stress) << ',';
    std::snprintf(buf, sizeof buf, "%.17g,%.17g", r.arse_mean, r.arse_std);
    out << buf << '\n';
  }
  if (!out) throw DataError("failed writing " + csv_path.string());
}

}  // namespace gds
