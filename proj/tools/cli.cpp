#include "cli.hpp"

#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gds/data.hpp"
#include "gds/error.hpp"
#include "gds/eval.hpp"
#include "gds/synthetic.hpp"

namespace gds::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

bool use_color() { return std::getenv("NO_COLOR") == nullptr && isatty(STDERR_FILENO) != 0; }

std::string red(const std::string& s) { return use_color() ? "\033[31m" + s + "\033[0m" : s; }

void require_file(const std::string& path, const std::string& what) {
  if (path.empty()) throw ValidationError(what + " path is required");
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + what + " '" + path + "'");
}

void require_output_dir(const std::string& dir) {
  if (dir.empty()) throw ValidationError("output directory is required");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory '" + dir + "': " + ec.message());
}

void require_output_file(const std::string& path) {
  if (path.empty()) throw ValidationError("output path is required");
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) require_output_dir(parent.string());
}

json read_json(const std::string& path, const std::string& what) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + what + " '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(what + " '" + path + "' is not valid JSON: " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << text;
  if (!out) throw DataError("failed writing '" + path + "'");
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw DataError(what + " must be a nonempty array of rows");
  const auto n = static_cast<Eigen::Index>(j.size());
  const auto m = static_cast<Eigen::Index>(j.front().size());
  Eigen::MatrixXd out(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != m) {
      throw DataError(what + " rows have inconsistent lengths");
    }
    for (Eigen::Index k = 0; k < m; ++k) out(i, k) = row[static_cast<std::size_t>(k)].get<double>();
  }
  return out;
}

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

// Input locations shared by learn and bench.
struct DataPaths {
  std::string data;
  std::string nyt;
  std::string state = "California";
  std::string edges;
};

struct Inputs {
  SignalMatrix signals;
  Graph graph;
};

Inputs load_inputs(const DataPaths& p) {
  if (!p.nyt.empty()) {
    auto loaded = load_nyt_csv(p.nyt, p.state, p.edges);
    return {std::move(loaded.signals), std::move(loaded.graph)};
  }
  SignalMatrix sm = read_wide_csv(p.data);
  const EdgeList edges = read_edge_list(p.edges);
  if (static_cast<Eigen::Index>(edges.n) != sm.nodes()) {
    throw DataError("edge list has " + std::to_string(edges.n) + " vertices but the signal has " +
                    std::to_string(sm.nodes()) + " nodes");
  }
  if (!edges.labels.empty()) {
    for (std::size_t k = 0; k < edges.n; ++k) {
      if (edges.labels[k] != sm.node_ids[k]) {
        throw DataError("node order mismatch at row " + std::to_string(k) + ": signal has '" +
                        sm.node_ids[k] + "', edge list has '" + edges.labels[k] + "'");
      }
    }
  }
  Graph g = adjacency_from_geography(edges.n, edges.edges);
  return {std::move(sm), std::move(g)};
}

void validate_data_paths(const DataPaths& p) {
  if (!p.nyt.empty()) {
    require_file(p.nyt, "case file");
  } else {
    if (p.data.empty()) throw ValidationError("either --data or --nyt is required");
    require_file(p.data, "signal file");
  }
  require_file(p.edges, "edge list");
}

// Used when no split date is given: the middle column starts the test part.
std::string default_split_date(const SignalMatrix& sm) {
  if (sm.days() < 2) throw DataError("need at least two days to split");
  return sm.dates[static_cast<std::size_t>(sm.days() / 2)];
}

// Flags mirroring the experiment config; each applies only when given.
struct ExperimentFlags {
  std::vector<Eigen::Index> window_sizes;
  std::vector<std::string> methods;
  std::vector<std::string> stresses;
  int repeats = 0;
  std::uint64_t seed = 0;
  double mask_low = 0.0;
  double mask_high = 0.0;
  std::string rse_convention;
  std::string split_date;
  double eta1 = 0.0;
  double eta2 = 0.0;
  double epsilon = 0.0;
  double delta = 0.0;
  int max_iters = 0;
  double rls_lambda = 0.0;
  double lscm_lambda = 0.0;
  std::vector<double> lev_taus;

  std::map<std::string, CLI::Option*> opts;

  bool given(const std::string& key) const {
    const auto it = opts.find(key);
    return it != opts.end() && it->second->count() > 0;
  }
};

void add_learner_flags(CLI::App* sub, ExperimentFlags& f) {
  f.opts["split_date"] =
      sub->add_option("--split-date", f.split_date,
                      "First test date (yyyy-mm-dd); earlier dates train. Default: middle date");
  f.opts["eta1"] = sub->add_option("--eta1", f.eta1, "GDS-Cop step size on the filter coefficients");
  f.opts["eta2"] = sub->add_option("--eta2", f.eta2, "GDS-Cop step size on the copula correlation");
  f.opts["epsilon"] =
      sub->add_option("--epsilon", f.epsilon, "GDS-Cop stopping threshold on the loss change");
  f.opts["delta"] =
      sub->add_option("--delta", f.delta, "Eigenvalue floor of the correlation projection");
  f.opts["max_iters"] = sub->add_option("--max-iters", f.max_iters, "GDS-Cop iteration cap");
  f.opts["rls_lambda"] = sub->add_option(
      "--rls-lambda", f.rls_lambda, "GSP-RLS l1 weight. Default: 0.1 x data-gradient sup-norm at 0");
  f.opts["lscm_lambda"] =
      sub->add_option("--lscm-lambda", f.lscm_lambda, "GSP-LSCM covariance-matching weight");
  f.opts["lev_taus"] =
      sub->add_option("--lev-taus", f.lev_taus, "GSP-LEV heat-kernel diffusion scales")
          ->delimiter(',');
}

void add_experiment_flags(CLI::App* sub, ExperimentFlags& f) {
  f.opts["window_sizes"] =
      sub->add_option("--window-sizes", f.window_sizes, "Window lengths W in days, comma separated")
          ->delimiter(',');
  f.opts["methods"] =
      sub->add_option("--methods", f.methods,
                      "Methods to run: gds-cop,gsp-ls,gsp-rls,gsp-lscm,gsp-lev. Default: all")
          ->delimiter(',');
  f.opts["stresses"] =
      sub->add_option("--stress", f.stresses,
                      "Stress settings on the training data: none, masking, shuffling")
          ->delimiter(',');
  f.opts["repeats"] = sub->add_option("--repeats", f.repeats, "Repeats per cell (default 10)");
  f.opts["seed"] = sub->add_option("--seed", f.seed, "Base seed for all stress and method seeds");
  f.opts["mask_low"] =
      sub->add_option("--mask-low", f.mask_low, "Lower bound of the per-column observation probability");
  f.opts["mask_high"] =
      sub->add_option("--mask-high", f.mask_high, "Upper bound of the per-column observation probability");
  f.opts["rse_convention"] = sub->add_option(
      "--rse-convention", f.rse_convention,
      "corrected: compare with the next window; paper-literal: compare with the input window");
  add_learner_flags(sub, f);
}

// Config-file keys that are not part of the experiment config.
const std::vector<std::string> kPathKeys{"data", "nyt", "state", "edges", "out"};

// Splits a config file into data paths and experiment settings.
ExperimentConfig load_config(const std::string& path, DataPaths& paths, std::string& out) {
  if (path.empty()) return {};
  json j = read_json(path, "config file");
  if (!j.is_object()) throw ValidationError("config file must hold a JSON object");
  const auto take = [&j](const std::string& key, std::string& dst) {
    if (!j.contains(key)) return;
    if (!j.at(key).is_string()) throw ValidationError("config key '" + key + "' must be a string");
    dst = j.at(key).get<std::string>();
    j.erase(key);
  };
  take("data", paths.data);
  take("nyt", paths.nyt);
  take("state", paths.state);
  take("edges", paths.edges);
  take("out", out);
  return config_from_json(j);
}

void apply_flags(const ExperimentFlags& f, ExperimentConfig& cfg) {
  if (f.given("window_sizes")) cfg.window_sizes = f.window_sizes;
  if (f.given("methods")) {
    cfg.methods.clear();
    for (const auto& m : f.methods) cfg.methods.push_back(parse_method(m));
  }
  if (f.given("stresses")) {
    cfg.stresses.clear();
    for (const auto& s : f.stresses) cfg.stresses.push_back(parse_stress(s));
  }
  if (f.given("repeats")) cfg.repeats = f.repeats;
  if (f.given("seed")) cfg.seed = f.seed;
  if (f.given("mask_low")) cfg.mask_low = f.mask_low;
  if (f.given("mask_high")) cfg.mask_high = f.mask_high;
  if (f.given("rse_convention")) cfg.rse_convention = parse_rse_convention(f.rse_convention);
  if (f.given("split_date")) cfg.split_date = f.split_date;
  if (f.given("eta1")) cfg.params.gds.eta1 = f.eta1;
  if (f.given("eta2")) cfg.params.gds.eta2 = f.eta2;
  if (f.given("epsilon")) cfg.params.gds.epsilon = f.epsilon;
  if (f.given("delta")) cfg.params.gds.delta = f.delta;
  if (f.given("max_iters")) cfg.params.gds.max_iters = f.max_iters;
  if (f.given("rls_lambda")) cfg.params.rls_lambda = f.rls_lambda;
  if (f.given("lscm_lambda")) cfg.params.lscm_lambda = f.lscm_lambda;
  if (f.given("lev_taus")) cfg.params.lev_taus = f.lev_taus;
}

struct SynthArgs {
  Eigen::Index nodes = 10;
  Eigen::Index days = 300;
  Eigen::Index window = 30;
  std::vector<double> theta{0.95, -0.05, 0.02};
  double noise = 0.01;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  if (a.theta.size() != 3) throw ValidationError("--theta takes exactly three coefficients");
  require_output_dir(a.out);
  const ChebFilter theta{{a.theta[0], a.theta[1], a.theta[2]}};
  const SyntheticData syn = gen_synthetic(a.nodes, a.days, theta, std::nullopt, a.noise, a.seed, a.window);
  const fs::path dir(a.out);
  write_wide_csv((dir / "signals.csv").string(), syn.signals);
  write_edge_list((dir / "edges.txt").string(), syn.edges);

  const SpectralDecomp sd = build_laplacian(syn.graph);
  json truth;
  truth["method"] = "ground-truth";
  truth["node_ids"] = syn.signals.node_ids;
  truth["theta"] = a.theta;
  truth["r"] = matrix_json(syn.truth.r.matrix());
  truth["means"] = vector_json(syn.truth.means);
  truth["stds"] = vector_json(syn.truth.stds);
  truth["window_size"] = syn.truth.window;
  truth["noise"] = syn.truth.noise;
  truth["seed"] = syn.truth.seed;
  truth["scales"] = std::vector<double>(static_cast<std::size_t>(a.nodes), 1.0);
  truth["filter"] = matrix_json(materialize_filter(sd, theta));
  write_text((dir / "truth.json").string(), truth.dump(2) + "\n");
  out << "wrote " << (dir / "signals.csv").string() << ", " << (dir / "edges.txt").string()
      << ", " << (dir / "truth.json").string() << '\n';
  return kOk;
}

struct LearnArgs {
  std::string config;
  DataPaths paths;
  std::string method;
  Eigen::Index window = 0;
  std::string out;
};

int cmd_learn(LearnArgs a, const ExperimentFlags& f, std::ostream& out, std::ostream& err) {
  std::string cfg_out;
  ExperimentConfig cfg = load_config(a.config, a.paths, cfg_out);
  apply_flags(f, cfg);
  if (a.out.empty()) a.out = cfg_out;
  if (a.method.empty()) throw ValidationError("--method is required");
  const Method method = parse_method(a.method);
  const Eigen::Index w = a.window > 0 ? a.window : cfg.window_sizes.front();
  validate_data_paths(a.paths);
  require_output_file(a.out);

  const Inputs in = load_inputs(a.paths);
  if (cfg.split_date.empty()) cfg.split_date = default_split_date(in.signals);
  cfg.params.gds.validate();
  const auto [train, test] = split_train_test(in.signals, cfg.split_date);
  (void)test;
  const auto [norm, normalized] = normalize(train);
  const WindowSet windows = make_windows(normalized, w);
  const SpectralDecomp sd = build_laplacian(in.graph);

  json model;
  model["method"] = to_string(method);
  model["node_ids"] = in.signals.node_ids;
  model["window_size"] = w;
  model["split_date"] = cfg.split_date;
  model["scales"] = vector_json(norm.scales);
  try {
    const FittedModel fm = fit_method(method, sd, windows, cfg.params);
    if (fm.theta) model["theta"] = fm.theta->coeffs;
    if (fm.r) model["r"] = matrix_json(fm.r->matrix());
    if (fm.lev) {
      model["taus"] = fm.lev->taus;
      model["weights"] = fm.lev->weights;
      model["alpha"] = fm.lev->alpha;
      model["gamma"] = fm.lev->gamma;
      model["log_evidence"] = fm.lev->log_evidence;
    }
    model["loss_trace"] = fm.loss_trace;
    if (method == Method::kGdsCop) {
      model["iterations"] = fm.iterations;
      model["converged"] = fm.converged;
      if (!fm.converged) {
        err << "warning: gds-cop stopped at the iteration cap (" << fm.iterations
            << ") before the loss change fell below epsilon\n";
      }
    }
    model["filter"] = matrix_json(fm.filter);
  } catch (const LearnDivergence& e) {
    const auto& h = e.trace().loss_history;
    err << red("error") << ": " << e.what() << " after " << h.size() << " iterations";
    if (!h.empty()) err << " (first loss " << h.front() << ", last finite loss " << h.back() << ")";
    err << '\n';
    return kNumericalError;
  }
  write_text(a.out, model.dump(2) + "\n");
  out << "wrote " << a.out << '\n';
  return kOk;
}

struct PredictArgs {
  std::string model;
  std::string input;
  std::string out;
};

int cmd_predict(const PredictArgs& a, std::ostream& out) {
  require_file(a.model, "model file");
  require_file(a.input, "input signal");
  if (!a.out.empty()) require_output_file(a.out);
  const json model = read_json(a.model, "model file");
  Eigen::MatrixXd filter;
  std::vector<std::string> ids;
  Eigen::VectorXd scales;
  try {
    filter = matrix_from_json(model.at("filter"), "model filter");
    ids = model.at("node_ids").get<std::vector<std::string>>();
    const auto s = model.at("scales").get<std::vector<double>>();
    scales = Eigen::Map<const Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
  } catch (const json::exception& e) {
    throw DataError("model file '" + a.model + "' is incomplete: " + e.what());
  }
  const auto n = static_cast<Eigen::Index>(ids.size());
  if (filter.rows() != n || filter.cols() != n || scales.size() != n) {
    throw DataError("model file '" + a.model + "' has inconsistent dimensions");
  }
  const SignalMatrix x = read_wide_csv(a.input);
  for (Eigen::Index i = 0; i < std::max(n, x.nodes()); ++i) {
    const std::string want = i < n ? ids[static_cast<std::size_t>(i)] : "<none>";
    const std::string got = i < x.nodes() ? x.node_ids[static_cast<std::size_t>(i)] : "<none>";
    if (want != got) {
      throw DataError("node mismatch at row " + std::to_string(i) + ": model has '" + want +
                      "', input has '" + got + "'");
    }
  }
  Normalization norm;
  norm.scales = scales;
  SignalMatrix pred;
  pred.node_ids = x.node_ids;
  pred.dates = x.dates;
  pred.values = norm.invert(predict(filter, norm.apply(x.zero_filled())));
  if (a.out.empty()) {
    out << format_wide_csv(pred);
  } else {
    write_wide_csv(a.out, pred);
  }
  return kOk;
}

struct BenchArgs {
  std::string config;
  DataPaths paths;
  std::string out;
};

int cmd_bench(BenchArgs a, const ExperimentFlags& f, std::ostream& out, std::ostream& err) {
  std::string cfg_out;
  ExperimentConfig cfg = load_config(a.config, a.paths, cfg_out);
  if (cfg.methods.empty()) cfg.methods = all_methods();
  apply_flags(f, cfg);
  if (a.out.empty()) a.out = cfg_out;
  validate_data_paths(a.paths);
  require_output_dir(a.out);

  const Inputs in = load_inputs(a.paths);
  if (cfg.split_date.empty()) cfg.split_date = default_split_date(in.signals);
  const Report report = run_protocol(cfg, in.signals, in.graph);
  emit_report(report, a.out);

  out << std::left << std::setw(10) << "method" << std::setw(8) << "window" << std::setw(11)
      << "stress" << std::setw(14) << "arse_mean" << "arse_std\n";
  for (const auto& r : report.aggregate()) {
    out << std::setw(10) << to_string(r.method) << std::setw(8) << r.window_size << std::setw(11)
        << to_string(r.stress) << std::setw(14) << r.arse_mean << r.arse_std << '\n';
  }
  double total = 0.0;
  int failed = 0;
  for (const auto& c : report.cells) {
    total += c.runtime_sec;
    if (c.error) {
      ++failed;
      err << red("error") << ": " << to_string(c.method) << " W=" << c.window_size << " "
          << to_string(c.stress) << " repeat " << c.repeat << ": " << *c.error << '\n';
    }
  }
  err << report.cells.size() << " cells, " << failed << " failed, fit+score time " << std::fixed
      << std::setprecision(2) << total << " s\n";
  out << "wrote " << (fs::path(a.out) / "report.json").string() << " and "
      << (fs::path(a.out) / "arse_vs_window.csv").string() << '\n';
  return failed > 0 ? kNumericalError : kOk;
}

void add_data_flags(CLI::App* sub, DataPaths& p) {
  sub->add_option("--data", p.data, "Wide CSV of node x day signals");
  sub->add_option("--nyt", p.nyt, "Cumulative county case CSV (date,county,state,fips,cases,deaths)");
  sub->add_option("--state", p.state, "State whose counties are kept from --nyt");
  sub->add_option("--edges", p.edges, "Edge list; its labels fix the node order");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Graph distributional signal filters: synthetic data, learning, prediction, benchmarks"};
  app.name("gds");
  app.require_subcommand(1);

  SynthArgs synth;
  CLI::App* s = app.add_subcommand("synth", "Generate a synthetic dataset with a known filter");
  s->add_option("--nodes", synth.nodes, "Number of graph nodes");
  s->add_option("--days", synth.days, "Number of days (columns)");
  s->add_option("--window", synth.window, "Lag in days between a column and its filtered successor");
  s->add_option("--theta", synth.theta, "True Chebyshev coefficients theta0,theta1,theta2")->delimiter(',');
  s->add_option("--noise", synth.noise, "Standard deviation of the additive noise");
  s->add_option("--seed", synth.seed, "Random seed");
  s->add_option("--out", synth.out, "Output directory")->required();

  LearnArgs learn;
  ExperimentFlags learn_flags;
  CLI::App* l = app.add_subcommand("learn", "Fit one method on the training split and save the model");
  l->add_option("--config", learn.config, "JSON config file; flags override its keys");
  add_data_flags(l, learn.paths);
  l->add_option("--method", learn.method, "gds-cop, gsp-ls, gsp-rls, gsp-lscm or gsp-lev");
  l->add_option("--window", learn.window, "Window length W in days (default: first configured size)");
  l->add_option("--out", learn.out, "Model JSON path");
  add_learner_flags(l, learn_flags);

  PredictArgs pred;
  CLI::App* p = app.add_subcommand("predict", "Apply a saved filter to a window of signals");
  p->add_option("--model", pred.model, "Model JSON written by learn (or truth.json from synth)")->required();
  p->add_option("--input", pred.input, "Wide CSV holding the input window")->required();
  p->add_option("--out", pred.out, "Prediction CSV (default: standard output)");

  BenchArgs bench;
  ExperimentFlags bench_flags;
  CLI::App* b = app.add_subcommand("bench", "Rolling-window benchmark over methods, windows and stresses");
  b->add_option("--config", bench.config, "JSON config file; flags override its keys");
  add_data_flags(b, bench.paths);
  b->add_option("--out", bench.out, "Output directory for report.json and arse_vs_window.csv");
  add_experiment_flags(b, bench_flags);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    CLI::App* target = &app;
    for (CLI::App* sub : {s, l, p, b}) {
      if (sub->parsed()) target = sub;
    }
    out << target->help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << red("usage error") << ": " << e.what() << "\nrun 'gds --help' for usage\n";
    return kUsage;
  }

  try {
    if (s->parsed()) return cmd_synth(synth, out);
    if (l->parsed()) return cmd_learn(learn, learn_flags, out, err);
    if (p->parsed()) return cmd_predict(pred, out);
    if (b->parsed()) return cmd_bench(bench, bench_flags, out, err);
  } catch (const ValidationError& e) {
    err << red("usage error") << ": " << e.what() << '\n';
    return kUsage;
  } catch (const DataError& e) {
    err << red("data error") << ": " << e.what() << '\n';
    return kDataError;
  } catch (const NumericalError& e) {
    err << red("numerical failure") << ": " << e.what() << '\n';
    return kNumericalError;
  }
  return kUsage;
}

}  // namespace gds::cli
