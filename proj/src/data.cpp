#include "gds/data.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

#include "gds/error.hpp"

namespace gds {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << text;
  if (!out) throw DataError("failed writing " + path);
}

// RFC 4180 style split: double quotes delimit fields, "" escapes a quote.
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char c = line[k];
    if (quoted) {
      if (c == '"') {
        if (k + 1 < line.size() && line[k + 1] == '"') {
          cur += '"';
          ++k;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

double parse_number(const std::string& s, const std::string& where) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw DataError(where + ": not a number: '" + s + "'");
  }
  if (used != s.size() || !std::isfinite(v)) {
    throw DataError(where + ": not a finite number: '" + s + "'");
  }
  return v;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Column order that depends only on the multiset of columns. Estimators
// accumulate in this order, so permuting columns cannot change a single bit
// of their output.
std::vector<Eigen::Index> canonical_order(const SignalMatrix& w) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(w.days()));
  std::iota(order.begin(), order.end(), 0);
  const auto less = [&w](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index i = 0; i < w.nodes(); ++i) {
      const bool oa = w.observed(i, a);
      const bool ob = w.observed(i, b);
      if (oa != ob) return ob;  // unobserved sorts first
      if (!oa) continue;
      const double va = w.values(i, a);
      const double vb = w.values(i, b);
      if (va != vb) return va < vb;
    }
    return false;
  };
  std::stable_sort(order.begin(), order.end(), less);
  return order;
}

}  // namespace

BoolMatrix SignalMatrix::mask_or_full() const {
  if (mask) return *mask;
  return BoolMatrix::Constant(nodes(), days(), true);
}

Eigen::MatrixXd SignalMatrix::zero_filled() const {
  if (!mask) return values;
  return mask->select(values, Eigen::MatrixXd::Zero(nodes(), days()));
}

SignalMatrix SignalMatrix::slice(Eigen::Index first, Eigen::Index count) const {
  if (first < 0 || count < 0 || first + count > days()) {
    throw ValidationError("column slice out of range");
  }
  SignalMatrix out;
  out.values = values.middleCols(first, count);
  out.node_ids = node_ids;
  if (!dates.empty()) {
    out.dates.assign(dates.begin() + first, dates.begin() + first + count);
  }
  if (mask) out.mask = mask->middleCols(first, count);
  return out;
}

SignalMatrix SignalMatrix::concat(const std::vector<SignalMatrix>& parts) {
  if (parts.empty()) return {};
  const Eigen::Index n = parts.front().nodes();
  Eigen::Index total = 0;
  bool any_mask = false;
  for (const auto& p : parts) {
    if (p.nodes() != n) throw ValidationError("concat: node counts differ");
    total += p.days();
    any_mask = any_mask || p.mask.has_value();
  }
  SignalMatrix out;
  out.values.resize(n, total);
  out.node_ids = parts.front().node_ids;
  if (any_mask) out.mask = BoolMatrix(n, total);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.values.middleCols(at, p.days()) = p.values;
    if (any_mask) out.mask->middleCols(at, p.days()) = p.mask_or_full();
    out.dates.insert(out.dates.end(), p.dates.begin(), p.dates.end());
    at += p.days();
  }
  return out;
}

void SignalMatrix::validate() const {
  if (!node_ids.empty() && static_cast<Eigen::Index>(node_ids.size()) != nodes()) {
    throw ValidationError("node_ids length does not match the row count");
  }
  if (!dates.empty() && static_cast<Eigen::Index>(dates.size()) != days()) {
    throw ValidationError("dates length does not match the column count");
  }
  if (mask && (mask->rows() != nodes() || mask->cols() != days())) {
    throw ValidationError("mask shape does not match values");
  }
  for (Eigen::Index t = 0; t < days(); ++t) {
    for (Eigen::Index i = 0; i < nodes(); ++i) {
      if (observed(i, t) && !std::isfinite(values(i, t))) {
        throw DataError("non-finite observed value at node " + std::to_string(i) + ", column " +
                        std::to_string(t));
      }
    }
  }
}

long long parse_iso_date(const std::string& iso) {
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  char tail = 0;
  if (iso.size() != 10 || std::sscanf(iso.c_str(), "%4d-%2u-%2u%c", &y, &m, &d, &tail) != 3) {
    throw DataError("malformed date '" + iso + "' (expected yyyy-mm-dd)");
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                        std::chrono::day{d}};
  if (!ymd.ok()) throw DataError("invalid calendar date '" + iso + "'");
  return std::chrono::sys_days{ymd}.time_since_epoch().count();
}

std::string format_iso_date(long long days_since_epoch) {
  const std::chrono::sys_days sd{std::chrono::days{days_since_epoch}};
  const std::chrono::year_month_day ymd{sd};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", int(ymd.year()), unsigned(ymd.month()),
                unsigned(ymd.day()));
  return buf;
}

LoadedData load_nyt_csv(const std::string& path, const std::string& state_filter,
                        const std::string& edge_file) {
  const EdgeList edges = read_edge_list(edge_file);
  return parse_nyt_csv(read_file(path), state_filter, edges);
}

LoadedData parse_nyt_csv(const std::string& text, const std::string& state_filter,
                         const EdgeList& edges) {
  if (edges.labels.empty()) {
    throw DataError("edge list carries no vertex labels; cannot align counties");
  }
  const auto lines = split_lines(text);
  if (lines.empty()) throw DataError("case file is empty");
  const auto header = split_csv_line(lines.front());
  const auto column = [&header](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError("case file lacks column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t c_date = column("date");
  const std::size_t c_county = column("county");
  const std::size_t c_state = column("state");
  const std::size_t c_cases = column("cases");

  std::unordered_map<std::string, std::size_t> node_of;
  for (std::size_t k = 0; k < edges.labels.size(); ++k) node_of.emplace(edges.labels[k], k);

  struct Row {
    long long day;
    std::size_t node;
    double cumulative;
  };
  std::vector<Row> rows;
  long long last_day = std::numeric_limits<long long>::min();
  for (std::size_t l = 1; l < lines.size(); ++l) {
    const auto f = split_csv_line(lines[l]);
    const std::string where = "case file line " + std::to_string(l + 1);
    if (f.size() != header.size()) throw DataError(where + ": wrong field count");
    if (f[c_state] != state_filter) continue;
    const long long day = parse_iso_date(f[c_date]);
    if (day < last_day) throw DataError(where + ": dates are not monotone");
    last_day = day;
    const auto it = node_of.find(f[c_county]);
    if (it == node_of.end()) continue;  // e.g. "Unknown" county rows
    rows.push_back({day, it->second, parse_number(f[c_cases], where)});
  }
  if (rows.empty()) throw DataError("no rows for state '" + state_filter + "'");

  std::vector<long long> days;
  for (const auto& r : rows) {
    if (days.empty() || days.back() != r.day) days.push_back(r.day);
  }
  std::vector<bool> present(edges.n, false);
  for (const auto& r : rows) present[r.node] = true;
  for (std::size_t k = 0; k < edges.n; ++k) {
    if (!present[k]) throw DataError("county '" + edges.labels[k] + "' from the edge file has no rows");
  }

  const auto n = static_cast<Eigen::Index>(edges.n);
  const auto T = static_cast<Eigen::Index>(days.size());
  Eigen::MatrixXd cumulative = Eigen::MatrixXd::Zero(n, T);
  BoolMatrix seen = BoolMatrix::Constant(n, T, false);
  std::size_t col = 0;
  for (const auto& r : rows) {
    while (days[col] != r.day) ++col;
    const auto i = static_cast<Eigen::Index>(r.node);
    const auto t = static_cast<Eigen::Index>(col);
    if (seen(i, t)) {
      throw DataError("duplicate row for county '" + edges.labels[r.node] + "' on " +
                      format_iso_date(r.day));
    }
    seen(i, t) = true;
    cumulative(i, t) = r.cumulative;
  }

  SignalMatrix sm;
  sm.values = Eigen::MatrixXd::Zero(n, T);
  sm.node_ids = edges.labels;
  for (long long d : days) sm.dates.push_back(format_iso_date(d));
  for (Eigen::Index i = 0; i < n; ++i) {
    double prev = 0.0;
    for (Eigen::Index t = 0; t < T; ++t) {
      if (!seen(i, t)) continue;
      sm.values(i, t) = std::max(0.0, cumulative(i, t) - prev);
      prev = cumulative(i, t);
    }
  }
  if (!seen.all()) sm.mask = seen;
  return {std::move(sm), adjacency_from_geography(edges.n, edges.edges)};
}

SignalMatrix read_wide_csv(const std::string& path) { return parse_wide_csv(read_file(path)); }

SignalMatrix parse_wide_csv(const std::string& text) {
  const auto lines = split_lines(text);
  if (lines.size() < 2) throw DataError("wide CSV needs a header and at least one node row");
  const auto header = split_csv_line(lines.front());
  if (header.size() < 2) throw DataError("wide CSV has no date columns");
  SignalMatrix sm;
  sm.dates.assign(header.begin() + 1, header.end());
  const auto n = static_cast<Eigen::Index>(lines.size() - 1);
  const auto T = static_cast<Eigen::Index>(sm.dates.size());
  sm.values = Eigen::MatrixXd::Zero(n, T);
  BoolMatrix mask = BoolMatrix::Constant(n, T, true);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto f = split_csv_line(lines[static_cast<std::size_t>(i) + 1]);
    const std::string where = "wide CSV line " + std::to_string(i + 2);
    if (static_cast<Eigen::Index>(f.size()) != T + 1) throw DataError(where + ": wrong field count");
    sm.node_ids.push_back(f[0]);
    for (Eigen::Index t = 0; t < T; ++t) {
      const std::string& cell = f[static_cast<std::size_t>(t) + 1];
      if (cell.empty()) {
        mask(i, t) = false;
      } else {
        sm.values(i, t) = parse_number(cell, where);
      }
    }
  }
  if (!mask.all()) sm.mask = mask;
  return sm;
}

std::string format_wide_csv(const SignalMatrix& sm) {
  sm.validate();
  std::string out = "node";
  for (Eigen::Index t = 0; t < sm.days(); ++t) {
    out += ',';
    out += sm.dates.empty() ? std::to_string(t) : csv_quote(sm.dates[static_cast<std::size_t>(t)]);
  }
  out += '\n';
  for (Eigen::Index i = 0; i < sm.nodes(); ++i) {
    out += sm.node_ids.empty() ? std::to_string(i)
                               : csv_quote(sm.node_ids[static_cast<std::size_t>(i)]);
    for (Eigen::Index t = 0; t < sm.days(); ++t) {
      out += ',';
      if (sm.observed(i, t)) out += format_double(sm.values(i, t));
    }
    out += '\n';
  }
  return out;
}

void write_wide_csv(const std::string& path, const SignalMatrix& sm) {
  write_file(path, format_wide_csv(sm));
}

std::pair<SignalMatrix, SignalMatrix> split_train_test(const SignalMatrix& sm,
                                                       const std::string& split_date) {
  if (static_cast<Eigen::Index>(sm.dates.size()) != sm.days()) {
    throw ValidationError("split needs a date label per column");
  }
  const long long split = parse_iso_date(split_date);
  Eigen::Index k = 0;
  long long prev = std::numeric_limits<long long>::min();
  for (Eigen::Index t = 0; t < sm.days(); ++t) {
    const long long d = parse_iso_date(sm.dates[static_cast<std::size_t>(t)]);
    if (d <= prev) throw DataError("dates are not strictly increasing");
    prev = d;
    if (d < split) k = t + 1;
  }
  if (k == 0) throw ValidationError("empty train: split date at or before the first date");
  if (k == sm.days()) throw ValidationError("empty test: split date after the last date");
  return {sm.slice(0, k), sm.slice(k, sm.days() - k)};
}

WindowSet make_windows(const SignalMatrix& sm, Eigen::Index w) {
  if (w < 2) throw ValidationError("window size must be >= 2");
  if (w > sm.days()) {
    throw ValidationError("window size " + std::to_string(w) + " exceeds the " +
                          std::to_string(sm.days()) + " available days");
  }
  WindowSet ws;
  ws.window_size = w;
  const Eigen::Index S = sm.days() / w;
  for (Eigen::Index s = 0; s < S; ++s) ws.windows.push_back(sm.slice(s * w, w));
  return ws;
}

Marginals estimate_marginals(const SignalMatrix& window) {
  window.validate();
  const Eigen::Index n = window.nodes();
  if (n == 0) throw ValidationError("window has no nodes");
  const auto order = canonical_order(window);
  Eigen::VectorXd means = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd stds = Eigen::VectorXd::Zero(n);
  std::vector<bool> empty(static_cast<std::size_t>(n), false);
  double mean_sum = 0.0;
  Eigen::Index with_obs = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double sum = 0.0;
    Eigen::Index k = 0;
    for (Eigen::Index t : order) {
      if (!window.observed(i, t)) continue;
      sum += window.values(i, t);
      ++k;
    }
    if (k == 0) {
      empty[static_cast<std::size_t>(i)] = true;
      continue;
    }
    const double mean = sum / static_cast<double>(k);
    double ss = 0.0;
    for (Eigen::Index t : order) {
      if (!window.observed(i, t)) continue;
      const double d = window.values(i, t) - mean;
      ss += d * d;
    }
    means(i) = mean;
    stds(i) = k > 1 ? std::sqrt(ss / static_cast<double>(k - 1)) : 0.0;
    mean_sum += mean;
    ++with_obs;
  }
  const double fallback = with_obs > 0 ? mean_sum / static_cast<double>(with_obs) : 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (empty[static_cast<std::size_t>(i)]) means(i) = fallback;
  }
  return Marginals(means, stds);
}

TargetStats estimate_target(const SignalMatrix& window) {
  window.validate();
  const Eigen::Index n = window.nodes();
  if (window.days() < 2) throw ValidationError("covariance needs >= 2 columns");
  const auto order = canonical_order(window);
  const Marginals marg = estimate_marginals(window);

  TargetStats out;
  out.mean = marg.means();
  out.cov = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      double si = 0.0;
      double sj = 0.0;
      Eigen::Index k = 0;
      for (Eigen::Index t : order) {
        if (!window.observed(i, t) || !window.observed(j, t)) continue;
        si += window.values(i, t);
        sj += window.values(j, t);
        ++k;
      }
      if (k < 2) continue;
      const double mi = si / static_cast<double>(k);
      const double mj = sj / static_cast<double>(k);
      double acc = 0.0;
      for (Eigen::Index t : order) {
        if (!window.observed(i, t) || !window.observed(j, t)) continue;
        acc += (window.values(i, t) - mi) * (window.values(j, t) - mj);
      }
      out.cov(i, j) = acc / static_cast<double>(k - 1);
      out.cov(j, i) = out.cov(i, j);
    }
  }

  // Pairwise-complete estimates can be indefinite under masking.
  if (window.mask && !window.mask->all()) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(out.cov);
    const double scale = 1.0 + out.cov.cwiseAbs().maxCoeff();
    if (es.eigenvalues().minCoeff() < -1e-12 * scale) {
      const Eigen::VectorXd clamped = es.eigenvalues().cwiseMax(0.0);
      out.cov = es.eigenvectors() * clamped.asDiagonal() * es.eigenvectors().transpose();
      out.cov = (0.5 * (out.cov + out.cov.transpose())).eval();
    }
  }
  const double jitter = std::max(1e-8, 1e-6 * out.cov.trace() / static_cast<double>(n));
  out.cov.diagonal().array() += jitter;
  return out;
}

Eigen::MatrixXd Normalization::apply(const Eigen::MatrixXd& x) const {
  if (x.rows() != scales.size()) throw ValidationError("normalization: node count mismatch");
  return scales.cwiseInverse().asDiagonal() * x;
}

Eigen::MatrixXd Normalization::invert(const Eigen::MatrixXd& x) const {
  if (x.rows() != scales.size()) throw ValidationError("normalization: node count mismatch");
  return scales.asDiagonal() * x;
}

SignalMatrix Normalization::apply(const SignalMatrix& sm) const {
  SignalMatrix out = sm;
  out.values = apply(sm.values);
  return out;
}

std::pair<Normalization, SignalMatrix> normalize(const SignalMatrix& train) {
  train.validate();
  if (train.nodes() == 0 || train.days() == 0) throw ValidationError("normalize: empty training data");
  Normalization norm;
  norm.scales = Eigen::VectorXd::Ones(train.nodes());
  for (Eigen::Index i = 0; i < train.nodes(); ++i) {
    double mx = 0.0;
    for (Eigen::Index t = 0; t < train.days(); ++t) {
      if (train.observed(i, t)) mx = std::max(mx, std::abs(train.values(i, t)));
    }
    norm.scales(i) = 1.0 + mx;
  }
  SignalMatrix out = norm.apply(train);
  return {std::move(norm), std::move(out)};
}

SignalMatrix apply_mask(const SignalMatrix& sm, double p_low, double p_high, std::uint64_t seed) {
  if (!(p_low > 0.0 && p_low <= p_high && p_high <= 1.0)) {
    throw ValidationError("mask probabilities need 0 < p_low <= p_high <= 1");
  }
  std::mt19937_64 rng(seed);
  const auto unit = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  BoolMatrix mask = sm.mask_or_full();
  for (Eigen::Index t = 0; t < sm.days(); ++t) {
    const double p = p_low + (p_high - p_low) * unit();
    for (Eigen::Index i = 0; i < sm.nodes(); ++i) {
      const bool keep = unit() < p;
      mask(i, t) = mask(i, t) && keep;
    }
  }
  SignalMatrix out = sm;
  out.mask = std::move(mask);
  return out;
}

WindowSet shuffle_windows(const WindowSet& ws, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  WindowSet out;
  out.window_size = ws.window_size;
  for (const auto& w : ws.windows) {
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(w.days()));
    std::iota(perm.begin(), perm.end(), 0);
    // Fisher-Yates with an explicit draw so the permutation does not depend
    // on the standard library's shuffle implementation.
    for (std::size_t k = perm.size(); k > 1; --k) {
      const std::size_t j = static_cast<std::size_t>(rng() % k);
      std::swap(perm[k - 1], perm[j]);
    }
    SignalMatrix p = w;
    for (Eigen::Index t = 0; t < w.days(); ++t) {
      const Eigen::Index src = perm[static_cast<std::size_t>(t)];
      p.values.col(t) = w.values.col(src);
      if (w.mask) p.mask->col(t) = w.mask->col(src);
      if (!w.dates.empty()) p.dates[static_cast<std::size_t>(t)] = w.dates[static_cast<std::size_t>(src)];
    }
    out.windows.push_back(std::move(p));
  }
  return out;
}

}  // namespace gds
