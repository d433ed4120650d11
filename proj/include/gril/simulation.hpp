#pragma once

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "gril/rng.hpp"
#include "gril/tuning.hpp"

namespace gril {

enum class Method { Lasso, AdaLasso, Enet, AdaEnet, Slasso, AdaSlasso, Cnet, AdaCnet, Wfusion, AdaWfusion };

inline constexpr Method kAllMethods[] = {Method::Lasso,   Method::AdaLasso, Method::Enet,    Method::AdaEnet,
                                         Method::Slasso,  Method::AdaSlasso, Method::Cnet,   Method::AdaCnet,
                                         Method::Wfusion, Method::AdaWfusion};

inline const char* to_string(Method m) noexcept {
  switch (m) {
    case Method::Lasso: return "Lasso";
    case Method::AdaLasso: return "AdaLasso";
    case Method::Enet: return "Enet";
    case Method::AdaEnet: return "AdaEnet";
    case Method::Slasso: return "Slasso";
    case Method::AdaSlasso: return "AdaSlasso";
    case Method::Cnet: return "Cnet";
    case Method::AdaCnet: return "AdaCnet";
    case Method::Wfusion: return "Wfusion";
    case Method::AdaWfusion: return "AdaWfusion";
  }
  return "unknown";
}

namespace detail {

inline std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::Parse, "cannot read " + what + " from '" + s + "'");
  }
}

inline long long parse_int(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::Parse, "cannot read " + what + " from '" + s + "'");
  }
}

}  // namespace detail

inline Method parse_method(const std::string& name) {
  const std::string key = detail::lower(detail::trim(name));
  for (Method m : kAllMethods) {
    if (detail::lower(to_string(m)) == key) return m;
  }
  throw Error(ErrorCode::Parse, "unknown method '" + name + "'");
}

inline bool is_adaptive(Method m) {
  return m == Method::AdaLasso || m == Method::AdaEnet || m == Method::AdaSlasso || m == Method::AdaCnet ||
         m == Method::AdaWfusion;
}

/// The non-adaptive estimator whose fit supplies an adaptive method's weights.
inline Method base_of(Method m) {
  switch (m) {
    case Method::AdaLasso: return Method::Lasso;
    case Method::AdaEnet: return Method::Enet;
    case Method::AdaSlasso: return Method::Slasso;
    case Method::AdaCnet: return Method::Cnet;
    case Method::AdaWfusion: return Method::Wfusion;
    default: return m;
  }
}

inline PenaltySpec penalty_for(Method m, double gamma_wf) {
  PenaltySpec spec;
  spec.gamma_wf = gamma_wf;
  switch (base_of(m)) {
    case Method::Slasso: spec.kind = PenaltyKind::SLasso; break;
    case Method::Cnet: spec.kind = PenaltyKind::Cnet; break;
    case Method::Wfusion: spec.kind = PenaltyKind::WFusion; break;
    default: spec.kind = PenaltyKind::Identity; break;
  }
  return spec;
}

struct SimDesign {
  Index n = 100;
  double sigma = 3.0;
  double rho = 0.5;
  int replications = 100;
  std::uint64_t master_seed = 1;
  std::vector<Method> methods{std::begin(kAllMethods), std::end(kAllMethods)};
  Selector selector = Selector::BIC;
  int folds = 10;
  std::vector<double> lambda2_grid{0.0, 0.01, 0.1, 1.0, 10.0, 100.0};
  std::optional<double> gamma_override = 3.0;
  double gamma_wf = 1.0;
  Index lambda1_grid_size = 0;
};

inline void validate(const SimDesign& d) {
  if (d.n < 10) throw Error(ErrorCode::InvalidArgument, "n must be at least 10");
  if (!(d.rho >= 0.0 && d.rho < 1.0)) throw Error(ErrorCode::InvalidArgument, "rho must lie in [0, 1)");
  if (!(d.sigma >= 0.0) || !std::isfinite(d.sigma)) throw Error(ErrorCode::InvalidArgument, "sigma must be >= 0");
  if (d.replications < 1) throw Error(ErrorCode::InvalidArgument, "replications must be >= 1");
  if (d.methods.empty()) throw Error(ErrorCode::InvalidArgument, "no methods selected");
  if (!(d.gamma_wf > 0.0)) throw Error(ErrorCode::InvalidArgument, "gamma_wf must be positive");
}

/// Applies one `key = value` setting.
inline void apply_setting(SimDesign& d, const std::string& key_in, const std::string& value_in) {
  const std::string key = detail::lower(detail::trim(key_in));
  const std::string value = detail::trim(value_in);
  if (key == "n") {
    d.n = static_cast<Index>(detail::parse_int(value, key));
  } else if (key == "sigma") {
    d.sigma = detail::parse_double(value, key);
  } else if (key == "rho") {
    d.rho = detail::parse_double(value, key);
  } else if (key == "replications") {
    d.replications = static_cast<int>(detail::parse_int(value, key));
  } else if (key == "master_seed" || key == "seed") {
    d.master_seed = static_cast<std::uint64_t>(detail::parse_int(value, key));
  } else if (key == "methods") {
    d.methods.clear();
    for (const std::string& m : detail::split(value, ',')) {
      if (detail::lower(m) == "all") {
        d.methods.assign(std::begin(kAllMethods), std::end(kAllMethods));
      } else {
        d.methods.push_back(parse_method(m));
      }
    }
  } else if (key == "selector") {
    const std::string v = detail::lower(value);
    if (v == "bic") {
      d.selector = Selector::BIC;
    } else if (v == "cv") {
      d.selector = Selector::KFoldCV;
    } else {
      throw Error(ErrorCode::Parse, "selector must be bic or cv");
    }
  } else if (key == "folds") {
    d.folds = static_cast<int>(detail::parse_int(value, key));
  } else if (key == "lambda2_grid") {
    d.lambda2_grid.clear();
    for (const std::string& v : detail::split(value, ',')) d.lambda2_grid.push_back(detail::parse_double(v, key));
  } else if (key == "gamma_override") {
    const std::string v = detail::lower(value);
    if (v == "none" || v == "auto" || v.empty()) {
      d.gamma_override.reset();
    } else {
      d.gamma_override = detail::parse_double(value, key);
    }
  } else if (key == "gamma_wf") {
    d.gamma_wf = detail::parse_double(value, key);
  } else if (key == "lambda1_grid_size") {
    d.lambda1_grid_size = static_cast<Index>(detail::parse_int(value, key));
  } else {
    throw Error(ErrorCode::Parse, "unknown config key '" + key_in + "'");
  }
}

/// Flat `key = value` text; `#` starts a comment.
inline SimDesign parse_config(std::istream& in) {
  SimDesign d;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::Parse, "line " + std::to_string(lineno) + ": expected key=value");
    }
    apply_setting(d, line.substr(0, eq), line.substr(eq + 1));
  }
  return d;
}

inline SimDesign load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config file " + path);
  return parse_config(in);
}

struct Dims {
  Index p = 0;
  Index q = 0;
};

/// p = floor(4 sqrt(n)) - 5, q = floor(p / 9).
inline Dims dims_from_n(Index n) {
  if (n < 13) throw Error(ErrorCode::NTooSmall, "n must be at least 13 so that p >= 9");
  const auto p = static_cast<Index>(std::floor(4.0 * std::sqrt(static_cast<double>(n)) + 1e-12)) - 5;
  return {p, p / 9};
}

/// (1, ..., q, 0 x (p - 3q), 3 x q, -1, ..., -q).
inline Vector beta_star(Index p, Index q) {
  if (q < 0 || p < 3 * q) throw Error(ErrorCode::LayoutImpossible, "need p >= 3q");
  Vector b = Vector::Zero(p);
  for (Index j = 0; j < q; ++j) {
    b[j] = static_cast<double>(j + 1);
    b[p - 2 * q + j] = 3.0;
    b[p - q + j] = -static_cast<double>(j + 1);
  }
  return b;
}

inline Matrix ar1_correlation(Index p, double rho) {
  Matrix r(p, p);
  for (Index i = 0; i < p; ++i) {
    for (Index j = 0; j < p; ++j) r(i, j) = std::pow(rho, static_cast<double>(std::abs(i - j)));
  }
  return r;
}

/// n rows drawn from N_p(0, R) with R_ij = rho^|i-j|, via the AR(1) recursion.
inline Matrix ar1_rows(Index n, Index p, double rho, Engine& rng) {
  std::normal_distribution<double> normal;
  const double innov = std::sqrt(1.0 - rho * rho);
  Matrix x(n, p);
  for (Index i = 0; i < n; ++i) {
    double prev = normal(rng);
    x(i, 0) = prev;
    for (Index j = 1; j < p; ++j) {
      prev = rho * prev + innov * normal(rng);
      x(i, j) = prev;
    }
  }
  return x;
}

/// Replication `rep` of the design; depends only on (master_seed, rep).
inline Dataset generate_replication(const SimDesign& design, int rep) {
  const Dims dims = dims_from_n(design.n);
  Engine rng = make_engine(design.master_seed, {0xda7aULL, static_cast<std::uint64_t>(rep)});
  Dataset data;
  data.x = ar1_rows(design.n, dims.p, design.rho, rng);
  std::normal_distribution<double> normal;
  Vector eps(design.n);
  for (Index i = 0; i < design.n; ++i) eps[i] = normal(rng);
  data.y = data.x * beta_star(dims.p, dims.q) + design.sigma * eps;
  return data;
}

struct RepMetrics {
  double mse_pred = 0.0;
  double mse_beta = 0.0;
  int c = 0;
  int ic = 0;
  bool exact_support = false;
};

/// Errors of a raw-scale estimate against the truth: (b - b*)' R (b - b*),
/// ||b - b*||^2, and the correctly (C) and wrongly (IC) zeroed counts.
inline RepMetrics compute_metrics(const Vector& beta_hat, const Vector& truth, const Matrix& r) {
  if (beta_hat.size() != truth.size() || r.rows() != truth.size()) {
    throw Error(ErrorCode::DimensionMismatch, "metric inputs disagree in size");
  }
  const Vector delta = beta_hat - truth;
  RepMetrics m;
  m.mse_pred = delta.dot(r * delta);
  m.mse_beta = delta.squaredNorm();
  m.exact_support = true;
  for (Index j = 0; j < truth.size(); ++j) {
    const bool zero_hat = beta_hat[j] == 0.0;
    if (truth[j] == 0.0 && zero_hat) ++m.c;
    if (truth[j] != 0.0 && zero_hat) ++m.ic;
    if ((truth[j] == 0.0) != zero_hat) m.exact_support = false;
  }
  return m;
}

/// Midpoint convention for even counts.
inline double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

struct MetricsRow {
  Method method = Method::Lasso;
  double median_mse_pred = 0.0;
  double median_mse_beta = 0.0;
  double median_c = 0.0;
  double median_ic = 0.0;
  /// Share of replications whose estimated support equals the true one.
  double support_recovery = 0.0;
  int failures = 0;
};

struct ExperimentResult {
  SimDesign design;
  Dims dims;
  std::vector<MetricsRow> rows;
  /// per_rep[method index][replication]; failed replications are empty.
  std::vector<std::vector<std::optional<RepMetrics>>> per_rep;
};

/// Worker count from GRIL_THREADS, else the hardware concurrency.
inline unsigned thread_count() {
  if (const char* env = std::getenv("GRIL_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace detail {

inline std::uint64_t method_key(Method m) { return static_cast<std::uint64_t>(m) + 1; }

/// All requested methods for one replication. Adaptive methods reuse the
/// tuned fit of their base method.
inline std::vector<std::optional<RepMetrics>> run_replication(const SimDesign& design, int rep, const Matrix& r,
                                                              const Vector& truth) {
  const Dataset data = generate_replication(design, rep);
  const StandardizedDesign sd = standardize(data);
  std::vector<std::optional<RepMetrics>> out(design.methods.size());

  struct Base {
    Method method;
    std::optional<PenaltyMatrix> penalty;
    std::optional<TuningResult> tuned;
    bool failed = false;
  };
  std::vector<Base> bases;
  bases.reserve(design.methods.size());
  auto config_for = [&](Method m) {
    TuningConfig cfg;
    cfg.selector = design.selector;
    cfg.folds = design.folds;
    cfg.lambda1_grid_size = design.lambda1_grid_size;
    cfg.gamma_override = design.gamma_override;
    cfg.lambda2_grid = base_of(m) == Method::Lasso ? std::vector<double>{0.0} : design.lambda2_grid;
    cfg.seed = derive_seed(design.master_seed, {0xc7ULL, static_cast<std::uint64_t>(rep), method_key(m)});
    return cfg;
  };
  auto base_fit = [&](Method b) -> Base& {
    for (Base& e : bases) {
      if (e.method == b) return e;
    }
    bases.push_back({b, std::nullopt, std::nullopt, false});
    Base& e = bases.back();
    try {
      e.penalty = build_penalty(penalty_for(b, design.gamma_wf), sd);
      e.tuned = tune_gril(sd, *e.penalty, config_for(b));
    } catch (const Error& err) {
      if (!err.is_numerical()) throw;
      e.failed = true;
    }
    return e;
  };

  for (std::size_t k = 0; k < design.methods.size(); ++k) {
    const Method m = design.methods[k];
    Base& b = base_fit(base_of(m));
    if (b.failed) continue;
    try {
      const FitReport& fit = is_adaptive(m) ? tune_adaptive(sd, *b.penalty, config_for(m), *b.tuned).fit : b.tuned->fit;
      out[k] = compute_metrics(to_original_scale(sd, fit.beta.beta), truth, r);
    } catch (const Error& err) {
      if (!err.is_numerical()) throw;
    }
  }
  return out;
}

}  // namespace detail

/// Runs every replication (in parallel) and reduces to per-method medians.
/// Failed replications are dropped when they are under 5% of the total.
inline ExperimentResult run_experiment(const SimDesign& design, unsigned threads = 0) {
  validate(design);
  ExperimentResult result;
  result.design = design;
  result.dims = dims_from_n(design.n);
  const Matrix r = ar1_correlation(result.dims.p, design.rho);
  const Vector truth = beta_star(result.dims.p, result.dims.q);

  const auto reps = static_cast<std::size_t>(design.replications);
  std::vector<std::vector<std::optional<RepMetrics>>> by_rep(reps);
  std::vector<std::string> errors(reps);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < reps; i = next++) {
      try {
        by_rep[i] = detail::run_replication(design, static_cast<int>(i), r, truth);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const unsigned nthreads = std::min<unsigned>(threads == 0 ? thread_count() : threads, static_cast<unsigned>(reps));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < nthreads; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();
  for (std::size_t i = 0; i < reps; ++i) {
    if (!errors[i].empty()) throw Error(ErrorCode::InvalidArgument, "replication " + std::to_string(i) + ": " + errors[i]);
  }

  result.per_rep.assign(design.methods.size(), {});
  for (std::size_t k = 0; k < design.methods.size(); ++k) {
    MetricsRow row;
    row.method = design.methods[k];
    std::vector<double> pred, beta, c, ic;
    int exact = 0;
    for (std::size_t i = 0; i < reps; ++i) {
      const std::optional<RepMetrics>& m = by_rep[i][k];
      result.per_rep[k].push_back(m);
      if (!m) {
        ++row.failures;
        continue;
      }
      pred.push_back(m->mse_pred);
      beta.push_back(m->mse_beta);
      c.push_back(m->c);
      ic.push_back(m->ic);
      exact += m->exact_support;
    }
    if (row.failures > 0 && static_cast<double>(row.failures) >= 0.05 * static_cast<double>(reps)) {
      throw Error(ErrorCode::TooManyFailures, std::string(to_string(row.method)) + " failed on " +
                                                  std::to_string(row.failures) + " replications");
    }
    row.median_mse_pred = median(pred);
    row.median_mse_beta = median(beta);
    row.median_c = median(c);
    row.median_ic = median(ic);
    row.support_recovery = pred.empty() ? 0.0 : static_cast<double>(exact) / static_cast<double>(pred.size());
    result.rows.push_back(row);
  }
  return result;
}

namespace detail {

inline void table_prefix(std::ostream& out, const MetricsRow& row, const SimDesign& d) {
  out << to_string(row.method) << ',' << d.n << ',' << std::fixed << std::setprecision(4) << d.sigma << ','
      << d.rho << ',';
}

}  // namespace detail

inline void write_table1(std::ostream& out, const ExperimentResult& r) {
  out << "method,n,sigma,rho,median_mse_pred\n";
  for (const MetricsRow& row : r.rows) {
    detail::table_prefix(out, row, r.design);
    out << row.median_mse_pred << '\n';
  }
}

inline void write_table2(std::ostream& out, const ExperimentResult& r) {
  out << "method,n,sigma,rho,median_mse_beta\n";
  for (const MetricsRow& row : r.rows) {
    detail::table_prefix(out, row, r.design);
    out << row.median_mse_beta << '\n';
  }
}

inline void write_table3(std::ostream& out, const ExperimentResult& r) {
  out << "method,n,sigma,rho,median_C,median_IC\n";
  for (const MetricsRow& row : r.rows) {
    detail::table_prefix(out, row, r.design);
    out << row.median_c << ',' << row.median_ic << '\n';
  }
}

/// Run settings that the tables depend on but do not show.
inline void write_metadata(std::ostream& out, const ExperimentResult& r) {
  const SimDesign& d = r.design;
  out << std::defaultfloat << std::setprecision(17) << "key,value\n";
  out << "n," << d.n << "\np," << r.dims.p << "\nq," << r.dims.q << '\n';
  out << "sigma," << d.sigma << "\nrho," << d.rho << '\n';
  out << "replications," << d.replications << "\nmaster_seed," << d.master_seed << '\n';
  out << "selector," << to_string(d.selector) << "\nfolds," << d.folds << '\n';
  out << "lambda2_grid,";
  for (std::size_t i = 0; i < d.lambda2_grid.size(); ++i) out << (i ? ";" : "") << d.lambda2_grid[i];
  out << "\ngamma,";
  if (d.gamma_override) {
    out << *d.gamma_override << '\n';
  } else {
    out << "from_dims\n";
  }
  out << "gamma_wf," << d.gamma_wf << '\n';
  out << "mse_pred,population (b-b*)'R(b-b*)\n";
  out << "adaptive_fit,N-rescaled\n";
  for (const MetricsRow& row : r.rows) {
    out << "failures_" << to_string(row.method) << ',' << row.failures << '\n';
    out << "support_recovery_" << to_string(row.method) << ',' << std::fixed << std::setprecision(4)
        << row.support_recovery << '\n';
    out << std::defaultfloat << std::setprecision(17);
  }
}

}  // namespace gril
