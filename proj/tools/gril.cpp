// Command-line front end: fit, path, tune, simulate, verify.
//
// Exit status: 0 on success, 1 for usage, input or I/O errors, 2 for
// numerical failures (including violated verification bounds).

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <functional>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gril/gril.hpp"

namespace {

using namespace gril;

constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;

struct ModelArgs {
  std::string data;
  std::string response = "y";
  std::string method = "lasso";
  std::optional<double> lambda1;
  std::optional<double> lambda2;
  std::string lambda2_grid;
  std::string selector = "bic";
  int folds = 10;
  std::uint64_t seed = 1;
  std::optional<double> gamma;
  double gamma_wf = 1.0;
  std::string out;
};

void add_model_options(CLI::App* cmd, ModelArgs& a, bool needs_lambda1) {
  cmd->add_option("--data", a.data, "CSV with a header row")->required()->check(CLI::ExistingFile);
  cmd->add_option("--response", a.response, "Response column name (default: y, else the first column)");
  cmd->add_option("--method", a.method, "lasso, adalasso, enet, adaenet, slasso, adaslasso, cnet, adacnet, "
                                        "wfusion or adawfusion");
  if (needs_lambda1) cmd->add_option("--lambda1", a.lambda1, "Fixed lambda1 (tuned when omitted)");
  cmd->add_option("--lambda2", a.lambda2, "Fixed lambda2 (tuned over --lambda2-grid when omitted)");
  cmd->add_option("--lambda2-grid", a.lambda2_grid, "Comma-separated lambda2 grid");
  cmd->add_option("--selector", a.selector, "bic or cv")->check(CLI::IsMember({"bic", "cv"}));
  cmd->add_option("--folds", a.folds, "Cross-validation folds")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", a.seed, "Seed for fold assignment");
  cmd->add_option("--gamma", a.gamma, "Adaptive-weight exponent (default from n and p)");
  cmd->add_option("--gamma-wf", a.gamma_wf, "Weighted-fusion exponent");
}

struct Model {
  NamedDataset named;
  StandardizedDesign design;
  Method method = Method::Lasso;
  PenaltyMatrix penalty;
  TuningConfig config;
};

Model load_model(const ModelArgs& a) {
  Model m;
  m.method = parse_method(a.method);
  m.named = read_dataset(a.data, a.response);
  m.design = standardize(m.named.data);
  m.penalty = build_penalty(penalty_for(m.method, a.gamma_wf), m.design);
  m.config.selector = a.selector == "cv" ? Selector::KFoldCV : Selector::BIC;
  m.config.folds = a.folds;
  m.config.seed = a.seed;
  m.config.gamma_override = a.gamma;
  if (base_of(m.method) == Method::Lasso) {
    if (a.lambda2 && *a.lambda2 != 0.0) throw Error(ErrorCode::InvalidArgument, "lasso methods take lambda2 = 0");
    m.config.lambda2_grid = {0.0};
  } else if (a.lambda2) {
    m.config.lambda2_grid = {*a.lambda2};
  } else if (!a.lambda2_grid.empty()) {
    m.config.lambda2_grid.clear();
    for (const std::string& v : detail::split(a.lambda2_grid, ',')) {
      m.config.lambda2_grid.push_back(detail::parse_double(v, "lambda2 grid"));
    }
  }
  validate(m.config);
  return m;
}

void print_report(std::ostream& out, const Model& m, const FitReport& fit, double gamma, bool tuned) {
  const Vector beta = to_original_scale(m.design, fit.beta.beta);
  out << std::setprecision(10);
  out << "method: " << to_string(m.method) << '\n';
  out << "n: " << m.design.n() << "\np: " << m.design.p() << '\n';
  out << "lambda1: " << fit.lambda1 << (tuned ? " (tuned)" : "") << '\n';
  out << "lambda2: " << fit.lambda2 << '\n';
  if (is_adaptive(m.method)) out << "gamma: " << gamma << "\nweights: " << to_string(fit.weights.scheme) << '\n';
  out << "selector: " << to_string(m.config.selector) << '\n';
  out << "df: " << fit.beta.df() << '\n';
  out << "intercept: " << original_intercept(m.design, beta) << '\n';
  out << "objective: " << fit.objective << '\n';
  out << "kkt_max_violation: " << fit.kkt_max_violation << '\n';
  out << "converged: " << (fit.converged ? "yes" : "no") << '\n';
  out << "polished: " << (fit.polished ? "yes" : "no") << '\n';
}

void write_file(const std::string& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  body(out);
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path);
}

int run_fit(const ModelArgs& a) {
  const Model m = load_model(a);
  FitReport fit;
  double gamma = 0.0;
  const bool adaptive = is_adaptive(m.method);
  if (a.lambda1) {
    if (!a.lambda2 && base_of(m.method) != Method::Lasso) {
      throw Error(ErrorCode::InvalidArgument, "--lambda1 needs --lambda2 for this method");
    }
    const double l2 = m.config.lambda2_grid.front();
    if (adaptive) {
      const TuningResult initial = tune_gril(m.design, m.penalty, m.config);
      gamma = m.config.gamma_override ? *m.config.gamma_override : gamma_from_dims(m.design.n(), m.design.p());
      const WeightVector w = make_weights(initial.fit.beta, gamma, m.config.weight_scheme, m.design.n());
      fit = adagril_fit(m.design, m.penalty, *a.lambda1, l2, w);
    } else {
      fit = gril_fit(m.design, m.penalty, *a.lambda1, l2);
    }
  } else {
    const TuningResult r = select(m.design, m.penalty, m.config, adaptive);
    fit = r.fit;
    gamma = r.gamma;
  }
  print_report(std::cout, m, fit, gamma, !a.lambda1);
  const std::string path = a.out.empty() ? "coefficients.csv" : a.out;
  write_file(path, [&](std::ostream& o) {
    write_coefficients(o, m.named.predictors, to_original_scale(m.design, fit.beta.beta));
  });
  std::cout << "coefficients: " << path << '\n';
  return fit.converged ? 0 : kExitNumerical;
}

int run_path(const ModelArgs& a) {
  const Model m = load_model(a);
  if (m.config.lambda2_grid.size() != 1) throw Error(ErrorCode::InvalidArgument, "path needs a single --lambda2");
  const double l2 = m.config.lambda2_grid.front();
  AugmentedProblem problem = augment(m.design, m.penalty, l2);
  Vector scale = Vector::Ones(m.design.p());
  if (is_adaptive(m.method)) {
    const TuningResult initial = tune_gril(m.design, m.penalty, m.config);
    const double gamma =
        m.config.gamma_override ? *m.config.gamma_override : gamma_from_dims(m.design.n(), m.design.p());
    problem.weights = make_weights(initial.fit.beta, gamma, m.config.weight_scheme, m.design.n()).w;
    scale = n_rescaling(m.penalty, l2, m.design.n());
  }
  PathSolution path = lars_lasso_path(problem);
  for (Index k = 0; k < path.size(); ++k) path.coefs.col(k) = path.coefs.col(k).cwiseProduct(scale);
  const std::string out = a.out.empty() ? "path.csv" : a.out;
  write_file(out, [&](std::ostream& o) { write_path(o, m.named.predictors, path, m.design); });
  std::cout << "breakpoints: " << path.size() << "\nmax_active: " << path.max_active << "\npath: " << out << '\n';
  return 0;
}

int run_tune(const ModelArgs& a) {
  const Model m = load_model(a);
  const TuningResult r = select(m.design, m.penalty, m.config, is_adaptive(m.method));
  std::ostringstream table;
  table << "lambda2,lambda1,score,df,adaptive\n" << std::scientific << std::setprecision(17);
  for (const ScoreEntry& e : r.score_table) {
    table << e.lambda2 << ',' << e.lambda1 << ',' << e.score << ',' << e.df << ',' << (e.adaptive ? 1 : 0) << '\n';
  }
  if (a.out.empty()) {
    std::cout << table.str();
  } else {
    write_file(a.out, [&](std::ostream& o) { o << table.str(); });
  }
  for (const FailedCell& f : r.failed) {
    std::cerr << "failed cell lambda2=" << f.lambda2 << (f.adaptive ? " (adaptive)" : "") << ": " << f.reason << '\n';
  }
  std::cerr << std::setprecision(10) << "selected lambda1=" << r.best_lambda1 << " lambda2=" << r.best_lambda2
            << " selector=" << to_string(r.selector_used) << '\n';
  return 0;
}

struct SimArgs {
  std::string config;
  std::string out_dir = ".";
  std::vector<std::pair<std::string, std::optional<std::string>>> overrides{
      {"n", {}},       {"sigma", {}},        {"rho", {}},           {"replications", {}},
      {"seed", {}},    {"methods", {}},      {"selector", {}},      {"folds", {}},
      {"lambda2_grid", {}}, {"gamma_override", {}}, {"gamma_wf", {}}, {"lambda1_grid_size", {}}};
  unsigned threads = 0;
};

int run_simulate(SimArgs& a) {
  SimDesign d = a.config.empty() ? SimDesign{} : load_config(a.config);
  for (auto& [key, value] : a.overrides) {
    if (value) apply_setting(d, key, *value);
  }
  validate(d);
  const ExperimentResult r = run_experiment(d, a.threads);
  std::filesystem::create_directories(a.out_dir);
  const std::filesystem::path dir(a.out_dir);
  write_file((dir / "table1.csv").string(), [&](std::ostream& o) { write_table1(o, r); });
  write_file((dir / "table2.csv").string(), [&](std::ostream& o) { write_table2(o, r); });
  write_file((dir / "table3.csv").string(), [&](std::ostream& o) { write_table3(o, r); });
  write_file((dir / "metadata.csv").string(), [&](std::ostream& o) { write_metadata(o, r); });
  std::cout << "n=" << d.n << " p=" << r.dims.p << " q=" << r.dims.q << " replications=" << d.replications << '\n';
  std::cout << std::fixed << std::setprecision(4);
  for (const MetricsRow& row : r.rows) {
    std::cout << std::left << std::setw(11) << to_string(row.method) << std::right << " mse_pred "
              << row.median_mse_pred << "  mse_beta " << row.median_mse_beta << "  C " << row.median_c << "  IC "
              << row.median_ic << '\n';
  }
  std::cout << "tables written to " << a.out_dir << '\n';
  return 0;
}

struct VerifyArgs {
  std::string check = "all";
  std::uint64_t seed = 1;
  std::optional<int> replications;
  std::string out;
};

int run_verify(const VerifyArgs& a) {
  std::vector<CheckRow> rows;
  bool failed = false;
  auto report = [&](const std::string& name, const std::vector<CheckRow>& part) {
    const CheckSummary s = summarize(part);
    std::cout << name << ": rows " << s.rows << ", in regime " << s.in_regime << ", violations " << s.violations;
    if (s.in_regime > 0) std::cout << std::setprecision(6) << ", min slack " << s.min_slack;
    std::cout << '\n';
    if (s.violations > 0) {
      failed = true;
      for (const CheckRow& r : part) {
        if (r.violated()) std::cerr << name << " violated: check " << r.check << " seed " << r.seed << '\n';
      }
    }
    rows.insert(rows.end(), part.begin(), part.end());
  };
  const bool all = a.check == "all";
  if (all || a.check == "lemma1") {
    Lemma1Config cfg;
    cfg.seed = a.seed;
    if (a.replications) cfg.instances = *a.replications;
    report("lemma1", lemma1_study(cfg));
  }
  if (all || a.check == "theorem1") {
    Theorem1Config cfg;
    cfg.seed = a.seed;
    if (a.replications) cfg.replications = *a.replications;
    report("theorem1", theorem1_study(cfg));
  }
  if (all || a.check == "theorem4") {
    Theorem4Config cfg;
    cfg.seed = a.seed;
    if (a.replications) cfg.replications = *a.replications;
    const std::vector<CheckRow> part = theorem4_study(cfg);
    const double freq = gamma_frequency(part);
    const double target = 1.0 - cfg.varphi;
    const double floor = target - 3.0 * std::sqrt(target * (1.0 - target) / cfg.replications);
    std::cout << std::setprecision(4) << "theorem4: event frequency " << freq << " (floor " << floor << ")\n";
    if (freq < floor) {
      failed = true;
      std::cerr << "theorem4 event frequency below floor\n";
    }
    report("theorem4", part);
  }
  const std::string out = a.out.empty() ? "verify_" + a.check + ".csv" : a.out;
  write_file(out, [&](std::ostream& o) { write_check_rows(o, rows); });
  std::cout << "report: " << out << '\n';
  return failed ? kExitNumerical : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generalized ridge-lasso and adaptive variants"};
  app.require_subcommand(1);

  ModelArgs fit_args;
  ModelArgs path_args;
  ModelArgs tune_args;
  SimArgs sim_args;
  VerifyArgs verify_args;

  CLI::App* fit = app.add_subcommand("fit", "Fit one method to a CSV dataset");
  add_model_options(fit, fit_args, true);
  fit->add_option("--out", fit_args.out, "Coefficient CSV (default coefficients.csv)");

  CLI::App* path = app.add_subcommand("path", "Write the full lambda1 path at one lambda2");
  add_model_options(path, path_args, false);
  path->add_option("--out", path_args.out, "Path CSV (default path.csv)");

  CLI::App* tune = app.add_subcommand("tune", "Print the tuning score table");
  add_model_options(tune, tune_args, false);
  tune->add_option("--out", tune_args.out, "Write the table here instead of stdout");

  CLI::App* sim = app.add_subcommand("simulate", "Run the simulation study and write the three tables");
  sim->add_option("--config", sim_args.config, "key=value config file")->check(CLI::ExistingFile);
  sim->add_option("--out-dir", sim_args.out_dir, "Directory for table1.csv, table2.csv, table3.csv, metadata.csv");
  sim->add_option("--threads", sim_args.threads, "Worker threads (default GRIL_THREADS or all cores)");
  for (auto& [key, value] : sim_args.overrides) {
    std::string flag = "--" + key;
    for (char& c : flag) c = c == '_' ? '-' : c;
    sim->add_option(flag, value, "Overrides config key " + key);
  }

  CLI::App* verify = app.add_subcommand("verify", "Run the theory checks and write a report CSV");
  verify->add_option("--check", verify_args.check, "lemma1, theorem1, theorem4 or all")
      ->check(CLI::IsMember({"lemma1", "theorem1", "theorem4", "all"}));
  verify->add_option("--seed", verify_args.seed, "Master seed");
  verify->add_option("--replications", verify_args.replications, "Override the study's replication count")
      ->check(CLI::PositiveNumber);
  verify->add_option("--out", verify_args.out, "Report CSV (default verify_<check>.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*fit) return run_fit(fit_args);
    if (*path) return run_path(path_args);
    if (*tune) return run_tune(tune_args);
    if (*sim) return run_simulate(sim_args);
    if (*verify) return run_verify(verify_args);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.is_numerical() ? kExitNumerical : kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
