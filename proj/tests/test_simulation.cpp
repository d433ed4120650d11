#include <cmath>
#include <functional>
#include <sstream>

#include <gtest/gtest.h>

#include "gril/simulation.hpp"

using namespace gril;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidArgument;
}

SimDesign small_design(std::vector<Method> methods, int reps) {
  SimDesign d;
  d.n = 100;
  d.replications = reps;
  d.master_seed = 77;
  d.methods = std::move(methods);
  return d;
}

}  // namespace

TEST(Dims, Examples) {
  EXPECT_EQ(dims_from_n(100).p, 35);
  EXPECT_EQ(dims_from_n(100).q, 3);
  EXPECT_EQ(dims_from_n(200).p, 51);
  EXPECT_EQ(dims_from_n(200).q, 5);
  EXPECT_EQ(dims_from_n(1000).p, 121);
  EXPECT_EQ(dims_from_n(1000).q, 13);
  EXPECT_EQ(dims_from_n(13).p, 9);
  EXPECT_EQ(code_of([] { dims_from_n(12); }), ErrorCode::NTooSmall);
}

TEST(BetaStar, Layout) {
  Vector expected = Vector::Zero(35);
  expected.head(3) << 1, 2, 3;
  expected.tail(6) << 3, 3, 3, -1, -2, -3;
  EXPECT_EQ(beta_star(35, 3), expected);

  Vector small = Vector::Zero(9);
  small[0] = 1;
  small[7] = 3;
  small[8] = -1;
  EXPECT_EQ(beta_star(9, 1), small);

  for (Index n : {13, 100, 200, 500, 1000, 5000}) {
    const Dims d = dims_from_n(n);
    const Vector b = beta_star(d.p, d.q);
    EXPECT_EQ((b.array() != 0.0).count(), 3 * d.q) << n;
  }
  EXPECT_EQ(code_of([] { beta_star(8, 3); }), ErrorCode::LayoutImpossible);
}

TEST(Generate, EmpiricalCovarianceMatchesAr1) {
  Engine rng = make_engine(5, {1});
  const Index p = 6;
  const Matrix x = ar1_rows(100000, p, 0.5, rng);
  const Matrix cov = x.transpose() * x / static_cast<double>(x.rows());
  EXPECT_LT((cov - ar1_correlation(p, 0.5)).cwiseAbs().maxCoeff(), 0.02);
}

TEST(Generate, RhoZeroIsIndependent) {
  Engine rng = make_engine(6, {1});
  const Matrix x = ar1_rows(10000, 5, 0.0, rng);
  const Matrix c = (x.rowwise() - x.colwise().mean()).eval();
  const Vector norms = c.colwise().norm();
  const Matrix corr = (c.transpose() * c).cwiseQuotient(norms * norms.transpose());
  EXPECT_LT((corr - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff(), 0.1);
}

TEST(Generate, DeterministicPerReplication) {
  SimDesign d = small_design({Method::Lasso}, 1);
  const Dataset a = generate_replication(d, 4);
  const Dataset b = generate_replication(d, 4);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.y, b.y);
  EXPECT_NE(a.x, generate_replication(d, 5).x);
  EXPECT_EQ(a.x.rows(), 100);
  EXPECT_EQ(a.x.cols(), 35);

  d.sigma = 0.0;
  const Dataset clean = generate_replication(d, 4);
  EXPECT_EQ(clean.x, a.x);
  EXPECT_LT((clean.y - clean.x * beta_star(35, 3)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Metrics, PerfectAndNullFits) {
  const Vector truth = beta_star(35, 3);
  const Matrix r = ar1_correlation(35, 0.5);
  const RepMetrics perfect = compute_metrics(truth, truth, r);
  EXPECT_EQ(perfect.mse_pred, 0.0);
  EXPECT_EQ(perfect.mse_beta, 0.0);
  EXPECT_EQ(perfect.c, 26);
  EXPECT_EQ(perfect.ic, 0);
  EXPECT_TRUE(perfect.exact_support);

  const RepMetrics null = compute_metrics(Vector::Zero(35), truth, r);
  EXPECT_DOUBLE_EQ(null.mse_beta, truth.squaredNorm());
  EXPECT_EQ(null.c, 26);
  EXPECT_EQ(null.ic, 9);
  EXPECT_FALSE(null.exact_support);
}

TEST(Metrics, PredictionErrorUsesCorrelation) {
  Matrix r(2, 2);
  r << 1.0, 0.5, 0.5, 1.0;
  const RepMetrics m = compute_metrics(Vector::Ones(2), Vector::Zero(2), r);
  EXPECT_DOUBLE_EQ(m.mse_pred, 3.0);
  EXPECT_DOUBLE_EQ(m.mse_beta, 2.0);
  EXPECT_EQ(m.c, 0);
  EXPECT_EQ(m.ic, 0);
  EXPECT_EQ(code_of([&] { compute_metrics(Vector::Ones(3), Vector::Zero(2), r); }), ErrorCode::DimensionMismatch);
}

TEST(Median, MidpointConvention) {
  EXPECT_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_EQ(median({4.0, 1.0, 3.0, 2.0}), 2.5);
  EXPECT_EQ(median({7.0}), 7.0);
  EXPECT_TRUE(std::isnan(median({})));
}

TEST(Config, ParsesKeysCommentsAndOverrides) {
  std::istringstream in(
      "# comment\n"
      "n = 200\n"
      "sigma=6  # trailing\n"
      "rho = 0.75\n"
      "replications = 12\n"
      "master_seed = 99\n"
      "methods = lasso, AdaCnet\n"
      "selector = CV\n"
      "folds = 5\n"
      "lambda2_grid = 0, 0.5, 2\n"
      "gamma_override = none\n"
      "gamma_wf = 2\n"
      "\n");
  const SimDesign d = parse_config(in);
  EXPECT_EQ(d.n, 200);
  EXPECT_EQ(d.sigma, 6.0);
  EXPECT_EQ(d.rho, 0.75);
  EXPECT_EQ(d.replications, 12);
  EXPECT_EQ(d.master_seed, 99u);
  ASSERT_EQ(d.methods.size(), 2u);
  EXPECT_EQ(d.methods[0], Method::Lasso);
  EXPECT_EQ(d.methods[1], Method::AdaCnet);
  EXPECT_EQ(d.selector, Selector::KFoldCV);
  EXPECT_EQ(d.folds, 5);
  EXPECT_EQ(d.lambda2_grid, (std::vector<double>{0.0, 0.5, 2.0}));
  EXPECT_FALSE(d.gamma_override.has_value());
  EXPECT_EQ(d.gamma_wf, 2.0);

  SimDesign o = d;
  apply_setting(o, "methods", "all");
  EXPECT_EQ(o.methods.size(), 10u);
  apply_setting(o, "gamma_override", "3");
  EXPECT_EQ(o.gamma_override, 3.0);
}

TEST(Config, RejectsBadInput) {
  SimDesign d;
  EXPECT_EQ(code_of([&] { apply_setting(d, "bogus", "1"); }), ErrorCode::Parse);
  EXPECT_EQ(code_of([&] { apply_setting(d, "n", "ten"); }), ErrorCode::Parse);
  EXPECT_EQ(code_of([&] { apply_setting(d, "methods", "ridge"); }), ErrorCode::Parse);
  EXPECT_EQ(code_of([&] { apply_setting(d, "selector", "aic"); }), ErrorCode::Parse);
  std::istringstream missing_eq("n 100\n");
  EXPECT_EQ(code_of([&] { parse_config(missing_eq); }), ErrorCode::Parse);

  SimDesign bad;
  bad.n = 9;
  EXPECT_THROW(validate(bad), Error);
  bad = SimDesign{};
  bad.rho = 1.0;
  EXPECT_THROW(validate(bad), Error);
  bad = SimDesign{};
  bad.replications = 0;
  EXPECT_THROW(validate(bad), Error);
}

TEST(Methods, NamesAndPairs) {
  for (Method m : kAllMethods) {
    EXPECT_EQ(parse_method(to_string(m)), m);
    EXPECT_FALSE(is_adaptive(base_of(m)));
  }
  EXPECT_EQ(parse_method(" adawfusion "), Method::AdaWfusion);
  EXPECT_EQ(base_of(Method::AdaSlasso), Method::Slasso);
  EXPECT_EQ(penalty_for(Method::AdaCnet, 1.0).kind, PenaltyKind::Cnet);
  EXPECT_EQ(penalty_for(Method::Enet, 1.0).kind, PenaltyKind::Identity);
}

TEST(Experiment, LassoThreeReplicationsDeterministic) {
  const SimDesign d = small_design({Method::Lasso}, 3);
  const ExperimentResult a = run_experiment(d, 1);
  const ExperimentResult b = run_experiment(d, 3);
  ASSERT_EQ(a.rows.size(), 1u);
  std::ostringstream ta, tb;
  write_table1(ta, a);
  write_table2(ta, a);
  write_table3(ta, a);
  write_metadata(ta, a);
  write_table1(tb, b);
  write_table2(tb, b);
  write_table3(tb, b);
  write_metadata(tb, b);
  EXPECT_EQ(ta.str(), tb.str());
  EXPECT_EQ(a.rows[0].failures, 0);
}

TEST(Experiment, MethodStreamsAreIndependent) {
  const ExperimentResult alone = run_experiment(small_design({Method::AdaCnet}, 2), 1);
  const ExperimentResult mixed = run_experiment(small_design({Method::Lasso, Method::Enet, Method::AdaCnet}, 2), 1);
  for (std::size_t i = 0; i < 2; ++i) {
    ASSERT_TRUE(alone.per_rep[0][i] && mixed.per_rep[2][i]);
    EXPECT_EQ(alone.per_rep[0][i]->mse_pred, mixed.per_rep[2][i]->mse_pred);
  }
}

TEST(Experiment, CountsStayWithinLayout) {
  const ExperimentResult r = run_experiment(small_design({std::begin(kAllMethods), std::end(kAllMethods)}, 4), 1);
  ASSERT_EQ(r.rows.size(), 10u);
  for (const auto& method : r.per_rep) {
    for (const auto& m : method) {
      ASSERT_TRUE(m.has_value());
      EXPECT_GE(m->c, 0);
      EXPECT_LE(m->c, 26);
      EXPECT_GE(m->ic, 0);
      EXPECT_LE(m->ic, 9);
      EXPECT_GE(m->mse_pred, 0.0);
    }
  }
}

TEST(Experiment, InitialFitsAreKktValid) {
  const SimDesign d = small_design({}, 1);
  for (int rep = 0; rep < 3; ++rep) {
    const StandardizedDesign sd = standardize(generate_replication(d, rep));
    for (Method m : {Method::Lasso, Method::Enet, Method::Slasso, Method::Cnet, Method::Wfusion}) {
      TuningConfig cfg;
      cfg.gamma_override = 3.0;
      if (m == Method::Lasso) cfg.lambda2_grid = {0.0};
      const PenaltyMatrix pm = build_penalty(penalty_for(m, 1.0), sd);
      const TuningResult t = tune_gril(sd, pm, cfg);
      EXPECT_TRUE(t.fit.converged) << to_string(m);
      EXPECT_LE(t.fit.kkt_max_violation, 1e-6) << to_string(m);
    }
  }
}

TEST(Tables, SchemaAndFormatting) {
  ExperimentResult r;
  r.design = small_design({Method::Lasso}, 1);
  r.dims = dims_from_n(100);
  MetricsRow row;
  row.median_mse_pred = 2.5;
  row.median_mse_beta = 1.0 / 3.0;
  row.median_c = 23;
  row.median_ic = 0.5;
  r.rows.push_back(row);
  std::ostringstream t1, t2, t3;
  write_table1(t1, r);
  write_table2(t2, r);
  write_table3(t3, r);
  EXPECT_EQ(t1.str(), "method,n,sigma,rho,median_mse_pred\nLasso,100,3.0000,0.5000,2.5000\n");
  EXPECT_EQ(t2.str(), "method,n,sigma,rho,median_mse_beta\nLasso,100,3.0000,0.5000,0.3333\n");
  EXPECT_EQ(t3.str(), "method,n,sigma,rho,median_C,median_IC\nLasso,100,3.0000,0.5000,23.0000,0.5000\n");
}
