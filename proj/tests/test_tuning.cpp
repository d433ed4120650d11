#include <algorithm>
#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "gril/tuning.hpp"
#include "test_util.hpp"

using namespace gril;

TEST(Gamma, FromDimensions) {
  EXPECT_EQ(gamma_from_dims(100, 10), 3.0);
  EXPECT_EQ(gamma_from_dims(10000, 100), 3.0);
  EXPECT_EQ(gamma_from_dims(50, 1), 1.0);
  EXPECT_EQ(gamma_from_dims(100, 35), 7.0);
  // p >= n clamps nu just below one.
  EXPECT_GT(gamma_from_dims(10, 20), 1e5);
  EXPECT_THROW(gamma_from_dims(1, 3), Error);
}

TEST(Bic, Values) {
  EXPECT_NEAR(bic_score(10, 2.5, 2), 10.0 * std::log(0.25) + 2.0 * std::log(10.0), 1e-12);
  EXPECT_LT(bic_score(50, 3.0, 3), bic_score(50, 3.0, 5));

  const StandardizedDesign d = test::random_design(30, 4, 3);
  FitReport zero;
  zero.beta = CoefficientVector(Vector::Zero(4));
  EXPECT_NEAR(bic_score(d, zero), 30.0 * std::log(d.y.squaredNorm() / 30.0), 1e-12);
}

TEST(CvFolds, PartitionIsBalancedAndSeeded) {
  const std::vector<int> a = cv_folds(23, 5, 9);
  std::vector<int> count(5, 0);
  for (int f : a) {
    ASSERT_GE(f, 0);
    ASSERT_LT(f, 5);
    ++count[static_cast<std::size_t>(f)];
  }
  for (int c : count) EXPECT_TRUE(c == 4 || c == 5);
  EXPECT_EQ(a, cv_folds(23, 5, 9));
  EXPECT_NE(a, cv_folds(23, 5, 10));
  EXPECT_THROW(cv_folds(4, 5, 1), Error);
  EXPECT_THROW(cv_folds(10, 1, 1), Error);
}

TEST(Select, SingleCellMatchesHandScoredLassoPath) {
  const StandardizedDesign d = test::random_design(50, 8, 41);
  TuningConfig cfg;
  cfg.lambda2_grid = {0.0};
  const TuningResult r = select(d, build_identity(8), cfg, false);

  const PathSolution path = lars_lasso_path(augment(d, build_identity(8), 0.0));
  ASSERT_EQ(static_cast<Index>(r.score_table.size()), path.size());
  double best = std::numeric_limits<double>::infinity();
  double best_l1 = -1.0;
  for (Index k = 0; k < path.size(); ++k) {
    const Vector b = path.coefs.col(k);
    const double s = bic_score(50, (d.y - d.x * b).squaredNorm(), CoefficientVector(b).df());
    EXPECT_NEAR(r.score_table[static_cast<std::size_t>(k)].score, s, 1e-8);
    if (!std::isfinite(best) || s < best - 1e-12 * std::max(1.0, std::abs(best))) {
      best = s;
      best_l1 = path.breakpoints[static_cast<std::size_t>(k)];
    }
  }
  EXPECT_EQ(r.best_lambda1, best_l1);
  EXPECT_EQ(r.best_lambda2, 0.0);
  EXPECT_TRUE(r.fit.converged);
}

TEST(Select, ScoreTableIsExhaustive) {
  const StandardizedDesign d = test::random_design(40, 6, 42);
  TuningConfig cfg;
  const TuningResult r = select(d, PenaltyBuilder([](const StandardizedDesign& s) { return build_cnet(s); }), cfg,
                                false);
  std::size_t expected = 0;
  const PenaltyMatrix pm = build_cnet(d);
  for (double l2 : cfg.lambda2_grid) expected += static_cast<std::size_t>(lars_lasso_path(augment(d, pm, l2)).size());
  EXPECT_EQ(r.score_table.size(), expected);
  double best = std::numeric_limits<double>::infinity();
  for (const ScoreEntry& e : r.score_table) best = std::min(best, e.score);
  bool found = false;
  for (const ScoreEntry& e : r.score_table) {
    if (e.lambda1 == r.best_lambda1 && e.lambda2 == r.best_lambda2) {
      found = true;
      EXPECT_LE(e.score, best + 1e-12 * std::max(1.0, std::abs(best)));
    }
  }
  EXPECT_TRUE(found);
}

TEST(Select, TiesPreferLargerLambda2ThenLambda1) {
  EXPECT_TRUE(detail::better(1.0, 1.0, 0.5, 1.0, 0.1, 0.9));
  EXPECT_FALSE(detail::better(1.0, 0.1, 0.9, 1.0, 1.0, 0.5));
  EXPECT_TRUE(detail::better(1.0, 1.0, 0.9, 1.0, 1.0, 0.5));
  EXPECT_TRUE(detail::better(0.9, 0.0, 0.1, 1.0, 1.0, 0.5));
}

TEST(Select, NoiselessBicRecoversSupport) {
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::mt19937_64 rng(500 + seed);
    Dataset data;
    data.x = test::gaussian_matrix(100, 10, rng);
    Vector beta = Vector::Zero(10);
    beta[1] = 3.0;
    beta[4] = -2.0;
    beta[7] = 2.5;
    data.y = data.x * beta;
    const StandardizedDesign d = standardize(data);
    TuningConfig cfg;
    cfg.lambda2_grid = {0.0, 0.1, 1.0};
    const TuningResult r = select(d, build_identity(10), cfg, false);
    if (r.fit.beta.active_set == std::vector<Index>{1, 4, 7}) ++hits;
  }
  EXPECT_GE(hits, 45);
}

TEST(Select, LeaveOneOutMatchesExplicitLoop) {
  const StandardizedDesign d = test::random_design(8, 3, 44);
  const PenaltyMatrix pm = build_slasso(3);
  TuningConfig cfg;
  cfg.lambda2_grid = {0.5};
  cfg.selector = Selector::KFoldCV;
  cfg.folds = 8;
  const TuningResult r = select(d, pm, cfg, false);
  ASSERT_FALSE(r.score_table.empty());
  CoordinateDescentOptions tight;
  tight.tol = 1e-14;
  for (const ScoreEntry& e : r.score_table) {
    double sse = 0.0;
    for (Index i = 0; i < 8; ++i) {
      std::vector<Index> keep;
      for (Index t = 0; t < 8; ++t) {
        if (t != i) keep.push_back(t);
      }
      const Matrix xt = d.x(keep, Eigen::all);
      const Vector yt = d.y(keep);
      const Vector b = coordinate_descent_direct(DesignView(xt, yt), pm.q, Vector::Ones(3), e.lambda1, 0.5, tight).beta;
      sse += std::pow(d.y[i] - d.x.row(i).dot(b), 2);
    }
    EXPECT_NEAR(e.score, sse / 8.0, 1e-10);
  }
}

TEST(Select, Deterministic) {
  const StandardizedDesign d = test::random_design(40, 7, 45);
  TuningConfig cfg;
  cfg.selector = Selector::KFoldCV;
  cfg.folds = 5;
  cfg.seed = 99;
  const TuningResult a = select(d, build_identity(7), cfg, true);
  const TuningResult b = select(d, build_identity(7), cfg, true);
  EXPECT_EQ(a.best_lambda1, b.best_lambda1);
  EXPECT_EQ(a.best_lambda2, b.best_lambda2);
  ASSERT_EQ(a.score_table.size(), b.score_table.size());
  for (std::size_t i = 0; i < a.score_table.size(); ++i) EXPECT_EQ(a.score_table[i].score, b.score_table[i].score);
  EXPECT_EQ(a.fit.beta.beta, b.fit.beta.beta);
}

TEST(Select, AdaptivePipelineSharesLambda2) {
  const StandardizedDesign d = test::random_design(60, 10, 46);
  const PenaltyMatrix pm = build_cnet(d);
  TuningConfig cfg;
  cfg.gamma_override = 3.0;
  const TuningResult plain = select(d, pm, cfg, false);
  const TuningResult ada = tune_adaptive(d, pm, cfg, plain);
  EXPECT_EQ(ada.best_lambda2, plain.best_lambda2);
  EXPECT_EQ(ada.gamma, 3.0);
  ASSERT_TRUE(ada.initial_fit.has_value());
  EXPECT_EQ(ada.initial_fit->beta.beta, plain.fit.beta.beta);
  EXPECT_TRUE(ada.fit.converged);
  EXPECT_LE(ada.fit.kkt_max_violation, 1e-6);
  const WeightVector w = make_weights(plain.fit.beta, 3.0, WeightScheme::PowerLaw, d.n());
  EXPECT_EQ(ada.fit.weights.w, w.w);
  std::size_t adaptive_rows = 0;
  for (const ScoreEntry& e : ada.score_table) {
    if (e.adaptive) {
      ++adaptive_rows;
      EXPECT_EQ(e.lambda2, plain.best_lambda2);
    }
  }
  EXPECT_GT(adaptive_rows, 0u);

  TuningConfig derived = cfg;
  derived.gamma_override.reset();
  EXPECT_EQ(tune_adaptive(d, pm, derived, plain).gamma, gamma_from_dims(60, 10));
}

TEST(Select, ThinnedGrid) {
  const StandardizedDesign d = test::random_design(40, 8, 47);
  TuningConfig cfg;
  cfg.lambda2_grid = {0.1};
  cfg.lambda1_grid_size = 5;
  const TuningResult r = select(d, build_identity(8), cfg, false);
  EXPECT_EQ(r.score_table.size(), 5u);
  cfg.lambda1_grid_size = 1;
  EXPECT_THROW(select(d, build_identity(8), cfg, false), Error);
}

TEST(Select, AllCellsFailing) {
  const StandardizedDesign d = test::random_design(40, 8, 48);
  TuningConfig cfg;
  cfg.fit.path.max_steps = 1;
  try {
    select(d, build_identity(8), cfg, false);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AllCellsFailed);
  }
}

TEST(Select, WeightedCellsReachFullSupport) {
  // One near-zero weight pushes lambda_max far above the scale of the rest;
  // the weighted path must still run until every variable has entered.
  const StandardizedDesign d = test::random_design(80, 8, 49);
  WeightVector w{Vector::Ones(8), 3.0, WeightScheme::PowerLaw};
  w.w[0] = 1e-6;
  TuningConfig cfg;
  const auto cands = detail::score_cell(d, build_identity(8), 0.0, w, false, cfg, {});
  std::size_t max_df = 0;
  for (const auto& c : cands) max_df = std::max(max_df, c.df);
  EXPECT_EQ(max_df, 8u);

  const auto unit = detail::score_cell(d, build_identity(8), 0.0, unit_weights(8), false, cfg, {});
  EXPECT_GT(unit.back().lambda1, 0.0);
}
