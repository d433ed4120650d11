#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "gril/data.hpp"
#include "test_util.hpp"

using namespace gril;

TEST(Standardize, CentersAndScalesSingleColumn) {
  Dataset data;
  data.x = Matrix(3, 1);
  data.x << 1, 2, 3;
  data.y = Vector::Ones(3);
  const StandardizedDesign d = standardize(data);
  EXPECT_LT(d.y.cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_NEAR(d.x(0, 0), -1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(d.x(1, 0), 0.0, 1e-15);
  EXPECT_NEAR(d.x(2, 0), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(d.col_norms[0], std::sqrt(2.0), 1e-15);
  EXPECT_DOUBLE_EQ(d.y_mean, 1.0);
}

TEST(Standardize, LeavesStandardizedColumnsUnchanged) {
  Dataset data;
  data.x = Matrix(4, 2);
  data.x << 0.5, 0.5, -0.5, 0.5, 0.5, -0.5, -0.5, -0.5;
  data.y = Vector::LinSpaced(4, -1.5, 1.5);
  const StandardizedDesign d = standardize(data);
  EXPECT_LT((d.x - data.x).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((d.col_norms - Vector::Ones(2)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Standardize, RandomDesignInvariants) {
  std::mt19937_64 rng(11);
  Dataset data;
  data.x = 3.0 * test::gaussian_matrix(100, 35, rng);
  data.x.col(4).array() += 10.0;
  data.y = test::gaussian_vector(100, rng).array() + 5.0;
  const StandardizedDesign d = standardize(data);
  for (Index j = 0; j < d.p(); ++j) EXPECT_NEAR(d.x.col(j).norm(), 1.0, 1e-10);
  EXPECT_NEAR(d.y.mean(), 0.0, 1e-10);
  EXPECT_LE(d.correlations().cwiseAbs().maxCoeff(), 1.0 + 1e-12);
  EXPECT_LT((d.gram - d.x.transpose() * d.x).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Standardize, IsIdempotent) {
  const StandardizedDesign d = test::random_design(30, 6, 3);
  Dataset again{d.y, d.x};
  const StandardizedDesign d2 = standardize(again);
  EXPECT_LT((d2.x - d.x).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((d2.col_norms - Vector::Ones(6)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Standardize, RejectsConstantColumn) {
  Dataset data;
  data.x = Matrix::Ones(5, 3);
  data.x.col(0) = Vector::LinSpaced(5, 0, 4);
  data.x.col(2) = Vector::LinSpaced(5, 1, 2);
  data.y = Vector::Zero(5);
  try {
    standardize(data);
    FAIL() << "expected ZeroVarianceColumn";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroVarianceColumn);
    EXPECT_EQ(e.index_a(), 1);
  }
}

TEST(Standardize, RejectsNonFiniteAndMismatch) {
  Dataset data;
  data.x = Matrix::Random(4, 2);
  data.y = Vector::Zero(4);
  data.x(2, 1) = std::numeric_limits<double>::quiet_NaN();
  try {
    standardize(data);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonFinite);
  }
  data.y = Vector::Zero(3);
  try {
    standardize(data);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
}

TEST(Standardize, OriginalScalePredictionsAgree) {
  std::mt19937_64 rng(5);
  Dataset data;
  data.x = test::gaussian_matrix(40, 5, rng) * 4.0;
  data.x.col(1).array() += 7.0;
  data.y = test::gaussian_vector(40, rng).array() + 2.0;
  const StandardizedDesign d = standardize(data);
  const Vector beta_std = test::gaussian_vector(5, rng);
  const Vector fitted_std = (d.x * beta_std).array() + d.y_mean;
  EXPECT_LT((predict_original(d, data.x, beta_std) - fitted_std).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Ols, OrthonormalColumnsGiveInnerProducts) {
  Matrix x = Matrix::Zero(4, 2);
  x(0, 0) = 1.0;
  x(1, 1) = 1.0;
  Vector y(4);
  y << 3, -2, 5, 7;
  const CoefficientVector fit = ols_fit(DesignView(x, y));
  EXPECT_NEAR(fit.beta[0], 3.0, 1e-12);
  EXPECT_NEAR(fit.beta[1], -2.0, 1e-12);
}

TEST(Ols, MatchesHandSolvedNormalEquations) {
  // x'x = [[2,1],[1,2]], x'y = (5,6) -> beta = (4/3, 7/3).
  Matrix x(3, 2);
  x << 1, 0, 0, 1, 1, 1;
  Vector y(3);
  y << 1, 2, 4;
  const CoefficientVector fit = ols_fit(DesignView(x, y));
  EXPECT_NEAR(fit.beta[0], 4.0 / 3.0, 1e-10);
  EXPECT_NEAR(fit.beta[1], 7.0 / 3.0, 1e-10);
  EXPECT_EQ(fit.df(), 2u);
}

TEST(Ols, WideDesignResidualIsOrthogonal) {
  const StandardizedDesign d = test::random_design(12, 30, 9);
  const CoefficientVector fit = ols_fit(d);
  const Vector r = d.y - d.x * fit.beta;
  EXPECT_LT((d.x.transpose() * r).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Ols, DuplicateColumnsGiveMinimumNorm) {
  Matrix x(3, 2);
  x << 1, 1, 2, 2, 3, 3;
  Vector y(3);
  y << 2, 4, 6;
  const CoefficientVector fit = ols_fit(DesignView(x, y));
  EXPECT_NEAR(fit.beta[0], 1.0, 1e-10);
  EXPECT_NEAR(fit.beta[1], 1.0, 1e-10);
}

TEST(CoefficientVector, ActiveSetTracksNonzeros) {
  Vector b(5);
  b << 0, 1.5, 0, -2, 0;
  CoefficientVector c(b);
  EXPECT_EQ(c.active_set, (std::vector<Index>{1, 3}));
  c.beta[0] = 1e-300;
  c.refresh_active_set();
  EXPECT_EQ(c.active_set, (std::vector<Index>{0, 1, 3}));
}
