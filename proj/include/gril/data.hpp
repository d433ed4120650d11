#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "gril/error.hpp"

namespace gril {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Raw regression data: response `y` and predictors `x`, before any
/// centering or scaling.
struct Dataset {
  Vector y;
  Matrix x;

  Index n() const { return x.rows(); }
  Index p() const { return x.cols(); }
};

inline void validate(const Dataset& data) {
  if (data.y.size() != data.x.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "response length differs from predictor row count");
  }
  if (data.x.rows() < 2) throw Error(ErrorCode::InvalidArgument, "need at least two observations");
  if (data.x.cols() < 1) throw Error(ErrorCode::InvalidArgument, "need at least one predictor");
  if (!data.y.allFinite() || !data.x.allFinite()) {
    throw Error(ErrorCode::NonFinite, "dataset contains non-finite entries");
  }
}

/// Centered response and centered, unit-L2-norm predictor columns, plus what
/// is needed to map coefficients and predictions back to the raw scale.
/// With unit-norm centered columns, x_i'x_j is the empirical correlation.
struct StandardizedDesign {
  Matrix x;
  Vector y;
  Vector col_norms;
  Vector col_means;
  double y_mean = 0.0;
  /// x'x, cached when `gram_available`.
  Matrix gram;
  bool gram_available = false;

  Index n() const { return x.rows(); }
  Index p() const { return x.cols(); }

  /// Empirical correlation matrix x'x.
  Matrix correlations() const { return gram_available ? gram : Matrix(x.transpose() * x); }
};

/// Non-owning (x, y) pair accepted by the solvers. Implicitly built from a
/// StandardizedDesign so the same routines also run on designs that were
/// prepared elsewhere (theory checks, augmented sub-problems).
struct DesignView {
  Eigen::Ref<const Matrix> x;
  Eigen::Ref<const Vector> y;

  DesignView(const Matrix& x_, const Vector& y_) : x(x_), y(y_) {
    if (x_.rows() != y_.size()) {
      throw Error(ErrorCode::DimensionMismatch, "design rows differ from response length");
    }
  }
  DesignView(const StandardizedDesign& d) : x(d.x), y(d.y) {}  // NOLINT(google-explicit-constructor)

  Index n() const { return x.rows(); }
  Index p() const { return x.cols(); }
};

/// Coefficients with their support. `active_set` is kept equal to the
/// indices of nonzero entries.
struct CoefficientVector {
  Vector beta;
  std::vector<Index> active_set;

  CoefficientVector() = default;
  explicit CoefficientVector(Vector b) : beta(std::move(b)) { refresh_active_set(); }

  void refresh_active_set() {
    active_set.clear();
    for (Index j = 0; j < beta.size(); ++j) {
      if (beta[j] != 0.0) active_set.push_back(j);
    }
  }

  Index size() const { return beta.size(); }
  std::size_t df() const { return active_set.size(); }
};

/// Centers every column and the response, then scales columns to unit L2
/// norm. Throws ZeroVarianceColumn for constant columns.
inline StandardizedDesign standardize(const Dataset& data, bool cache_gram = true) {
  validate(data);
  StandardizedDesign out;
  const Index n = data.n();
  const Index p = data.p();
  out.y_mean = data.y.mean();
  out.y = data.y.array() - out.y_mean;
  out.col_means = data.x.colwise().mean().transpose();
  out.x = data.x.rowwise() - out.col_means.transpose();
  out.col_norms.resize(p);
  for (Index j = 0; j < p; ++j) {
    const double scale = std::max(1.0, data.x.col(j).cwiseAbs().maxCoeff());
    const double norm = out.x.col(j).norm();
    if (!(norm > 1e-12 * scale * std::sqrt(static_cast<double>(n)))) {
      throw Error(ErrorCode::ZeroVarianceColumn, "column " + std::to_string(j) + " is constant",
                  static_cast<int>(j));
    }
    out.col_norms[j] = norm;
    out.x.col(j) /= norm;
  }
  if (!out.x.allFinite() || !out.y.allFinite()) {
    throw Error(ErrorCode::NonFinite, "standardization overflowed");
  }
  if (cache_gram) {
    out.gram = out.x.transpose() * out.x;
    out.gram_available = true;
  }
  return out;
}

/// Wraps data that is already centered and scaled (or is meant to be used
/// as-is) without transforming it. Scale factors are 1 and means are 0.
inline StandardizedDesign as_standardized(Matrix x, Vector y, bool cache_gram = true) {
  if (x.rows() != y.size()) {
    throw Error(ErrorCode::DimensionMismatch, "design rows differ from response length");
  }
  StandardizedDesign out;
  out.col_norms = Vector::Ones(x.cols());
  out.col_means = Vector::Zero(x.cols());
  out.x = std::move(x);
  out.y = std::move(y);
  if (cache_gram) {
    out.gram = out.x.transpose() * out.x;
    out.gram_available = true;
  }
  return out;
}

/// Coefficients fitted on the standardized design, expressed on the raw
/// predictor scale.
inline Vector to_original_scale(const StandardizedDesign& design, const Vector& beta_std) {
  return beta_std.cwiseQuotient(design.col_norms);
}

inline double original_intercept(const StandardizedDesign& design, const Vector& beta_original) {
  return design.y_mean - design.col_means.dot(beta_original);
}

/// Predictions on raw predictors for a fit made on the standardized design.
inline Vector predict_original(const StandardizedDesign& design, const Matrix& x_raw,
                               const Vector& beta_std) {
  const Vector beta = to_original_scale(design, beta_std);
  return (x_raw * beta).array() + original_intercept(design, beta);
}

/// Minimum-L2-norm least squares through a complete orthogonal
/// decomposition (relative rank threshold 1e-10).
inline CoefficientVector ols_fit(DesignView design) {
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(design.x);
  cod.setThreshold(1e-10);
  Vector beta = cod.solve(design.y);
  if (!beta.allFinite()) throw Error(ErrorCode::NonFinite, "least squares solution overflowed");
  return CoefficientVector(std::move(beta));
}

}  // namespace gril
