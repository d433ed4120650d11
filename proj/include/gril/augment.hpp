#pragma once

#include <cmath>

#include "gril/data.hpp"
#include "gril/penalty.hpp"

namespace gril {

/// Stacked least-squares system [x; sqrt(lambda2) F], [y; 0] whose lasso
/// solution is the generalized ridge-lasso solution for (x, y, Q = F'F).
/// `weights` are per-column l1 weights (+inf removes a column).
struct AugmentedProblem {
  Matrix x_aug;
  Vector y_aug;
  double lambda2 = 0.0;
  Vector weights;
  Index n_obs = 0;
  /// x_aug' x_aug and x_aug' y_aug.
  Matrix gram;
  Vector xty;

  Index p() const { return x_aug.cols(); }
};

namespace detail {

inline AugmentedProblem stack(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Vector>& y,
                              const PenaltyMatrix& penalty, double lambda2, const Matrix* gram) {
  if (penalty.p() != x.cols() || penalty.factor_lt.cols() != x.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "penalty size differs from number of predictors");
  }
  if (!(lambda2 >= 0.0) || !std::isfinite(lambda2)) {
    throw Error(ErrorCode::InvalidArgument, "lambda2 must be a finite nonnegative number");
  }
  const Index n = x.rows();
  const Index p = x.cols();
  const Index k = penalty.factor_lt.rows();
  AugmentedProblem out;
  out.n_obs = n;
  out.lambda2 = lambda2;
  out.x_aug.resize(n + k, p);
  out.x_aug.topRows(n) = x;
  out.x_aug.bottomRows(k) = std::sqrt(lambda2) * penalty.factor_lt;
  out.y_aug = Vector::Zero(n + k);
  out.y_aug.head(n) = y;
  out.weights = Vector::Ones(p);
  if (gram != nullptr) {
    out.gram = *gram + lambda2 * (penalty.factor_lt.transpose() * penalty.factor_lt);
  } else {
    out.gram = out.x_aug.transpose() * out.x_aug;
  }
  out.xty = x.transpose() * y;
  return out;
}

}  // namespace detail

inline AugmentedProblem augment(DesignView design, const PenaltyMatrix& penalty, double lambda2) {
  return detail::stack(design.x, design.y, penalty, lambda2, nullptr);
}

inline AugmentedProblem augment(const StandardizedDesign& design, const PenaltyMatrix& penalty,
                                double lambda2) {
  return detail::stack(design.x, design.y, penalty, lambda2,
                       design.gram_available ? &design.gram : nullptr);
}

/// Squared residual norm of the stacked system at `beta`.
inline double augmented_loss(const AugmentedProblem& problem, const Vector& beta) {
  return (problem.y_aug - problem.x_aug * beta).squaredNorm();
}

}  // namespace gril
