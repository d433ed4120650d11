#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "gril/augment.hpp"
#include "gril/coordinate_descent.hpp"
#include "gril/data.hpp"
#include "gril/lars.hpp"
#include "gril/penalty.hpp"
#include "gril/weights.hpp"

namespace gril {

inline constexpr double kKktTol = 1e-6;

struct FitOptions {
  PathOptions path;
  /// Multiply the AdaGril solution by N = diag(1 + lambda2 q_j / n).
  bool apply_n = true;
  double kkt_tol = kKktTol;
};

struct FitReport {
  /// Returned estimate; for AdaGril this is N times `inner_beta` unless
  /// rescaling was disabled.
  CoefficientVector beta;
  /// Minimizer of the penalized criterion, before any N rescaling.
  Vector inner_beta;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  WeightVector weights;
  double kkt_max_violation = 0.0;
  /// Penalized criterion at `inner_beta`.
  double objective = 0.0;
  bool converged = false;
  /// True when the path solution needed coordinate-descent refinement.
  bool polished = false;
};

/// ||y - x b||^2 + lambda1 sum_j w_j |b_j| + lambda2 b'Qb.
inline double gril_objective(DesignView design, const Matrix& q, double lambda1, double lambda2,
                             const Vector& weights, const Vector& beta) {
  double l1 = 0.0;
  for (Index j = 0; j < beta.size(); ++j) {
    if (beta[j] != 0.0) l1 += weights[j] * std::abs(beta[j]);
  }
  return (design.y - design.x * beta).squaredNorm() + lambda1 * l1 + lambda2 * beta.dot(q * beta);
}

/// Largest violation of the weighted stationarity conditions
///   -2 x_j'(y - x b) + lambda1 w_j sign(b_j) + 2 lambda2 (Qb)_j = 0   (b_j != 0)
///   |-2 x_j'(y - x b) + 2 lambda2 (Qb)_j| <= lambda1 w_j               (b_j == 0)
/// each divided by 1 + lambda1 w_j.
inline double kkt_check(DesignView design, const Matrix& q, double lambda1, double lambda2, const Vector& weights,
                        const Vector& beta) {
  const Index p = design.p();
  if (q.rows() != p || weights.size() != p || beta.size() != p) {
    throw Error(ErrorCode::DimensionMismatch, "KKT inputs disagree in size");
  }
  const Vector grad = -2.0 * (design.x.transpose() * (design.y - design.x * beta)) + 2.0 * lambda2 * (q * beta);
  double worst = 0.0;
  for (Index j = 0; j < p; ++j) {
    const double w = weights[j];
    double v = 0.0;
    if (!std::isfinite(w)) {
      v = beta[j] == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    } else {
      const double pen = lambda1 * w;
      if (beta[j] != 0.0) {
        v = std::abs(grad[j] + pen * (beta[j] > 0.0 ? 1.0 : -1.0)) / (1.0 + pen);
      } else {
        v = std::max(0.0, std::abs(grad[j]) - pen) / (1.0 + pen);
      }
    }
    worst = std::max(worst, v);
  }
  return worst;
}

/// Diagonal of N = diag(1 + lambda2 q_j / n).
inline Vector n_rescaling(const PenaltyMatrix& penalty, double lambda2, Index n) {
  return (1.0 + lambda2 * penalty.diag_q.array() / static_cast<double>(n)).matrix();
}

namespace detail {

inline FitReport solve_weighted(const StandardizedDesign& design, const PenaltyMatrix& penalty, double lambda1,
                                double lambda2, const WeightVector& weights, const FitOptions& options) {
  if (!(lambda1 >= 0.0) || !std::isfinite(lambda1)) {
    throw Error(ErrorCode::InvalidArgument, "lambda1 must be a finite nonnegative number");
  }
  if (weights.p() != design.p()) throw Error(ErrorCode::DimensionMismatch, "weights length differs from p");
  AugmentedProblem problem = augment(design, penalty, lambda2);
  problem.weights = weights.w;

  FitReport report;
  report.lambda1 = lambda1;
  report.lambda2 = lambda2;
  report.weights = weights;

  Vector beta = Vector::Zero(design.p());
  if (!weights.all_infinite()) {
    PathOptions path_options = options.path;
    path_options.lambda1_stop = lambda1;
    beta = lars_lasso_path(problem, path_options).coef_at(lambda1);
  }
  report.kkt_max_violation = kkt_check(design, penalty.q, lambda1, lambda2, weights.w, beta);
  if (report.kkt_max_violation > options.kkt_tol) {
    CoordinateDescentOptions cd;
    cd.tol = 1e-13;
    beta = coordinate_descent_gram(problem.gram, problem.xty, weights.w, lambda1, cd, beta).beta;
    report.polished = true;
    report.kkt_max_violation = kkt_check(design, penalty.q, lambda1, lambda2, weights.w, beta);
  }
  report.converged = report.kkt_max_violation <= options.kkt_tol;
  report.objective = gril_objective(design, penalty.q, lambda1, lambda2, weights.w, beta);
  report.inner_beta = beta;
  report.beta = CoefficientVector(std::move(beta));
  return report;
}

}  // namespace detail

/// Generalized ridge-lasso estimate at (lambda1, lambda2), computed through
/// the lasso path on the augmented data.
inline FitReport gril_fit(const StandardizedDesign& design, const PenaltyMatrix& penalty, double lambda1,
                          double lambda2, const FitOptions& options = {}) {
  return detail::solve_weighted(design, penalty, lambda1, lambda2, unit_weights(design.p()), options);
}

/// Adaptive estimate: weighted-l1 refit followed by the N rescaling.
/// `kkt_max_violation` refers to the inner solution.
inline FitReport adagril_fit(const StandardizedDesign& design, const PenaltyMatrix& penalty, double lambda1_star,
                             double lambda2, const WeightVector& weights, const FitOptions& options = {}) {
  FitReport report = detail::solve_weighted(design, penalty, lambda1_star, lambda2, weights, options);
  if (options.apply_n) {
    report.beta = CoefficientVector(report.inner_beta.cwiseProduct(n_rescaling(penalty, lambda2, design.n())));
  }
  return report;
}

}  // namespace gril
