#pragma once

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "gril/data.hpp"
#include "gril/error.hpp"

namespace gril {

enum class PenaltyKind { Identity, Cnet, WFusion, SLasso, Custom };

inline const char* to_string(PenaltyKind kind) noexcept {
  switch (kind) {
    case PenaltyKind::Identity: return "identity";
    case PenaltyKind::Cnet: return "cnet";
    case PenaltyKind::WFusion: return "wfusion";
    case PenaltyKind::SLasso: return "slasso";
    case PenaltyKind::Custom: return "custom";
  }
  return "unknown";
}

/// Which quadratic penalty to build. `gamma_wf` is the weighted-fusion
/// exponent; `custom_q` is only read for PenaltyKind::Custom.
struct PenaltySpec {
  PenaltyKind kind = PenaltyKind::Identity;
  double gamma_wf = 1.0;
  Matrix custom_q;
  std::string notes;
};

/// A PSD penalty matrix Q together with a factor F satisfying F'F = Q.
struct PenaltyMatrix {
  PenaltyKind kind = PenaltyKind::Identity;
  Matrix q;
  Matrix factor_lt;
  Vector diag_q;

  Index p() const { return q.rows(); }
  double quadratic_form(const Vector& beta) const { return beta.dot(q * beta); }
};

/// Correlation guard for the correlation-based builders: |rho_ij| must stay
/// at most 1 - kCorrelationGuard.
inline constexpr double kCorrelationGuard = 1e-6;

namespace detail {

inline double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

inline void check_correlations(const Matrix& rho) {
  const Index p = rho.rows();
  for (Index i = 0; i < p; ++i) {
    for (Index j = i + 1; j < p; ++j) {
      if (!(std::abs(rho(i, j)) <= 1.0 - kCorrelationGuard)) {
        throw Error(ErrorCode::NearDuplicatePredictors,
                    "predictors " + std::to_string(i) + " and " + std::to_string(j) +
                        " are (nearly) collinear",
                    static_cast<int>(i), static_cast<int>(j));
      }
    }
  }
}

inline PenaltyMatrix finish(PenaltyKind kind, Matrix q, Matrix factor) {
  PenaltyMatrix out;
  out.kind = kind;
  out.diag_q = q.diagonal();
  out.q = std::move(q);
  out.factor_lt = std::move(factor);
  return out;
}

}  // namespace detail

/// F with F'F = Q. Cholesky when Q is numerically positive definite,
/// otherwise a symmetric square root with negative eigenvalues clamped to 0.
inline Matrix factor_of(const Matrix& q) {
  const Index p = q.rows();
  if (q.cols() != p) throw Error(ErrorCode::DimensionMismatch, "penalty matrix must be square");
  const double qmax = detail::max_abs(q);
  if (qmax == 0.0) return Matrix::Zero(p, p);

  Eigen::LLT<Matrix> llt(q);
  if (llt.info() == Eigen::Success) {
    const Matrix l = llt.matrixL();
    const double min_pivot = l.diagonal().minCoeff();
    const double max_diag = q.diagonal().maxCoeff();
    if (min_pivot * min_pivot > 1e-12 * max_diag) {
      Matrix f = l.transpose();
      if (detail::max_abs(f.transpose() * f - q) <= 1e-8 * (1.0 + qmax)) return f;
    }
  }

  Eigen::SelfAdjointEigenSolver<Matrix> eig(q);
  const Vector& values = eig.eigenvalues();
  const double spectral = values.cwiseAbs().maxCoeff();
  if (values.minCoeff() < -1e-6 * spectral) {
    throw Error(ErrorCode::NotPSD, "penalty matrix has a negative eigenvalue");
  }
  const Vector root = values.cwiseMax(0.0).cwiseSqrt();
  return root.asDiagonal() * eig.eigenvectors().transpose();
}

/// Populates `factor_lt` (and `diag_q`) from `q`.
inline PenaltyMatrix factorize(PenaltyMatrix pm) {
  pm.factor_lt = factor_of(pm.q);
  pm.diag_q = pm.q.diagonal();
  return pm;
}

/// Ridge penalty, Q = I (elastic net).
inline PenaltyMatrix build_identity(Index p) {
  if (p < 1) throw Error(ErrorCode::InvalidArgument, "p must be positive");
  return detail::finish(PenaltyKind::Identity, Matrix::Identity(p, p), Matrix::Identity(p, p));
}

/// Correlation-based penalty:
///   Q_ii = 2 sum_{s != i} 1 / (1 - rho_is^2),  Q_ij = -2 rho_ij / (1 - rho_ij^2).
inline PenaltyMatrix build_cnet(const Matrix& rho) {
  detail::check_correlations(rho);
  const Index p = rho.rows();
  Matrix q = Matrix::Zero(p, p);
  for (Index i = 0; i < p; ++i) {
    for (Index j = 0; j < p; ++j) {
      if (i == j) continue;
      const double r = rho(i, j);
      const double denom = 1.0 - r * r;
      q(i, i) += 2.0 / denom;
      q(i, j) = -2.0 * r / denom;
    }
  }
  Matrix f = factor_of(q);
  return detail::finish(PenaltyKind::Cnet, std::move(q), std::move(f));
}

inline PenaltyMatrix build_cnet(const StandardizedDesign& design) {
  return build_cnet(design.correlations());
}

/// Weighted-fusion penalty sum_{i<j} w_ij (b_i - sign(rho_ij) b_j)^2 with
/// w_ij = |rho_ij|^gamma_wf / (1 - |rho_ij|).
inline PenaltyMatrix build_wfusion(const Matrix& rho, double gamma_wf) {
  if (!(gamma_wf > 0.0) || !std::isfinite(gamma_wf)) {
    throw Error(ErrorCode::InvalidArgument, "gamma_wf must be positive");
  }
  detail::check_correlations(rho);
  const Index p = rho.rows();
  Matrix q = Matrix::Zero(p, p);
  for (Index i = 0; i < p; ++i) {
    for (Index j = 0; j < p; ++j) {
      if (i == j) continue;
      const double r = rho(i, j);
      const double a = std::abs(r);
      const double w = std::pow(a, gamma_wf) / (1.0 - a);
      const double s = (r > 0.0) - (r < 0.0);
      q(i, i) += w;
      q(i, j) = -w * s;
    }
  }
  Matrix f = factor_of(q);
  return detail::finish(PenaltyKind::WFusion, std::move(q), std::move(f));
}

inline PenaltyMatrix build_wfusion(const StandardizedDesign& design, double gamma_wf) {
  return build_wfusion(design.correlations(), gamma_wf);
}

/// Smooth-lasso penalty sum_{j>=1} (b_j - b_{j-1})^2 on an open chain.
inline PenaltyMatrix build_slasso(Index p) {
  if (p < 2) throw Error(ErrorCode::DimensionTooSmall, "smooth-lasso penalty needs p >= 2");
  Matrix q = Matrix::Zero(p, p);
  for (Index j = 0; j + 1 < p; ++j) {
    q(j, j) += 1.0;
    q(j + 1, j + 1) += 1.0;
    q(j, j + 1) = -1.0;
    q(j + 1, j) = -1.0;
  }
  // Differencing operator D (rows e_{j+1} - e_j) plus a zero row gives D'D = Q.
  Matrix f = Matrix::Zero(p, p);
  for (Index j = 0; j + 1 < p; ++j) {
    f(j, j) = -1.0;
    f(j, j + 1) = 1.0;
  }
  return detail::finish(PenaltyKind::SLasso, std::move(q), std::move(f));
}

/// Validates a user-supplied Q: square, symmetric within 1e-10 and PSD
/// (min eigenvalue >= -1e-8 * ||Q||_2).
inline PenaltyMatrix build_custom(const Matrix& q_in) {
  if (q_in.rows() != q_in.cols() || q_in.rows() < 1) {
    throw Error(ErrorCode::DimensionMismatch, "custom penalty must be a non-empty square matrix");
  }
  if (!q_in.allFinite()) throw Error(ErrorCode::NonFinite, "custom penalty has non-finite entries");
  const double asym = detail::max_abs(q_in - q_in.transpose());
  if (asym > 1e-10 * std::max(1.0, detail::max_abs(q_in))) {
    throw Error(ErrorCode::NotSymmetric, "custom penalty is not symmetric");
  }
  Matrix q = 0.5 * (q_in + q_in.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(q, Eigen::EigenvaluesOnly);
  const double spectral = eig.eigenvalues().cwiseAbs().maxCoeff();
  if (eig.eigenvalues().minCoeff() < -1e-8 * spectral) {
    throw Error(ErrorCode::NotPSD, "custom penalty is not positive semi-definite");
  }
  Matrix f = factor_of(q);
  return detail::finish(PenaltyKind::Custom, std::move(q), std::move(f));
}

/// Builds the penalty named by `spec` for `design`.
inline PenaltyMatrix build_penalty(const PenaltySpec& spec, const StandardizedDesign& design) {
  switch (spec.kind) {
    case PenaltyKind::Identity: return build_identity(design.p());
    case PenaltyKind::Cnet: return build_cnet(design);
    case PenaltyKind::WFusion: return build_wfusion(design, spec.gamma_wf);
    case PenaltyKind::SLasso: return build_slasso(design.p());
    case PenaltyKind::Custom: {
      if (spec.custom_q.rows() != design.p()) {
        throw Error(ErrorCode::DimensionMismatch, "custom penalty size differs from p");
      }
      return build_custom(spec.custom_q);
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown penalty kind");
}

}  // namespace gril
