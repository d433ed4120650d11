#pragma once

#include <cmath>
#include <limits>

#include "gril/data.hpp"
#include "gril/error.hpp"

namespace gril {

enum class WeightScheme { PowerLaw, CappedInverse, Unit };

inline const char* to_string(WeightScheme scheme) noexcept {
  switch (scheme) {
    case WeightScheme::PowerLaw: return "power";
    case WeightScheme::CappedInverse: return "capped";
    case WeightScheme::Unit: return "unit";
  }
  return "unknown";
}

/// Per-coefficient l1 weights. An entry of +inf forces that coefficient to 0.
struct WeightVector {
  Vector w;
  double gamma = 0.0;
  WeightScheme scheme = WeightScheme::Unit;

  Index p() const { return w.size(); }
  bool all_infinite() const {
    for (Index j = 0; j < w.size(); ++j) {
      if (std::isfinite(w[j])) return false;
    }
    return true;
  }
};

inline WeightVector unit_weights(Index p) { return {Vector::Ones(p), 0.0, WeightScheme::Unit}; }

/// PowerLaw: (|b_j| + 1/n)^-gamma. CappedInverse: max(1/|b_j|, 1), +inf at
/// b_j = 0. Unit: all ones.
inline WeightVector make_weights(const CoefficientVector& initial, double gamma, WeightScheme scheme, Index n) {
  const Index p = initial.size();
  WeightVector out{Vector::Ones(p), gamma, scheme};
  switch (scheme) {
    case WeightScheme::Unit:
      break;
    case WeightScheme::PowerLaw: {
      if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
        throw Error(ErrorCode::InvalidArgument, "gamma must be a finite nonnegative number");
      }
      if (n < 1) throw Error(ErrorCode::InvalidArgument, "n must be positive");
      const double guard = 1.0 / static_cast<double>(n);
      for (Index j = 0; j < p; ++j) out.w[j] = std::pow(std::abs(initial.beta[j]) + guard, -gamma);
      break;
    }
    case WeightScheme::CappedInverse:
      for (Index j = 0; j < p; ++j) {
        const double a = std::abs(initial.beta[j]);
        out.w[j] = a == 0.0 ? std::numeric_limits<double>::infinity() : std::max(1.0 / a, 1.0);
      }
      break;
  }
  return out;
}

}  // namespace gril
