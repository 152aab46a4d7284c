#pragma once

// Weibull survival math, conditional-excess distributions and the
// censoring-aware per-step log-likelihood with analytic gradients.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace arrival {

inline constexpr double kDefaultMaxShape = 10.0;

/// Probabilities entering a log are floored here so the loss stays finite.
inline constexpr double kProbabilityFloor = 1e-12;

/// Point densities with shape < 1 are evaluated no closer to the origin than this.
inline constexpr double kDensityOrigin = 1e-12;

struct WeibullParams {
  double scale = 1.0;
  double shape = 1.0;
};

/// Elapsed time since the last arrival (tse) and the observed remaining time
/// (tte). When `uncensored` the next arrival lies in the unit bin
/// [tte, tte + 1); otherwise only tte is known as a lower bound.
struct CensorObservation {
  double tse = 0.0;
  double tte = 0.0;
  bool uncensored = false;
};

struct LogLikelihoodGradient {
  double d_scale = 0.0;
  double d_shape = 0.0;
};

namespace detail {

inline void require_params(const WeibullParams& p) {
  if (!(p.scale > 0.0) || !(p.shape > 0.0) || !std::isfinite(p.scale) ||
      !std::isfinite(p.shape)) {
    throw std::domain_error("invalid Weibull parameters: scale=" + std::to_string(p.scale) +
                            " shape=" + std::to_string(p.shape));
  }
}

inline void require_time(double y, const char* what) {
  if (!(y >= 0.0) || !std::isfinite(y)) {
    throw std::domain_error(std::string(what) + " must be finite and >= 0, got " +
                            std::to_string(y));
  }
}

inline void require_observation(const CensorObservation& obs) {
  require_time(obs.tse, "tse");
  require_time(obs.tte, "tte");
}

// (y / scale)^shape together with its partials in scale and shape.
struct Cumhaz {
  double value = 0.0;
  double d_scale = 0.0;
  double d_shape = 0.0;
};

inline Cumhaz cumulative_hazard(double y, const WeibullParams& p) {
  Cumhaz h;
  if (y <= 0.0) return h;
  const double ratio = y / p.scale;
  h.value = std::pow(ratio, p.shape);
  h.d_scale = -p.shape * h.value / p.scale;
  h.d_shape = h.value * std::log(ratio);
  return h;
}

}  // namespace detail

/// S(y) = exp(-(y/scale)^shape).
inline double weibull_survival(double y, const WeibullParams& p) {
  detail::require_params(p);
  detail::require_time(y, "y");
  return std::exp(-detail::cumulative_hazard(y, p).value);
}

inline double weibull_density(double y, const WeibullParams& p) {
  detail::require_params(p);
  detail::require_time(y, "y");
  if (p.shape < 1.0 && y < kDensityOrigin) y = kDensityOrigin;
  const double ratio = y / p.scale;
  return (p.shape / p.scale) * std::pow(ratio, p.shape - 1.0) *
         std::exp(-std::pow(ratio, p.shape));
}

/// P(Y > s + t | Y > s), evaluated in log space as exp((s/l)^k - ((s+t)/l)^k).
inline double excess_survival(double t, double s, const WeibullParams& p) {
  detail::require_params(p);
  detail::require_time(t, "t");
  detail::require_time(s, "s");
  const double a = detail::cumulative_hazard(s, p).value;
  const double b = detail::cumulative_hazard(s + t, p).value;
  return std::exp(a - b);
}

inline double excess_density(double t, double s, const WeibullParams& p) {
  detail::require_params(p);
  detail::require_time(t, "t");
  detail::require_time(s, "s");
  double y = s + t;
  if (p.shape < 1.0 && y < kDensityOrigin) y = kDensityOrigin;
  const double ratio = y / p.scale;
  const double a = detail::cumulative_hazard(s, p).value;
  return (p.shape / p.scale) * std::pow(ratio, p.shape - 1.0) *
         std::exp(a - std::pow(ratio, p.shape));
}

namespace detail {

struct StepLikelihood {
  double value = 0.0;
  LogLikelihoodGradient grad;
};

// Shared evaluation so the value and its gradient follow the same clamping.
inline StepLikelihood evaluate_step(const CensorObservation& obs, const WeibullParams& p) {
  require_params(p);
  require_observation(obs);
  static const double log_floor = std::log(kProbabilityFloor);

  const Cumhaz a = cumulative_hazard(obs.tse, p);
  const Cumhaz b = cumulative_hazard(obs.tse + obs.tte, p);
  StepLikelihood out;
  if (!obs.uncensored) {
    out.value = a.value - b.value;
    out.grad = {a.d_scale - b.d_scale, a.d_shape - b.d_shape};
  } else {
    // log(S_Z(tte) - S_Z(tte+1)) = (a - b) + log(1 - exp(-(c - b)))
    const Cumhaz c = cumulative_hazard(obs.tse + obs.tte + 1.0, p);
    const double gap = c.value - b.value;
    if (!(gap > 0.0)) {
      out.value = log_floor;
      return out;
    }
    const double denom = std::expm1(gap);
    out.value = a.value - b.value + std::log(-std::expm1(-gap));
    out.grad.d_scale = a.d_scale - b.d_scale + (c.d_scale - b.d_scale) / denom;
    out.grad.d_shape = a.d_shape - b.d_shape + (c.d_shape - b.d_shape) / denom;
  }
  if (!(out.value > log_floor)) {
    out.value = log_floor;
    out.grad = {};
  } else if (out.value > 0.0) {
    out.value = 0.0;
    out.grad = {};
  }
  return out;
}

}  // namespace detail

/// Log-probability of one observation under the conditional-excess law of
/// Y given Y > tse. Uncensored uses the interval mass over [tte, tte + 1);
/// censored uses the tail beyond tte.
inline double step_log_likelihood(const CensorObservation& obs, const WeibullParams& p) {
  return detail::evaluate_step(obs, p).value;
}

/// Exact partials of step_log_likelihood; zero where the probability floor is active.
inline LogLikelihoodGradient step_log_likelihood_gradient(const CensorObservation& obs,
                                                          const WeibullParams& p) {
  return detail::evaluate_step(obs, p).grad;
}

}  // namespace arrival
