#pragma once

// Synthetic multivariate arrival processes with known Weibull ground truth.
//
// Each subject draws a covariate z ~ U(-1, 1); process i then has scale
// scale_i * exp(covariate_effect * z). Arrivals are simulated in continuous
// time: every process keeps a pending next-arrival time, the earliest one
// fires, and with probability `coupling` each other process has its pending
// wait shortened by `coupling_factor`. Continuous times are recorded on the
// grid at the end of their cell (ceil) and truncated at the window end,
// which right-censors the last span.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "arrival/event_grid.hpp"
#include "arrival/features.hpp"
#include "arrival/rng.hpp"
#include "arrival/survival.hpp"

namespace arrival {

struct GeneratorSpec {
  std::vector<WeibullParams> truth;  // per process
  double covariate_effect = 0.0;
  double coupling = 0.0;
  double coupling_factor = 0.5;
  std::size_t subjects = 100;
  GridTime window = 100;
  std::uint64_t seed = 0;

  void validate(double max_shape = kDefaultMaxShape) const {
    if (truth.empty()) throw std::invalid_argument("generator needs at least one process");
    for (const auto& p : truth) {
      if (!(p.scale > 0.0) || !(p.shape > 0.0) || !(p.shape < max_shape)) {
        throw std::invalid_argument("ground truth needs scale > 0 and 0 < shape < max_shape");
      }
    }
    if (!(coupling >= 0.0 && coupling <= 1.0)) {
      throw std::invalid_argument("coupling must be in [0, 1]");
    }
    if (!(coupling_factor > 0.0 && coupling_factor <= 1.0)) {
      throw std::invalid_argument("coupling_factor must be in (0, 1]");
    }
    if (!std::isfinite(covariate_effect)) throw std::invalid_argument("bad covariate_effect");
    if (window < 2) throw std::invalid_argument("window must be >= 2");
    if (subjects < 1) throw std::invalid_argument("need at least one subject");
  }
};

struct SyntheticSubject {
  std::string id;
  double covariate = 0.0;
  std::vector<WeibullParams> params;             // effective per-process truth
  std::vector<std::vector<double>> event_times;  // continuous arrival times per process
  std::vector<ArrivalSequence> arrivals;         // grid arrivals per process

  /// Constant covariate series over the window.
  std::vector<double> covariate_series() const {
    return std::vector<double>(static_cast<std::size_t>(arrivals.front().window_end()), covariate);
  }
};

struct SyntheticDataset {
  GeneratorSpec spec;
  std::vector<std::string> process_ids;
  std::vector<SyntheticSubject> subjects;
};

/// Inverse-transform sample scale * (-ln u)^(1/shape) for u in (0, 1).
inline double weibull_from_uniform(double scale, double shape, double u) {
  return scale * std::pow(-std::log(u), 1.0 / shape);
}

inline double sample_weibull(double scale, double shape, Rng& rng) {
  if (!(scale > 0.0) || !(shape > 0.0)) throw std::invalid_argument("invalid Weibull parameters");
  return weibull_from_uniform(scale, shape, rng.uniform());
}

namespace detail {

inline std::string padded_id(char prefix, std::size_t n, std::size_t total) {
  std::string digits = std::to_string(n);
  const std::size_t width = std::to_string(total > 0 ? total - 1 : 0).size();
  return std::string(1, prefix) + std::string(width - std::min(width, digits.size()), '0') + digits;
}

}  // namespace detail

inline SyntheticDataset generate(const GeneratorSpec& spec) {
  spec.validate();
  const std::size_t p = spec.truth.size();
  SyntheticDataset ds;
  ds.spec = spec;
  for (std::size_t i = 0; i < p; ++i) ds.process_ids.push_back(detail::padded_id('p', i, p));
  ds.subjects.reserve(spec.subjects);
  const double window = double(spec.window);

  for (std::size_t s = 0; s < spec.subjects; ++s) {
    Rng rng(mix_seed(spec.seed, s));
    SyntheticSubject sub;
    sub.id = detail::padded_id('s', s, spec.subjects);
    sub.covariate = rng.uniform(-1.0, 1.0);
    for (const auto& t : spec.truth) {
      sub.params.push_back({t.scale * std::exp(spec.covariate_effect * sub.covariate), t.shape});
    }
    sub.event_times.assign(p, {});
    std::vector<double> pending(p);
    for (std::size_t i = 0; i < p; ++i) {
      pending[i] = sample_weibull(sub.params[i].scale, sub.params[i].shape, rng);
    }
    while (true) {
      std::size_t fired = 0;
      for (std::size_t i = 1; i < p; ++i) {
        if (pending[i] < pending[fired]) fired = i;
      }
      const double now = pending[fired];
      if (now > window) break;
      sub.event_times[fired].push_back(now);
      if (spec.coupling > 0.0) {
        for (std::size_t j = 0; j < p; ++j) {
          if (j != fired && rng.uniform() < spec.coupling) {
            pending[j] = now + (pending[j] - now) * spec.coupling_factor;
          }
        }
      }
      pending[fired] = now + sample_weibull(sub.params[fired].scale, sub.params[fired].shape, rng);
    }
    for (std::size_t i = 0; i < p; ++i) {
      std::vector<GridTime> steps;
      for (double x : sub.event_times[i]) steps.push_back(static_cast<GridTime>(std::ceil(x)));
      sub.arrivals.push_back(ArrivalSequence::from_steps(std::move(steps), spec.window));
    }
    ds.subjects.push_back(std::move(sub));
  }
  return ds;
}

struct CensoringSummary {
  double fraction = 0.0;
  bool has_observed_steps = false;  // false: every step was masked
};

/// Share of unmasked per-step targets that are censored.
inline CensoringSummary censoring_fraction(const SyntheticDataset& ds) {
  if (ds.subjects.empty()) throw std::invalid_argument("empty dataset");
  double unmasked = 0.0, censored = 0.0;
  for (const auto& sub : ds.subjects) {
    for (const auto& tg : build_multivariate_targets(sub.arrivals)) {
      for (std::size_t k = 0; k < tg.steps(); ++k) {
        if (!tg.mask[k]) continue;
        unmasked += 1.0;
        if (!tg.uncensored[k]) censored += 1.0;
      }
    }
  }
  if (unmasked == 0.0) return {0.0, false};
  return {censored / unmasked, true};
}

/// One transaction per grid arrival. Values are 10 * exp(z) rounded to
/// cents so monetary covariates carry the subject covariate.
inline TransactionLog to_transactions(const SyntheticDataset& ds) {
  std::vector<Transaction> rows;
  for (const auto& sub : ds.subjects) {
    const double value = std::round(1000.0 * std::exp(sub.covariate)) / 100.0;
    for (std::size_t i = 0; i < sub.arrivals.size(); ++i) {
      for (GridTime t : sub.arrivals[i].arrivals()) {
        rows.push_back({sub.id, ds.process_ids[i], t, value, 1});
      }
    }
  }
  return TransactionLog(std::move(rows));
}

}  // namespace arrival
