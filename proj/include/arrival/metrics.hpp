#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace arrival {

struct ScoredLabel {
  double score = 0.0;
  bool label = false;
};

/// Mann-Whitney AUC from midrank sums: P(pos > neg) + 0.5 * P(tie).
/// Throws std::domain_error unless both classes are present.
inline double roc_auc(std::span<const ScoredLabel> items) {
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), 0);
  for (const auto& it : items) {
    if (!std::isfinite(it.score)) throw std::domain_error("roc_auc: non-finite score");
  }
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return items[a].score < items[b].score; });

  double positives = 0.0, rank_sum = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && items[order[j]].score == items[order[i]].score) ++j;
    const double midrank = 0.5 * double(i + 1 + j);  // mean of ranks i+1..j
    for (std::size_t k = i; k < j; ++k) {
      if (items[order[k]].label) {
        positives += 1.0;
        rank_sum += midrank;
      }
    }
    i = j;
  }
  const double negatives = double(items.size()) - positives;
  if (positives == 0.0 || negatives == 0.0) {
    throw std::domain_error("roc_auc: need both positive and negative labels");
  }
  return (rank_sum - positives * (positives + 1.0) / 2.0) / (positives * negatives);
}

/// PHM08 asymmetric penalty; d = predicted - actual. Late predictions
/// (d > 0) cost more than early ones.
inline double phm08_loss(double d) {
  if (!std::isfinite(d)) throw std::domain_error("phm08_loss: non-finite d");
  if (d < 0.0) return std::expm1(-d / 13.0);
  if (d > 0.0) return std::expm1(d / 10.0);
  return 0.0;
}

struct RulPrediction {
  double predicted = 0.0;
  double actual = 0.0;
};

namespace detail {

inline void check_rul(std::span<const RulPrediction> preds, const char* what) {
  if (preds.empty()) throw std::invalid_argument(std::string(what) + ": empty input");
  for (const auto& p : preds) {
    if (!(p.predicted >= 0.0 && p.actual >= 0.0) || !std::isfinite(p.predicted) ||
        !std::isfinite(p.actual)) {
      throw std::domain_error(std::string(what) + ": RUL values must be finite and non-negative");
    }
  }
}

}  // namespace detail

inline double mean_custom_loss(std::span<const RulPrediction> preds) {
  detail::check_rul(preds, "mean_custom_loss");
  double sum = 0.0;
  for (const auto& p : preds) sum += phm08_loss(p.predicted - p.actual);
  return sum / double(preds.size());
}

inline double rmse(std::span<const RulPrediction> preds) {
  detail::check_rul(preds, "rmse");
  double sum = 0.0;
  for (const auto& p : preds) {
    const double d = p.predicted - p.actual;
    sum += d * d;
  }
  return std::sqrt(sum / double(preds.size()));
}

struct QuantileSummary {
  double min = 0.0;
  double q25 = 0.0;
  double q50 = 0.0;
  double q75 = 0.0;
  double max = 0.0;
  double mean = 0.0;
};

/// Quantile with linear interpolation between order statistics at
/// position q * (n - 1). `sorted` must be ascending.
inline double interpolated_quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty input");
  const double pos = q * double(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - double(lo)) * (sorted[hi] - sorted[lo]);
}

inline QuantileSummary auc_quantile_summary(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("auc_quantile_summary: empty input");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  QuantileSummary s;
  s.min = v.front();
  s.q25 = interpolated_quantile(v, 0.25);
  s.q50 = interpolated_quantile(v, 0.50);
  s.q75 = interpolated_quantile(v, 0.75);
  s.max = v.back();
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
  return s;
}

}  // namespace arrival
