#pragma once

// Transaction logs and the dense per-step covariates built from them:
// recency/frequency/monetary at overall, basket and per-process level, plus
// two per-process purchase-history series (first-purchase flag, log1p(tse)).

#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "arrival/event_grid.hpp"

namespace arrival {

struct Transaction {
  std::string subject_id;
  std::string process_id;
  GridTime t = 1;
  double value = 0.0;
  int quantity = 1;
};

class TransactionLog {
 public:
  TransactionLog() = default;

  explicit TransactionLog(std::vector<Transaction> records) : records_(std::move(records)) {
    for (std::size_t i = 0; i < records_.size(); ++i) {
      const auto& r = records_[i];
      if (r.subject_id.empty() || r.process_id.empty()) {
        throw std::invalid_argument("record " + std::to_string(i) + ": empty id");
      }
      if (r.t < 1) throw std::invalid_argument("record " + std::to_string(i) + ": t < 1");
      if (!(r.value >= 0.0) || !std::isfinite(r.value)) {
        throw std::invalid_argument("record " + std::to_string(i) + ": negative value");
      }
      if (r.quantity < 1) {
        throw std::invalid_argument("record " + std::to_string(i) + ": quantity < 1");
      }
      by_subject_[r.subject_id].push_back(i);
    }
  }

  const std::vector<Transaction>& records() const { return records_; }

  /// Sorted distinct subject ids.
  std::vector<std::string> subjects() const {
    std::vector<std::string> out;
    out.reserve(by_subject_.size());
    for (const auto& [id, _] : by_subject_) out.push_back(id);
    return out;
  }

  /// Sorted distinct process ids.
  std::vector<std::string> process_ids() const {
    std::map<std::string, bool> seen;
    for (const auto& r : records_) seen[r.process_id] = true;
    std::vector<std::string> out;
    for (const auto& [id, _] : seen) out.push_back(id);
    return out;
  }

  /// Records of one subject in file order; empty if unknown.
  std::vector<const Transaction*> for_subject(const std::string& subject) const {
    std::vector<const Transaction*> out;
    if (auto it = by_subject_.find(subject); it != by_subject_.end()) {
      for (auto i : it->second) out.push_back(&records_[i]);
    }
    return out;
  }

  bool has_subject(const std::string& subject) const { return by_subject_.contains(subject); }

 private:
  std::vector<Transaction> records_;
  std::map<std::string, std::vector<std::size_t>> by_subject_;
};

/// Arrival sequences of one subject for each basket process, using only
/// records at or before window_end.
inline std::vector<ArrivalSequence> subject_arrivals(const TransactionLog& log,
                                                     const std::string& subject,
                                                     GridTime window_end,
                                                     std::span<const std::string> basket) {
  std::vector<std::vector<GridTime>> steps(basket.size());
  for (const auto* r : log.for_subject(subject)) {
    for (std::size_t i = 0; i < basket.size(); ++i) {
      if (r->process_id == basket[i]) steps[i].push_back(r->t);
    }
  }
  std::vector<ArrivalSequence> out;
  out.reserve(basket.size());
  for (auto& s : steps) out.push_back(ArrivalSequence::from_steps(std::move(s), window_end));
  return out;
}

inline constexpr std::size_t kSharedFeatures = 6;
inline constexpr std::size_t kPerProcessFeatures = 5;

inline std::size_t feature_count(std::size_t processes) {
  return kSharedFeatures + kPerProcessFeatures * processes;
}

/// Channel names in layout order: overall RFM, basket RFM, then per process
/// (recency, frequency, monetary, pch, log_tse).
inline std::vector<std::string> feature_names(std::span<const std::string> basket) {
  std::vector<std::string> out = {"overall_recency", "overall_frequency", "overall_monetary",
                                  "basket_recency",  "basket_frequency",  "basket_monetary"};
  for (const auto& p : basket) {
    for (const char* n : {"recency", "frequency", "monetary", "pch", "log_tse"}) {
      out.push_back(p + "_" + n);
    }
  }
  return out;
}

/// Row-major [steps x channels].
struct FeatureSeries {
  std::size_t steps = 0;
  std::size_t channels = 0;
  std::vector<double> data;

  double& at(std::size_t step, std::size_t channel) { return data[step * channels + channel]; }
  double at(std::size_t step, std::size_t channel) const {
    return data[step * channels + channel];
  }
};

namespace detail {

// Running RFM state for one aggregation level.
struct RfmAccumulator {
  GridTime last = 0;
  int purchases = 0;
  double monetary = 0.0;

  void purchase(GridTime t, double value) {
    if (last != t) ++purchases;
    last = t;
    monetary += value;
  }
  double recency(GridTime t) const { return purchases > 0 ? double(t - last) : 0.0; }
  double frequency() const { return purchases > 1 ? double(purchases - 1) : 0.0; }
};

}  // namespace detail

/// Dense features for steps 1..window_end. Records after window_end never
/// influence the result. Processes outside `basket` count toward the overall
/// level only. Returns nullopt for an unknown subject.
inline std::optional<FeatureSeries> build_features(const TransactionLog& log,
                                                   const std::string& subject,
                                                   GridTime window_end,
                                                   std::span<const std::string> basket) {
  if (!log.has_subject(subject)) return std::nullopt;
  if (window_end < 1) throw std::invalid_argument("window_end must be >= 1");

  const std::size_t p = basket.size();
  // Per-step purchase value for overall (slot p), basket (slot p+1) and each process.
  std::vector<std::vector<double>> value(p + 2, std::vector<double>(window_end + 1, 0.0));
  std::vector<std::vector<bool>> bought(p + 2, std::vector<bool>(window_end + 1, false));
  for (const auto* r : log.for_subject(subject)) {
    if (r->t > window_end) continue;
    auto mark = [&](std::size_t slot) {
      value[slot][r->t] += r->value;
      bought[slot][r->t] = true;
    };
    mark(p);
    for (std::size_t i = 0; i < p; ++i) {
      if (r->process_id == basket[i]) {
        mark(i);
        mark(p + 1);
      }
    }
  }

  FeatureSeries out;
  out.steps = static_cast<std::size_t>(window_end);
  out.channels = feature_count(p);
  out.data.assign(out.steps * out.channels, 0.0);
  std::vector<detail::RfmAccumulator> acc(p + 2);
  for (GridTime t = 1; t <= window_end; ++t) {
    for (std::size_t slot = 0; slot < p + 2; ++slot) {
      if (bought[slot][t]) acc[slot].purchase(t, value[slot][t]);
    }
    const auto k = static_cast<std::size_t>(t - 1);
    auto put_rfm = [&](std::size_t base, const detail::RfmAccumulator& a) {
      out.at(k, base) = a.recency(t);
      out.at(k, base + 1) = a.frequency();
      out.at(k, base + 2) = a.monetary;
    };
    put_rfm(0, acc[p]);
    put_rfm(3, acc[p + 1]);
    for (std::size_t i = 0; i < p; ++i) {
      const std::size_t base = kSharedFeatures + kPerProcessFeatures * i;
      put_rfm(base, acc[i]);
      out.at(k, base + 3) = acc[i].purchases > 0 ? 1.0 : 0.0;
      out.at(k, base + 4) = std::log1p(double(t - acc[i].last));
    }
  }
  return out;
}

/// X * ln(N): mean purchases per customer weighted by log unique customers.
inline double basket_score(double mean_purchases, long long unique_customers) {
  if (unique_customers < 1) throw std::invalid_argument("unique_customers must be >= 1");
  if (!(mean_purchases >= 0.0)) throw std::invalid_argument("mean_purchases must be >= 0");
  return mean_purchases * std::log(static_cast<double>(unique_customers));
}

/// Per-channel population mean and standard deviation.
struct FeatureStats {
  std::vector<double> mean;
  std::vector<double> stddev;
};

inline constexpr double kZeroVariance = 1e-12;

inline FeatureStats compute_feature_stats(std::span<const FeatureSeries> series) {
  if (series.empty()) throw std::invalid_argument("no series to summarize");
  const std::size_t c = series.front().channels;
  FeatureStats st{std::vector<double>(c, 0.0), std::vector<double>(c, 0.0)};
  double n = 0.0;
  for (const auto& s : series) {
    if (s.channels != c) throw std::invalid_argument("channel count mismatch");
    for (std::size_t k = 0; k < s.steps; ++k) {
      for (std::size_t j = 0; j < c; ++j) st.mean[j] += s.at(k, j);
    }
    n += double(s.steps);
  }
  if (n == 0.0) return st;
  for (auto& m : st.mean) m /= n;
  for (const auto& s : series) {
    for (std::size_t k = 0; k < s.steps; ++k) {
      for (std::size_t j = 0; j < c; ++j) {
        const double d = s.at(k, j) - st.mean[j];
        st.stddev[j] += d * d;
      }
    }
  }
  for (auto& v : st.stddev) v = std::sqrt(v / n);
  return st;
}

/// z-score per channel; channels with zero variance become zeros.
inline FeatureSeries normalize_features(const FeatureSeries& series, const FeatureStats& stats) {
  if (stats.mean.size() != series.channels || stats.stddev.size() != series.channels) {
    throw std::invalid_argument("stats do not match series channels");
  }
  FeatureSeries out = series;
  for (std::size_t k = 0; k < series.steps; ++k) {
    for (std::size_t j = 0; j < series.channels; ++j) {
      const double sd = stats.stddev[j];
      out.at(k, j) = sd > kZeroVariance ? (series.at(k, j) - stats.mean[j]) / sd : 0.0;
    }
  }
  return out;
}

}  // namespace arrival
