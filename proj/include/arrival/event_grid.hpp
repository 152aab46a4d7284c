#pragma once

// Arrival timestamps on an integer grid 1..window_end, and the per-step
// supervision targets (tse, tte, censoring, mask) derived from them.

#include <algorithm>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace arrival {

using GridTime = int;

/// Strictly increasing arrival steps within (0, window_end].
class ArrivalSequence {
 public:
  ArrivalSequence() = default;

  ArrivalSequence(std::vector<GridTime> arrivals, GridTime window_end)
      : arrivals_(std::move(arrivals)), window_end_(window_end) {
    if (window_end_ <= 0) {
      throw std::invalid_argument("window_end must be positive");
    }
    for (std::size_t n = 0; n < arrivals_.size(); ++n) {
      const GridTime w = arrivals_[n];
      if (w <= 0 || w > window_end_) {
        throw std::invalid_argument("arrival " + std::to_string(w) + " outside (0, " +
                                    std::to_string(window_end_) + "]");
      }
      if (n > 0 && w <= arrivals_[n - 1]) {
        throw std::invalid_argument("arrivals must be strictly increasing");
      }
    }
  }

  /// Sorts and collapses repeated steps; steps outside the window are dropped.
  static ArrivalSequence from_steps(std::vector<GridTime> steps, GridTime window_end) {
    std::sort(steps.begin(), steps.end());
    steps.erase(std::unique(steps.begin(), steps.end()), steps.end());
    std::erase_if(steps, [&](GridTime w) { return w <= 0 || w > window_end; });
    return ArrivalSequence(std::move(steps), window_end);
  }

  const std::vector<GridTime>& arrivals() const { return arrivals_; }
  GridTime window_end() const { return window_end_; }
  bool empty() const { return arrivals_.empty(); }

  friend bool operator==(const ArrivalSequence&, const ArrivalSequence&) = default;

 private:
  std::vector<GridTime> arrivals_;
  GridTime window_end_ = 1;
};

/// Index k of each series holds the value at grid step t = k + 1.
struct SurvivalTarget {
  std::vector<int> tse;
  std::vector<int> tte;
  std::vector<bool> uncensored;
  std::vector<bool> mask;

  std::size_t steps() const { return tse.size(); }

  friend bool operator==(const SurvivalTarget&, const SurvivalTarget&) = default;
};

/// Number of arrivals at or before t.
inline int count_arrivals(const ArrivalSequence& seq, GridTime t) {
  if (t < 0 || t > seq.window_end()) {
    throw std::out_of_range("t=" + std::to_string(t) + " outside [0, " +
                            std::to_string(seq.window_end()) + "]");
  }
  const auto& a = seq.arrivals();
  return static_cast<int>(std::upper_bound(a.begin(), a.end(), t) - a.begin());
}

/// Single pass over steps 1..window_end. Before the first arrival tse counts
/// from the window start and the step is masked out of the loss. The final
/// step always carries tte = 0 (censored), which adds nothing to the loss.
inline SurvivalTarget build_targets(const ArrivalSequence& seq) {
  const GridTime tau = seq.window_end();
  const auto& arr = seq.arrivals();
  SurvivalTarget out;
  out.tse.resize(tau);
  out.tte.resize(tau);
  out.uncensored.resize(tau);
  out.mask.resize(tau);

  std::size_t next = 0;  // first arrival strictly after t
  GridTime last = 0;
  for (GridTime t = 1; t <= tau; ++t) {
    while (next < arr.size() && arr[next] <= t) last = arr[next++];
    const auto k = static_cast<std::size_t>(t - 1);
    out.tse[k] = t - last;
    if (next < arr.size()) {
      out.tte[k] = arr[next] - t;
      out.uncensored[k] = true;
    } else {
      out.tte[k] = tau - t;
      out.uncensored[k] = false;
    }
    out.mask[k] = !arr.empty() && t >= arr.front();
  }
  return out;
}

inline std::vector<SurvivalTarget> build_multivariate_targets(
    std::span<const ArrivalSequence> seqs) {
  std::vector<SurvivalTarget> out;
  out.reserve(seqs.size());
  for (const auto& s : seqs) {
    if (s.window_end() != seqs.front().window_end()) {
      throw std::invalid_argument("all processes must share the same window_end");
    }
    out.push_back(build_targets(s));
  }
  return out;
}

struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive

  std::size_t size() const { return end - begin; }
  friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

inline std::vector<IndexRange> sliding_windows(std::size_t length, std::size_t window,
                                               std::size_t stride = 1) {
  if (window == 0 || stride == 0) {
    throw std::invalid_argument("window and stride must be positive");
  }
  if (window > length) {
    throw std::invalid_argument("window " + std::to_string(window) +
                                " longer than series " + std::to_string(length));
  }
  std::vector<IndexRange> out;
  for (std::size_t b = 0; b + window <= length; b += stride) out.push_back({b, b + window});
  return out;
}

}  // namespace arrival
