#pragma once

// Transaction log -> normalized input tensors, survival targets, holdout
// labels. Everything here sees only records at or before the train end,
// except the holdout helpers, which look strictly after it.

#include <algorithm>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "arrival/event_grid.hpp"
#include "arrival/features.hpp"
#include "arrival/model.hpp"
#include "arrival/neural.hpp"

namespace arrival {

class EmptyDataset : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PreparedSubjects {
  std::vector<std::string> basket;
  GridTime window_end = 0;
  std::vector<std::string> subject_ids;
  std::vector<FeatureSeries> features;                // raw, steps 1..window_end
  std::vector<std::vector<ArrivalSequence>> arrivals; // per basket process
};

/// Subjects with at least one record at or before window_end. With
/// `require_basket_arrival`, only those who bought a basket process by then.
inline PreparedSubjects prepare_subjects(const TransactionLog& log,
                                         std::span<const std::string> basket,
                                         GridTime window_end, bool require_basket_arrival) {
  if (basket.empty()) throw std::invalid_argument("basket is empty");
  if (window_end < 2) throw std::invalid_argument("train end must be >= 2");
  PreparedSubjects out;
  out.basket.assign(basket.begin(), basket.end());
  out.window_end = window_end;
  for (const auto& id : log.subjects()) {
    const auto recs = log.for_subject(id);
    if (std::none_of(recs.begin(), recs.end(), [&](auto* r) { return r->t <= window_end; })) continue;
    auto seqs = subject_arrivals(log, id, window_end, basket);
    if (require_basket_arrival &&
        std::all_of(seqs.begin(), seqs.end(), [](const auto& s) { return s.empty(); })) {
      continue;
    }
    out.subject_ids.push_back(id);
    out.features.push_back(*build_features(log, id, window_end, basket));
    out.arrivals.push_back(std::move(seqs));
  }
  return out;
}

/// Stacks normalized features into [subjects x steps x features].
inline nn::Tensor stack_inputs(std::span<const FeatureSeries> series, const FeatureStats& stats) {
  if (series.empty()) throw EmptyDataset("no subjects to stack");
  const std::size_t steps = series.front().steps, channels = series.front().channels;
  std::vector<double> data;
  data.reserve(series.size() * steps * channels);
  for (const auto& s : series) {
    if (s.steps != steps || s.channels != channels) {
      throw ShapeMismatch("feature series have different shapes");
    }
    const auto norm = normalize_features(s, stats);
    data.insert(data.end(), norm.data.begin(), norm.data.end());
  }
  return nn::Tensor({series.size(), steps, channels}, std::move(data));
}

inline TrainingData assemble_training_data(const PreparedSubjects& prep, const FeatureStats& stats) {
  TrainingData data;
  data.inputs = stack_inputs(prep.features, stats);
  for (const auto& seqs : prep.arrivals) data.targets.push_back(build_multivariate_targets(seqs));
  return data;
}

/// Cuts every subject into sliding windows of `window` steps; targets keep
/// their values from the full sequence.
inline TrainingData windowed(const TrainingData& data, std::size_t window, std::size_t stride) {
  if (data.inputs.rank() != 3) throw std::invalid_argument("inputs must be rank 3");
  const std::size_t n = data.inputs.dim(0), steps = data.inputs.dim(1), f = data.inputs.dim(2);
  const auto ranges = sliding_windows(steps, window, stride);
  TrainingData out;
  std::vector<double> buf;
  buf.reserve(n * ranges.size() * window * f);
  const auto src = data.inputs.data();
  for (std::size_t b = 0; b < n; ++b) {
    for (const auto& r : ranges) {
      const auto first = src.begin() + static_cast<std::ptrdiff_t>((b * steps + r.begin) * f);
      buf.insert(buf.end(), first, first + static_cast<std::ptrdiff_t>(window * f));
      SubjectTargets st;
      for (const auto& tg : data.targets[b]) {
        SurvivalTarget cut;
        auto slice = [&](const auto& v) {
          using V = std::decay_t<decltype(v)>;
          return V(v.begin() + static_cast<std::ptrdiff_t>(r.begin),
                   v.begin() + static_cast<std::ptrdiff_t>(r.end));
        };
        cut.tse = slice(tg.tse);
        cut.tte = slice(tg.tte);
        cut.uncensored = slice(tg.uncensored);
        cut.mask = slice(tg.mask);
        st.push_back(std::move(cut));
      }
      out.targets.push_back(std::move(st));
    }
  }
  out.inputs = nn::Tensor({out.targets.size(), window, f}, std::move(buf));
  return out;
}

/// Activated outputs at the last step for every subject in one forward pass.
inline std::vector<StepOutputs> final_outputs_batch(const TrainedModel& m, const nn::Tensor& inputs) {
  if (!m.trained()) throw std::logic_error("model has no trained state");
  if (inputs.rank() != 3 || inputs.dim(2) != m.state.shape.inputs) {
    throw ShapeMismatch("inputs have " + inputs.shape_string() + ", model expects " +
                        std::to_string(m.state.shape.inputs) + " features");
  }
  const auto raw = nn::forward(inputs, m.state);
  std::vector<StepOutputs> out;
  out.reserve(inputs.dim(0));
  for (std::size_t b = 0; b < inputs.dim(0); ++b) {
    const auto all = activate_subject(raw, b, m.config);
    StepOutputs last;
    last.steps = 1;
    last.processes = all.processes;
    const std::size_t off = (all.steps - 1) * all.processes;
    if (!all.params.empty()) {
      last.params.assign(all.params.begin() + static_cast<std::ptrdiff_t>(off), all.params.end());
    }
    if (!all.points.empty()) {
      last.points.assign(all.points.begin() + static_cast<std::ptrdiff_t>(off), all.points.end());
    }
    out.push_back(std::move(last));
  }
  return out;
}

/// Elapsed time since the last arrival at the final step of each process.
inline std::vector<double> final_tse(std::span<const ArrivalSequence> seqs) {
  std::vector<double> out;
  for (const auto& s : seqs) out.push_back(double(build_targets(s).tse.back()));
  return out;
}

/// First arrival strictly after `train_end`, as an offset from it.
inline std::optional<GridTime> next_arrival_after(const TransactionLog& log,
                                                  const std::string& subject,
                                                  const std::string& process, GridTime train_end) {
  std::optional<GridTime> best;
  for (const auto* r : log.for_subject(subject)) {
    if (r->process_id != process || r->t <= train_end) continue;
    if (!best || r->t - train_end < *best) best = r->t - train_end;
  }
  return best;
}

}  // namespace arrival
