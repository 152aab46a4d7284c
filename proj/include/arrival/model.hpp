#pragma once

// The recurrent arrival-time model: network outputs are mapped to Weibull
// (scale, shape) pairs per process, scored with the masked censored
// likelihood, and trained with clipped Adam. Squared-loss and WTTE-style
// training modes share the same network for comparisons.

#include <boost/math/quadrature/exp_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "arrival/event_grid.hpp"
#include "arrival/neural.hpp"
#include "arrival/rng.hpp"
#include "arrival/survival.hpp"

namespace arrival {

enum class LossMode {
  kMatRnn,   // parameters describe the full inter-arrival time, conditioned on tse
  kWtte,     // parameters describe the remaining time directly (tse treated as 0)
  kSquared,  // point estimate fitted by squared error on uncensored steps
};

/// Which unit bin an uncensored grid target tte stands for. Grid arrivals are
/// recorded at the end of their cell, so the remaining time of an observed
/// arrival tte steps ahead lies in [tte - 1, tte): kUpperEdge. kLowerEdge
/// reads it as [tte, tte + 1).
enum class TteBin { kUpperEdge, kLowerEdge };

inline std::string to_string(LossMode m) {
  switch (m) {
    case LossMode::kMatRnn: return "matrnn";
    case LossMode::kWtte: return "wtte";
    case LossMode::kSquared: return "sqloss";
  }
  return "?";
}

inline LossMode parse_loss_mode(const std::string& s) {
  if (s == "matrnn") return LossMode::kMatRnn;
  if (s == "wtte") return LossMode::kWtte;
  if (s == "sqloss") return LossMode::kSquared;
  throw std::invalid_argument("unknown loss mode '" + s + "' (matrnn, wtte, sqloss)");
}

inline std::string to_string(TteBin b) { return b == TteBin::kUpperEdge ? "upper" : "lower"; }

inline TteBin parse_tte_bin(const std::string& s) {
  if (s == "upper") return TteBin::kUpperEdge;
  if (s == "lower") return TteBin::kLowerEdge;
  throw std::invalid_argument("unknown tte_bin '" + s + "' (upper, lower)");
}

struct ModelConfig {
  std::size_t hidden = 36;
  std::size_t processes = 1;
  LossMode mode = LossMode::kMatRnn;
  double max_shape = kDefaultMaxShape;
  std::vector<double> scale_anchor;  // mean observed inter-arrival time per process
  double learning_rate = 1e-3;
  int iterations = 100;
  double clip = 5.0;
  std::uint64_t seed = 0;
  std::size_t batch_size = 0;  // 0 = full batch
  TteBin tte_bin = TteBin::kUpperEdge;

  std::size_t outputs_per_process() const { return mode == LossMode::kSquared ? 1 : 2; }
  std::size_t outputs() const { return outputs_per_process() * processes; }

  void validate() const {
    if (hidden < 1) throw std::invalid_argument("hidden size must be >= 1");
    if (processes < 1) throw std::invalid_argument("process count must be >= 1");
    if (!(max_shape > 1.0)) throw std::invalid_argument("max_shape must exceed 1");
    if (scale_anchor.size() != processes) {
      throw std::invalid_argument("need one scale anchor per process");
    }
    for (double m : scale_anchor) {
      if (!(m > 0.0) || !std::isfinite(m)) throw std::invalid_argument("scale anchor must be > 0");
    }
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be > 0");
    if (iterations < 0) throw std::invalid_argument("iterations must be >= 0");
    if (!(clip > 0.0)) throw std::invalid_argument("clip threshold must be > 0");
  }
};

// ---------------------------------------------------------------------------
// Output activations

inline constexpr double kShapeRawLimit = 30.0;
inline constexpr double kScaleRawLimit = 20.0;

/// max_shape * sigmoid(raw + logit(1 / max_shape)), written so raw = 0 gives
/// exactly 1. Raw values are clamped to +-30 which keeps the result strictly
/// inside (0, max_shape).
inline double activate_shape(double raw, double max_shape = kDefaultMaxShape) {
  const double r = std::clamp(raw, -kShapeRawLimit, kShapeRawLimit);
  return max_shape / (1.0 + (max_shape - 1.0) * std::exp(-r));
}

inline double activate_shape_derivative(double raw, double max_shape = kDefaultMaxShape) {
  if (std::abs(raw) >= kShapeRawLimit) return 0.0;
  const double k = activate_shape(raw, max_shape);
  return k * (1.0 - k / max_shape);
}

/// anchor * exp(raw) with raw clamped to +-20; raw = 0 gives the anchor.
inline double activate_scale(double raw, double anchor) {
  if (!(anchor > 0.0)) throw std::domain_error("scale anchor must be positive");
  return anchor * std::exp(std::clamp(raw, -kScaleRawLimit, kScaleRawLimit));
}

inline double activate_scale_derivative(double raw, double anchor) {
  if (std::abs(raw) >= kScaleRawLimit) return 0.0;
  return activate_scale(raw, anchor);
}

inline double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

/// Point estimate for the squared-loss mode: anchor * softplus(raw) / ln 2,
/// so raw = 0 maps to the anchor.
inline double activate_point(double raw, double anchor) {
  return anchor * softplus(raw) / std::numbers::ln2;
}

inline double activate_point_derivative(double raw, double anchor) {
  return anchor / (1.0 + std::exp(-raw)) / std::numbers::ln2;
}

// ---------------------------------------------------------------------------
// Per-step outputs of one subject

/// Activated outputs of one subject, row-major [steps x processes].
struct StepOutputs {
  std::size_t steps = 0;
  std::size_t processes = 0;
  std::vector<WeibullParams> params;  // distribution modes
  std::vector<double> points;         // squared-loss mode

  const WeibullParams& param(std::size_t t, std::size_t i) const {
    return params[t * processes + i];
  }
  double point(std::size_t t, std::size_t i) const { return points[t * processes + i]; }
};

/// Dense head layout: (raw_scale_1, raw_shape_1, ..., raw_scale_p, raw_shape_p),
/// or one raw point value per process in squared-loss mode.
inline StepOutputs activate_subject(const nn::Tensor& raw, std::size_t subject,
                                    const ModelConfig& cfg) {
  if (raw.rank() != 3 || raw.dim(2) != cfg.outputs()) {
    throw std::invalid_argument("raw outputs " + raw.shape_string() + " do not match config");
  }
  StepOutputs out;
  out.steps = raw.dim(1);
  out.processes = cfg.processes;
  if (cfg.mode == LossMode::kSquared) {
    out.points.resize(out.steps * out.processes);
  } else {
    out.params.resize(out.steps * out.processes);
  }
  for (std::size_t t = 0; t < out.steps; ++t) {
    for (std::size_t i = 0; i < cfg.processes; ++i) {
      const double anchor = cfg.scale_anchor[i];
      if (cfg.mode == LossMode::kSquared) {
        out.points[t * out.processes + i] = activate_point(raw(subject, t, i), anchor);
      } else {
        out.params[t * out.processes + i] = {
            activate_scale(raw(subject, t, 2 * i), anchor),
            activate_shape(raw(subject, t, 2 * i + 1), cfg.max_shape)};
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Losses

/// Likelihood observation for step k of a grid target.
inline CensorObservation observation_at(const SurvivalTarget& target, std::size_t k,
                                        LossMode mode, TteBin bin) {
  CensorObservation obs;
  obs.tse = mode == LossMode::kWtte ? 0.0 : double(target.tse[k]);
  obs.uncensored = target.uncensored[k];
  double tte = double(target.tte[k]);
  if (obs.uncensored && bin == TteBin::kUpperEdge) tte -= 1.0;
  if (tte < 0.0) {
    throw std::invalid_argument("uncensored target with tte=0 has no upper-edge bin");
  }
  obs.tte = tte;
  return obs;
}

namespace detail {

inline void require_alignment(const StepOutputs& out, std::span<const SurvivalTarget> targets) {
  if (targets.size() != out.processes) {
    throw std::invalid_argument("expected " + std::to_string(out.processes) +
                                " targets, got " + std::to_string(targets.size()));
  }
  for (const auto& tg : targets) {
    if (tg.steps() != out.steps) throw std::invalid_argument("target length != output steps");
  }
}

}  // namespace detail

/// Negative masked log-likelihood of one subject, summed over steps and processes.
inline double total_loss(const StepOutputs& out, std::span<const SurvivalTarget> targets,
                         LossMode mode, TteBin bin = TteBin::kUpperEdge) {
  if (mode == LossMode::kSquared) {
    throw std::invalid_argument("total_loss needs a likelihood mode; use sq_loss");
  }
  if (out.params.empty() && out.steps > 0) {
    throw std::invalid_argument("outputs carry no distribution parameters");
  }
  detail::require_alignment(out, targets);
  double ll = 0.0;
  for (std::size_t i = 0; i < out.processes; ++i) {
    for (std::size_t k = 0; k < out.steps; ++k) {
      if (!targets[i].mask[k]) continue;
      ll += step_log_likelihood(observation_at(targets[i], k, mode, bin), out.param(k, i));
    }
  }
  return -ll;
}

/// Squared error on masked, uncensored steps; censored steps contribute 0.
inline double sq_loss(const StepOutputs& out, std::span<const SurvivalTarget> targets) {
  if (out.points.empty() && out.steps > 0) {
    throw std::invalid_argument("outputs carry no point estimates");
  }
  detail::require_alignment(out, targets);
  double loss = 0.0;
  for (std::size_t i = 0; i < out.processes; ++i) {
    for (std::size_t k = 0; k < out.steps; ++k) {
      if (!targets[i].mask[k] || !targets[i].uncensored[k]) continue;
      const double d = out.point(k, i) - double(targets[i].tte[k]);
      loss += d * d;
    }
  }
  return loss;
}

using SubjectTargets = std::vector<SurvivalTarget>;

struct LossGradient {
  double loss = 0.0;
  nn::Tensor d_raw;  // same shape as the raw outputs
};

/// Batch loss (per-subject losses averaged over subjects) and its gradient
/// with respect to the raw network outputs. Masked steps get exactly zero.
inline LossGradient loss_and_gradient(const nn::Tensor& raw, std::span<const SubjectTargets> targets,
                                      const ModelConfig& cfg) {
  if (raw.rank() != 3 || raw.dim(0) != targets.size() || raw.dim(2) != cfg.outputs()) {
    throw std::invalid_argument("raw outputs " + raw.shape_string() +
                                " do not match targets/config");
  }
  const std::size_t nb = raw.dim(0), nt = raw.dim(1);
  LossGradient out{0.0, nn::Tensor(raw.shape())};
  if (nb == 0) return out;
  const double w = 1.0 / double(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    const auto& tg = targets[b];
    if (tg.size() != cfg.processes) throw std::invalid_argument("target count != processes");
    for (std::size_t i = 0; i < cfg.processes; ++i) {
      if (tg[i].steps() != nt) throw std::invalid_argument("target length != output steps");
      const double anchor = cfg.scale_anchor[i];
      for (std::size_t k = 0; k < nt; ++k) {
        if (!tg[i].mask[k]) continue;
        if (cfg.mode == LossMode::kSquared) {
          if (!tg[i].uncensored[k]) continue;
          const double r = raw(b, k, i);
          const double d = activate_point(r, anchor) - double(tg[i].tte[k]);
          out.loss += w * d * d;
          out.d_raw(b, k, i) = w * 2.0 * d * activate_point_derivative(r, anchor);
          continue;
        }
        const double rs = raw(b, k, 2 * i), rk = raw(b, k, 2 * i + 1);
        const WeibullParams p{activate_scale(rs, anchor), activate_shape(rk, cfg.max_shape)};
        const auto obs = observation_at(tg[i], k, cfg.mode, cfg.tte_bin);
        const auto step = detail::evaluate_step(obs, p);
        out.loss -= w * step.value;
        out.d_raw(b, k, 2 * i) = -w * step.grad.d_scale * activate_scale_derivative(rs, anchor);
        out.d_raw(b, k, 2 * i + 1) =
            -w * step.grad.d_shape * activate_shape_derivative(rk, cfg.max_shape);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Training

/// Inputs [subjects x steps x features] and per-subject, per-process targets.
struct TrainingData {
  nn::Tensor inputs;
  std::vector<SubjectTargets> targets;
};

struct TrainResult {
  nn::NetworkState state;
  std::vector<double> loss_history;  // mean per-subject loss during each iteration
  double final_loss = 0.0;           // full-data loss after the last update
};

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mean of uncensored inter-arrival gaps per process; the left-truncated gap
/// before the first arrival is not observed. Processes without any gap fall
/// back to the pooled mean, then to the window length.
inline std::vector<double> scale_anchors(std::span<const std::vector<ArrivalSequence>> subjects,
                                         std::size_t processes) {
  std::vector<double> sum(processes, 0.0), count(processes, 0.0);
  double window = 1.0;
  for (const auto& seqs : subjects) {
    if (seqs.size() != processes) throw std::invalid_argument("process count mismatch");
    for (std::size_t i = 0; i < processes; ++i) {
      const auto& a = seqs[i].arrivals();
      window = std::max(window, double(seqs[i].window_end()));
      for (std::size_t n = 1; n < a.size(); ++n) {
        sum[i] += double(a[n] - a[n - 1]);
        count[i] += 1.0;
      }
    }
  }
  const double total_count = std::accumulate(count.begin(), count.end(), 0.0);
  const double pooled = total_count > 0.0
                            ? std::accumulate(sum.begin(), sum.end(), 0.0) / total_count
                            : window;
  std::vector<double> out(processes);
  for (std::size_t i = 0; i < processes; ++i) out[i] = count[i] > 0.0 ? sum[i] / count[i] : pooled;
  return out;
}

inline nn::NetworkShape network_shape(const ModelConfig& cfg, std::size_t features) {
  return {features, cfg.hidden, cfg.outputs()};
}

namespace detail {

inline nn::Tensor gather_rows(const nn::Tensor& t, std::span<const std::size_t> rows) {
  const std::size_t stride = t.dim(1) * t.dim(2);
  std::vector<double> data(rows.size() * stride);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::copy_n(t.data().begin() + static_cast<std::ptrdiff_t>(rows[r] * stride), stride,
                data.begin() + static_cast<std::ptrdiff_t>(r * stride));
  }
  return nn::Tensor({rows.size(), t.dim(1), t.dim(2)}, std::move(data));
}

}  // namespace detail

/// Mean per-subject loss of `state` on the whole data set.
namespace detail {

inline void require_finite_outputs(const nn::Tensor& raw, const std::string& where) {
  for (double v : raw.data()) {
    if (!std::isfinite(v)) throw TrainingDiverged("non-finite network output " + where);
  }
}

}  // namespace detail

inline double evaluate_loss(const nn::NetworkState& state, const TrainingData& data,
                            const ModelConfig& cfg) {
  const auto raw = nn::forward(data.inputs, state);
  detail::require_finite_outputs(raw, "after training");
  return loss_and_gradient(raw, data.targets, cfg).loss;
}

/// Continues optimizing `state` for cfg.iterations passes over the data.
inline TrainResult train_from(nn::NetworkState state, const TrainingData& data,
                              const ModelConfig& cfg) {
  cfg.validate();
  const std::size_t n = data.targets.size();
  if (n == 0 || data.inputs.rank() != 3 || data.inputs.dim(0) != n) {
    throw std::invalid_argument("training data is empty or inconsistent");
  }
  const std::size_t batch = cfg.batch_size == 0 ? n : std::min(cfg.batch_size, n);
  const nn::AdamOptions adam{cfg.learning_rate};
  Rng shuffle_rng(mix_seed(cfg.seed, 1));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  result.loss_history.reserve(static_cast<std::size_t>(cfg.iterations));
  nn::ForwardCache cache;
  for (int it = 0; it < cfg.iterations; ++it) {
    if (batch < n) {
      for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[shuffle_rng.below(i + 1)]);
    }
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t len = std::min(batch, n - start);
      const std::span<const std::size_t> rows(order.data() + start, len);
      nn::Tensor xb;
      std::vector<SubjectTargets> tb;
      const nn::Tensor* x = &data.inputs;
      std::span<const SubjectTargets> targets = data.targets;
      if (len < n) {
        xb = detail::gather_rows(data.inputs, rows);
        for (auto r : rows) tb.push_back(data.targets[r]);
        x = &xb;
        targets = tb;
      }
      const auto raw = nn::forward(*x, state, &cache);
      detail::require_finite_outputs(raw, "at iteration " + std::to_string(it));
      auto lg = loss_and_gradient(raw, targets, cfg);
      if (!std::isfinite(lg.loss)) {
        throw TrainingDiverged("non-finite loss at iteration " + std::to_string(it));
      }
      epoch_loss += lg.loss * double(len) / double(n);
      auto grad = nn::backward(lg.d_raw, cache, state);
      if (!grad.allFinite()) {
        throw TrainingDiverged("non-finite gradient at iteration " + std::to_string(it));
      }
      nn::adam_update(state, nn::clip_gradients(std::move(grad), cfg.clip), adam);
    }
    result.loss_history.push_back(epoch_loss);
  }
  result.final_loss = evaluate_loss(state, data, cfg);
  if (!std::isfinite(result.final_loss)) throw TrainingDiverged("non-finite final loss");
  result.state = std::move(state);
  return result;
}

/// Fresh network seeded from cfg.seed, then train_from.
inline TrainResult train(const TrainingData& data, const ModelConfig& cfg) {
  cfg.validate();
  if (data.inputs.rank() != 3) throw std::invalid_argument("inputs must be rank 3");
  auto state = nn::init_network(network_shape(cfg, data.inputs.dim(2)), mix_seed(cfg.seed, 0));
  return train_from(std::move(state), data, cfg);
}

// ---------------------------------------------------------------------------
// Queries on the conditional-excess distribution

/// P(Z <= horizon) for Z = Y - s | Y > s.
inline double hit_probability(const WeibullParams& p, double s, double horizon) {
  return 1.0 - excess_survival(horizon, s, p);
}

/// P(Z in [g1, g1 + g2] | Z > g1); the ratio of excess survivals equals the
/// excess survival conditioned at s + g1, so no division is needed.
inline double deferred_probability(const WeibullParams& p, double s, double g1, double g2) {
  return 1.0 - excess_survival(g2, s + g1, p);
}

enum class PointStatistic { kMode, kMean, kMedian };

inline PointStatistic parse_point_statistic(const std::string& s) {
  if (s == "mode") return PointStatistic::kMode;
  if (s == "mean") return PointStatistic::kMean;
  if (s == "median") return PointStatistic::kMedian;
  throw std::invalid_argument("unsupported statistic '" + s + "' (mode, mean, median)");
}

/// Unconditional Weibull mode: scale * ((k-1)/k)^(1/k) for k > 1, else 0.
inline double weibull_mode(const WeibullParams& p) {
  if (p.shape <= 1.0) return 0.0;
  return p.scale * std::pow((p.shape - 1.0) / p.shape, 1.0 / p.shape);
}

/// Mode of the excess density f(s + t) / S(s) on t >= 0.
inline double excess_mode(const WeibullParams& p, double s) {
  detail::require_params(p);
  detail::require_time(s, "s");
  return std::max(weibull_mode(p) - s, 0.0);
}

/// q-quantile of the excess distribution, from inverting its survival curve.
inline double excess_quantile(const WeibullParams& p, double s, double q) {
  detail::require_params(p);
  detail::require_time(s, "s");
  if (!(q > 0.0 && q < 1.0)) throw std::domain_error("quantile level must be in (0, 1)");
  const double a = detail::cumulative_hazard(s, p).value;
  return std::max(p.scale * std::pow(a - std::log1p(-q), 1.0 / p.shape) - s, 0.0);
}

inline double excess_median(const WeibullParams& p, double s) { return excess_quantile(p, s, 0.5); }

/// E[Z] = integral of the excess survival. With u = H(s + t) - H(s) the
/// integral becomes int_0^inf t(u) e^{-u} du, evaluated by a double
/// exponential (exp-sinh) trapezoid rule.
inline double excess_mean(const WeibullParams& p, double s) {
  detail::require_params(p);
  detail::require_time(s, "s");
  const double a = detail::cumulative_hazard(s, p).value;
  const double inv_k = 1.0 / p.shape;
  auto t_of_u = [&](double u) {
    if (a > 0.0) return s * std::expm1(std::log1p(u / a) * inv_k);
    return p.scale * std::pow(u, inv_k);
  };
  boost::math::quadrature::exp_sinh<double> integrator;
  double err = 0.0;
  const double value = integrator.integrate(
      [&](double u) {
        const double v = t_of_u(u) * std::exp(-u);
        return std::isfinite(v) ? v : 0.0;
      },
      1e-12, &err);
  return value;
}

inline double excess_point(const WeibullParams& p, double s, PointStatistic stat) {
  switch (stat) {
    case PointStatistic::kMode: return excess_mode(p, s);
    case PointStatistic::kMean: return excess_mean(p, s);
    case PointStatistic::kMedian: return excess_median(p, s);
  }
  throw std::invalid_argument("unsupported statistic");
}

// ---------------------------------------------------------------------------
// Forecasts from a trained network

struct TrainedModel {
  ModelConfig config;
  nn::NetworkState state;

  bool trained() const { return state.weights.size() > 0; }
};

/// Covariates over the training span [steps x features] and the elapsed
/// time since the last arrival of each process at its final step.
struct SubjectHistory {
  nn::Tensor inputs;
  std::vector<double> final_tse;
};

namespace detail {

inline void require_trained(const TrainedModel& m) {
  if (!m.trained()) throw std::logic_error("model has no trained state");
}

inline nn::Tensor as_batch(const nn::Tensor& inputs) {
  if (inputs.rank() == 3) return inputs;
  if (inputs.rank() != 2) throw std::invalid_argument("history inputs must be [steps x features]");
  return nn::Tensor({1, inputs.dim(0), inputs.dim(1)},
                    std::vector<double>(inputs.data().begin(), inputs.data().end()));
}

inline double conditioning_value(const TrainedModel& m, const SubjectHistory& h, std::size_t i) {
  if (i >= m.config.processes || h.final_tse.size() != m.config.processes) {
    throw std::out_of_range("process index or tse vector out of range");
  }
  return m.config.mode == LossMode::kWtte ? 0.0 : h.final_tse[i];
}

}  // namespace detail

/// Activated outputs at the last step, one entry per process.
inline StepOutputs final_outputs(const TrainedModel& m, const SubjectHistory& h) {
  detail::require_trained(m);
  const auto batch = detail::as_batch(h.inputs);
  if (batch.dim(1) == 0) throw std::invalid_argument("history has no steps");
  const auto raw = nn::forward(batch, m.state);
  const auto all = activate_subject(raw, 0, m.config);
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
  return last;
}

inline double predict_hit_probability(const TrainedModel& m, const SubjectHistory& h,
                                      std::size_t i, double horizon) {
  if (m.config.mode == LossMode::kSquared) {
    throw std::logic_error("squared-loss model has no predictive distribution");
  }
  const double s = detail::conditioning_value(m, h, i);
  return hit_probability(final_outputs(m, h).param(0, i), s, horizon);
}

inline double predict_deferred_probability(const TrainedModel& m, const SubjectHistory& h,
                                           std::size_t i, double g1, double g2) {
  if (m.config.mode == LossMode::kSquared) {
    throw std::logic_error("squared-loss model has no predictive distribution");
  }
  const double s = detail::conditioning_value(m, h, i);
  return deferred_probability(final_outputs(m, h).param(0, i), s, g1, g2);
}

/// Point forecast of the remaining time. Squared-loss models return their
/// fitted point estimate for every statistic.
inline double predict_point(const TrainedModel& m, const SubjectHistory& h, std::size_t i,
                            PointStatistic stat) {
  const double s = detail::conditioning_value(m, h, i);
  const auto out = final_outputs(m, h);
  if (m.config.mode == LossMode::kSquared) return out.point(0, i);
  return excess_point(out.param(0, i), s, stat);
}

/// Ranking score for "arrival within horizon": the hit probability, or
/// horizon minus the predicted remaining time for squared-loss models.
inline double predict_score(const TrainedModel& m, const SubjectHistory& h, std::size_t i,
                            double horizon) {
  if (m.config.mode == LossMode::kSquared) {
    return horizon - predict_point(m, h, i, PointStatistic::kMode);
  }
  return predict_hit_probability(m, h, i, horizon);
}

}  // namespace arrival
