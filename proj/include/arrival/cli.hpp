#pragma once

// Subcommands of the `arrival` tool as plain functions returning exit codes.
//
// Config keys (flat key = value file, see README for the full table):
//   input, holdout, checkpoint, out, truth, processes, train_end, horizon,
//   task, window, stride, mode, tte_bin, hidden, learning_rate, iterations,
//   clip, seed, batch_size, max_shape, statistic, and the generator keys
//   scales, shapes, covariate_effect, coupling, coupling_factor, subjects, span.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "arrival/datagen.hpp"
#include "arrival/features.hpp"
#include "arrival/io.hpp"
#include "arrival/metrics.hpp"
#include "arrival/model.hpp"
#include "arrival/pipeline.hpp"

namespace arrival::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kInvalidInput = 2,
  kDiverged = 3,
  kEmptyDataset = 4,
  kShapeMismatch = 5,
};

inline constexpr GridTime kDefaultTrainEnd = 78;
inline constexpr GridTime kDefaultHorizon = 4;
inline constexpr std::size_t kDefaultHidden = 36;
inline constexpr std::size_t kDefaultRulHidden = 64;
inline constexpr std::size_t kDefaultRulWindow = 78;

enum class Task { kRetail, kRul };

struct RunConfig {
  std::string input;
  std::string holdout;  // defaults to input
  std::string checkpoint;
  std::string out;
  std::string truth;  // generator sidecar; defaults to <out>.truth.csv
  std::vector<std::string> processes;
  std::optional<GridTime> train_end;
  GridTime horizon = kDefaultHorizon;
  Task task = Task::kRetail;
  std::size_t window = 0;  // 0: train on full sequences
  std::size_t stride = 1;
  std::optional<std::size_t> hidden;
  ModelConfig model;
  PointStatistic statistic = PointStatistic::kMode;
  GeneratorSpec generator;

  void validate() const {
    if (train_end && *train_end < 2) throw std::invalid_argument("train_end must be >= 2");
    if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
    if (stride < 1) throw std::invalid_argument("stride must be >= 1");
  }
};

inline const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "input",      "holdout",       "checkpoint", "out",       "truth",
      "processes",  "train_end",     "horizon",    "task",      "window",
      "stride",     "mode",          "tte_bin",    "hidden",    "learning_rate",
      "iterations", "clip",          "seed",       "batch_size", "max_shape",
      "statistic",  "scales",        "shapes",     "covariate_effect",
      "coupling",   "coupling_factor", "subjects", "span"};
  return keys;
}

inline RunConfig parse_run_config(const io::KeyValueConfig& kv) {
  kv.ensure_known(known_keys());
  RunConfig rc;
  rc.input = kv.get("input");
  rc.holdout = kv.get("holdout");
  rc.checkpoint = kv.get("checkpoint");
  rc.out = kv.get("out");
  rc.truth = kv.get("truth");
  rc.processes = kv.get_list("processes");
  if (kv.has("train_end")) rc.train_end = kv.get_number<GridTime>("train_end", kDefaultTrainEnd);
  rc.horizon = kv.get_number<GridTime>("horizon", kDefaultHorizon);

  const auto task = kv.get("task", "retail");
  if (task == "retail") {
    rc.task = Task::kRetail;
  } else if (task == "rul") {
    rc.task = Task::kRul;
  } else {
    throw io::ParseError("task must be 'retail' or 'rul'");
  }
  const bool rul = rc.task == Task::kRul;
  rc.window = kv.get_number<std::size_t>("window", rul ? kDefaultRulWindow : 0);
  rc.stride = kv.get_number<std::size_t>("stride", 1);
  if (kv.has("hidden")) rc.hidden = kv.get_number<std::size_t>("hidden", kDefaultHidden);

  auto& m = rc.model;
  m.hidden = rc.hidden.value_or(rul ? kDefaultRulHidden : kDefaultHidden);
  if (kv.has("mode")) m.mode = parse_loss_mode(kv.get("mode"));
  if (kv.has("tte_bin")) m.tte_bin = parse_tte_bin(kv.get("tte_bin"));
  m.learning_rate = kv.get_number<double>("learning_rate", m.learning_rate);
  m.iterations = kv.get_number<int>("iterations", m.iterations);
  m.clip = kv.get_number<double>("clip", m.clip);
  m.seed = kv.get_number<std::uint64_t>("seed", m.seed);
  m.batch_size = kv.get_number<std::size_t>("batch_size", m.batch_size);
  m.max_shape = kv.get_number<double>("max_shape", m.max_shape);
  if (kv.has("statistic")) rc.statistic = parse_point_statistic(kv.get("statistic"));

  auto& g = rc.generator;
  const auto scales = kv.get_numbers<double>("scales");
  const auto shapes = kv.get_numbers<double>("shapes");
  if (scales.size() != shapes.size()) throw io::ParseError("scales and shapes differ in length");
  for (std::size_t i = 0; i < scales.size(); ++i) g.truth.push_back({scales[i], shapes[i]});
  g.covariate_effect = kv.get_number<double>("covariate_effect", g.covariate_effect);
  g.coupling = kv.get_number<double>("coupling", g.coupling);
  g.coupling_factor = kv.get_number<double>("coupling_factor", g.coupling_factor);
  g.subjects = kv.get_number<std::size_t>("subjects", g.subjects);
  g.window = kv.get_number<GridTime>("span", g.window);
  g.seed = m.seed;
  rc.validate();
  return rc;
}

/// Command-line flags that override config file values.
struct Overrides {
  std::string config;
  std::string checkpoint;
  std::string out;
  std::optional<std::uint64_t> seed;
};

inline RunConfig resolve_config(const Overrides& ov) {
  io::KeyValueConfig kv;
  if (!ov.config.empty()) kv = io::KeyValueConfig::load(ov.config);
  if (!ov.checkpoint.empty()) kv.set("checkpoint", ov.checkpoint);
  if (!ov.out.empty()) kv.set("out", ov.out);
  if (ov.seed) kv.set("seed", std::to_string(*ov.seed));
  return parse_run_config(kv);
}

namespace detail {

inline void require_path(const std::string& value, const char* key) {
  if (value.empty()) throw io::ParseError(std::string("missing required setting '") + key + "'");
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

inline std::string to_string(PointStatistic s) {
  switch (s) {
    case PointStatistic::kMode: return "mode";
    case PointStatistic::kMean: return "mean";
    case PointStatistic::kMedian: return "median";
  }
  return "mode";
}

/// Runs `body` and maps the error taxonomy onto exit codes.
template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const io::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kInvalidInput;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kInvalidInput;
  } catch (const TrainingDiverged& e) {
    err << "error: training diverged: " << e.what() << '\n';
    return kDiverged;
  } catch (const EmptyDataset& e) {
    err << "error: " << e.what() << '\n';
    return kEmptyDataset;
  } catch (const ShapeMismatch& e) {
    err << "error: shape mismatch: " << e.what() << '\n';
    return kShapeMismatch;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Training

struct TrainOutcome {
  io::Checkpoint checkpoint;
  std::vector<double> loss_history;
  double final_loss = 0.0;
};

inline TrainOutcome train_on_log(const TransactionLog& log, const RunConfig& rc) {
  const auto basket = rc.processes.empty() ? log.process_ids() : rc.processes;
  const GridTime tau = rc.train_end.value_or(kDefaultTrainEnd);
  const auto prep = prepare_subjects(log, basket, tau, true);
  if (prep.subject_ids.empty()) {
    throw EmptyDataset("no subject has an arrival in the training span");
  }
  const auto stats = compute_feature_stats(prep.features);
  auto data = assemble_training_data(prep, stats);
  if (rc.window > 0) {
    if (rc.window > static_cast<std::size_t>(tau)) {
      throw std::invalid_argument("window is longer than the training span");
    }
    data = windowed(data, rc.window, rc.stride);
  }
  ModelConfig cfg = rc.model;
  cfg.processes = basket.size();
  if (cfg.scale_anchor.empty()) cfg.scale_anchor = scale_anchors(prep.arrivals, basket.size());
  auto result = train(data, cfg);

  TrainOutcome out;
  out.checkpoint.model = {cfg, std::move(result.state)};
  out.checkpoint.process_ids = basket;
  out.checkpoint.feature_stats = stats;
  out.checkpoint.train_end = tau;
  out.loss_history = std::move(result.loss_history);
  out.final_loss = result.final_loss;
  return out;
}

inline void write_loss_history(std::ostream& out, std::span<const double> history) {
  out << "iteration,loss\n";
  for (std::size_t i = 0; i < history.size(); ++i) {
    out << (i + 1) << ',' << io::detail::format_double(history[i]) << '\n';
  }
}

inline int cmd_train(const RunConfig& rc, std::ostream& err = std::cerr) {
  return detail::guarded(err, [&] {
    detail::require_path(rc.input, "input");
    detail::require_path(rc.checkpoint, "checkpoint");
    const auto log = io::read_transactions(rc.input);
    const auto outcome = train_on_log(log, rc);
    io::save_checkpoint(rc.checkpoint, outcome.checkpoint);
    if (!rc.out.empty()) {
      auto out = detail::open_out(rc.out);
      write_loss_history(out, outcome.loss_history);
    }
    err << "trained " << outcome.loss_history.size() << " iterations, final loss "
        << detail::fmt(outcome.final_loss) << '\n';
    return int(kOk);
  });
}

// ---------------------------------------------------------------------------
// Prediction

struct PredictionRow {
  std::string subject_id;
  std::string process_id;
  std::optional<double> hit_probability;  // absent for squared-loss models
  double point = 0.0;                      // remaining-time point estimate
  double tse = 0.0;
  std::optional<WeibullParams> params;
};

/// Checks that the run config agrees with what the checkpoint was built for.
inline void require_compatible(const io::Checkpoint& ck, const RunConfig& rc) {
  if (!rc.processes.empty() && rc.processes != ck.process_ids) {
    throw ShapeMismatch("configured processes differ from the checkpoint's");
  }
  if (rc.hidden && *rc.hidden != ck.model.config.hidden) {
    throw ShapeMismatch("configured hidden width " + std::to_string(*rc.hidden) +
                        " differs from checkpoint width " + std::to_string(ck.model.config.hidden));
  }
  if (ck.feature_stats.mean.size() != feature_count(ck.process_ids.size()) ||
      ck.model.state.shape.inputs != feature_count(ck.process_ids.size())) {
    throw ShapeMismatch("checkpoint feature width does not match its process list");
  }
}

/// Predictions for every subject with history at or before the train end.
inline std::vector<PredictionRow> predict_log(const io::Checkpoint& ck, const TransactionLog& log,
                                              GridTime train_end, GridTime horizon,
                                              PointStatistic stat) {
  const auto prep = prepare_subjects(log, ck.process_ids, train_end, false);
  if (prep.subject_ids.empty()) throw EmptyDataset("no subject has history before the train end");
  const auto inputs = stack_inputs(prep.features, ck.feature_stats);
  const auto outs = final_outputs_batch(ck.model, inputs);
  const auto& cfg = ck.model.config;
  std::vector<PredictionRow> rows;
  for (std::size_t b = 0; b < prep.subject_ids.size(); ++b) {
    const auto tse = final_tse(prep.arrivals[b]);
    for (std::size_t i = 0; i < ck.process_ids.size(); ++i) {
      PredictionRow row{prep.subject_ids[b], ck.process_ids[i], std::nullopt, 0.0, tse[i],
                        std::nullopt};
      if (cfg.mode == LossMode::kSquared) {
        row.point = outs[b].point(0, i);
      } else {
        const auto& p = outs[b].param(0, i);
        const double s = cfg.mode == LossMode::kWtte ? 0.0 : tse[i];
        row.params = p;
        row.hit_probability = hit_probability(p, s, double(horizon));
        row.point = excess_point(p, s, stat);
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

inline void write_predictions(std::ostream& out, std::span<const PredictionRow> rows,
                              PointStatistic stat) {
  out << "subject_id,process_id,hit_probability," << detail::to_string(stat) << ",tse,scale,shape\n";
  for (const auto& r : rows) {
    out << r.subject_id << ',' << r.process_id << ','
        << (r.hit_probability ? io::detail::format_double(*r.hit_probability) : "") << ','
        << io::detail::format_double(r.point) << ',' << r.tse << ','
        << (r.params ? io::detail::format_double(r.params->scale) : "") << ','
        << (r.params ? io::detail::format_double(r.params->shape) : "") << '\n';
  }
}

inline int cmd_predict(const RunConfig& rc, std::ostream& err = std::cerr) {
  return detail::guarded(err, [&] {
    detail::require_path(rc.input, "input");
    detail::require_path(rc.checkpoint, "checkpoint");
    detail::require_path(rc.out, "out");
    const auto ck = io::load_checkpoint(rc.checkpoint);
    require_compatible(ck, rc);
    const auto log = io::read_transactions(rc.input);
    const auto rows =
        predict_log(ck, log, rc.train_end.value_or(ck.train_end), rc.horizon, rc.statistic);
    auto out = detail::open_out(rc.out);
    write_predictions(out, rows, rc.statistic);
    return int(kOk);
  });
}

// ---------------------------------------------------------------------------
// Evaluation

struct ProcessEvaluation {
  std::string process_id;
  std::optional<double> auc;  // absent when the holdout has a single class
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

struct EvaluationReport {
  std::vector<ProcessEvaluation> processes;
  std::optional<QuantileSummary> summary;
  std::optional<double> rmse;
  std::optional<double> mcl;
  std::size_t timed = 0;  // predictions with an observed next arrival
};

/// Scores subjects from history at or before train_end; labels come from
/// holdout arrivals in (train_end, train_end + horizon].
inline EvaluationReport evaluate_log(const io::Checkpoint& ck, const TransactionLog& history,
                                     const TransactionLog& holdout, GridTime train_end,
                                     GridTime horizon, PointStatistic stat) {
  const auto rows = predict_log(ck, history, train_end, horizon, stat);
  const std::size_t p = ck.process_ids.size();
  std::vector<std::vector<ScoredLabel>> scored(p);
  std::vector<RulPrediction> timed;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::size_t i = r % p;
    const auto next = next_arrival_after(holdout, row.subject_id, row.process_id, train_end);
    const double score = row.hit_probability ? *row.hit_probability : double(horizon) - row.point;
    scored[i].push_back({score, next && *next <= horizon});
    if (next) timed.push_back({row.point, double(*next)});
  }
  EvaluationReport rep;
  std::vector<double> aucs;
  for (std::size_t i = 0; i < p; ++i) {
    ProcessEvaluation pe;
    pe.process_id = ck.process_ids[i];
    for (const auto& s : scored[i]) (s.label ? pe.positives : pe.negatives) += 1;
    if (pe.positives > 0 && pe.negatives > 0) {
      pe.auc = roc_auc(scored[i]);
      aucs.push_back(*pe.auc);
    }
    rep.processes.push_back(pe);
  }
  if (!aucs.empty()) rep.summary = auc_quantile_summary(aucs);
  if (!timed.empty()) {
    rep.rmse = rmse(timed);
    rep.mcl = mean_custom_loss(timed);
    rep.timed = timed.size();
  }
  return rep;
}

/// Sections separated by a blank line: per-process AUC, the quantile
/// summary, then point-error metrics when any next arrival was observed.
inline void write_report(std::ostream& out, const EvaluationReport& rep) {
  auto opt = [](const std::optional<double>& v) {
    return v ? io::detail::format_double(*v) : std::string();
  };
  out << "process_id,auc,positives,negatives\n";
  for (const auto& p : rep.processes) {
    out << p.process_id << ',' << opt(p.auc) << ',' << p.positives << ',' << p.negatives << '\n';
  }
  out << "\nmin,q25,q50,q75,max,mean\n";
  if (rep.summary) {
    const auto& s = *rep.summary;
    out << opt(s.min) << ',' << opt(s.q25) << ',' << opt(s.q50) << ',' << opt(s.q75) << ','
        << opt(s.max) << ',' << opt(s.mean) << '\n';
  } else {
    out << ",,,,,\n";
  }
  if (rep.rmse) {
    out << "\nrmse,mcl,n\n" << opt(rep.rmse) << ',' << opt(rep.mcl) << ',' << rep.timed << '\n';
  }
}

inline int cmd_evaluate(const RunConfig& rc, std::ostream& err = std::cerr) {
  return detail::guarded(err, [&] {
    detail::require_path(rc.input, "input");
    detail::require_path(rc.checkpoint, "checkpoint");
    detail::require_path(rc.out, "out");
    const auto ck = io::load_checkpoint(rc.checkpoint);
    require_compatible(ck, rc);
    const auto history = io::read_transactions(rc.input);
    const auto holdout = rc.holdout.empty() ? history : io::read_transactions(rc.holdout);
    const auto rep = evaluate_log(ck, history, holdout, rc.train_end.value_or(ck.train_end),
                                  rc.horizon, rc.statistic);
    auto out = detail::open_out(rc.out);
    write_report(out, rep);
    return int(kOk);
  });
}

// ---------------------------------------------------------------------------
// Generation

inline std::string truth_path(const RunConfig& rc) {
  if (!rc.truth.empty()) return rc.truth;
  auto stem = rc.out;
  if (stem.size() > 4 && stem.ends_with(".csv")) stem.resize(stem.size() - 4);
  return stem + ".truth.csv";
}

inline void write_truth(std::ostream& out, const SyntheticDataset& ds) {
  out << "process_id,scale,shape,covariate_effect,coupling\n";
  for (std::size_t i = 0; i < ds.process_ids.size(); ++i) {
    out << ds.process_ids[i] << ',' << io::detail::format_double(ds.spec.truth[i].scale) << ','
        << io::detail::format_double(ds.spec.truth[i].shape) << ','
        << io::detail::format_double(ds.spec.covariate_effect) << ','
        << io::detail::format_double(ds.spec.coupling) << '\n';
  }
}

inline int cmd_generate(const RunConfig& rc, std::ostream& err = std::cerr) {
  return detail::guarded(err, [&] {
    detail::require_path(rc.out, "out");
    rc.generator.validate();
    const auto ds = generate(rc.generator);
    {
      auto out = detail::open_out(rc.out);
      io::write_transactions(out, to_transactions(ds));
    }
    auto truth = detail::open_out(truth_path(rc));
    write_truth(truth, ds);
    return int(kOk);
  });
}

}  // namespace arrival::cli
