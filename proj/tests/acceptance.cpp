// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
// failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "arrival/arrival.hpp"

namespace fs = std::filesystem;
using namespace arrival;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

bool close_enough(double analytic, double numeric) {
  const double diff = std::abs(analytic - numeric);
  return diff <= 1e-7 || diff <= 1e-4 * std::max(std::abs(analytic), std::abs(numeric));
}

// ---------------------------------------------------------------------------
// 1. Gradient correctness

Outcome gradient_correctness() {
  Rng rng(mix_seed(2024, 1));
  int configs = 0;
  long checked = 0, failed = 0;
  double worst = 0.0;
  while (configs < 24) {
    const std::size_t p = 1 + rng.below(2);
    const std::size_t steps = 1 + rng.below(5);
    const std::size_t batch = 2 + rng.below(2);
    ModelConfig cfg;
    cfg.hidden = 1 + rng.below(8);
    cfg.processes = p;
    cfg.mode = configs % 2 == 0 ? LossMode::kMatRnn : LossMode::kWtte;
    cfg.tte_bin = rng.below(2) == 0 ? TteBin::kUpperEdge : TteBin::kLowerEdge;
    for (std::size_t i = 0; i < p; ++i) cfg.scale_anchor.push_back(rng.uniform(1.0, 4.0));

    std::vector<SubjectTargets> targets;
    bool censored = false, uncensored = false, masked = false;
    for (std::size_t b = 0; b < batch; ++b) {
      SubjectTargets st;
      for (std::size_t i = 0; i < p; ++i) {
        std::vector<GridTime> steps_hit;
        for (std::size_t t = 1; t <= steps; ++t) {
          if (rng.uniform() < 0.35) steps_hit.push_back(GridTime(t));
        }
        st.push_back(build_targets(ArrivalSequence(steps_hit, GridTime(steps))));
        for (std::size_t k = 0; k < steps; ++k) {
          masked |= !st.back().mask[k];
          censored |= st.back().mask[k] && !st.back().uncensored[k];
          uncensored |= st.back().mask[k] && st.back().uncensored[k];
        }
      }
      targets.push_back(std::move(st));
    }
    if (!(censored && uncensored && masked)) continue;

    const std::size_t features = 1 + rng.below(3);
    std::vector<double> x(batch * steps * features);
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    const nn::Tensor inputs({batch, steps, features}, x);
    auto state = nn::init_network(network_shape(cfg, features), mix_seed(7, configs));

    nn::ForwardCache cache;
    const auto raw = nn::forward(inputs, state, &cache);
    const auto lg = loss_and_gradient(raw, targets, cfg);
    const auto analytic = nn::backward(lg.d_raw, cache, state);

    const double h = 1e-5;
    for (nn::Index j = 0; j < state.weights.size(); ++j) {
      const double w0 = state.weights[j];
      state.weights[j] = w0 + h;
      const double up = loss_and_gradient(nn::forward(inputs, state), targets, cfg).loss;
      state.weights[j] = w0 - h;
      const double down = loss_and_gradient(nn::forward(inputs, state), targets, cfg).loss;
      state.weights[j] = w0;
      const double numeric = (up - down) / (2.0 * h);
      ++checked;
      failed += !close_enough(analytic[j], numeric);
      worst = std::max(worst, std::abs(analytic[j] - numeric));
    }
    ++configs;
  }
  return {failed == 0, fmt("%d configurations, %ld components, %ld mismatches (worst abs %.3g)",
                           configs, checked, failed, worst)};
}

// ---------------------------------------------------------------------------
// 2. Likelihood identities

Outcome likelihood_identities() {
  Rng rng(mix_seed(2024, 2));
  double worst_factor = 0.0, worst_memoryless = 0.0, worst_mode = 0.0;
  for (int n = 0; n < 20000; ++n) {
    const WeibullParams p{rng.uniform(0.5, 50.0), rng.uniform(0.2, 9.9)};
    const double s = rng.uniform(0.0, 3.0 * p.scale);
    const double t = rng.uniform(0.0, 3.0 * p.scale);
    worst_factor = std::max(worst_factor, std::abs(weibull_survival(s + t, p) -
                                                   excess_survival(t, s, p) * weibull_survival(s, p)));
    const WeibullParams e{p.scale, 1.0};
    worst_memoryless =
        std::max(worst_memoryless, std::abs(excess_survival(t, s, e) - weibull_survival(t, e)));
  }
  for (int n = 0; n < 500; ++n) {
    const std::size_t steps = 2 + rng.below(60), procs = 1 + rng.below(3);
    StepOutputs out;
    out.steps = steps;
    out.processes = procs;
    for (std::size_t k = 0; k < steps * procs; ++k) {
      out.params.push_back({rng.uniform(0.5, 30.0), rng.uniform(0.3, 5.0)});
    }
    std::vector<SurvivalTarget> targets, zeroed;
    for (std::size_t i = 0; i < procs; ++i) {
      std::vector<GridTime> hits;
      for (std::size_t t = 1; t <= steps; ++t) {
        if (rng.uniform() < 0.2) hits.push_back(GridTime(t));
      }
      targets.push_back(build_targets(ArrivalSequence(hits, GridTime(steps))));
      zeroed.push_back(targets.back());
      std::fill(zeroed.back().tse.begin(), zeroed.back().tse.end(), 0);
    }
    worst_mode = std::max(worst_mode, std::abs(total_loss(out, zeroed, LossMode::kMatRnn) -
                                               total_loss(out, targets, LossMode::kWtte)));
  }
  const bool pass = worst_factor <= 1e-12 && worst_memoryless <= 1e-12 && worst_mode <= 1e-12;
  return {pass, fmt("max |factorization| %.3g, |memoryless| %.3g, |matrnn-wtte| %.3g",
                    worst_factor, worst_memoryless, worst_mode)};
}

// ---------------------------------------------------------------------------
// 3. Event-grid oracle

SurvivalTarget scan_targets(const std::vector<GridTime>& arrivals, GridTime tau) {
  SurvivalTarget out;
  for (GridTime t = 1; t <= tau; ++t) {
    GridTime last = 0;
    bool seen = false;
    for (GridTime a : arrivals) {
      if (a <= t) {
        last = a;
        seen = true;
      }
    }
    GridTime next = -1;
    for (GridTime a : arrivals) {
      if (a > t) {
        next = a;
        break;
      }
    }
    out.tse.push_back(t - last);
    out.tte.push_back(next > 0 ? next - t : tau - t);
    out.uncensored.push_back(next > 0);
    out.mask.push_back(seen);
  }
  return out;
}

Outcome event_grid_oracle() {
  Rng rng(mix_seed(2024, 3));
  int mismatches = 0;
  for (int n = 0; n < 1000; ++n) {
    const GridTime tau = GridTime(2 + rng.below(199));
    const std::size_t count = rng.below(21);
    std::vector<GridTime> hits;
    for (std::size_t k = 0; k < count; ++k) hits.push_back(GridTime(1 + rng.below(std::size_t(tau))));
    const auto seq = ArrivalSequence::from_steps(hits, tau);
    const auto got = build_targets(seq);
    const auto want = scan_targets(seq.arrivals(), tau);
    if (got.tse != want.tse || got.tte != want.tte || got.uncensored != want.uncensored ||
        got.mask != want.mask) {
      ++mismatches;
    }
  }
  const auto fig = build_targets(ArrivalSequence({16, 28, 32}, 40));
  const bool fixture = fig.tse[19] == 4 && fig.tte[19] == 8 && fig.uncensored[19] &&
                       fig.tse[34] == 3 && fig.tte[34] == 5 && !fig.uncensored[34];
  return {mismatches == 0 && fixture,
          fmt("%d/1000 mismatches; fixture t=20 (tse %d, tte %d, %s), t=35 (tse %d, tte %d, %s)",
              mismatches, fig.tse[19], fig.tte[19], fig.uncensored[19] ? "uncensored" : "censored",
              fig.tse[34], fig.tte[34], fig.uncensored[34] ? "uncensored" : "censored")};
}

// ---------------------------------------------------------------------------
// 4. Parameter recovery

Outcome parameter_recovery() {
  GeneratorSpec g;
  g.truth = {{5.0, 1.0}};
  g.subjects = 200;
  g.window = 40;
  g.seed = 11;
  const auto ds = generate(g);
  TrainingData data;
  data.inputs = nn::Tensor({g.subjects, std::size_t(g.window), 1}, 1.0);
  std::vector<std::vector<ArrivalSequence>> arrivals;
  std::size_t intervals = 0;
  for (const auto& s : ds.subjects) {
    data.targets.push_back(build_multivariate_targets(s.arrivals));
    arrivals.push_back(s.arrivals);
    const auto n = s.arrivals[0].arrivals().size();
    intervals += n > 1 ? n - 1 : 0;
  }
  ModelConfig cfg;
  cfg.hidden = 8;
  cfg.iterations = 300;
  cfg.learning_rate = 0.01;
  cfg.seed = 5;
  cfg.scale_anchor = scale_anchors(arrivals, 1);
  const auto result = train(data, cfg);
  const TrainedModel model{cfg, result.state};
  const auto p = final_outputs_batch(model, data.inputs).front().param(0, 0);
  const double scale_err = std::abs(p.scale - 5.0) / 5.0;
  const double shape_err = std::abs(p.shape - 1.0);
  return {intervals >= 1000 && scale_err <= 0.10 && shape_err <= 0.15,
          fmt("%zu observed intervals; scale %.4f (rel err %.3f), shape %.4f (abs err %.3f)",
              intervals, p.scale, scale_err, p.shape, shape_err)};
}

// ---------------------------------------------------------------------------
// 5 and 6. Classifier quality on synthetic holdouts

cli::RunConfig classifier_run(GridTime tau, GridTime horizon) {
  cli::RunConfig rc;
  rc.train_end = tau;
  rc.horizon = horizon;
  rc.model.hidden = 16;
  rc.model.iterations = 40;
  rc.model.learning_rate = 0.01;
  rc.model.seed = 3;
  return rc;
}

double mean_auc(const io::Checkpoint& ck, const TransactionLog& log, GridTime tau, GridTime horizon) {
  const auto rep = cli::evaluate_log(ck, log, log, tau, horizon, PointStatistic::kMode);
  if (!rep.summary) throw std::runtime_error("holdout has a single class for every process");
  return rep.summary->mean;
}

Outcome censoring_advantage() {
  const GridTime tau = 40, horizon = 6;
  GeneratorSpec g;
  g.truth.assign(2, {80.0, 1.5});
  g.covariate_effect = 2.0;
  g.subjects = 1000;
  g.window = tau + horizon;
  g.seed = 21;
  auto train_span = g;
  train_span.window = tau;
  const double censored = censoring_fraction(generate(train_span)).fraction;
  const auto log = to_transactions(generate(g));

  auto rc = classifier_run(tau, horizon);
  rc.model.mode = LossMode::kMatRnn;
  const double matrnn = mean_auc(cli::train_on_log(log, rc).checkpoint, log, tau, horizon);
  rc.model.mode = LossMode::kSquared;
  const double sqloss = mean_auc(cli::train_on_log(log, rc).checkpoint, log, tau, horizon);
  return {censored >= 0.5 && matrnn - sqloss >= 0.03,
          fmt("censored fraction %.3f; mean AUC matrnn %.4f vs sqloss %.4f (gap %.4f)", censored,
              matrnn, sqloss, matrnn - sqloss)};
}

Outcome joint_vs_single() {
  const GridTime tau = 40, horizon = 4;
  GeneratorSpec g;
  g.truth.assign(4, {30.0, 1.5});
  g.covariate_effect = 1.0;
  g.coupling = 0.8;
  g.subjects = 600;
  g.window = tau + horizon;
  g.seed = 31;
  const auto ds = generate(g);
  const auto log = to_transactions(ds);

  const auto rc = classifier_run(tau, horizon);
  const double joint = mean_auc(cli::train_on_log(log, rc).checkpoint, log, tau, horizon);
  double single = 0.0;
  for (const auto& id : ds.process_ids) {
    auto one = rc;
    one.processes = {id};
    single += mean_auc(cli::train_on_log(log, one).checkpoint, log, tau, horizon);
  }
  single /= double(ds.process_ids.size());
  return {joint >= single,
          fmt("coupling %.1f; mean AUC joint %.4f vs single %.4f", g.coupling, joint, single)};
}

// ---------------------------------------------------------------------------
// 7. Metric oracles

double pairwise_auc(const std::vector<ScoredLabel>& items) {
  double wins = 0.0, pairs = 0.0;
  for (const auto& a : items) {
    if (!a.label) continue;
    for (const auto& b : items) {
      if (b.label) continue;
      pairs += 1.0;
      wins += a.score > b.score ? 1.0 : (a.score == b.score ? 0.5 : 0.0);
    }
  }
  return wins / pairs;
}

Outcome metric_oracles() {
  Rng rng(mix_seed(2024, 7));
  int instances = 0, mismatches = 0;
  while (instances < 200) {
    const std::size_t n = 2 + rng.below(499);
    const std::size_t levels = 2 + rng.below(20);
    std::vector<ScoredLabel> items(n);
    for (auto& it : items) {
      it.score = double(rng.below(levels)) / double(levels);
      it.label = rng.uniform() < 0.4;
    }
    const bool both = std::any_of(items.begin(), items.end(), [](auto& i) { return i.label; }) &&
                      std::any_of(items.begin(), items.end(), [](auto& i) { return !i.label; });
    if (!both) continue;
    if (roc_auc(items) != pairwise_auc(items)) ++mismatches;
    ++instances;
  }
  const double e1 = std::numbers::e - 1.0;
  const double late = std::abs(phm08_loss(10.0) - e1), early = std::abs(phm08_loss(-13.0) - e1);
  const std::vector<RulPrediction> preds = {{3.0, 1.0}, {1.0, 1.0}, {2.0, 4.0}};
  const double rmse_err = std::abs(rmse(preds) - std::sqrt(8.0 / 3.0));
  return {mismatches == 0 && late <= 1e-12 && early <= 1e-12 && rmse_err <= 1e-15,
          fmt("%d/200 AUC mismatches; phm08 errors %.3g, %.3g; rmse error %.3g", mismatches, late,
              early, rmse_err)};
}

// ---------------------------------------------------------------------------
// 8. Activation anchors

Outcome activation_anchors() {
  bool in_range = true;
  for (int i = -5000; i <= 5000; ++i) {
    const double k = activate_shape(i / 100.0, 10.0);
    in_range &= k > 0.0 && k < 10.0;
  }
  bool scale_anchor = true;
  for (double mu : {0.5, 1.0, 4.7, 13.0, 78.0}) scale_anchor &= activate_scale(0.0, mu) == mu;
  const bool shape_one = activate_shape(0.0, 10.0) == 1.0;
  return {in_range && scale_anchor && shape_one,
          fmt("shape(0)=%.17g, range held: %s, scale(0)=anchor: %s", activate_shape(0.0, 10.0),
              in_range ? "yes" : "no", scale_anchor ? "yes" : "no")};
}

// ---------------------------------------------------------------------------
// 9. Determinism and round trip

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Outcome determinism_round_trip() {
  const auto dir = fs::temp_directory_path() / fmt("arrival_acceptance_%d", int(::getpid()));
  fs::create_directories(dir);
  GeneratorSpec g;
  g.truth = {{6.0, 1.2}, {9.0, 0.8}, {4.0, 2.0}};
  g.coupling = 0.3;
  g.subjects = 120;
  g.window = 50;
  g.seed = 9;
  const auto ds = generate(g);
  const auto csv = dir / "data.csv";
  {
    std::ofstream out(csv);
    io::write_transactions(out, to_transactions(ds));
  }

  cli::RunConfig rc;
  rc.input = csv.string();
  rc.train_end = 40;
  rc.model.hidden = 8;
  rc.model.iterations = 15;
  rc.model.seed = 17;
  std::ostringstream sink;
  rc.checkpoint = (dir / "a.ck").string();
  const int first = cli::cmd_train(rc, sink);
  rc.checkpoint = (dir / "b.ck").string();
  const int second = cli::cmd_train(rc, sink);
  const auto a = slurp(dir / "a.ck"), b = slurp(dir / "b.ck");
  const bool identical = first == 0 && second == 0 && !a.empty() && a == b;

  const auto log = io::read_transactions(csv.string());
  int mismatched = 0;
  for (const auto& sub : ds.subjects) {
    const auto seqs = subject_arrivals(log, sub.id, g.window, ds.process_ids);
    for (std::size_t i = 0; i < seqs.size(); ++i) mismatched += !(seqs[i] == sub.arrivals[i]);
  }
  fs::remove_all(dir);
  return {identical && mismatched == 0,
          fmt("checkpoints %s (%zu bytes); %d/%zu arrival sets differ after round trip",
              identical ? "byte-identical" : "differ", a.size(), mismatched,
              ds.subjects.size() * ds.process_ids.size())};
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "gradient correctness", 60, gradient_correctness},
      {2, "likelihood identities", 30, likelihood_identities},
      {3, "event-grid oracle", 30, event_grid_oracle},
      {4, "parameter recovery", 300, parameter_recovery},
      {5, "censoring advantage", 600, censoring_advantage},
      {6, "joint vs single", 900, joint_vs_single},
      {7, "metric oracles", 30, metric_oracles},
      {8, "activation anchors", 30, activation_anchors},
      {9, "determinism and round trip", 120, determinism_round_trip},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.budget_seconds) {
      o.pass = false;
      o.detail += fmt("; over the %.0fs budget", c.budget_seconds);
    }
    failures += !o.pass;
    std::cout << "criterion " << c.id << " " << c.name << ": " << (o.pass ? "PASS" : "FAIL") << " ("
              << o.detail << ") [" << fmt("%.1fs", secs) << "]" << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria passed" : fmt("%d criteria failed", failures)) << '\n';
  return failures == 0 ? 0 : 1;
}
