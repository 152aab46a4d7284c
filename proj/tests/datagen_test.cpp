#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "arrival/datagen.hpp"
#include "arrival/io.hpp"

using namespace arrival;

namespace {

double correlation(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = double(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

std::vector<double> arrival_counts(const SyntheticDataset& ds, std::size_t process) {
  std::vector<double> out;
  for (const auto& s : ds.subjects) out.push_back(double(s.arrivals[process].arrivals().size()));
  return out;
}

GeneratorSpec spec_of(std::vector<WeibullParams> truth, std::size_t subjects, GridTime window,
                      std::uint64_t seed) {
  GeneratorSpec g;
  g.truth = std::move(truth);
  g.subjects = subjects;
  g.window = window;
  g.seed = seed;
  return g;
}

}  // namespace

TEST(SampleWeibull, InverseTransformFixedPoint) {
  for (double k : {0.4, 1.0, 3.7}) {
    EXPECT_NEAR(weibull_from_uniform(6.0, k, std::exp(-1.0)), 6.0, 1e-14);
  }
  Rng rng(1);
  EXPECT_THROW(sample_weibull(0.0, 1.0, rng), std::invalid_argument);
}

TEST(SampleWeibull, MonteCarloMeanAndSurvival) {
  Rng rng(701);
  const int n = 100000;
  double sum = 0.0;
  int beyond = 0;
  for (int i = 0; i < n; ++i) {
    const double y = sample_weibull(5.0, 1.0, rng);
    sum += y;
    beyond += y > 5.0;
  }
  EXPECT_NEAR(sum / n, 5.0, 0.02 * 5.0);
  EXPECT_NEAR(double(beyond) / n, std::exp(-1.0), 0.01);

  beyond = 0;
  for (int i = 0; i < n; ++i) beyond += sample_weibull(3.0, 2.5, rng) > 3.0;
  EXPECT_NEAR(double(beyond) / n, std::exp(-1.0), 0.01);
}

TEST(Generate, ExponentialArrivalRate) {
  const auto ds = generate(spec_of({{5.0, 1.0}}, 400, 100, 702));
  const auto counts = arrival_counts(ds, 0);
  const double mean = std::accumulate(counts.begin(), counts.end(), 0.0) / double(counts.size());
  EXPECT_NEAR(mean, 20.0, 3.0);
}

TEST(Generate, IndependentProcessesAreUncorrelated) {
  const auto ds = generate(spec_of({{4.0, 1.5}, {6.0, 0.8}}, 2000, 60, 703));
  EXPECT_LT(std::abs(correlation(arrival_counts(ds, 0), arrival_counts(ds, 1))), 0.08);
}

TEST(Generate, CouplingInducesPositiveCorrelation) {
  auto g = spec_of({{8.0, 1.5}, {8.0, 1.5}}, 2000, 60, 704);
  g.coupling = 0.9;
  g.coupling_factor = 0.2;
  const auto ds = generate(g);
  EXPECT_GT(correlation(arrival_counts(ds, 0), arrival_counts(ds, 1)), 0.1);
}

TEST(Generate, CovariateScalesTruth) {
  auto g = spec_of({{5.0, 2.0}}, 50, 40, 705);
  g.covariate_effect = 0.7;
  for (const auto& s : generate(g).subjects) {
    EXPECT_GE(s.covariate, -1.0);
    EXPECT_LE(s.covariate, 1.0);
    EXPECT_NEAR(s.params[0].scale, 5.0 * std::exp(0.7 * s.covariate), 1e-12);
    EXPECT_EQ(s.params[0].shape, 2.0);
    EXPECT_EQ(s.covariate_series().size(), 40u);
  }
}

TEST(Generate, ShortWindowLeavesMostSequencesEmpty) {
  const auto ds = generate(spec_of({{200.0, 2.0}}, 500, 10, 706));
  const auto counts = arrival_counts(ds, 0);
  EXPECT_GT(std::count(counts.begin(), counts.end(), 0.0), 450);
}

TEST(Generate, DeterministicUnderSeed) {
  auto g = spec_of({{3.0, 1.2}, {7.0, 2.0}, {5.0, 0.9}}, 30, 50, 707);
  g.coupling = 0.5;
  const auto a = generate(g), b = generate(g);
  ASSERT_EQ(a.process_ids.size(), 3u);
  for (std::size_t s = 0; s < a.subjects.size(); ++s) {
    EXPECT_EQ(a.subjects[s].covariate, b.subjects[s].covariate);
    EXPECT_EQ(a.subjects[s].event_times, b.subjects[s].event_times);
  }
  g.seed = 708;
  const auto c = generate(g);
  EXPECT_NE(a.subjects[0].event_times, c.subjects[0].event_times);
}

TEST(Generate, ArrivalsSnapUpToTheGrid) {
  const auto ds = generate(spec_of({{2.0, 1.0}}, 20, 30, 709));
  for (const auto& s : ds.subjects) {
    std::vector<GridTime> expected;
    for (double x : s.event_times[0]) {
      const auto t = GridTime(std::ceil(x));
      if (expected.empty() || expected.back() != t) expected.push_back(t);
    }
    EXPECT_EQ(s.arrivals[0].arrivals(), expected);
  }
}

TEST(Generate, RejectsInvalidSpec) {
  EXPECT_THROW(generate(spec_of({}, 5, 10, 1)), std::invalid_argument);
  EXPECT_THROW(generate(spec_of({{0.0, 1.0}}, 5, 10, 1)), std::invalid_argument);
  EXPECT_THROW(generate(spec_of({{1.0, 10.0}}, 5, 10, 1)), std::invalid_argument);
  EXPECT_THROW(generate(spec_of({{1.0, 1.0}}, 5, 1, 1)), std::invalid_argument);
  auto g = spec_of({{1.0, 1.0}}, 5, 10, 1);
  g.coupling = 1.5;
  EXPECT_THROW(generate(g), std::invalid_argument);
}

TEST(Generate, ObservedGapsPassKolmogorovSmirnov) {
  const WeibullParams truth{2.0, 1.5};
  const auto ds = generate(spec_of({truth}, 12, GridTime(50 * 2 * 20), 710));
  std::vector<double> gaps;
  for (const auto& s : ds.subjects) {
    double prev = 0.0;
    for (double x : s.event_times[0]) {
      gaps.push_back(x - prev);
      prev = x;
    }
  }
  ASSERT_GE(gaps.size(), 10000u);
  std::sort(gaps.begin(), gaps.end());
  const double n = double(gaps.size());
  double d = 0.0;
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    const double cdf = 1.0 - weibull_survival(gaps[i], truth);
    d = std::max({d, cdf - double(i) / n, double(i + 1) / n - cdf});
  }
  EXPECT_LT(d, 1.628 / std::sqrt(n));  // asymptotic critical value at 0.01
}

TEST(CensoringFraction, Examples) {
  const auto none = generate(spec_of({{1e6, 2.0}}, 20, 10, 711));
  const auto empty = censoring_fraction(none);
  EXPECT_FALSE(empty.has_observed_steps);
  EXPECT_EQ(empty.fraction, 0.0);

  const auto long_window = censoring_fraction(generate(spec_of({{3.0, 2.0}}, 50, 2000, 712)));
  EXPECT_TRUE(long_window.has_observed_steps);
  EXPECT_LT(long_window.fraction, 0.01);

  const auto matched = censoring_fraction(generate(spec_of({{50.0, 1.5}}, 500, 50, 713)));
  EXPECT_GT(matched.fraction, 0.5);
}

TEST(Generate, TransactionsRoundTripThroughCsv) {
  auto g = spec_of({{4.0, 1.2}, {6.0, 2.0}, {9.0, 1.0}}, 25, 30, 714);
  g.covariate_effect = 0.5;
  const auto ds = generate(g);
  const auto log = to_transactions(ds);
  EXPECT_EQ(log.process_ids(), ds.process_ids);
  std::stringstream buf;
  io::write_transactions(buf, log);
  const auto back = io::read_transactions(buf);
  ASSERT_EQ(back.records().size(), log.records().size());
  for (std::size_t i = 0; i < log.records().size(); ++i) {
    const auto &a = log.records()[i], &b = back.records()[i];
    EXPECT_EQ(a.subject_id, b.subject_id);
    EXPECT_EQ(a.process_id, b.process_id);
    EXPECT_EQ(a.t, b.t);
    EXPECT_EQ(a.value, b.value);
    EXPECT_EQ(a.quantity, b.quantity);
  }
  for (const auto& s : ds.subjects) {
    const auto seqs = subject_arrivals(back, s.id, g.window, ds.process_ids);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(seqs[i].arrivals(), s.arrivals[i].arrivals());
  }
}
