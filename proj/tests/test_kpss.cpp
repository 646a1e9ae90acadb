#include "isl/error.hpp"
#include "isl/stationarity/kpss.hpp"
#include "support/fixtures.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace isl;
using namespace isl::stationarity;

namespace {

std::vector<double> trend_sine(int n) {
  std::vector<double> x(n);
  for (int t = 0; t < n; ++t) x[t] = std::sin(0.7 * t) + 0.05 * t;
  return x;
}

}  // namespace

TEST(KpssStatistic, HandComputedCases) {
  const std::vector<double> ramp = {1, 2, 3, 4};
  const std::vector<double> alt = {1, -1, 1, -1};
  EXPECT_NEAR(kpss_statistic(ramp, 0), 0.425, 1e-9);
  EXPECT_NEAR(kpss_statistic(alt, 0), 0.125, 1e-9);
}

TEST(KpssStatistic, MatchesReferenceImplementation) {
  // statsmodels.tsa.stattools.kpss(x, regression="c", nlags=lag)
  const auto x = trend_sine(40);
  EXPECT_NEAR(kpss_statistic(x, 0), 1.6226006183491894, 1e-12);
  EXPECT_NEAR(kpss_statistic(x, 3), 0.6214344955810278, 1e-12);
  EXPECT_NEAR(kpss_statistic(x, 7), 0.6040318480950645, 1e-12);
  EXPECT_NEAR(kpss_pvalue(kpss_statistic(x, 3)), 0.02068777312899747, 1e-12);
  std::vector<double> y(60);
  for (int t = 0; t < 60; ++t) y[t] = std::cos(1.3 * t);
  EXPECT_NEAR(kpss_statistic(y, 4), 0.2982252738260265, 1e-12);
  EXPECT_EQ(kpss_test(y, 4).p_value, 0.1);
}

TEST(KpssStatistic, ConstantSeriesIsDegenerate) {
  const std::vector<double> c = {5, 5, 5, 5};
  try {
    kpss_statistic(c, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), "degenerate_series");
  }
}

TEST(KpssPvalue, AnchorsAndInterpolation) {
  EXPECT_NEAR(kpss_pvalue(0.347), 0.10, 1e-12);
  EXPECT_NEAR(kpss_pvalue(0.463), 0.05, 1e-12);
  EXPECT_NEAR(kpss_pvalue(0.574), 0.025, 1e-12);
  EXPECT_NEAR(kpss_pvalue(0.739), 0.01, 1e-12);
  EXPECT_EQ(kpss_pvalue(0.1), 0.10);
  EXPECT_EQ(kpss_pvalue(5.0), 0.01);
  EXPECT_NEAR(kpss_pvalue(0.425), 0.10 - 0.05 * (0.425 - 0.347) / (0.463 - 0.347), 1e-12);
  EXPECT_NEAR(kpss_pvalue(0.425), 0.0664, 1e-4);
  EXPECT_THROW(kpss_pvalue(-0.1), Error);
}

TEST(KpssPvalue, MonotoneNonIncreasing) {
  double prev = 1;
  for (double s = 0; s < 1.0; s += 0.001) {
    const double p = kpss_pvalue(s);
    EXPECT_LE(p, prev);
    prev = p;
  }
}

TEST(DefaultLag, FormulaValues) {
  EXPECT_EQ(default_lag(100), 4);
  EXPECT_EQ(default_lag(1000), 7);
  EXPECT_EQ(default_lag(4), 1);
  EXPECT_EQ(default_lag(200), 4);
}

TEST(LabelPair, AllZeroFramesAreStationary) {
  const data::SignalMatrix z = data::SignalMatrix::Zero(3, 50);
  const auto p = label_pair(z, z);
  EXPECT_EQ(p.label, 1);
  for (double v : p.channel_p) EXPECT_TRUE(std::isnan(v));
}

TEST(LabelPair, StepChangeIsNonStationary) {
  data::SignalMatrix a = fixtures::smooth_frame(2, 100) * 0.01;
  data::SignalMatrix b = a;
  b.row(1).array() += 5.0;
  const auto p = label_pair(a, b);
  EXPECT_EQ(p.label, 0);
  EXPECT_LT(p.channel_p[1], 0.05);
  EXPECT_EQ(p.min_p, p.channel_p[1]);
}

TEST(LabelPair, ShapeMismatch) {
  EXPECT_THROW(label_pair(data::SignalMatrix::Zero(2, 10), data::SignalMatrix::Zero(2, 11)), Error);
}

TEST(LabelRecord, CountsAndComposition) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0, 1);
  data::SignalMatrix x(3, 1000);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = n(rng);
  const auto frames = data::segment(x, 10);
  const auto set = label_record(frames);
  ASSERT_EQ(set.labels.size(), 9u);
  for (std::size_t i = 0; i < 9; ++i) {
    const auto p = label_pair(frames.frames[i], frames.frames[i + 1]);
    EXPECT_EQ(set.labels[i], p.label);
    EXPECT_EQ(set.min_p[i], p.min_p);
  }
  EXPECT_EQ(label_record(data::segment(x, 2)).labels.size(), 1u);
  EXPECT_THROW(label_record(data::segment(x, 1)), Error);
}

TEST(LabelCache, RoundTripIsExact) {
  const auto dir = fixtures::scratch_dir("kpss_cache");
  const auto corpus = data::synth_generate(fixtures::desk_synth(1, 4));
  const auto set = label_record(data::segment(corpus.records[3].samples, 10));
  save_label_cache(dir / "r.kpss.json", "r", set);
  const auto back = load_label_cache(dir / "r.kpss.json");
  EXPECT_EQ(back.labels, set.labels);
  EXPECT_EQ(back.min_p, set.min_p);
}
