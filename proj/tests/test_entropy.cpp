#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include "rsse/entropy.hpp"

using namespace rsse;

namespace {

RankedSetSample normal_rss(int k, int m, int r, std::uint64_t seed) {
  Design d;
  d.k = k;
  d.m = m;
  d.r = r;
  return draw_mrss(ParentModel(Normal{}), d, seed);
}

double kg(double u, double g) { return scaled_gaussian()(u / g) / g; }

// f at t from the listed values, rebuilt from scratch.
double kde(const std::vector<double>& xs, double t, double g) {
  double s = 0.0;
  for (double x : xs) s += kg(t - x, g);
  return s / static_cast<double>(xs.size());
}

double naive_entropy(const std::vector<double>& xs, double g) {
  double s = 0.0;
  for (double x : xs) s += std::log(kde(xs, x, g));
  return -s / static_cast<double>(xs.size());
}

std::vector<double> values(const RankedSetSample& s) { return {s.points().values().begin(), s.points().values().end()}; }

}  // namespace

TEST(EntropyRss, MatchesNaiveFormula) {
  const auto s = normal_rss(4, 1, 1, 2);
  EXPECT_NEAR(entropy_rss(s, scaled_gaussian(), 0.6), naive_entropy(values(s), 0.6), 1e-12);
  const auto t = normal_rss(3, 7, 2, 3);
  EXPECT_NEAR(entropy_rss(t, scaled_gaussian(), 0.45), naive_entropy(values(t), 0.45), 1e-12);
}

TEST(EntropyRss, LargeSrsNearGaussianEntropy) {
  const auto s = draw_srs(ParentModel(Normal{}), 10000, 17);
  const double H = entropy_rss(s, scaled_gaussian(), bandwidth_rule(s, 1.0));
  EXPECT_NEAR(H, 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e), 0.05);
}

TEST(EntropyRss, SupportModes) {
  const auto s = normal_rss(3, 4, 1, 5);
  EXPECT_EQ(entropy_rss(s, scaled_gaussian(), 0.5, SupportSpec::rectangle({100.0}, {101.0})), 0.0);
  // Rectangle covering a subset: only in-support points contribute, n stays the divisor.
  const auto xs = values(s);
  double acc = 0.0;
  for (double x : xs)
    if (x >= -0.5 && x <= 0.5) acc += std::log(kde(xs, x, 0.5));
  EXPECT_NEAR(entropy_rss(s, scaled_gaussian(), 0.5, SupportSpec::rectangle({-0.5}, {0.5})),
              -acc / static_cast<double>(xs.size()), 1e-12);
  EXPECT_THROW(SupportSpec::rectangle({1.0}, {0.0}).validate(1), ParameterError);
  EXPECT_THROW(SupportSpec::density_floor(0.0).validate(1), ParameterError);
}

TEST(EntropyRss, SelfTermKeepsCompactKernelFinite) {
  const auto s = normal_rss(3, 2, 1, 6);
  EXPECT_NO_THROW(entropy_rss(s, piecewise_joe(1), 1e-6));
  EXPECT_THROW(entropy_rss(s, scaled_gaussian(), 0.0), ParameterError);
}

TEST(EntropyRss, PermutationAndShiftInvariance) {
  const auto s = normal_rss(3, 5, 1, 7);
  const double H = entropy_rss(s, scaled_gaussian(), 0.5);
  const std::size_t order[] = {4, 2, 0, 3, 1};
  EXPECT_NEAR(entropy_rss(s.permute_cycles(order), scaled_gaussian(), 0.5), H, 1e-12);
  auto v = values(s);
  for (double& x : v) x += 3.25;
  const RankedSetSample shifted(s.design(), PointSet(1, v));
  EXPECT_NEAR(entropy_rss(shifted, scaled_gaussian(), 0.5), H, 1e-12);
  // rank rows swapped inside every cycle
  std::vector<double> w(v.size());
  for (std::size_t j = 0; j < 5; ++j)
    for (std::size_t i = 0; i < 3; ++i) w[j * 3 + i] = v[j * 3 + (2 - i)];
  EXPECT_NEAR(entropy_rss(RankedSetSample(s.design(), PointSet(1, w)), scaled_gaussian(), 0.5), H, 1e-12);
}

TEST(BandwidthRule, OneDimensionalClosedForm) {
  const auto s = normal_rss(3, 10, 1, 8);
  auto v = values(s);
  const double iqr = quantile_type7(v, 0.75) - quantile_type7(v, 0.25);
  EXPECT_NEAR(bandwidth_rule(s, 1.2), 1.2 * std::pow(30.0, -1.0 / 2.5) * iqr, 1e-14);
}

TEST(BandwidthRule, TwoDimensionalUsesBoxFraction) {
  Design d;
  d.k = 3;
  d.m = 10;
  d.rank_by = 1;
  const auto s = draw_mrss(ParentModel(BivariateNormal{0.3}), d, 9);
  const auto q = quartile_summary(s.points());
  EXPECT_GE(q.inside_fraction, 0.0);
  EXPECT_LE(q.inside_fraction, 0.5);
  EXPECT_NEAR(q.correction, (0.5 - q.inside_fraction) / 0.25, 1e-15);
  EXPECT_NEAR(bandwidth_rule(s, 1.05), 1.05 * std::pow(30.0, -1.0 / 3.0) * q.mean_iqr * q.correction, 1e-14);
}

TEST(BandwidthRule, Errors) {
  EXPECT_THROW(bandwidth_rule(PointSet(1, {1, 2, 3}), 1.0), ParameterError);
  EXPECT_THROW(bandwidth_rule(PointSet(1, {1, 1, 1, 1, 1}), 1.0), ParameterError);
  EXPECT_THROW(bandwidth_rule(PointSet(1, {1, 2, 3, 4, 5}), 0.0), ParameterError);
}

TEST(BandwidthRule, IndependentCloudFactorNearOne) {
  // Under independence the box holds about a quarter of the points.
  double mean = 0.0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto s = draw_srs(ParentModel(BivariateNormal{0.0}), 200, seed);
    mean += quartile_summary(s.points()).correction / 200.0;
  }
  EXPECT_NEAR(mean, 1.0, 0.05);
}

TEST(CrossValidation, MatchesRebuiltReducedSamples) {
  const auto s = normal_rss(3, 5, 1, 10);
  const double g = 0.55;
  const auto v = values(s);
  const double full = naive_entropy(v, g);
  double cv = 0.0, d = 0.0;
  for (std::size_t j = 0; j < 5; ++j) {
    std::vector<double> red;
    for (std::size_t a = 0; a < v.size(); ++a)
      if (a / 3 != j) red.push_back(v[a]);
    const double dev = full - naive_entropy(red, g);
    cv += dev * dev / 5.0;
    d += dev / 5.0;
  }
  const auto r = cv_gamma(s, scaled_gaussian(), g);
  EXPECT_NEAR(r.cv, cv, 1e-12);
  EXPECT_NEAR(r.d, d, 1e-12);
  EXPECT_GE(r.cv, r.d * r.d);
}

TEST(CrossValidation, IdenticalCyclesGiveZero) {
  std::vector<double> v;
  for (int j = 0; j < 4; ++j)
    for (double x : {-1.0, 0.2, 1.5}) v.push_back(x);
  Design d;
  d.k = 3;
  d.m = 4;
  const RankedSetSample s(d, PointSet(1, v));
  const auto r = cv_gamma(s, scaled_gaussian(), 0.7);
  EXPECT_NEAR(r.cv, 0.0, 1e-28);
  EXPECT_NEAR(r.d, 0.0, 1e-14);
  Design one = d;
  one.m = 1;
  EXPECT_THROW(cv_gamma(RankedSetSample(one, PointSet(1, {1, 2, 3})), scaled_gaussian(), 0.7), ParameterError);
}

TEST(SelectBandwidth, GridRules) {
  const auto s = normal_rss(3, 10, 1, 11);
  const double single[] = {0.4};
  EXPECT_EQ(select_bandwidth_cv(s, scaled_gaussian(), single), 0.4);
  const double same[] = {0.4, 0.4};
  EXPECT_EQ(select_bandwidth_cv(s, scaled_gaussian(), same), 0.4);
  EXPECT_THROW(select_bandwidth_cv(s, scaled_gaussian(), std::span<const double>()), ParameterError);
  const auto grid = default_cv_grid(bandwidth_rule(s, 1.0));
  ASSERT_EQ(grid.size(), 25u);
  EXPECT_TRUE(std::is_sorted(grid.begin(), grid.end()));
}

TEST(SelectBandwidth, InteriorMinimizerOnNormalSamples) {
  int interior = 0;
  const int trials = 100;
  for (int t = 0; t < trials; ++t) {
    const auto s = normal_rss(3, 10, 1, 1000 + t);
    const auto grid = default_cv_grid(bandwidth_rule(s, 1.0));
    const double g = select_bandwidth_cv(s, scaled_gaussian(), grid);
    interior += (g != grid.front() && g != grid.back()) ? 1 : 0;
  }
  EXPECT_GE(interior, 90);
}

TEST(SelectBandwidth, CvVanishesForWideBandwidths) {
  int shrinking = 0;
  for (int t = 0; t < 100; ++t) {
    const auto s = normal_rss(3, 10, 1, 1000 + t);
    const double c = bandwidth_rule(s, 1.0);
    const double a = cv_gamma(s, scaled_gaussian(), c).cv, b = cv_gamma(s, scaled_gaussian(), 4.0 * c).cv;
    shrinking += b < a;
    EXPECT_LT(cv_gamma(s, scaled_gaussian(), 100.0 * c).cv, 1e-6);
  }
  EXPECT_GE(shrinking, 95);
}

namespace {

struct Plug {
  std::vector<double> x, f;
  double g;
  double K(double a, double b) const { return kg(a - b, g); }
  double A(std::size_t a) const {
    double s = 0.0;
    for (std::size_t l = 0; l < x.size(); ++l) s += K(x[l], x[a]) / f[l];
    return s / static_cast<double>(x.size()) + std::log(f[a]);
  }
  double B(std::size_t a, std::size_t b) const {
    double s = 0.0;
    for (std::size_t l = 0; l < x.size(); ++l) s += K(x[l], x[a]) * K(x[l], x[b]) / (f[l] * f[l]);
    return -0.5 * s / static_cast<double>(x.size()) + K(x[a], x[b]) / f[a];
  }
};

}  // namespace

TEST(MseHat, PlugInTermsMatchDirectSums) {
  const auto s = normal_rss(3, 2, 1, 12);
  const double g = 0.6;
  Plug p{values(s), {}, g};
  for (double t : p.x) p.f.push_back(kde(p.x, t, g));
  const EntropyAnalysis an(s, scaled_gaussian(), g);
  for (std::size_t a = 0; a < 6; ++a) {
    EXPECT_NEAR(an.a_hat(a), p.A(a), 1e-12);
    for (std::size_t b = 0; b < 6; ++b) EXPECT_NEAR(an.b_hat(a, b), p.B(a, b), 1e-12);
  }
}

TEST(MseHat, AlphaHatsMatchDirectSums) {
  const int k = 3, m = 4;
  const auto s = normal_rss(k, m, 2, 13);
  const double g = 0.5;
  Plug p{values(s), {}, g};
  for (double t : p.x) p.f.push_back(kde(p.x, t, g));
  const std::size_t n = p.x.size();
  double diag = 0.0, off = 0.0;
  for (std::size_t a = 0; a < n; ++a) diag += p.B(a, a);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < m; ++j)
      for (int jj = 0; jj < m; ++jj)
        if (j != jj) off += p.B(j * k + i, jj * k + i);
  const double a1 = diag / n - off / (m * (m - 1.0) * k);
  double sq = 0.0, rows = 0.0;
  for (std::size_t a = 0; a < n; ++a) sq += p.A(a) * p.A(a);
  for (int i = 0; i < k; ++i) {
    double r = 0.0;
    for (int j = 0; j < m; ++j) r += p.A(j * k + i) / m;
    rows += r * r;
  }
  const double a2 = sq / n - rows / k;
  const auto est = mse_hat(s, scaled_gaussian(), g);
  EXPECT_NEAR(est.alpha1, a1, 1e-12);
  EXPECT_NEAR(est.alpha2, a2, 1e-12);
  const double bracket = est.cv + (a2 + 2.0 * a1 * std::abs(est.d)) / n;
  if (bracket >= 0.0) {
    EXPECT_NEAR(est.mse, bracket, 1e-14);
    EXPECT_GE(est.mse, est.cv);
  } else {
    EXPECT_EQ(est.mse, 0.0);
  }
}

TEST(MseHat, GateAndOrderingOverManySamples) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto s = normal_rss(3, 5, 1, 500 + seed);
    const auto est = mse_hat(s, scaled_gaussian(), bandwidth_rule(s, 1.2));
    EXPECT_GE(est.mse, 0.0);
    EXPECT_GE(est.cv, 0.0);
    if (est.gate_passed) EXPECT_GE(est.mse, est.cv);
    else EXPECT_EQ(est.mse, 0.0);
  }
}

TEST(EstimateEntropy, ReportFieldsAndJson) {
  const auto s = normal_rss(3, 4, 2, 14);
  const auto rep = estimate_entropy(s, scaled_gaussian(), BandwidthPolicy::rule(1.2));
  EXPECT_TRUE(rep.cv && rep.mse_hat && rep.alpha1_hat);
  EXPECT_EQ(rep.r, 2u);
  nlohmann::ordered_json j = rep;
  EXPECT_EQ(j.begin().key(), "H");
  EXPECT_EQ(j["n"], 12);
  Design one;
  one.k = 4;
  one.m = 1;
  const auto single = estimate_entropy(RankedSetSample(one, PointSet(1, {0.1, 0.5, 0.9, 2.0})), scaled_gaussian(),
                                       BandwidthPolicy::fixed(0.5));
  EXPECT_FALSE(single.cv.has_value());
  EXPECT_TRUE(nlohmann::ordered_json(single)["cv"].is_null());
}

TEST(BandwidthPolicy, Validation) {
  EXPECT_THROW(BandwidthPolicy::fixed(0.0).validate(), ParameterError);
  EXPECT_THROW(BandwidthPolicy::cv({0.5, 0.4}).validate(), ParameterError);
  EXPECT_THROW(BandwidthPolicy::cv({-0.5}).validate(), ParameterError);
  EXPECT_NO_THROW(BandwidthPolicy::cv({0.4, 0.5}).validate());
}
