#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include <boost/math/special_functions/beta.hpp>

#include "rsse/design.hpp"
#include "rsse/density.hpp"

using namespace rsse;

namespace {

Design make(int k, int m, int r, std::size_t rank_by = 0) {
  Design d;
  d.k = k;
  d.m = m;
  d.r = r;
  d.rank_by = rank_by;
  return d;
}

FinitePopulation tiny_population(std::size_t N) {
  FinitePopulation pop;
  pop.columns = {"a", "b"};
  std::vector<double> v;
  for (std::size_t i = 0; i < N; ++i) {
    v.push_back(static_cast<double>(i));
    v.push_back(static_cast<double>(N - i));
  }
  pop.rows = PointSet(2, v);
  return pop;
}

}  // namespace

TEST(Design, Validation) {
  EXPECT_THROW(make(0, 3, 1).validate(1), ParameterError);
  EXPECT_THROW(make(3, 0, 1).validate(1), ParameterError);
  EXPECT_THROW(make(3, 3, 0).validate(1), ParameterError);
  EXPECT_THROW(make(3, 3, 1, 1).validate(1), ParameterError);
  EXPECT_NO_THROW(make(1, 3, 1).validate(1));
  EXPECT_EQ(make(3, 4, 2).units_per_cycle(), 27u);
  EXPECT_EQ(make(3, 4, 2).n(), 12u);
}

TEST(RankedSetSample, IndexingAndProjection) {
  PointSet pts(2, {1, 10, 2, 20, 3, 30, 4, 40, 5, 50, 6, 60});
  RankedSetSample s(make(3, 2, 1), pts);
  EXPECT_EQ(s.at(1, 1)[0], 5.0);
  EXPECT_EQ(s.cycle_of(4), 1u);
  EXPECT_EQ(s.rank_of(4), 1u);
  const std::size_t c[] = {1};
  EXPECT_EQ(s.project(c).at(2, 0)[0], 30.0);
  EXPECT_THROW(RankedSetSample(make(3, 3, 1), pts), ParameterError);
  EXPECT_THROW(RankedSetSample(make(1, 1, 1), PointSet(1, {std::nan("")})), ParameterError);
}

TEST(DrawMrss, RowsAreOrderedWithinEachStageSet) {
  // With perfect ranking the rank-i unit of a k-set is the i-th smallest of
  // the set; verify via the observer.
  const Design d = make(4, 5, 2);
  int calls = 0;
  RankingObserver obs = [&](int, std::size_t rank, std::span<const double> keys) {
    ++calls;
    EXPECT_TRUE(std::is_sorted(keys.begin(), keys.end()));
    EXPECT_LT(rank, keys.size());
  };
  const auto s = draw_mrss(ParentModel(Normal{}), d, 5, &obs);
  EXPECT_EQ(s.size(), 20u);
  // stage 2: 4 sets per cycle, each built from 4 stage-1 sets of 4
  EXPECT_EQ(calls, 5 * (4 + 4 * 4));
}

TEST(DrawMrss, DeterministicAndCycleSubstreams) {
  const Design d = make(3, 6, 2);
  const auto a = draw_mrss(ParentModel(Normal{}), d, 11);
  const auto b = draw_mrss(ParentModel(Normal{}), d, 11);
  EXPECT_TRUE(a == b);
  Design d2 = d;
  d2.m = 3;
  const auto c = draw_mrss(ParentModel(Normal{}), d2, 11);
  for (std::size_t j = 0; j < 3; ++j)
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(a.at(i, j)[0], c.at(i, j)[0]);
  EXPECT_FALSE(a == draw_mrss(ParentModel(Normal{}), d, 12));
}

TEST(DrawMrss, KEqualsOneIsIid) {
  const auto s = draw_mrss(ParentModel(Uniform{0, 1}), make(1, 2000, 1), 3);
  double mean = 0.0;
  for (double v : s.points().values()) mean += v / 2000.0;
  EXPECT_NEAR(mean, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / 2000.0));
}

TEST(DrawMrss, FinitePopulationSizeChecks) {
  const auto pop = tiny_population(8);
  Design d = make(3, 2, 1);
  d.replacement = false;
  EXPECT_THROW(draw_mrss(PopulationSource{pop}, d, 1), SizeError);
  d.replacement = true;
  EXPECT_NO_THROW(draw_mrss(PopulationSource{pop}, d, 1));
  FinitePopulation empty;
  empty.columns = {"a"};
  empty.rows = PointSet(1, {});
  EXPECT_THROW(draw_mrss(PopulationSource{empty}, make(2, 2, 1), 1), SizeError);
  EXPECT_THROW(draw_srs(PopulationSource{pop}, 0, 1), ParameterError);
}

TEST(DrawMrss, WithoutReplacementUsesEachUnitOncePerCycle) {
  const auto pop = tiny_population(9);
  Design d = make(3, 4, 1);
  d.replacement = false;
  std::vector<double> seen;
  const RankingObserver obs = [&](int, std::size_t, std::span<const double> keys) {
    seen.insert(seen.end(), keys.begin(), keys.end());
  };
  draw_mrss(PopulationSource{pop}, d, 7, &obs);
  ASSERT_EQ(seen.size(), 4u * 9u);
  for (std::size_t j = 0; j < 4; ++j) {
    std::vector<double> cycle(seen.begin() + j * 9, seen.begin() + (j + 1) * 9);
    std::sort(cycle.begin(), cycle.end());
    for (std::size_t u = 0; u < 9; ++u) EXPECT_EQ(cycle[u], static_cast<double>(u));
  }
}

TEST(DrawMrss, ConcomitantRankingUsesRankByCoordinate) {
  Design d = make(3, 50, 1, 1);
  std::vector<double> kept;
  const RankingObserver obs = [&](int, std::size_t rank, std::span<const double> keys) {
    EXPECT_TRUE(std::is_sorted(keys.begin(), keys.end()));
    kept.push_back(keys[rank]);
  };
  const auto s = draw_mrss(ParentModel(BivariateNormal{0.5}), d, 9, &obs);
  ASSERT_EQ(kept.size(), 150u);
  for (std::size_t j = 0; j < 50; ++j)
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(s.at(i, j)[1], kept[j * 3 + i]);
}

TEST(DrawMrss, RankRowMatchesOrderStatisticLaw) {
  // Row i of an RSS from U(0,1) is Beta(i, k-i+1).
  const int k = 3, m = 20000;
  const auto s = draw_mrss(ParentModel(Uniform{0, 1}), make(k, m, 1), 21);
  for (int i = 0; i < k; ++i) {
    std::vector<double> row(m);
    for (int j = 0; j < m; ++j) row[j] = s.at(i, j)[0];
    std::sort(row.begin(), row.end());
    double sup = 0.0;
    for (int t = 0; t < m; ++t) {
      const double F = boost::math::ibeta(i + 1.0, static_cast<double>(k - i), row[t]);
      sup = std::max({sup, std::abs(F - (t + 1.0) / m), std::abs(F - static_cast<double>(t) / m)});
    }
    EXPECT_LT(sup, 1.63 / std::sqrt(m)) << "rank " << i;  // KS 1% level
  }
}

TEST(DrawSrs, Deterministic) {
  const auto a = draw_srs(ParentModel(Normal{}), 10, 4);
  EXPECT_TRUE(a == draw_srs(ParentModel(Normal{}), 10, 4));
  EXPECT_EQ(a.k(), 1u);
  EXPECT_EQ(a.m(), 10u);
}

TEST(Ecdf, StepFunction) {
  PointSet pts(1, {0.1, 0.5, 0.9, 0.5});
  const double t[] = {0.5};
  EXPECT_DOUBLE_EQ(ecdf_eval(pts, t), 0.75);
}
