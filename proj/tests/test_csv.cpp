#include <gtest/gtest.h>

#include <clocale>
#include <sstream>

#include "rsse/csv.hpp"
#include "rsse/design.hpp"

using namespace rsse;

TEST(Csv, ParsesHeaderCommentsAndWhitespace) {
  std::istringstream in("# comment\na, b\n1.5, -2e-3\n\n+3,4\n");
  const auto t = csv::parse_table(in);
  ASSERT_EQ(t.columns.size(), 2u);
  EXPECT_EQ(t.columns[1], "b");
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_DOUBLE_EQ(t.rows[0][1], -0.002);
  EXPECT_DOUBLE_EQ(t.rows[1][0], 3.0);
}

TEST(Csv, RejectsMalformedInput) {
  std::istringstream bad_field("a,b\n1,x\n");
  EXPECT_THROW(csv::parse_table(bad_field), IngestionError);
  std::istringstream ragged("a,b\n1\n");
  EXPECT_THROW(csv::parse_table(ragged), IngestionError);
  std::istringstream thousands("a\n1,000\n");
  EXPECT_THROW(csv::parse_table(thousands), IngestionError);
  std::istringstream comma_decimal("a;b\n1;2\n");
  EXPECT_THROW(csv::to_population(csv::parse_table(comma_decimal), {"a"}), IngestionError);
  EXPECT_THROW(csv::read_table("/nonexistent/file.csv"), IngestionError);
}

TEST(Csv, LocaleIndependent) {
  const char* old = std::setlocale(LC_NUMERIC, nullptr);
  const std::string saved = old ? old : "C";
  std::setlocale(LC_NUMERIC, "de_DE.UTF-8");  // may not exist; harmless
  std::istringstream in("a\n2.25\n");
  EXPECT_DOUBLE_EQ(csv::parse_table(in).rows[0][0], 2.25);
  std::setlocale(LC_NUMERIC, saved.c_str());
}

TEST(Csv, SampleRoundTrip) {
  Design d;
  d.k = 3;
  d.m = 4;
  d.r = 2;
  d.rank_by = 1;
  const auto s = draw_mrss(ParentModel(BivariateNormal{0.5}), d, 4);
  std::ostringstream out;
  csv::write_sample(out, s, {"u", "v"});
  std::istringstream in(out.str());
  const auto back = csv::to_sample(csv::parse_table(in), {}, 2);
  EXPECT_EQ(back.columns, (std::vector<std::string>{"u", "v"}));
  EXPECT_TRUE(back.sample == s);
  EXPECT_EQ(back.sample.k(), 3u);
  EXPECT_EQ(back.sample.design().r, 2);
}

TEST(Csv, SampleNeedsCompleteGrid) {
  std::istringstream missing("cycle,rank,x\n1,1,0.1\n1,2,0.2\n2,1,0.3\n");
  EXPECT_THROW(csv::to_sample(csv::parse_table(missing)), IngestionError);
  std::istringstream dup("cycle,rank,x\n1,1,0.1\n1,1,0.2\n");
  EXPECT_THROW(csv::to_sample(csv::parse_table(dup)), IngestionError);
  std::istringstream nocycle("rank,x\n1,0.1\n");
  EXPECT_THROW(csv::to_sample(csv::parse_table(nocycle)), IngestionError);
}

TEST(Csv, BodyFatFixtureLoads) {
  const auto t = csv::read_sample(std::string(RSSE_DATA_DIR) + "/bodyfat_drss_k3_m10.csv", {}, 2);
  EXPECT_EQ(t.sample.k(), 3u);
  EXPECT_EQ(t.sample.m(), 10u);
  EXPECT_EQ(t.columns, (std::vector<std::string>{"Y", "abdomen", "weight", "chest"}));
  EXPECT_DOUBLE_EQ(t.sample.at(0, 0)[0], 8.7);
}

TEST(Csv, PopulationColumns) {
  std::istringstream in("x,y,z\n1,2,3\n4,5,6\n");
  const auto pop = csv::to_population(csv::parse_table(in), {"z", "x"});
  EXPECT_EQ(pop.dim(), 2u);
  EXPECT_EQ(pop.rows[1][0], 6.0);
  EXPECT_EQ(pop.column_index("x"), 1u);
  EXPECT_THROW(pop.column_index("y"), IngestionError);
}
