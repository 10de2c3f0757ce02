#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(RSSE_CLI) + " " + args + " 2>/dev/null";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, got);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

const std::string kBodyfat = std::string(RSSE_DATA_DIR) + "/bodyfat_drss_k3_m10.csv";

}  // namespace

TEST(Cli, SampleIsDeterministic) {
  const auto a = run("sample --parent bvn:0.9 -k 3 -m 5 -r 2 --seed 4");
  const auto b = run("sample --parent bvn:0.9 -k 3 -m 5 -r 2 --seed 4");
  const auto c = run("sample --parent bvn:0.9 -k 3 -m 5 -r 2 --seed 5");
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out, c.out);
  EXPECT_EQ(a.out.rfind("cycle,rank", 0), 0u);
}

TEST(Cli, BadParametersExitTwo) {
  EXPECT_EQ(run("entropy -i " + kBodyfat + " --columns Y --gamma 0").code, 2);
  EXPECT_EQ(run("entropy -i /nonexistent.csv").code, 2);
  EXPECT_EQ(run("sample --parent bvn:0.9 -k 0 -m 5").code, 2);
  EXPECT_EQ(run("nosuchcommand").code, 2);
  EXPECT_EQ(run("mi -i " + kBodyfat + " --first Y --second nosuch -r 2").code, 2);
}

TEST(Cli, DryRunValidatesWithoutComputing) {
  const auto r = run("sample --parent bvn:0.9 -k 3 -m 5 --dry-run");
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_TRUE(j.contains("subcommand"));
  EXPECT_EQ(run("--dry-run entropy -i /nonexistent.csv").code, 2);
}

TEST(Cli, EntropyJson) {
  const auto r = run("entropy -i " + kBodyfat + " --columns Y -r 2");
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_TRUE(std::isfinite(j.at("H").get<double>()));
}

TEST(Cli, SelectVarsOrdering) {
  const auto r = run("select-vars -i " + kBodyfat + " --candidates abdomen,weight,chest --target Y --subset-size 2 "
                     "--kernel joe --d1 0.6 -r 2");
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  const auto& rk = j.at("ranking");
  ASSERT_EQ(rk.size(), 3u);
  const auto first = rk[0].at("subset").get<std::vector<std::string>>();
  EXPECT_EQ(first, (std::vector<std::string>{"abdomen", "weight"}));
  EXPECT_GE(rk[0].at("I_std").get<double>(), rk[1].at("I_std").get<double>());
  EXPECT_GE(rk[1].at("I_std").get<double>(), rk[2].at("I_std").get<double>());
}

TEST(Cli, ReApproxCell) {
  const auto r = run("re-approx --rho 0.8 -k 5 -r 1 -n 45");
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("re"), std::string::npos);
}
