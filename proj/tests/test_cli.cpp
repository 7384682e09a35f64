#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "spb/constructions.hpp"
#include "spb/serialize.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("spb_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  Result run(const std::string& args, const std::string& env = "") const {
    const std::string out = path("stdout.txt");
    const std::string cmd = env + " '" SPB_CLI_PATH "' " + args + " >'" + out + "' 2>&1";
    int status = std::system(cmd.c_str());
    std::ifstream f(out);
    std::stringstream ss;
    ss << f.rdbuf();
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
  }

  static std::string slurp(const std::string& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, VersionAndUsage) {
  EXPECT_EQ(run("--version").code, 0);
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("--help").code, 0);
  EXPECT_EQ(run("frobnicate").code, 1);
}

TEST_F(Cli, ConstructDyadicWritesSetAndManifest) {
  auto r = run("construct dyadic --limit 1000 --out " + path("t.spb"));
  ASSERT_EQ(r.code, 0) << r.out;
  auto s = spb::read_set_file(path("t.spb"));
  EXPECT_EQ(s.set, spb::dyadic_T(1000));
  EXPECT_EQ(s.metadata["manifest"]["kind"], "dyadic");
  auto m = nlohmann::json::parse(slurp(path("t.spb.manifest.json")));
  EXPECT_EQ(m["schema"], "manifest_v1");
  EXPECT_EQ(m["outputs"][0]["path"], path("t.spb"));
  EXPECT_EQ(m["outputs"][0]["sha256"].get<std::string>().size(), 64u);
}

TEST_F(Cli, BadKindIsUsageError) {
  auto r = run("construct nonsense --out " + path("x.spb"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("nonsense"), std::string::npos);
}

TEST_F(Cli, SampleIsDeterministic) {
  ASSERT_EQ(run("sample --c 2.0 --seed 7 --limit 100000 --out " + path("a.spb")).code, 0);
  ASSERT_EQ(run("sample --c 2.0 --seed 7 --limit 100000 --out " + path("b.spb")).code, 0);
  EXPECT_EQ(slurp(path("a.spb")), slurp(path("b.spb")));
  auto ma = nlohmann::json::parse(slurp(path("a.spb.manifest.json")));
  auto mb = nlohmann::json::parse(slurp(path("b.spb.manifest.json")));
  EXPECT_EQ(ma["outputs"][0]["sha256"], mb["outputs"][0]["sha256"]);
  EXPECT_EQ(ma["seeds"][0], 7);
}

TEST_F(Cli, SampleReportsLambdaAndValidates) {
  auto r = run("sample --c 0.5 --limit 10 --out " + path("s.spb"));
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("lambda=2.312"), std::string::npos) << r.out;
  EXPECT_EQ(run("sample --c -1 --out " + path("bad.spb")).code, 1);
  EXPECT_EQ(run("sample --c 1 --clamp 2 --out " + path("bad.spb")).code, 1);
}

TEST_F(Cli, VerifyCoveredAndGaps) {
  ASSERT_EQ(run("construct dyadic --limit 100000 --out " + path("t.spb")).code, 0);
  auto ok = run("verify --expr '2*A+A' --sets A=" + path("t.spb") + " --report " + path("cov.csv"));
  EXPECT_EQ(ok.code, 0);
  EXPECT_NE(ok.out.find("COVERED"), std::string::npos);
  EXPECT_EQ(slurp(path("cov.csv")).substr(0, 32), "t,missing_count,missing_fraction");

  spb::IntSetBuilder b(1000);
  for (std::uint64_t x = 0; x <= 1000; x += 2) b.insert(x);
  spb::write_set_file(path("evens.spb"), std::move(b).freeze());
  auto gaps = run("verify --expr 'A+A' --sets " + path("evens.spb"));
  EXPECT_EQ(gaps.code, 2);
  EXPECT_NE(gaps.out.find("GAPS 500 (first gap 1)"), std::string::npos) << gaps.out;

  EXPECT_EQ(run("verify --expr 'A++' --sets " + path("evens.spb")).code, 1);
  EXPECT_EQ(run("verify --expr 'A+B' --sets " + path("evens.spb")).code, 1);
  EXPECT_EQ(run("verify --expr 'A+A' --sets " + path("missing.spb")).code, 1);
}

TEST_F(Cli, StatsRowsAndEdgeCases) {
  auto r = run("stats --model c=0.5 --n-from 10 --n-to 10 --out " + path("s.csv"));
  ASSERT_EQ(r.code, 0) << r.out;
  std::string csv = slurp(path("s.csv"));
  std::istringstream lines(csv);
  std::string header, row;
  std::getline(lines, header);
  std::getline(lines, row);
  EXPECT_EQ(header, "n,dec_count,R_n,mu_exact,mu_divisor_form,delta,janson");
  EXPECT_EQ(row.substr(0, 5), "10,1,");
  std::vector<std::string> f;
  std::stringstream rs(row);
  for (std::string x; std::getline(rs, x, ',');) f.push_back(x);
  ASSERT_GE(f.size(), 4u);
  EXPECT_NEAR(std::stod(f[3]), 0.01117, 5e-5);

  ASSERT_EQ(run("stats --n-from 20 --n-to 10 --out " + path("empty.csv")).code, 0);
  EXPECT_EQ(slurp(path("empty.csv")), "n,dec_count,R_n,mu_exact,mu_divisor_form,delta,janson\n");

  EXPECT_EQ(run("stats --delta --n-from 10 --n-to 30000 --out " + path("d.csv")).code, 2);
  EXPECT_EQ(run("stats --delta --delta-cap 50 --n-from 40 --n-to 60 --out " + path("d.csv")).code, 2);
  EXPECT_EQ(run("stats --delta --delta-cap 50 --force --n-from 40 --n-to 60 --out " + path("d.csv")).code, 0);
  EXPECT_EQ(run("stats --model c=0 --n-to 10 --out " + path("d.csv")).code, 1);
  EXPECT_EQ(run("stats --model q=1 --n-to 10 --out " + path("d.csv")).code, 1);
}

TEST_F(Cli, StatsWithSetCountsRepresentations) {
  spb::write_set_file(path("a.spb"), spb::IntSet::from_elements({1, 2, 3, 4}, 20));
  ASSERT_EQ(run("stats --set " + path("a.spb") + " --n-from 14 --n-to 14 --out " + path("r.csv")).code, 0);
  std::string csv = slurp(path("r.csv"));
  EXPECT_NE(csv.find("\n14,"), std::string::npos);
  auto row = csv.substr(csv.find("\n14,") + 1);
  std::stringstream rs(row);
  std::vector<std::string> f;
  for (std::string x; std::getline(rs, x, ',');) f.push_back(x);
  EXPECT_EQ(f[2], "1");
}

TEST_F(Cli, SelftestPassesAndFaultFails) {
  auto ok = run("selftest");
  EXPECT_EQ(ok.code, 0) << ok.out;
  EXPECT_EQ(ok.out.find("FAIL"), std::string::npos);
  auto bad = run("selftest", "SPB_SELFTEST_FAULT=1");
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.out.find("FAIL"), std::string::npos);
}

TEST_F(Cli, ReplayReproducesArtifacts) {
  ASSERT_EQ(run("sample --c 1.5 --seed 3 --limit 50000 --out " + path("r.spb")).code, 0);
  auto r = run("replay --manifest " + path("r.spb.manifest.json") + " --workdir " + path("replay"));
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("REPLAY OK"), std::string::npos);
  EXPECT_TRUE(fs::exists(path("replay/r.spb")));
}

TEST_F(Cli, ConfigFileSuppliesOptions) {
  {
    std::ofstream f(path("run.toml"));
    f << "[sample]\nc = 0.5\nlimit = 10\nseed = 4\n";
  }
  auto r = run("--config " + path("run.toml") + " sample --out " + path("c.spb"));
  ASSERT_EQ(r.code, 0) << r.out;
  auto m = nlohmann::json::parse(slurp(path("c.spb.manifest.json")));
  EXPECT_EQ(m["construction"]["seed"], 4);
  EXPECT_EQ(m["construction"]["limit"], 10);
}

TEST_F(Cli, ThmUbEndToEnd) {
  auto r = run("construct thm-ub --k 2 --limit 100000 --out " + path("ub.spb") + " --report " + path("ub.csv"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("covered_from_n0=true"), std::string::npos) << r.out;
  auto s = spb::read_set_file(path("ub.spb"));
  EXPECT_EQ(s.metadata["manifest"]["kind"], "thm-ub");
}
