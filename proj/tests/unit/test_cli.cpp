#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "qcsum_cli.hpp"

namespace fs = std::filesystem;
using qcsum::cli::Json;

namespace {

struct Invocation {
  int code;
  std::string out, err;
};

Invocation invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "qcsum");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = qcsum::cli::main_entry(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& path) {
  std::ifstream file(path, std::ios::binary);
  std::ostringstream text;
  text << file.rdbuf();
  return text.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("qcsum_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, ConstrainedRunWritesProfileWithoutQcColumns) {
  const auto r = invoke({"run", "--mesh", "uniform", "--N", "8", "--K", "4", "--method", "constrained", "--out",
                         path("out")});
  ASSERT_EQ(r.code, 0) << r.out << r.err;
  const auto lines = lines_of(slurp(path("out/profile.csv")));
  ASSERT_EQ(lines.size(), 17u);
  EXPECT_EQ(lines[0], "x,u_atomistic,u_constrained,u_qc");
  EXPECT_EQ(lines[1].back(), ',');  // u_qc left blank
  const auto report = Json::parse(slurp(path("out/report.json")));
  EXPECT_FALSE(report.contains("energy_norm_rel"));
  EXPECT_TRUE(report["solves"].contains("constrained"));
  EXPECT_LT(report["constrained"]["galerkin_defect"].get<double>(), 1e-12);
  EXPECT_TRUE(fs::exists(path("out/timing.json")));
}

TEST_F(CliTest, ClusterRunReportsWeightsAndErrors) {
  const auto r = invoke({"run", "--mesh", "oscillatory", "--N", "200", "--K", "10", "--r", "1", "--method",
                         "force-cluster", "--out", path("out")});
  ASSERT_EQ(r.code, 0) << r.out << r.err;
  const auto report = Json::parse(slurp(path("out/report.json")));
  EXPECT_EQ(report["weights"]["omega"].size(), 20u);
  EXPECT_LT(report["weights"]["exactness_defect"].get<double>(), 1e-10);
  EXPECT_GT(report["weights"]["dominance_margin_min"].get<double>(), 1.0);
  EXPECT_FALSE(report["sandwich_applies"].get<bool>());
  EXPECT_EQ(report["solves"]["qc"]["method"], "force-cluster");
  const auto lines = lines_of(slurp(path("out/profile.csv")));
  EXPECT_EQ(lines.size(), 401u);

  ASSERT_EQ(invoke({"run", "--mesh", "oscillatory", "--N", "200", "--K", "10", "--out", path("energy")}).code, 0);
  const auto energy = Json::parse(slurp(path("energy/report.json")));
  EXPECT_TRUE(energy["sandwich_applies"].get<bool>());
  EXPECT_TRUE(energy["sandwich_holds"].get<bool>());
}

TEST_F(CliTest, OverlappingClustersFailWithMachineReadableError) {
  const auto r = invoke({"run", "--mesh", "uniform", "--N", "64", "--K", "8", "--r", "9", "--out", path("out")});
  EXPECT_EQ(r.code, 1);
  const auto error = Json::parse(r.out);
  EXPECT_EQ(error["error"]["code"], "ClusterOverlap");
  EXPECT_EQ(Json::parse(slurp(path("out/error.json"))), error);
}

TEST_F(CliTest, BadArgumentsAreReported) {
  EXPECT_EQ(Json::parse(invoke({"run", "--mesh", "bogus", "--out", path("o")}).out)["error"]["code"], "UnknownFamily");
  EXPECT_EQ(Json::parse(invoke({"run", "--N", "abc"}).out)["error"]["code"], "InvalidArgument");
  EXPECT_EQ(Json::parse(invoke({"run", "--force", "gauss:1,x", "--out", path("o")}).out)["error"]["code"],
            "InvalidArgument");
  EXPECT_EQ(Json::parse(invoke({"reproduce", "nope", "--out", path("o")}).out)["error"]["code"], "InvalidArgument");
  EXPECT_EQ(invoke({}).code, 1);
}

TEST_F(CliTest, HelpExitsCleanly) {
  const auto r = invoke({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("reproduce"), std::string::npos);
}

TEST_F(CliTest, RunIsDeterministic) {
  const std::vector<std::string> base{"run", "--mesh", "smooth", "--N", "512", "--K", "16", "--r", "2"};
  auto a = base, b = base;
  a.insert(a.end(), {"--out", path("a")});
  b.insert(b.end(), {"--out", path("a")});
  ASSERT_EQ(invoke(a).code, 0);
  const auto first = slurp(path("a/report.json"));
  const auto first_profile = slurp(path("a/profile.csv"));
  ASSERT_EQ(invoke(b).code, 0);
  EXPECT_EQ(slurp(path("a/report.json")), first);
  EXPECT_EQ(slurp(path("a/profile.csv")), first_profile);
}

TEST_F(CliTest, ConfigFileIsOverriddenByFlags) {
  {
    std::ofstream file(path("c.ini"));
    file << "mesh = uniform\nN = 64\nK = 8\nforce = gauss:2,3\nr = 1\nmethod = force-cluster\n";
  }
  const auto r = invoke({"run", "--config", path("c.ini"), "--K", "16", "--out", path("out")});
  ASSERT_EQ(r.code, 0) << r.out << r.err;
  const auto config = Json::parse(slurp(path("out/report.json")))["config"];
  EXPECT_EQ(config["N"], 64);
  EXPECT_EQ(config["K"], 16);
  EXPECT_EQ(config["r"], 1);
  EXPECT_EQ(config["method"], "force-cluster");
  EXPECT_EQ(config["force"], "gauss:2,3");

  {
    std::ofstream file(path("bad.ini"));
    file << "meshes = uniform\n";
  }
  EXPECT_EQ(Json::parse(invoke({"run", "--config", path("bad.ini"), "--out", path("o")}).out)["error"]["code"],
            "InvalidArgument");
}

TEST_F(CliTest, ZeroForceSweepOverRadii) {
  const auto r = invoke({"sweep", "--mesh", "uniform", "--N", "256", "--K", "16", "--axis", "r-list", "--values",
                         "0,1,2,3,4", "--metric", "zero_force_defect", "--out", path("out")});
  ASSERT_EQ(r.code, 0) << r.out << r.err;
  const auto rows = Json::parse(slurp(path("out/report.json")))["table"]["rows"];
  ASSERT_EQ(rows.size(), 5u);
  for (const auto& row : rows) EXPECT_LE(row["zero_force_defect"].get<double>(), 1e-12);
}

TEST_F(CliTest, WeightGapHalvesWithEpsilon) {
  const auto r = invoke({"sweep", "--mesh", "smooth", "--K", "8", "--r", "2", "--axis", "N-doubling", "--values",
                         "1024,2048,4096,8192", "--metric", "weight_gap", "--out", path("out")});
  ASSERT_EQ(r.code, 0) << r.out << r.err;
  const auto table = Json::parse(slurp(path("out/report.json")))["table"];
  for (const auto& rate : table["rates"]) EXPECT_NEAR(rate.get<double>(), 1.0, 0.2);
  const auto lines = lines_of(slurp(path("out/sweep.csv")));
  EXPECT_EQ(lines[0], "N,eps,weight_gap,rate");
  EXPECT_EQ(lines[lines.size() - 2].rfind("observed_rate_min,,,", 0), 0u);
}

TEST_F(CliTest, KDoublingRhoOnSmoothMesh) {
  const auto r = invoke({"sweep", "--mesh", "smooth", "--N", "65536", "--axis", "K-doubling", "--values",
                         "8,16,32", "--metric", "rho", "--out", path("out")});
  ASSERT_EQ(r.code, 0) << r.out << r.err;
  const auto table = Json::parse(slurp(path("out/report.json")))["table"];
  EXPECT_GT(table["min_rate"].get<double>(), 1.8);
}

TEST_F(CliTest, MeshInspectPrintsNodes) {
  const auto r = invoke({"mesh-inspect", "--mesh", "graded", "--N", "8", "--K", "4"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto mesh = Json::parse(r.out);
  EXPECT_EQ(mesh["family"], "graded");
  EXPECT_EQ(mesh["node_count"], 8u);
  EXPECT_DOUBLE_EQ(mesh["kappa"].get<double>(), 2.0);
}

TEST_F(CliTest, MeshFileRoundTrip) {
  {
    std::ofstream file(path("mesh.txt"));
    file << "-12\n-6\n0\n4\n10\n16\n";
  }
  const auto r = invoke({"mesh-inspect", "--mesh-file", path("mesh.txt"), "--N", "16"});
  ASSERT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_EQ(Json::parse(r.out)["nodes"], Json::parse("[-12,-6,0,4,10,16]"));
}

TEST_F(CliTest, Fig2PresetPasses) {
  const auto r = invoke({"reproduce", "fig2", "--out", path("out")});
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(r.out.rfind("PASS fig2", 0), 0u) << r.out;
  const auto report = Json::parse(slurp(path("out/report.json")));
  EXPECT_TRUE(report["acceptance"]["pass"].get<bool>());
  EXPECT_EQ(report["microstructure"]["pairs_checked"], report["microstructure"]["pairs_alternating"]);
}

TEST_F(CliTest, BinaryRunsEndToEnd) {
  const std::string command = std::string(QCSUM_CLI_PATH) + " run --N 16 --K 4 --out " + path("bin") + " > " +
                              path("stdout.txt");
  ASSERT_EQ(std::system(command.c_str()), 0);
  EXPECT_TRUE(fs::exists(path("bin/report.json")));
  EXPECT_NE(slurp(path("stdout.txt")).find("report.json"), std::string::npos);
}
