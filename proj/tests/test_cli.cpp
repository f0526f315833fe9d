#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "glassyqpe/csv.hpp"

namespace fs = std::filesystem;
using glassyqpe::cli::run;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result call(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path &p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("glassyqpe_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path dir_;
};

}  // namespace

TEST_F(CliTest, HelpAndVersion) {
    EXPECT_EQ(call({"--help"}).code, 0);
    const auto v = call({"--version"});
    EXPECT_EQ(v.code, 0);
    EXPECT_NE(v.out.find(glassyqpe::cli::kVersion), std::string::npos);
}

TEST_F(CliTest, BadArgumentsExitTwo) {
    EXPECT_EQ(call({}).code, 2);
    EXPECT_EQ(call({"bogus"}).code, 2);
    EXPECT_EQ(call({"sweep", "--kind", "cap"}).code, 2);
    EXPECT_EQ(call({"sweep", "--kind", "gauss", "--m", "5"}).code, 2);
    EXPECT_EQ(call({"sweep", "--kind", "cap", "--m", "5", "--sigma", "0:1:0"}).code, 2);
    EXPECT_EQ(call({"verify", "nonsense"}).code, 2);
}

TEST_F(CliTest, SweepOutOfRangeNamesAttainableRange) {
    const auto r = call({"sweep", "--kind", "squeezed", "--m", "5", "--sigma", "1.2:1.2:0.1", "--out", dir_.string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("attainable range"), std::string::npos);
    const auto c = call({"sweep", "--kind", "cap", "--m", "5", "--sigma", "0:1.8:0.1", "--out", dir_.string()});
    EXPECT_EQ(c.code, 2);
    EXPECT_NE(c.err.find("1.71313"), std::string::npos);
}

TEST_F(CliTest, SweepWritesCsvAndManifest) {
    const std::vector<std::string> args = {"sweep", "--kind", "cap", "--m", "5,7", "--sigma", "0:0.6:0.1",
                                           "--trials", "4096", "--fixed-trials", "--seed", "3", "--out", dir_.string()};
    ASSERT_EQ(call(args).code, 0);
    const fs::path csv_path = dir_ / "sweep_cap_m5.csv";
    ASSERT_TRUE(fs::exists(csv_path));
    ASSERT_TRUE(fs::exists(dir_ / "sweep_cap_m7.csv"));
    const auto t = glassyqpe::csv::read_file(csv_path.string());
    const std::vector<std::string> header = {"kind", "param", "sigma", "m", "delta", "q", "stderr", "trials", "converged"};
    EXPECT_EQ(t.header, header);
    ASSERT_EQ(t.rows.size(), 7u);
    EXPECT_EQ(t.rows[3][2], "0.3");
    EXPECT_EQ(t.rows[0][4], glassyqpe::csv::format(std::ldexp(1.0, -10)));

    std::ifstream mf(dir_ / "sweep_cap_m5.csv.manifest.json");
    const auto manifest = nlohmann::json::parse(mf);
    EXPECT_EQ(manifest["command"], "sweep");
    EXPECT_EQ(manifest["config"]["seed"], 3);
    EXPECT_EQ(manifest["config"]["m"], 5);
    EXPECT_EQ(manifest["config"]["adaptive"], false);
    EXPECT_EQ(manifest["config"]["sigma_grid"]["all"].size(), 7u);
    EXPECT_TRUE(manifest["convergence"].contains("all_converged"));
    EXPECT_TRUE(manifest.contains("tool_version"));
    EXPECT_TRUE(manifest.contains("elapsed_seconds"));

    const std::string first = slurp(csv_path);
    ASSERT_EQ(call(args).code, 0);
    EXPECT_EQ(slurp(csv_path), first);
}

TEST_F(CliTest, SweepIdenticalAcrossWorkers) {
    std::string bodies[2];
    int i = 0;
    for (const char *workers : {"1", "4"}) {
        const fs::path out = dir_ / workers;
        ASSERT_EQ(call({"sweep", "--kind", "vmf", "--m", "9", "--sigma", "0.2:1.0:0.2", "--trials", "10000",
                        "--seed", "11", "--workers", workers, "--out", out.string()})
                      .code,
                  0);
        bodies[i++] = slurp(out / "sweep_vmf_m9.csv");
    }
    EXPECT_EQ(bodies[0], bodies[1]);
}

TEST_F(CliTest, SweepSqueezedHasBothBranches) {
    ASSERT_EQ(call({"sweep", "--kind", "squeezed", "--m", "5", "--sigma", "0.4:0.5:0.1", "--trials", "2048",
                    "--fixed-trials", "--out", dir_.string()})
                  .code,
              0);
    const auto t = glassyqpe::csv::read_file((dir_ / "sweep_squeezed_m5.csv").string());
    ASSERT_EQ(t.rows.size(), 4u);
    EXPECT_GT(glassyqpe::csv::parse_double(t.rows[0][1]), 1.0);
    EXPECT_LT(glassyqpe::csv::parse_double(t.rows[2][1]), 1.0);
}

TEST_F(CliTest, SeedFromEnvironment) {
    const fs::path a = dir_ / "a.csv", b = dir_ / "b.csv", c = dir_ / "c.csv";
    ::setenv(glassyqpe::cli::kSeedEnv, "77", 1);
    ASSERT_EQ(call({"sample", "--kind", "vmf", "--kappa", "3", "-n", "5", "--output", a.string()}).code, 0);
    ASSERT_EQ(call({"sample", "--kind", "vmf", "--kappa", "3", "-n", "5", "--output", b.string()}).code, 0);
    ::setenv(glassyqpe::cli::kSeedEnv, "78", 1);
    ASSERT_EQ(call({"sample", "--kind", "vmf", "--kappa", "3", "-n", "5", "--output", c.string()}).code, 0);
    ::unsetenv(glassyqpe::cli::kSeedEnv);
    EXPECT_EQ(slurp(a), slurp(b));
    EXPECT_NE(slurp(a), slurp(c));
}

TEST_F(CliTest, SampleZeroWidthCap) {
    const auto r = call({"sample", "--kind", "cap", "--d", "0", "-n", "10"});
    ASSERT_EQ(r.code, 0);
    std::istringstream is(r.out);
    const auto t = glassyqpe::csv::read(is);
    ASSERT_EQ(t.rows.size(), 10u);
    for (const auto &row : t.rows) {
        EXPECT_EQ(row[0], "1");
        EXPECT_DOUBLE_EQ(glassyqpe::csv::parse_double(row[3]), std::numbers::pi / 2);
        EXPECT_EQ(row[4], "0");
    }
}

TEST_F(CliTest, SampleInvalidSpecExitsTwo) {
    EXPECT_EQ(call({"sample", "--kind", "cap", "--d", "4"}).code, 2);
    EXPECT_EQ(call({"sample", "--kind", "vmf"}).code, 2);
    EXPECT_EQ(call({"sample", "--kind", "squeezed", "--area", "0.524", "--r", "50"}).code, 2);
    EXPECT_EQ(call({"sample", "--kind", "squeezed", "--area", "0.524", "--r", "2", "-n", "20"}).code, 0);
}

TEST_F(CliTest, VerifySuites) {
    const auto r = call({"verify", "monotonicity"});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("PASS"), std::string::npos);
    EXPECT_EQ(call({"verify", "oracle", "--trials", "50"}).code, 0);
}

TEST_F(CliTest, AnalyzeDerivativeAppendsColumns) {
    ASSERT_EQ(call({"sweep", "--kind", "cap", "--m", "5", "--sigma", "0:1:0.1", "--trials", "4096", "--fixed-trials",
                    "--out", dir_.string()})
                  .code,
              0);
    const fs::path out = dir_ / "d.csv";
    ASSERT_EQ(call({"analyze", "derivative", "--input", (dir_ / "sweep_cap_m5.csv").string(), "--output",
                    out.string()})
                  .code,
              0);
    const auto t = glassyqpe::csv::read_file(out.string());
    EXPECT_EQ(t.header.back(), "dq_stderr");
    EXPECT_EQ(t.header[t.header.size() - 2], "dq_dsigma");
    EXPECT_EQ(t.rows.size(), 11u);
    EXPECT_LT(glassyqpe::csv::parse_double(t.rows[5][t.column("dq_dsigma")]), 0.0);
    EXPECT_EQ(call({"analyze", "derivative", "--input", (dir_ / "missing.csv").string()}).code, 2);
}

TEST_F(CliTest, AnalyzeSigmaHalfMissingBracketExitsThree) {
    const auto r = call({"analyze", "sigma-half", "--kind", "cap", "--m", "5", "--sigma", "0:0.2:0.05", "--trials",
                         "4096", "--out", dir_.string()});
    EXPECT_EQ(r.code, 3);
}

TEST_F(CliTest, AnalyzeSigmaCWritesTablesAndFit) {
    const auto r = call({"analyze", "sigma-c", "--kind", "cap", "--m", "5:35:10", "--sigma", "0:1.2:0.04", "--trials",
                         "8192", "--out", dir_.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto table = glassyqpe::csv::read_file((dir_ / "sigma_c_cap.csv").string());
    ASSERT_EQ(table.rows.size(), 4u);
    const double s5 = glassyqpe::csv::parse_double(table.rows[0][1]);
    EXPECT_NEAR(s5, std::sqrt(2.0 / 5.0), 0.05);
    const auto fit = glassyqpe::csv::read_file((dir_ / "fit_sigma_c_cap.csv").string());
    const std::vector<std::string> header = {"alpha", "beta", "gamma", "mse", "ci_alpha", "ci_beta", "ci_gamma"};
    EXPECT_EQ(fit.header, header);
    EXPECT_TRUE(fs::exists(dir_ / "deriv_cap_m15.csv"));
    EXPECT_TRUE(fs::exists(dir_ / "sweep_cap_m25.csv"));

    // Re-analysis from the written sweeps gives the same table.
    const fs::path again = dir_ / "again";
    ASSERT_EQ(call({"analyze", "sigma-c", "--kind", "cap", "--m", "5:35:10", "--input-dir", dir_.string(), "--out",
                    again.string()})
                  .code,
              0);
    EXPECT_EQ(slurp(again / "sigma_c_cap.csv"), slurp(dir_ / "sigma_c_cap.csv"));
}
