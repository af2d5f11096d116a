#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "support.hpp"
#include "toruslab/cli.hpp"

using namespace toruslab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("toruslab_cli_" + name);
    fs::remove_all(p);
    return p;
}

int run(std::vector<std::string> args, std::string* err_out = nullptr) {
    args.insert(args.begin(), "toruslab");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    int rc = cli::run(int(argv.size()), argv.data(), out, err);
    if (err_out) *err_out = err.str();
    return rc;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

std::string cfg(const char* name) { return toruslab::testing::config(name); }

}  // namespace

TEST(Cli, FlatIntegrateEndpoint) {
    fs::path out = scratch("integrate");
    ASSERT_EQ(run({"integrate", "--metric", cfg("flat.json"), "--x", "0", "--y", "0", "--angle", "0.927295218", "--T",
                   "100", "--out", out.string()}),
              0);
    std::istringstream csv(slurp(out / "trajectory.csv"));
    std::string line, last;
    std::getline(csv, line);
    EXPECT_EQ(line, "t,x,y,vx,vy");
    while (std::getline(csv, line))
        if (!line.empty()) last = line;
    double t, x, y;
    char c;
    std::istringstream(last) >> t >> c >> x >> c >> y;
    EXPECT_NEAR(x, 60.0, 1e-6);
    EXPECT_NEAR(y, 80.0, 1e-6);
    EXPECT_TRUE(fs::exists(out / "trajectory.svg"));
    json j = read_json(out / "integrate.json");
    EXPECT_EQ(j["config"]["command"], "integrate");
    EXPECT_EQ(j["config"]["integrator"]["abs_tol"], 1e-10);
}

TEST(Cli, UsageErrorsExitOne) {
    std::string err;
    EXPECT_EQ(run({"integrate", "--metric", cfg("absent.json")}, &err), 1);
    EXPECT_NE(err.find("absent.json"), std::string::npos);
    EXPECT_EQ(run({}), 1);
    EXPECT_EQ(run({"integrate"}), 1);
    EXPECT_EQ(run({"integrate", "--metric", cfg("flat.json"), "--abs-tol", "-1"}), 1);
    EXPECT_EQ(run({"verify", "--metric", cfg("flat.json"), "--rho", "golden"}), 1);
    EXPECT_EQ(run({"foliate", "--metric", cfg("flat.json"), "--rho", "inf", "--side", "up"}), 1);
    EXPECT_EQ(run({"axes", "--metric", cfg("flat.json"), "--class", "0", "0"}), 1);
}

TEST(Cli, LiouvilleIntegrateSidecarDeterministic) {
    fs::path a = scratch("liou_a"), b = scratch("liou_b");
    ASSERT_EQ(run({"integrate", "--metric", cfg("liouville.json"), "--x", "0.1", "--angle", "0.4", "--out", a.string()}), 0);
    ASSERT_EQ(run({"integrate", "--metric", cfg("liouville.json"), "--x", "0.1", "--angle", "0.4", "--out", b.string()}), 0);
    json j = read_json(a / "integrate.json");
    EXPECT_EQ(j["config"]["T"], 100.0);
    EXPECT_LT(j["trajectory"]["first_integral_drift"].get<double>(), 1e-8);
    EXPECT_LT(j["trajectory"]["energy_drift"].get<double>(), 1e-7);
    for (const char* f : {"trajectory.csv", "trajectory.svg"}) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    json k = read_json(b / "integrate.json");
    j["config"].erase("out");
    k["config"].erase("out");
    EXPECT_EQ(j.dump(), k.dump());
}

TEST(Cli, AxesReport) {
    fs::path out = scratch("axes");
    ASSERT_EQ(run({"axes", "--metric", cfg("liouville.json"), "--class", "0", "1", "--starts", "8", "--out", out.string()}), 0);
    json j = read_json(out / "axes.json");
    ASSERT_EQ(j["axes"].size(), 2u);
    int minimal = 0;
    for (const auto& a : j["axes"]) {
        double L = a["length"];
        if (a["minimal"]) {
            ++minimal;
            EXPECT_NEAR(L, std::sqrt(1.7), 1e-6);
        } else {
            EXPECT_NEAR(L, std::sqrt(2.3), 1e-6);
        }
    }
    EXPECT_EQ(minimal, 1);
    EXPECT_EQ(j["config"]["starts"], 8);
}

TEST(Cli, FlatEntropy) {
    fs::path out = scratch("entropy");
    ASSERT_EQ(run({"entropy", "--metric", cfg("flat.json"), "--schedule", "default", "--out", out.string()}), 0);
    json j = read_json(out / "entropy.json");
    EXPECT_LT(j["entropy"]["estimate"].get<double>(), 0.05);
    EXPECT_EQ(j["config"]["eps"], json({0.2, 0.1, 0.05}));
    EXPECT_EQ(j["config"]["T"], json({5.0, 10.0, 20.0, 40.0}));
    EXPECT_TRUE(fs::exists(out / "entropy.csv"));
}

TEST(Cli, RotationFiberMaps) {
    fs::path out = scratch("rotation");
    ASSERT_EQ(run({"rotation", "--metric", cfg("flat.json"), "--angle", "0.927295218", "--T", "100", "--fiber", "32",
                   "--fiber-samples", "2", "--seed", "3", "--out", out.string()}),
              0);
    json j = read_json(out / "rotation.json");
    EXPECT_NEAR(j["estimate"]["rho"].get<double>(), 4.0 / 3.0, 1e-8);
    ASSERT_EQ(j["fiber_maps"].size(), 2u);
    EXPECT_EQ(j["config"]["seed"], 3);
    EXPECT_TRUE(fs::exists(out / "fiber_map_1.csv"));
}

TEST(Cli, VerifyGoldenChart) {
    fs::path out = scratch("verify");
    EXPECT_EQ(run({"verify", "--metric", cfg("liouville.json"), "--rho", "irrational:0.6180339887", "--leaves", "8",
                   "--out", out.string()}),
              0);
    json j = read_json(out / "verify.json");
    EXPECT_TRUE(j["report"]["pass"].get<bool>());
    EXPECT_EQ(j["config"]["verify"]["minimality_tol"], 1e-4);
    EXPECT_TRUE(fs::exists(out / "chart.svg"));
}

TEST(Cli, VerifyPerturbedFailsWithTwo) {
    fs::path out = scratch("perturb");
    EXPECT_EQ(run({"verify", "--metric", cfg("liouville.json"), "--rho", "inf", "--perturb", "3:0.05", "--out",
                   out.string()}),
              2);
}
