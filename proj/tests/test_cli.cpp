#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"

namespace fs = std::filesystem;
using namespace lcap;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "lcap");
    std::vector<const char*> argv;
    for (const std::string& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), {}};
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream ss(text);
    for (std::string l; std::getline(ss, l);) out.push_back(l);
    return out;
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir = fs::temp_directory_path() /
              ("lcap_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }
    std::string path(const std::string& name) const { return (dir / name).string(); }
    fs::path dir;
};

} // namespace

TEST_F(Cli, AlohaCapacityRow) {
    const Result r = run({"capacity", "--protocol", "aloha", "--k", "10", "--alpha", "4", "--out", path("a.csv")});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto l = lines(slurp(path("a.csv")));
    ASSERT_EQ(l.size(), 3u);
    EXPECT_EQ(l[0], "protocol,K,alpha,lambda,sigma,capacity,stderr,samples,seed");
    EXPECT_EQ(l[1].rfind("aloha,10,4,", 0), 0u);
    std::vector<std::string> cells;
    std::istringstream row(l[1]);
    for (std::string c; std::getline(row, c, ',');) cells.push_back(c);
    EXPECT_NEAR(std::stod(cells[5]), 0.201317, 1e-6);
    EXPECT_EQ(l[2].rfind("# seed=1 config_hash=", 0), 0u);

    const auto meta = nlohmann::json::parse(slurp(path("a.csv.meta.json")));
    EXPECT_EQ(meta["seed"], 1);
    EXPECT_EQ(meta["version"], cli::version);
    EXPECT_TRUE(meta.contains("wall_time_s"));
    EXPECT_EQ(meta["config"]["protocols"][0]["kind"], "aloha");
    EXPECT_EQ(l[2], "# seed=1 config_hash=" + meta["config_hash"].get<std::string>());
}

TEST_F(Cli, SweepIsByteIdenticalAcrossRunsAndWorkers) {
    const std::vector<std::string> base{"sweep", "--protocols", "triangular,square,hexagonal,aloha,coloring,csma",
                                        "--k", "2:14:4", "--alpha", "4", "--seed", "42", "--samples", "2",
                                        "--side", "300"};
    auto with = [&](std::vector<std::string> extra) {
        std::vector<std::string> a = base;
        a.insert(a.end(), extra.begin(), extra.end());
        return a;
    };
    ASSERT_EQ(run(with({"--out", path("s1.csv"), "--ratio-out", path("r1.csv"), "--workers", "1"})).code, 0);
    ASSERT_EQ(run(with({"--out", path("s2.csv"), "--ratio-out", path("r2.csv"), "--workers", "3"})).code, 0);
    EXPECT_EQ(slurp(path("s1.csv")), slurp(path("s2.csv")));
    EXPECT_EQ(slurp(path("r1.csv")), slurp(path("r2.csv")));
    const auto l = lines(slurp(path("r1.csv")));
    EXPECT_EQ(l[0], "K,alpha,protocol,ratio_to_triangular");
    EXPECT_EQ(l.size(), 1u + 4 * 6 + 1);
    EXPECT_EQ(l[1], "2,4,triangular,1");
    EXPECT_EQ(l.back().rfind("# seed=42 config_hash=", 0), 0u);
}

TEST_F(Cli, DumpedBoundaryReproducesArea) {
    const Result r = run({"trace", "--protocol", "triangular", "--k", "10", "--alpha", "4", "--d", "25",
                          "--dump-boundary", path("b.csv")});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto summary = nlohmann::json::parse(r.out);
    const auto side = nlohmann::json::parse(slurp(path("b.csv.json")));
    EXPECT_EQ(side["closed"], true);
    EXPECT_EQ(side["area"], summary["area"]);
    std::vector<Point> v;
    const auto l = lines(slurp(path("b.csv")));
    EXPECT_EQ(l[0], "k,x,y");
    for (std::size_t k = 1; k < l.size(); ++k) {
        if (l[k][0] == '#') continue;
        std::istringstream row(l[k]);
        std::string idx, x, y;
        std::getline(row, idx, ',');
        std::getline(row, x, ',');
        std::getline(row, y, ',');
        v.push_back({std::stod(x), std::stod(y)});
    }
    double twice = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) twice += det(v[k], v[(k + 1) % v.size()]);
    const double sigma = summary["area"].get<double>();
    EXPECT_NEAR(0.5 * std::abs(twice), sigma, 1e-9 * sigma);
}

TEST_F(Cli, TraceOfSampledProtocols) {
    for (const char* p : {"aloha", "coloring", "csma"}) {
        const Result r = run({"trace", "--protocol", p, "--side", "400", "--seed", "3"});
        ASSERT_EQ(r.code, 0) << p << r.err;
        EXPECT_GT(nlohmann::json::parse(r.out)["area"].get<double>(), 0.0);
    }
}

TEST_F(Cli, UsageErrorsExitTwo) {
    for (std::vector<std::string> args : {std::vector<std::string>{"capacity", "--protocol", "tdma"},
                                          std::vector<std::string>{"capacity", "--k", "-3"},
                                          std::vector<std::string>{"capacity", "--bogus"},
                                          std::vector<std::string>{"sweep", "--alpha", "1:3"},
                                          std::vector<std::string>{"optimality", "--protocols", "aloha"},
                                          std::vector<std::string>{}}) {
        const Result r = run(args);
        EXPECT_EQ(r.code, 2);
        const auto err = nlohmann::json::parse(lines(r.err).at(0));
        EXPECT_EQ(err["error"], "usage");
        EXPECT_FALSE(err["message"].get<std::string>().empty());
    }
}

TEST_F(Cli, NumericalFailureExitsThree) {
    const Result r = run({"trace", "--protocol", "square", "--dt", "0.5", "--no-corrector", "--max-steps", "100"});
    EXPECT_EQ(r.code, 3);
    EXPECT_EQ(nlohmann::json::parse(r.err)["error"], "open_trace");
}

TEST_F(Cli, ConfigFileWithFlagOverride) {
    std::ofstream(path("c.toml")) << "[capacity]\nprotocol = \"square\"\nd = 50\nalpha = \"3\"\n";
    const Result file_only = run({"--config", path("c.toml"), "capacity"});
    ASSERT_EQ(file_only.code, 0) << file_only.err;
    EXPECT_EQ(lines(file_only.out).at(1).rfind("square,10,3,0.0004,", 0), 0u);
    const Result overridden = run({"--config", path("c.toml"), "capacity", "--alpha", "4"});
    ASSERT_EQ(overridden.code, 0);
    EXPECT_EQ(lines(overridden.out).at(1).rfind("square,10,4,0.0004,", 0), 0u);
}

TEST_F(Cli, ConfigHashIgnoresWorkersAndPaths) {
    const Result a = run({"capacity", "--protocol", "square", "--workers", "1"});
    const Result b = run({"capacity", "--protocol", "square", "--workers", "4", "--meta", path("m.json")});
    const Result c = run({"capacity", "--protocol", "square", "--k", "11"});
    EXPECT_EQ(lines(a.out).back(), lines(b.out).back());
    EXPECT_NE(lines(a.out).back(), lines(c.out).back());
    EXPECT_TRUE(fs::exists(path("m.json")));
}

TEST_F(Cli, OptimalityReport) {
    const Result r = run({"optimality", "--protocols", "triangular,square", "--method", "boundary_integral",
                          "--out", path("o.csv")});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto l = lines(slurp(path("o.csv")));
    ASSERT_EQ(l.size(), 4u);
    EXPECT_EQ(l[0].rfind("protocol,K,alpha,method,sigma0,D_xx", 0), 0u);
    EXPECT_EQ(l[1].rfind("triangular,10,4,boundary_integral,", 0), 0u);
}
