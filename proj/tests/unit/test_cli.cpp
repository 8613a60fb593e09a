#include <gtest/gtest.h>

#include <sstream>

#include <nlohmann/json.hpp>

#include "../support/fixtures.hpp"
#include "../support/scenario.hpp"
#include "ntl/cli.hpp"
#include "ntl/store.hpp"

using namespace ntl;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int status = 0;
    std::string out;
    std::string err;
};

Outcome invoke(std::vector<std::string> args) {
    std::ostringstream out;
    std::ostringstream err;
    const int status = cli::run_cli(args, out, err);
    return {status, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) {
        out.push_back(line);
    }
    return out;
}

// Small synthetic dataset and one run over it, shared by the suite.
class CliRun : public ::testing::Test {
  protected:
    static void SetUpTestSuite() {
        dir_ = new test::TempDir("ntl-cli");
        data_ = dir_->path() / "data";
        const auto synth = invoke({"synth", "--out", data_.string(), "--seed", "3", "--feeders", "3", "--buses", "61",
                                "--meters", "24", "--days", "14", "--frauds", "2"});
        ASSERT_EQ(synth.status, 0) << synth.err;
        const auto run = invoke({"run", "--config", (data_ / "config.json").string()});
        ASSERT_EQ(run.status, 0) << run.err;
        first_run_ = new std::string(run.out);
        runs_ = data_ / "runs";
        run_dir_ = runs_ / store::list_runs(runs_).at(0);
    }
    static void TearDownTestSuite() {
        delete first_run_;
        delete dir_;
    }

    static test::TempDir* dir_;
    static fs::path data_;
    static fs::path runs_;
    static fs::path run_dir_;
    static std::string* first_run_;
};

test::TempDir* CliRun::dir_ = nullptr;
fs::path CliRun::data_;
fs::path CliRun::runs_;
fs::path CliRun::run_dir_;
std::string* CliRun::first_run_ = nullptr;

}  // namespace

TEST(Cli, UsageErrorsExitTwo) {
    for (const auto& args : std::vector<std::vector<std::string>>{
             {}, {"frobnicate"}, {"synth"}, {"candidates", "--top", "x", "--run", "r"}, {"run", "--bogus"}}) {
        const auto r = invoke(args);
        EXPECT_EQ(r.status, 2) << ::testing::PrintToString(args);
        EXPECT_TRUE(r.err.starts_with("error: usage: ")) << r.err;
    }
    EXPECT_EQ(invoke({"--help"}).status, 0);
}

TEST(Cli, FailuresPrintOneErrorLine) {
    test::TempDir dir;
    auto r = invoke({"run"});
    EXPECT_EQ(r.status, 1);
    EXPECT_EQ(r.err, "error: usage: run needs --config or all of --network, --energy, --voltage\n");

    r = invoke({"run", "--network", (dir.path() / "n.json").string(), "--energy", "e.csv", "--voltage", "v.csv"});
    EXPECT_EQ(r.status, 1);
    EXPECT_TRUE(r.err.starts_with("error: config: network file not found")) << r.err;
    EXPECT_EQ(lines(r.err).size(), 1u);

    test::write_text(dir.path() / "bad.json", R"({"buses": [], "branches": [], "meters": [], "slack": )");
    r = invoke({"validate-grid", (dir.path() / "bad.json").string()});
    EXPECT_EQ(r.status, 1);
    EXPECT_TRUE(r.err.starts_with("error: parse: ")) << r.err;
    EXPECT_EQ(lines(r.err).size(), 1u);
}

TEST(Cli, ValidateGridReportsChecks) {
    test::TempDir dir;
    const auto ok = dir.path() / "ok.json";
    test::write_text(ok, grid::dump_network(test::chain3()));
    auto r = invoke({"validate-grid", "--network", ok.string()});
    EXPECT_EQ(r.status, 0) << r.err;
    EXPECT_NE(r.out.find("network valid: 3 buses, 2 branches, 2 meters"), std::string::npos) << r.out;

    auto data = test::chain3();
    data.meters[1].bus = "nowhere";
    const auto bad = dir.path() / "bad.json";
    test::write_text(bad, grid::dump_network(data));
    r = invoke({"validate-grid", bad.string()});
    EXPECT_EQ(r.status, 1);
    EXPECT_TRUE(r.err.starts_with("error: validation: ")) << r.err;
    EXPECT_NE(r.out.find("FAIL "), std::string::npos);
    EXPECT_NE(r.out.find("mB"), std::string::npos);
}

TEST_F(CliRun, SynthWritesDataset) {
    for (const char* name : {"network.json", "energy.csv", "voltage.csv", "scenario.json", "config.json"}) {
        EXPECT_TRUE(fs::is_regular_file(data_ / name)) << name;
    }
    const auto scenario = nlohmann::json::parse(store::read_file(data_ / "scenario.json"));
    EXPECT_EQ(scenario["frauds"].size(), 2u);
    EXPECT_EQ(scenario["rng"], "mt19937_64");
}

TEST_F(CliRun, RunTwiceIsIdentical) {
    const auto again = invoke({"run", "--config", (data_ / "config.json").string()});
    EXPECT_EQ(again.status, 0) << again.err;
    EXPECT_EQ(again.out, *first_run_);
    EXPECT_EQ(store::list_runs(runs_).size(), 1u);
}

TEST_F(CliRun, CandidatesCsv) {
    auto r = invoke({"candidates", "--run", run_dir_.string(), "--top", "15"});
    ASSERT_EQ(r.status, 0) << r.err;
    const auto rows = lines(r.out);
    ASSERT_EQ(rows.size(), 16u);
    EXPECT_EQ(rows[0], ranking::kCandidateHeader);
    EXPECT_TRUE(rows[1].starts_with("1,"));
    EXPECT_TRUE(rows[15].starts_with("15,"));

    const auto file = dir_->path() / "out" / "c.csv";
    r = invoke({"candidates", "--run", run_dir_.string(), "--top", "3", "--out", file.string()});
    ASSERT_EQ(r.status, 0);
    EXPECT_EQ(lines(store::read_file(file)).size(), 4u);
}

TEST_F(CliRun, ExcludeChangesRankingWithoutTouchingStore) {
    const auto before = store::read_file(run_dir_ / "exclusions.json");
    const auto all = invoke({"candidates", "--run", run_dir_.string(), "--top", "24"});
    const auto cut = invoke({"candidates", "--run", run_dir_.string(), "--top", "24", "--exclude",
                          "2021-01-04..2021-01-15"});
    ASSERT_EQ(cut.status, 0) << cut.err;
    EXPECT_NE(all.out, cut.out);
    EXPECT_EQ(store::read_file(run_dir_ / "exclusions.json"), before);

    auto st = store::load(run_dir_);
    st.exclusions = {*ranking::parse_exclusion("2021-01-04..2021-01-15")};
    st.recompute_ranking();
    EXPECT_EQ(cut.out, ranking::export_candidates(st.candidates(24)));

    const auto bad = invoke({"candidates", "--run", run_dir_.string(), "--exclude", "2021-01-09..2021-01-04"});
    EXPECT_EQ(bad.status, 1);
    EXPECT_TRUE(bad.err.starts_with("error: usage: bad --exclude")) << bad.err;
}

TEST_F(CliRun, HeatmapJsonAndSvg) {
    auto r = invoke({"heatmap", "--run", run_dir_.string(), "--top", "5"});
    ASSERT_EQ(r.status, 0) << r.err;
    const auto doc = nlohmann::json::parse(r.out);
    EXPECT_EQ(doc["meters"].size(), 5u);
    EXPECT_EQ(doc["days"].size(), 14u);

    const auto svg = dir_->path() / "out" / "h.svg";
    r = invoke({"heatmap", "--run", run_dir_.string(), "--indicator", "dv_max", "--out", svg.string()});
    ASSERT_EQ(r.status, 0) << r.err;
    EXPECT_TRUE(store::read_file(svg).starts_with("<svg"));

    EXPECT_EQ(invoke({"heatmap", "--run", run_dir_.string(), "--indicator", "dv_p95"}).status, 1);
    EXPECT_EQ(invoke({"heatmap", "--run", run_dir_.string(), "--format", "png"}).status, 1);
    const auto missing = invoke({"heatmap", "--run", (dir_->path() / "nope").string()});
    EXPECT_EQ(missing.status, 1);
    EXPECT_TRUE(missing.err.starts_with("error: parse: ")) << missing.err;
}

TEST(Cli, ServeRejectsBadBind) {
    test::TempDir dir;
    const auto r = invoke({"serve", "--store", dir.path().string(), "--bind", "nowhere:notaport"});
    EXPECT_EQ(r.status, 1);
    EXPECT_TRUE(r.err.starts_with("error: usage: bad bind address")) << r.err;
    const auto missing = invoke({"serve", "--store", (dir.path() / "absent").string(), "--bind", "127.0.0.1:0"});
    EXPECT_EQ(missing.status, 1);
    EXPECT_NE(missing.err.find("store directory not found"), std::string::npos) << missing.err;
}
