#include "softscreen/cli.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace fs = std::filesystem;
using softscreen::config::json;
using testing_support::scratch_dir;
using testing_support::source_dir;

namespace {

struct Proc {
    int code = -1;
    std::string output;
};

Proc cli(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + " " + std::string(SOFTSCREEN_CLI) + " " + args + " 2>&1";
    Proc p;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return p;
    char buf[4096];
    while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) p.output.append(buf, n);
    const int status = pclose(pipe);
    p.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path write_scenario(const fs::path& dir, const std::string& name, const json& doc) {
    const auto p = dir / name;
    std::ofstream(p) << doc.dump(2);
    return p;
}

}  // namespace

TEST(Cli, QuickstartCompletesWithExitZero) {
    const auto out = scratch_dir("cli_quick");
    const auto r = cli("run " + (source_dir() / "scenarios/pipe84_quickstart.json").string() + " --out " + out.string());
    EXPECT_EQ(r.code, 0) << r.output;
    for (const char* f : {"trace.csv", "summary.json", "manifest.json", "resolved_scenario.json"})
        EXPECT_TRUE(fs::exists(out / f)) << f;
    const auto summary = json::parse(slurp(out / "summary.json"));
    EXPECT_EQ(summary.at("end_reason"), "exit");
    EXPECT_TRUE(summary.at("completed").get<bool>());
    const auto manifest = json::parse(slurp(out / "manifest.json"));
    EXPECT_EQ(manifest.at("config_hash"), summary.at("config_hash"));
}

TEST(Cli, SameInputGivesByteIdenticalSummary) {
    const auto a = scratch_dir("cli_det_a");
    const auto b = scratch_dir("cli_det_b");
    const auto scen = (source_dir() / "scenarios/phantom_collapsed_backward.json").string();
    ASSERT_EQ(cli("run " + scen + " --out " + a.string()).code, 0);
    ASSERT_EQ(cli("run " + scen + " --out " + b.string()).code, 0);
    EXPECT_EQ(slurp(a / "summary.json"), slurp(b / "summary.json"));
    EXPECT_EQ(slurp(a / "trace.csv"), slurp(b / "trace.csv"));
}

TEST(Cli, StallExitsWithTwo) {
    const auto dir = scratch_dir("cli_stall");
    const json doc = {{"name", "stall"},
                      {"lumen", {{"fixture", "phantom_collapsed"}}},
                      {"commands", {{{"t_s", 0.0}, {"motor_radps", 1256.0}, {"p1_kPa", 20.0}, {"p2_kPa", 20.0}}}}};
    const auto r = cli("run " + write_scenario(dir, "s.json", doc).string() + " --out " + (dir / "out").string());
    EXPECT_EQ(r.code, 2) << r.output;
    EXPECT_EQ(json::parse(slurp(dir / "out/summary.json")).at("end_reason"), "stall");
}

TEST(Cli, SchemaErrorNamesFieldAndExitsWithOne) {
    const auto dir = scratch_dir("cli_bad");
    const json doc = {{"name", "bad"},
                      {"lumen", {{"fixture", "pipe84"}}},
                      {"commands", {{{"t_s", 0.0}, {"motor_rpm", 100.0}, {"p1_kPa", 1.0}, {"p2_kPa", 1.0}}}}};
    const auto r = cli("run " + write_scenario(dir, "s.json", doc).string() + " --out " + (dir / "out").string());
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.output.find("commands[0].motor_radps"), std::string::npos) << r.output;
}

TEST(Cli, SyntaxErrorReportsLocationAndExitsWithOne) {
    const auto dir = scratch_dir("cli_syntax");
    std::ofstream(dir / "s.json") << "{\n  \"name\": \"x\",\n  \"lumen\": {\"fixture\": \"pipe84\"}\n  \"commands\": []\n}\n";
    const auto r = cli("run " + (dir / "s.json").string() + " --out " + (dir / "out").string());
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.output.find("line 4"), std::string::npos) << r.output;
}

TEST(Cli, UnknownSubcommandExitsWithOne) { EXPECT_EQ(cli("fly").code, 1); }

TEST(Cli, OutputDirectoryFromEnvironment) {
    const auto out = scratch_dir("cli_env");
    const auto r = cli("inflate-curve --max-kPa 4 --step-kPa 2", "SOFTSCREEN_OUT_DIR=" + out.string());
    EXPECT_EQ(r.code, 0) << r.output;
    EXPECT_TRUE(fs::exists(out / "inflation_curve.csv"));
    EXPECT_TRUE(fs::exists(out / "manifest.json"));
}

TEST(Cli, TractionWritesOneRowPerPressure) {
    const auto out = scratch_dir("cli_traction");
    const auto r = cli("traction --pressures 0,8,16 --out " + out.string());
    EXPECT_EQ(r.code, 0) << r.output;
    const auto csv = slurp(out / "traction_sweep.csv");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
}

TEST(Cli, SweepRunsEveryCombination) {
    const auto out = scratch_dir("cli_sweep");
    const auto r = cli("sweep " + (source_dir() / "scenarios/pipe84_pressure_sweep.json").string() + " -j 3 --out " +
                       out.string());
    EXPECT_EQ(r.code, 0) << r.output;
    const auto index = json::parse(slurp(out / "sweep.json"));
    ASSERT_EQ(index.size(), 6u);
    for (const auto& c : index) {
        EXPECT_TRUE(c.at("error").get<std::string>().empty());
        EXPECT_TRUE(fs::exists(out / c.at("case").get<std::string>() / "summary.json"));
    }
    EXPECT_TRUE(fs::exists(out / "manifest.json"));
}

TEST(Cli, PaperSuiteReportFormat) {
    const auto out = scratch_dir("cli_suite");
    const auto r = cli("paper-suite --out " + out.string());
    EXPECT_EQ(r.code, 0) << r.output;
    const auto rep = json::parse(slurp(out / "paper_suite.json"));
    int traction_rows = 0;
    std::set<std::string> pipes;
    for (const auto& row : rep.at("rows")) {
        const auto id = row.at("id").get<std::string>();
        const auto verdict = row.at("verdict").get<std::string>();
        EXPECT_TRUE(verdict == "pass" || verdict == "fail") << id;
        EXPECT_TRUE(row.contains("tolerance")) << id;
        if (id.rfind("traction@", 0) == 0) ++traction_rows;
        if (id.rfind("pipe", 0) == 0) pipes.insert(id.substr(0, 6));
    }
    EXPECT_EQ(traction_rows, 5);
    EXPECT_EQ(pipes, (std::set<std::string>{"pipe74", "pipe84", "pipe94"}));
    EXPECT_EQ(rep.at("traction_sweep").size(), 5u);
    EXPECT_TRUE(fs::exists(out / "inflation_curve.csv"));
    EXPECT_TRUE(fs::exists(out / "manifest.json"));
}

TEST(Cli, SweepExpansionRejectsUnknownPointer) {
    const auto dir = scratch_dir("cli_sweep_bad");
    std::ofstream(dir / "base.json") << R"({"name":"b","lumen":{"fixture":"pipe84"},
      "commands":[{"t_s":0,"motor_radps":100,"p1_kPa":1,"p2_kPa":1}]})";
    const json sweep = {{"base", "base.json"}, {"grid", {{"/commands/0/p3_kPa", {1.0, 2.0}}}}};
    fs::path scen_dir;
    try {
        softscreen::cli::expand_sweep(sweep, dir, scen_dir);
        FAIL();
    } catch (const softscreen::config::ConfigError& e) {
        EXPECT_EQ(e.field, "grid./commands/0/p3_kPa");
    }
}
