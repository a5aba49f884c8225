#include "cli.hpp"

#include <tclm/io.hpp>

#include <gtest/gtest.h>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace tclm {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct RunResult {
    int code;
    std::string out;
    std::string err;
};

RunResult run_cli(std::vector<std::string> args)
{
    args.insert(args.begin(), "tclm");
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch_dir(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / ("tclm_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Rows of a numeric CSV, header dropped.
std::vector<std::vector<double>> numeric_rows(const fs::path& p)
{
    std::istringstream in(slurp(p));
    std::string line;
    std::getline(in, line);
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        std::vector<double> row;
        std::istringstream cells(line);
        std::string cell;
        while (std::getline(cells, cell, ',')) {
            double v = 0.0;
            std::from_chars(cell.data(), cell.data() + cell.size(), v);
            row.push_back(v);
        }
        rows.push_back(row);
    }
    return rows;
}

TEST(Cli, VersionAndUsage)
{
    const RunResult v = run_cli({"--version"});
    EXPECT_EQ(v.code, cli::kSuccess);
    EXPECT_NE(v.out.find("0.1.0"), std::string::npos);
    EXPECT_EQ(run_cli({}).code, cli::kInputError);
    EXPECT_EQ(run_cli({"bogus"}).code, cli::kInputError);
}

TEST(CliSimulate, PatientAPeak)
{
    const fs::path dir = scratch_dir("sim_a");
    const RunResult r = run_cli({"simulate", "--patient", "A", "--out", dir.string()});
    ASSERT_EQ(r.code, cli::kSuccess) << r.err;
    const auto rows = numeric_rows(dir / "A_trajectory.csv");
    ASSERT_FALSE(rows.empty());
    EXPECT_EQ(rows[0].size(), 5u);
    std::size_t peak = 0;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        if (rows[k][3] > rows[peak][3]) {
            peak = k;
        }
        EXPECT_DOUBLE_EQ(rows[k][4], rows[k][0] - 7.0);
    }
    EXPECT_NEAR(rows[peak][0], 10.58, 0.25);
    EXPECT_NEAR(rows[peak][3], 1.73e7, 0.05 * 1.73e7);

    const json events = json::parse(slurp(dir / "A_events.json"));
    bool found = false;
    for (const json& e : events) {
        if (e.at("kind") == "V_LocalMax") {
            found = true;
            EXPECT_NEAR(e.at("time").get<double>(), 10.58, 0.1);
            EXPECT_NEAR(e.at("V").get<double>(), 1.73e7, 0.05 * 1.73e7);
        }
    }
    EXPECT_TRUE(found);

    const json report = json::parse(slurp(dir / "A_report.json"));
    EXPECT_EQ(report.at("schema_version"), kReportSchemaVersion);
    EXPECT_EQ(report.at("tool_version"), std::string(tool_version()));
    EXPECT_TRUE(report.at("characterization").at("t_V_max").is_number());
    fs::remove_all(dir);
}

TEST(CliSimulate, InlineParamsDipThenPeak)
{
    const fs::path dir = scratch_dir("sim_unit");
    const RunResult r = run_cli({"simulate", "--beta", "1", "--delta", "1", "--p", "1", "--c", "1", "--u0",
                                 "1.8", "--i0", "0.25", "--v0", "0.4", "--no-pso", "--svg", "--out",
                                 dir.string()});
    ASSERT_EQ(r.code, cli::kSuccess) << r.err;
    std::vector<std::string> v_kinds;
    for (const json& e : json::parse(slurp(dir / "custom_events.json"))) {
        const std::string kind = e.at("kind");
        if (kind.rfind("V_Local", 0) == 0) {
            v_kinds.push_back(kind);
        }
    }
    EXPECT_EQ(v_kinds, (std::vector<std::string>{"V_LocalMin", "V_LocalMax"}));
    EXPECT_EQ(numeric_rows(dir / "custom_trajectory.csv")[0].size(), 4u);
    EXPECT_TRUE(fs::exists(dir / "custom_trajectory.svg"));
    fs::remove_all(dir);
}

TEST(CliSimulate, ZeroInoculumIsConstant)
{
    const fs::path dir = scratch_dir("sim_v0");
    const RunResult r = run_cli({"simulate", "--patient", "A", "--v0", "0", "--out", dir.string()});
    ASSERT_EQ(r.code, cli::kSuccess) << r.err;
    const auto rows = numeric_rows(dir / "A_trajectory.csv");
    ASSERT_GE(rows.size(), 2u);
    for (const auto& row : rows) {
        EXPECT_EQ(row[1], 1e7);
        EXPECT_EQ(row[2], 0.0);
        EXPECT_EQ(row[3], 0.0);
    }
    fs::remove_all(dir);
}

TEST(CliSimulate, ReportReproducesTrajectoryBytes)
{
    const fs::path first = scratch_dir("sim_first");
    const fs::path second = scratch_dir("sim_second");
    ASSERT_EQ(run_cli({"simulate", "--patient", "E", "--rel-tol", "1e-10", "--t-max", "30", "--out",
                       first.string()})
                  .code,
              cli::kSuccess);
    const RunResult re =
        run_cli({"simulate", "--from-report", (first / "E_report.json").string(), "--out", second.string()});
    ASSERT_EQ(re.code, cli::kSuccess) << re.err;
    EXPECT_EQ(slurp(first / "E_trajectory.csv"), slurp(second / "E_trajectory.csv"));
    EXPECT_EQ(slurp(first / "E_events.json"), slurp(second / "E_events.json"));
    fs::remove_all(first);
    fs::remove_all(second);
}

TEST(CliSimulate, Failures)
{
    const fs::path dir = scratch_dir("sim_fail");
    EXPECT_EQ(run_cli({"simulate", "--patient", "Z", "--out", dir.string()}).code, cli::kInputError);
    EXPECT_EQ(run_cli({"simulate", "--beta", "1", "--out", dir.string()}).code, cli::kInputError);
    EXPECT_EQ(run_cli({"simulate", "--patient", "A", "--rel-tol", "-1", "--out", dir.string()}).code,
              cli::kInputError);
    const RunResult under = run_cli({"simulate", "--patient", "A", "--max-step", "1e-300", "--out", dir.string()});
    EXPECT_EQ(under.code, cli::kNumericalFailure);
    EXPECT_NE(under.err.find("numerical failure"), std::string::npos);
    fs::remove_all(dir);
}

TEST(CliCharacterize, AllPatientsTable)
{
    const fs::path dir = scratch_dir("chr_all");
    const RunResult r = run_cli({"characterize", "--all", "--out", dir.string()});
    ASSERT_EQ(r.code, cli::kSuccess) << r.err;
    EXPECT_EQ(r.out, slurp(dir / "table2.csv"));
    std::istringstream lines(r.out);
    std::string line;
    int rows = -1;
    while (std::getline(lines, line)) {
        ++rows;
    }
    EXPECT_EQ(rows, 9);
    for (char id = 'A'; id <= 'I'; ++id) {
        EXPECT_TRUE(fs::exists(dir / (std::string(1, id) + "_characterization.json")));
    }
    fs::remove_all(dir);
}

TEST(CliCharacterize, SinglePatientWithAlpha)
{
    const fs::path dir = scratch_dir("chr_c");
    ASSERT_EQ(run_cli({"characterize", "--patient", "C", "--out", dir.string()}).code, cli::kSuccess);
    const json c = json::parse(slurp(dir / "C_characterization.json"));
    EXPECT_NEAR(c.at("characterization").at("R0").get<double>(), 37.57, 0.01 * 37.57);

    ASSERT_EQ(run_cli({"characterize", "--patient", "A", "--alpha", "--out", dir.string()}).code,
              cli::kSuccess);
    const json a = json::parse(slurp(dir / "A_characterization.json"));
    EXPECT_LT(a.at("characterization").at("alpha0").get<double>(), 1e-3);
    EXPECT_NE(slurp(dir / "table2.csv").find(",alpha0\n"), std::string::npos);

    EXPECT_EQ(run_cli({"characterize", "--out", dir.string()}).code, cli::kInputError);
    fs::remove_all(dir);
}

TEST(CliFit, SyntheticRecoveryAndErrors)
{
    const fs::path dir = scratch_dir("fit");
    const fs::path data = dir / "a.csv";
    const RunResult s = run_cli({"synth", "--patient", "A", "--out", data.string()});
    ASSERT_EQ(s.code, cli::kSuccess) << s.err;
    EXPECT_EQ(numeric_rows(data).size(), 12u);

    const RunResult f =
        run_cli({"fit", data.string(), "--seed", "1", "--v0", "5.001", "--out", (dir / "fit").string()});
    ASSERT_EQ(f.code, cli::kSuccess) << f.err;
    const json result = json::parse(slurp(dir / "fit" / "fit_result.json"));
    EXPECT_LT(result.at("result").at("cost").get<double>(), 1e-3);
    EXPECT_EQ(result.at("config").at("de").at("rng_seed"), 1);
    EXPECT_TRUE(fs::exists(dir / "fit" / "fit_trajectory.csv"));

    EXPECT_EQ(run_cli({"fit", data.string(), "--out", dir.string()}).code, cli::kInputError);

    const fs::path unordered = dir / "unordered.csv";
    std::ofstream(unordered) << "t_days,viral_load,below_lod\n2,1000,0\n1,1000,0\n";
    EXPECT_EQ(run_cli({"fit", unordered.string(), "--seed", "1", "--out", dir.string()}).code,
              cli::kInputError);

    const fs::path censored = dir / "censored.csv";
    std::ofstream(censored) << "t_days,viral_load,below_lod\n1,100,1\n2,100,1\n";
    const RunResult c = run_cli({"fit", censored.string(), "--seed", "1", "--out", dir.string()});
    EXPECT_EQ(c.code, cli::kInputError);
    EXPECT_NE(c.err.find("degenerate"), std::string::npos);

    EXPECT_EQ(run_cli({"fit", data.string(), "--seed", "1", "--bound", "beta=1:0", "--out", dir.string()})
                  .code,
              cli::kInputError);
    fs::remove_all(dir);
}

TEST(CliSweep, PhasePortraitGrid)
{
    const fs::path dir = scratch_dir("sweep");
    const RunResult r = run_cli({"sweep", "--u0-list", "0.5,1.2,1.8,2.5", "--v0-list", "0.4", "--t-max",
                                 "100", "--uinf-curve", "--out", dir.string()});
    ASSERT_EQ(r.code, cli::kSuccess) << r.err;
    EXPECT_NE(r.out.find("all terminal U < U_c: yes"), std::string::npos);
    const auto terminal = numeric_rows(dir / "sweep_terminal.csv");
    ASSERT_EQ(terminal.size(), 4u);
    for (const auto& row : terminal) {
        EXPECT_LT(row[5], 1.0);
        EXPECT_LT(row[6], 1e-6);
        EXPECT_LT(row[7], 1e-6);
        EXPECT_NEAR(row[5], row[8], 1e-6);
    }
    for (int k = 0; k < 4; ++k) {
        EXPECT_TRUE(fs::exists(dir / ("sweep_" + std::to_string(k) + ".csv")));
    }
    EXPECT_TRUE(fs::exists(dir / "uinf_curve.csv"));

    EXPECT_EQ(run_cli({"sweep", "--u0-list", "", "--v0-list", "0.4", "--out", dir.string()}).code,
              cli::kInputError);
    fs::remove_all(dir);
}

TEST(CliSweep, SinglePointMatchesSimulate)
{
    const fs::path dir = scratch_dir("sweep_one");
    ASSERT_EQ(run_cli({"sweep", "--u0-list", "1.8", "--v0-list", "0.4", "--i0", "0.25", "--out",
                       (dir / "sw").string()})
                  .code,
              cli::kSuccess);
    ASSERT_EQ(run_cli({"simulate", "--beta", "1", "--delta", "1", "--p", "1", "--c", "1", "--u0", "1.8",
                       "--i0", "0.25", "--v0", "0.4", "--no-pso", "--no-early-stop", "--out",
                       (dir / "sim").string()})
                  .code,
              cli::kSuccess);
    EXPECT_EQ(slurp(dir / "sw" / "sweep_0.csv"), slurp(dir / "sim" / "custom_trajectory.csv"));
    fs::remove_all(dir);
}

TEST(CliSynth, StdoutCsv)
{
    const RunResult r = run_cli({"synth", "--patient", "B", "--times", "1,2,3", "--noise-sd", "0.1",
                                 "--seed", "4"});
    ASSERT_EQ(r.code, cli::kSuccess) << r.err;
    std::istringstream is(r.out);
    EXPECT_EQ(read_measurements_csv(is).size(), 3u);
    EXPECT_EQ(run_cli({"synth", "--patient", "B", "--times", "3,2"}).code, cli::kInputError);
}

}  // namespace
}  // namespace tclm
