#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "phasebal/cli.hpp"

using namespace phasebal;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string first_line(const fs::path& path) {
    const std::string text = slurp(path);
    return text.substr(0, text.find('\n') + 1);
}

std::string golden(const std::string& name) { return slurp(fs::path(PHASEBAL_GOLDEN_DIR) / name); }

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("phasebal_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    CliOptions preset(const std::string& name, const std::string& sub) const {
        CliOptions o;
        o.preset = name;
        o.out_dir = dir_ / sub;
        return o;
    }

    fs::path dir_;
    std::ostringstream out_, err_;
};

}  // namespace

TEST_F(CliTest, RunWritesStableColumns) {
    ASSERT_EQ(cmd_run(preset("a1-n5", "run"), out_, err_), kExitOk) << err_.str();
    for (const char* name : {"timeseries.csv", "batteries.csv", "summary.csv"}) {
        EXPECT_EQ(first_line(dir_ / "run" / name), golden(name)) << name;
    }
    const ParsedCsv summary = read_csv(dir_ / "run" / "summary.csv");
    ASSERT_EQ(summary.rows.size(), 1u);
    EXPECT_EQ(summary.rows[0][0], "a1-n5");
    const ParsedCsv ts = read_csv(dir_ / "run" / "timeseries.csv");
    EXPECT_EQ(ts.rows.size(), 24u * 6u);
    EXPECT_EQ(read_csv(dir_ / "run" / "batteries.csv").rows.size(), 24u);
}

TEST_F(CliTest, RunIsByteIdenticalAcrossRepeats) {
    ASSERT_EQ(cmd_run(preset("a2-n5-noshift", "one"), out_, err_), kExitOk);
    ASSERT_EQ(cmd_run(preset("a2-n5-noshift", "two"), out_, err_), kExitOk);
    for (const char* name : {"timeseries.csv", "batteries.csv", "summary.csv"}) {
        EXPECT_EQ(slurp(dir_ / "one" / name), slurp(dir_ / "two" / name)) << name;
    }
}

TEST_F(CliTest, EmptyFeederHasZeroLosses) {
    CliOptions o;
    o.config = fs::path(PHASEBAL_GOLDEN_DIR) / "empty_feeder.json";
    o.out_dir = dir_ / "empty";
    ASSERT_EQ(cmd_run(o, out_, err_), kExitOk) << err_.str();
    EXPECT_EQ(slurp(dir_ / "empty" / "summary.csv"), golden("empty_feeder_summary.csv"));
}

TEST_F(CliTest, ConfigFromExportedPresetMatchesPresetRun) {
    const fs::path cfg = dir_ / "a2-n5.json";
    ASSERT_EQ(cmd_export_preset("a2-n5", cfg, out_, err_), kExitOk);
    CliOptions o;
    o.config = cfg;
    o.out_dir = dir_ / "from_file";
    ASSERT_EQ(cmd_run(o, out_, err_), kExitOk) << err_.str();
    ASSERT_EQ(cmd_run(preset("a2-n5", "from_preset"), out_, err_), kExitOk);
    EXPECT_EQ(slurp(dir_ / "from_file" / "timeseries.csv"), slurp(dir_ / "from_preset" / "timeseries.csv"));
    EXPECT_EQ(slurp(dir_ / "from_file" / "summary.csv"), slurp(dir_ / "from_preset" / "summary.csv"));
}

TEST_F(CliTest, NegativeLengthIsAConfigErrorAndWritesNothing) {
    std::string text = slurp(fs::path(PHASEBAL_GOLDEN_DIR) / "empty_feeder.json");
    const auto at = text.find("\"length_km\": 0.1}");
    ASSERT_NE(at, std::string::npos);
    text.replace(at, 17, "\"length_km\": -0.5}");
    const fs::path cfg = dir_ / "neg.json";
    write_file_atomic(cfg, text);
    CliOptions o;
    o.config = cfg;
    o.out_dir = dir_ / "neg_out";
    EXPECT_EQ(cmd_run(o, out_, err_), kExitConfig);
    EXPECT_NE(err_.str().find("'S1'"), std::string::npos) << err_.str();
    EXPECT_FALSE(fs::exists(dir_ / "neg_out"));
}

TEST_F(CliTest, SolverFailureWritesNoSummary) {
    const fs::path cfg = dir_ / "collapse.json";
    RunConfig rc;
    rc.scenario = build_sweep_scenario(50.0, NodeId{"N5"}, DeviceKind::EV, 120.0, NetworkClass::Overload);
    write_file_atomic(cfg, emit_config(rc));
    CliOptions o;
    o.config = cfg;
    o.out_dir = dir_ / "collapse_out";
    EXPECT_EQ(cmd_run(o, out_, err_), kExitSolver);
    EXPECT_NE(err_.str().find("timestep 0"), std::string::npos) << err_.str();
    EXPECT_FALSE(fs::exists(dir_ / "collapse_out" / "summary.csv"));
}

TEST_F(CliTest, UsageAndIoErrors) {
    CliOptions none;
    EXPECT_EQ(cmd_run(none, out_, err_), kExitConfig);
    CliOptions missing;
    missing.config = dir_ / "nope.json";
    EXPECT_EQ(cmd_run(missing, out_, err_), kExitIo);
    EXPECT_EQ(cmd_run(preset("no-such-preset", "x"), out_, err_), kExitConfig);
    CliOptions bad_tol = preset("a1-n5", "x");
    bad_tol.tol_pu = -1.0;
    EXPECT_EQ(cmd_run(bad_tol, out_, err_), kExitConfig);
    EXPECT_EQ(exit_code_for(ErrorCode::NonConvergence), kExitSolver);
    EXPECT_EQ(exit_code_for(ErrorCode::VoltageCollapse), kExitSolver);
    EXPECT_EQ(exit_code_for(ErrorCode::Io), kExitIo);
    EXPECT_EQ(exit_code_for(ErrorCode::ConfigInvalid), kExitConfig);
}

TEST_F(CliTest, SweepWritesLongTableAndExtracts) {
    CliOptions o = preset("sweep-compact", "sweep");
    o.jobs = 4;
    ASSERT_EQ(cmd_sweep(o, out_, err_), kExitOk) << err_.str();
    for (const char* name :
         {"sweep.csv", "fig_losses.csv", "fig_vuf.csv", "fig_drop.csv", "failed_cells.csv"}) {
        EXPECT_EQ(first_line(dir_ / "sweep" / name), golden(name)) << name;
    }
    EXPECT_EQ(read_csv(dir_ / "sweep" / "sweep.csv").rows.size(), 48u);
    EXPECT_EQ(read_csv(dir_ / "sweep" / "fig_vuf.csv").rows.size(), 48u);
    EXPECT_TRUE(read_csv(dir_ / "sweep" / "failed_cells.csv").rows.empty());
}

TEST_F(CliTest, SweepWithZeroOnlyGridGivesOneNominalRow) {
    RunConfig rc;
    rc.sweep = SweepSpec{{}, {0.0}, {NodeId{"N5"}}, {DeviceKind::DG}};
    const fs::path cfg = dir_ / "zero.json";
    write_file_atomic(cfg, emit_config(rc));
    CliOptions o;
    o.config = cfg;
    o.out_dir = dir_ / "zero";
    ASSERT_EQ(cmd_sweep(o, out_, err_), kExitOk) << err_.str();
    const ParsedCsv t = read_csv(dir_ / "zero" / "sweep.csv");
    ASSERT_EQ(t.rows.size(), 1u);
    EXPECT_EQ(t.rows[0][0], "dg");
    EXPECT_EQ(t.rows[0][2], "0");
    EXPECT_EQ(t.rows[0][3], "ok");
    EXPECT_LT(std::stod(t.rows[0][8]), 1e-12);  // neutral_loss_kwh
}

TEST_F(CliTest, OverloadSweepFlagsCollapsedCells) {
    ASSERT_EQ(cmd_sweep(preset("sweep-overload", "over"), out_, err_), kExitSolver);
    const ParsedCsv failed = read_csv(dir_ / "over" / "failed_cells.csv");
    ASSERT_FALSE(failed.rows.empty());
    for (const auto& row : failed.rows) {
        EXPECT_EQ(row[0], "ev");
        EXPECT_EQ(row[3], "VoltageCollapse");
    }
    const ParsedCsv sweep = read_csv(dir_ / "over" / "sweep.csv");
    EXPECT_EQ(sweep.rows.size(), 48u);
    EXPECT_EQ(read_csv(dir_ / "over" / "fig_losses.csv").rows.size(), 48u - failed.rows.size());
}

TEST_F(CliTest, IngestReport) {
    const fs::path csv = dir_ / "series.csv";
    write_file_atomic(csv, "timestamp,p_a_kw,p_b_kw,p_c_kw\n2019-06-01T19:00,20,10,10\n2019-06-01T19:30,10,10,10\n");
    CliOptions o;
    o.out_dir = dir_ / "ingest";
    ASSERT_EQ(cmd_ingest(csv, o, out_, err_), kExitOk) << err_.str();
    EXPECT_EQ(first_line(dir_ / "ingest" / "ingest_rows.csv"), golden("ingest_rows.csv"));
    EXPECT_EQ(slurp(dir_ / "ingest" / "ingest_hourly.csv"), golden("ingest_hourly.csv") + "19,2,5,10\n");

    write_file_atomic(csv, "timestamp,p_a_kw,p_b_kw,p_c_kw\n2,1,1,1\n1,1,1,1\n");
    EXPECT_EQ(cmd_ingest(csv, o, out_, err_), kExitConfig);
    EXPECT_EQ(cmd_ingest(dir_ / "absent.csv", o, out_, err_), kExitIo);
}
