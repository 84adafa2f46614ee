#pragma once

// Commands behind the phasebal executable. Each returns a process exit code
// and reports problems on `err`; nothing here calls exit().

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "phasebal/config.hpp"
#include "phasebal/csv.hpp"
#include "phasebal/error.hpp"
#include "phasebal/scenarios.hpp"

namespace phasebal {

enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitConfig = 2,
    kExitSolver = 3,
    kExitIo = 4,
};

/// Solver failures map to 3, I/O to 4, everything else to 2.
int exit_code_for(ErrorCode code) noexcept;

struct CliOptions {
    std::optional<std::filesystem::path> config;
    std::optional<std::string> preset;
    std::optional<std::filesystem::path> out_dir;
    std::optional<double> tol_pu;
    std::optional<int> max_iter;
    unsigned jobs = 1;
};

/// Named sweep configurations: the DG/EV penetration grid at N1 and N5 for
/// each network class, plus the balanced-device variant of the compact one.
const std::vector<std::string>& sweep_preset_names();
SweepSpec make_sweep_preset(const std::string& name);

/// Configuration from --preset or --config, with --out, --tol and
/// --max-iter applied on top. Throws ConfigInvalid or Io.
RunConfig resolve_config(const CliOptions& options, bool sweep);

CsvTable timeseries_table(const ScenarioResult& result);
CsvTable batteries_table(const ScenarioResult& result);
CsvTable summary_table(const std::vector<ScenarioResult>& results);

CsvTable sweep_table(const std::vector<SweepRow>& rows);
CsvTable sweep_losses_table(const std::vector<SweepRow>& rows);
CsvTable sweep_vuf_table(const std::vector<SweepRow>& rows);
CsvTable sweep_drop_table(const std::vector<SweepRow>& rows);
CsvTable failed_cells_table(const std::vector<SweepRow>& rows);

/// Writes timeseries.csv, batteries.csv and summary.csv into the output
/// directory, only after the whole run succeeded.
int cmd_run(const CliOptions& options, std::ostream& out, std::ostream& err);

/// Writes sweep.csv, the three figure extracts and failed_cells.csv. Cells
/// that fail are listed in the manifest; the exit code is then 3.
int cmd_sweep(const CliOptions& options, std::ostream& out, std::ostream& err);

/// Writes ingest_rows.csv and ingest_hourly.csv.
int cmd_ingest(const std::filesystem::path& csv_path, const CliOptions& options, std::ostream& out,
               std::ostream& err);

/// Prints the JSON of a run or sweep preset to `out`, or writes it to
/// `dest` when given.
int cmd_export_preset(const std::string& name, const std::optional<std::filesystem::path>& dest, std::ostream& out,
                      std::ostream& err);

}  // namespace phasebal
