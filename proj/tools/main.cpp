// phasebal: run scenarios, penetration sweeps and measured-data ingest.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "phasebal/cli.hpp"

namespace {

void add_common(CLI::App& cmd, phasebal::CliOptions& opts) {
    cmd.add_option_function<std::string>(
           "--out", [&opts](const std::string& dir) { opts.out_dir = dir; }, "Output directory (default: out)")
        ->type_name("DIR");
}

void add_solver(CLI::App& cmd, phasebal::CliOptions& opts) {
    cmd.add_option_function<double>(
           "--tol", [&opts](double tol) { opts.tol_pu = tol; }, "Convergence tolerance, per unit")
        ->type_name("FLOAT");
    cmd.add_option_function<int>(
           "--max-iter", [&opts](int n) { opts.max_iter = n; }, "Sweep iteration limit")
        ->type_name("INT");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Phase-unbalance simulator for radial LV four-wire feeders"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "phasebal 0.1.0");

    phasebal::CliOptions opts;
    std::string config_path;
    std::string preset;

    auto* run = app.add_subcommand("run", "Simulate one scenario and write per-timestep and summary CSVs");
    run->add_option("config", config_path, "Scenario configuration (JSON)");
    run->add_option("--preset", preset, "Built-in scenario instead of a config file");
    add_common(*run, opts);
    add_solver(*run, opts);

    auto* sweep = app.add_subcommand("sweep", "Run a DG/EV penetration sweep");
    sweep->add_option("config", config_path, "Sweep configuration (JSON)");
    sweep->add_option("--preset", preset, "Built-in sweep instead of a config file");
    sweep->add_option("--jobs", opts.jobs, "Worker threads")->check(CLI::Range(1u, 256u));
    add_common(*sweep, opts);
    add_solver(*sweep, opts);

    std::string csv_path;
    auto* ingest = app.add_subcommand("ingest", "Per-phase imbalance statistics for a measured time series");
    ingest->add_option("csv", csv_path, "Measured series (timestamp,p_a_kw,p_b_kw,p_c_kw[,q_*_kvar][,i_n_a])")
        ->required();
    add_common(*ingest, opts);

    std::string export_name;
    std::string export_dest;
    auto* exporter = app.add_subcommand("export-preset", "Print the JSON configuration of a preset");
    exporter->add_option("name", export_name, "Preset name")->required();
    exporter->add_option("-o,--output", export_dest, "Write to this file instead of stdout");

    app.add_subcommand("presets", "List built-in presets");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? phasebal::kExitOk : phasebal::kExitUsage;
    }

    if (!config_path.empty()) opts.config = config_path;
    if (!preset.empty()) opts.preset = preset;

    if (run->parsed()) return phasebal::cmd_run(opts, std::cout, std::cerr);
    if (sweep->parsed()) return phasebal::cmd_sweep(opts, std::cout, std::cerr);
    if (ingest->parsed()) return phasebal::cmd_ingest(csv_path, opts, std::cout, std::cerr);
    if (exporter->parsed()) {
        return phasebal::cmd_export_preset(
            export_name, export_dest.empty() ? std::nullopt : std::optional<std::filesystem::path>(export_dest),
            std::cout, std::cerr);
    }
    for (const auto& name : phasebal::preset_names()) std::cout << "run    " << name << '\n';
    for (const auto& name : phasebal::sweep_preset_names()) std::cout << "sweep  " << name << '\n';
    return phasebal::kExitOk;
}
