#include "phasebal/cli.hpp"

#include <algorithm>
#include <ostream>

#include "phasebal/ingest.hpp"

namespace phasebal {

int exit_code_for(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::NonConvergence:
        case ErrorCode::VoltageCollapse:
        case ErrorCode::UnconvergedSolution:
        case ErrorCode::ZeroPositiveSequence:
            return kExitSolver;
        case ErrorCode::Io:
            return kExitIo;
        default:
            return kExitConfig;
    }
}

const std::vector<std::string>& sweep_preset_names() {
    static const std::vector<std::string> names{"sweep-compact", "sweep-compact-balanced", "sweep-overload",
                                                "sweep-sparse"};
    return names;
}

SweepSpec make_sweep_preset(const std::string& name) {
    SweepSpec sw;
    sw.penetrations = standard_penetration_grid();
    sw.nodes = {NodeId{"N1"}, NodeId{"N5"}};
    sw.kinds = {DeviceKind::DG, DeviceKind::EV};
    if (name == "sweep-compact") {
        sw.tmpl.network_class = NetworkClass::Compact;
    } else if (name == "sweep-compact-balanced") {
        sw.tmpl.network_class = NetworkClass::Compact;
        sw.tmpl.placement = DevicePlacement::Balanced;
    } else if (name == "sweep-overload") {
        sw.tmpl.network_class = NetworkClass::Overload;
    } else if (name == "sweep-sparse") {
        sw.tmpl.network_class = NetworkClass::Sparse;
    } else {
        throw Error(ErrorCode::ConfigInvalid, "unknown sweep preset '" + name + "'", name);
    }
    sw.tmpl.total_phase_load_kw = default_phase_load_kw(sw.tmpl.network_class);
    return sw;
}

RunConfig resolve_config(const CliOptions& options, bool sweep) {
    if (options.preset.has_value() == options.config.has_value()) {
        throw Error(ErrorCode::ConfigInvalid, "give exactly one of a config file and --preset", "config");
    }
    RunConfig cfg;
    if (options.preset) {
        if (sweep) {
            cfg.sweep = make_sweep_preset(*options.preset);
        } else {
            try {
                cfg.scenario = make_preset(*options.preset);
            } catch (const Error& e) {
                throw Error(ErrorCode::ConfigInvalid, e.what(), *options.preset);
            }
        }
    } else {
        cfg = load_config(*options.config);
        if (sweep && !cfg.sweep) {
            throw Error(ErrorCode::ConfigInvalid, options.config->string() + ": sweep needs a 'sweep' section", "/sweep");
        }
        if (!sweep && !cfg.scenario) {
            throw Error(ErrorCode::ConfigInvalid, options.config->string() + ": run needs a 'scenario' section",
                        "/scenario");
        }
    }
    if (options.out_dir) cfg.out_dir = options.out_dir->string();
    if (options.tol_pu) cfg.solver.tol_pu = *options.tol_pu;
    if (options.max_iter) cfg.solver.max_iter = *options.max_iter;
    try {
        cfg.solver.validate();
    } catch (const Error& e) {
        throw Error(ErrorCode::ConfigInvalid, e.what(), "/solver");
    }
    return cfg;
}

CsvTable timeseries_table(const ScenarioResult& result) {
    CsvTable t({"scenario", "step", "hour", "node", "v_a_v", "v_b_v", "v_c_v", "v_n_v", "vuf_pct", "drop_a_pct",
                "drop_b_pct", "drop_c_pct", "phase_loss_a_kw", "phase_loss_b_kw", "phase_loss_c_kw",
                "neutral_loss_kw", "neutral_current_a", "battery_p_kw", "battery_q_kvar", "battery_soc_kwh"});
    for (const NodeStepRecord& r : result.node_steps) {
        t.add_row({result.name, cell(r.step), cell(r.hour), r.node.name, cell(r.v_pn[0]), cell(r.v_pn[1]),
                   cell(r.v_pn[2]), cell(r.v_neutral), cell(r.metrics.vuf_pct), cell(r.metrics.drop_pct[0]),
                   cell(r.metrics.drop_pct[1]), cell(r.metrics.drop_pct[2]), cell(r.flow.phase_loss_kw[0]),
                   cell(r.flow.phase_loss_kw[1]), cell(r.flow.phase_loss_kw[2]), cell(r.flow.neutral_loss_kw),
                   cell(r.neutral_current_a), cell(r.battery_p_kw), cell(r.battery_q_kvar),
                   cell(r.battery_soc_kwh)});
    }
    return t;
}

CsvTable batteries_table(const ScenarioResult& result) {
    CsvTable t({"scenario", "step", "hour", "battery", "node", "phase", "p_kw", "q_kvar", "soc_kwh"});
    for (const BatteryStepRecord& r : result.battery_steps) {
        t.add_row({result.name, cell(r.step), cell(r.hour), r.battery, r.node.name, cell(to_string(r.phase)),
                   cell(r.p_kw), cell(r.q_kvar), cell(r.soc_kwh)});
    }
    return t;
}

CsvTable summary_table(const std::vector<ScenarioResult>& results) {
    CsvTable t({"scenario", "max_vuf_pct", "neutral_loss_kwh", "phase_loss_kwh", "max_drop_pct", "max_rise_pct",
                "mean_vuf_pct", "total_loss_kwh", "phase_loss_a_kwh", "phase_loss_b_kwh", "phase_loss_c_kwh",
                "saturated_steps"});
    for (const ScenarioResult& r : results) {
        const auto saturated = static_cast<std::size_t>(
            std::count_if(r.steps.begin(), r.steps.end(), [](const StepRecord& s) { return s.storage_saturated; }));
        t.add_row({r.name, cell(r.max_vuf_pct), cell(r.neutral_loss_kwh), cell(r.phase_loss_kwh),
                   cell(r.max_drop_pct), cell(r.max_rise_pct), cell(r.mean_vuf_pct), cell(r.total_loss_kwh),
                   cell(r.phase_loss_kwh_by_phase[0]), cell(r.phase_loss_kwh_by_phase[1]),
                   cell(r.phase_loss_kwh_by_phase[2]), cell(saturated)});
    }
    return t;
}

namespace {

std::vector<std::string> sweep_key(const SweepRow& row) {
    return {std::string(to_string(row.kind)), row.node.name, cell(row.penetration_pct)};
}

double at_node(const std::map<NodeId, double>& values, const char* node) {
    const auto it = values.find(NodeId{node});
    return it == values.end() ? 0.0 : it->second;
}

template <typename F>
CsvTable keyed_table(const std::vector<SweepRow>& rows, std::vector<std::string> columns, F&& values) {
    std::vector<std::string> header{"kind", "node", "penetration_pct"};
    header.insert(header.end(), columns.begin(), columns.end());
    CsvTable t(std::move(header));
    for (const SweepRow& row : rows) {
        if (!row.result) continue;
        std::vector<std::string> cells = sweep_key(row);
        for (const double v : values(*row.result)) cells.push_back(cell(v));
        t.add_row(std::move(cells));
    }
    return t;
}

}  // namespace

CsvTable sweep_table(const std::vector<SweepRow>& rows) {
    CsvTable t({"kind", "node", "penetration_pct", "status", "mean_vuf_pct", "max_vuf_pct", "vuf_n1_pct",
                "vuf_n5_pct", "neutral_loss_kwh", "phase_loss_kwh", "total_loss_kwh", "sum_drop_n1_pct",
                "sum_drop_n5_pct", "max_drop_pct", "max_rise_pct"});
    for (const SweepRow& row : rows) {
        std::vector<std::string> cells = sweep_key(row);
        if (row.result) {
            const ScenarioResult& r = *row.result;
            cells.push_back("ok");
            for (const double v : {r.mean_vuf_pct, r.max_vuf_pct, at_node(r.vuf_at, "N1"), at_node(r.vuf_at, "N5"),
                                   r.neutral_loss_kwh, r.phase_loss_kwh, r.total_loss_kwh,
                                   at_node(r.sum_drop_at, "N1"), at_node(r.sum_drop_at, "N5"), r.max_drop_pct,
                                   r.max_rise_pct}) {
                cells.push_back(cell(v));
            }
        } else {
            cells.push_back(row.error_code ? cell(to_string(*row.error_code)) : "failed");
            cells.resize(t.header().size());
        }
        t.add_row(std::move(cells));
    }
    return t;
}

CsvTable sweep_losses_table(const std::vector<SweepRow>& rows) {
    return keyed_table(rows, {"neutral_loss_kwh", "phase_loss_kwh"}, [](const ScenarioResult& r) {
        return std::vector<double>{r.neutral_loss_kwh, r.phase_loss_kwh};
    });
}

CsvTable sweep_vuf_table(const std::vector<SweepRow>& rows) {
    return keyed_table(rows, {"mean_vuf_pct", "max_vuf_pct"}, [](const ScenarioResult& r) {
        return std::vector<double>{r.mean_vuf_pct, r.max_vuf_pct};
    });
}

CsvTable sweep_drop_table(const std::vector<SweepRow>& rows) {
    return keyed_table(rows, {"sum_drop_n1_pct", "sum_drop_n5_pct"}, [](const ScenarioResult& r) {
        return std::vector<double>{at_node(r.sum_drop_at, "N1"), at_node(r.sum_drop_at, "N5")};
    });
}

CsvTable failed_cells_table(const std::vector<SweepRow>& rows) {
    CsvTable t({"kind", "node", "penetration_pct", "error_code", "message"});
    for (const SweepRow& row : rows) {
        if (row.result) continue;
        std::vector<std::string> cells = sweep_key(row);
        cells.push_back(row.error_code ? cell(to_string(*row.error_code)) : "");
        std::string msg = row.error;
        std::replace_if(msg.begin(), msg.end(), [](char c) { return c == ',' || c == '\n' || c == '\r'; }, ';');
        cells.push_back(msg);
        t.add_row(std::move(cells));
    }
    return t;
}

namespace {

// Shared error reporting for the commands.
template <typename F>
int guarded_command(std::ostream& err, F&& body) {
    try {
        return body();
    } catch (const SolverError& e) {
        err << "phasebal: " << e.what();
        if (e.timestep()) err << " [timestep " << *e.timestep() << "]";
        err << '\n';
        return kExitSolver;
    } catch (const Error& e) {
        err << "phasebal: " << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const std::filesystem::filesystem_error& e) {
        err << "phasebal: " << e.what() << '\n';
        return kExitIo;
    }
}

}  // namespace

int cmd_run(const CliOptions& options, std::ostream& out, std::ostream& err) {
    return guarded_command(err, [&] {
        const RunConfig cfg = resolve_config(options, false);
        const ScenarioResult result = run_scenario(*cfg.scenario, cfg.solver);
        const std::filesystem::path dir = cfg.out_dir;
        const CsvTable timeseries = timeseries_table(result);
        const CsvTable batteries = batteries_table(result);
        const CsvTable summary = summary_table({result});
        write_csv(dir / "timeseries.csv", timeseries);
        write_csv(dir / "batteries.csv", batteries);
        write_csv(dir / "summary.csv", summary);
        out << result.name << ": max VUF " << format_number(result.max_vuf_pct) << " %, neutral losses "
            << format_number(result.neutral_loss_kwh) << " kWh -> " << dir.string() << '\n';
        return static_cast<int>(kExitOk);
    });
}

int cmd_sweep(const CliOptions& options, std::ostream& out, std::ostream& err) {
    return guarded_command(err, [&] {
        const RunConfig cfg = resolve_config(options, true);
        const SweepSpec& sw = *cfg.sweep;
        const std::vector<SweepRow> rows =
            sweep_and_tabulate(sw.tmpl, sw.penetrations, sw.nodes, sw.kinds, cfg.solver, std::max(1u, options.jobs));
        const std::filesystem::path dir = cfg.out_dir;
        write_csv(dir / "sweep.csv", sweep_table(rows));
        write_csv(dir / "fig_losses.csv", sweep_losses_table(rows));
        write_csv(dir / "fig_vuf.csv", sweep_vuf_table(rows));
        write_csv(dir / "fig_drop.csv", sweep_drop_table(rows));
        const CsvTable failed = failed_cells_table(rows);
        write_csv(dir / "failed_cells.csv", failed);
        out << rows.size() << " cells, " << failed.rows().size() << " failed -> " << dir.string() << '\n';
        for (const auto& cells : failed.rows()) {
            err << "phasebal: cell " << cells[0] << " " << cells[1] << " " << cells[2] << "% failed: " << cells[4]
                << '\n';
        }
        return failed.rows().empty() ? static_cast<int>(kExitOk) : static_cast<int>(kExitSolver);
    });
}

int cmd_ingest(const std::filesystem::path& csv_path, const CliOptions& options, std::ostream& out,
               std::ostream& err) {
    return guarded_command(err, [&] {
        const ParsedCsv csv = read_csv(csv_path);
        const MeasuredSeries series = parse_measured_series(csv, csv_path.string());
        const IngestReport report = analyze_series(series);
        const std::filesystem::path dir = options.out_dir.value_or("out");
        write_csv(dir / "ingest_rows.csv", ingest_rows_table(report));
        write_csv(dir / "ingest_hourly.csv", ingest_hourly_table(report));
        out << report.rows.size() << " samples over " << report.hourly.size() << " clock hours -> " << dir.string()
            << '\n';
        return static_cast<int>(kExitOk);
    });
}

int cmd_export_preset(const std::string& name, const std::optional<std::filesystem::path>& dest, std::ostream& out,
                      std::ostream& err) {
    return guarded_command(err, [&] {
        RunConfig cfg;
        const auto& sweeps = sweep_preset_names();
        if (std::find(sweeps.begin(), sweeps.end(), name) != sweeps.end()) {
            cfg.sweep = make_sweep_preset(name);
        } else {
            const auto& runs = preset_names();
            if (std::find(runs.begin(), runs.end(), name) == runs.end()) {
                throw Error(ErrorCode::ConfigInvalid, "unknown preset '" + name + "'", name);
            }
            cfg.scenario = make_preset(name);
        }
        const std::string text = emit_config(cfg);
        if (dest) {
            write_file_atomic(*dest, text);
        } else {
            out << text;
        }
        return static_cast<int>(kExitOk);
    });
}

}  // namespace phasebal
