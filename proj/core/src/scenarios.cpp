#include "phasebal/scenarios.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <thread>

#include "phasebal/error.hpp"

namespace phasebal {

namespace {

std::string lowercase(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

constexpr std::size_t kChainNodes = 6;

}  // namespace

std::string_view to_string(NetworkClass c) noexcept {
    switch (c) {
        case NetworkClass::Compact: return "compact";
        case NetworkClass::Overload: return "overload";
        case NetworkClass::Sparse: return "sparse";
    }
    return "?";
}

NetworkClass parse_network_class(std::string_view text) {
    const std::string t = lowercase(text);
    if (t == "compact") return NetworkClass::Compact;
    if (t == "overload") return NetworkClass::Overload;
    if (t == "sparse") return NetworkClass::Sparse;
    throw Error(ErrorCode::InvalidArgument, "unknown network class '" + t + "'", t);
}

double segment_length_km(NetworkClass c) noexcept { return c == NetworkClass::Sparse ? 1.0 : 0.1; }

double default_phase_load_kw(NetworkClass c) noexcept { return c == NetworkClass::Overload ? 50.0 : 5.0; }

std::string_view to_string(ControllerId c) noexcept {
    switch (c) {
        case ControllerId::None: return "none";
        case ControllerId::FixedSchedule: return "fixed_schedule";
        case ControllerId::Greedy: return "greedy";
    }
    return "?";
}

ControllerId parse_controller(std::string_view text) {
    const std::string t = lowercase(text);
    if (t == "none") return ControllerId::None;
    if (t == "fixed_schedule") return ControllerId::FixedSchedule;
    if (t == "greedy") return ControllerId::Greedy;
    throw Error(ErrorCode::InvalidArgument, "unknown controller '" + t + "'", t);
}

int Scenario::steps() const { return static_cast<int>(std::llround(horizon_h / dt_h)); }

void Scenario::validate() const {
    if (!(dt_h > 0.0) || !(horizon_h > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "horizon and timestep must be positive", "horizon_h");
    }
    const double ratio = horizon_h / dt_h;
    if (std::abs(ratio - std::round(ratio)) > 1e-9) {
        throw Error(ErrorCode::InvalidArgument, "horizon is not a whole number of timesteps", "horizon_h");
    }
    const auto n = static_cast<std::size_t>(steps());
    for (const auto& [id, series] : profiles) {
        if (series.size() != n) {
            throw Error(ErrorCode::InvalidArgument,
                        "profile '" + id + "' has " + std::to_string(series.size()) + " values, expected " +
                            std::to_string(n),
                        id);
        }
        for (const double x : series) {
            if (!std::isfinite(x)) throw Error(ErrorCode::InvalidArgument, "profile '" + id + "' is not finite", id);
        }
    }

    std::vector<std::string> storage_batteries;
    for (const Device& d : feeder.devices()) {
        if (d.kind == DeviceKind::Storage) {
            storage_batteries.push_back(d.battery_id);
            continue;
        }
        if (!profiles.contains(d.profile_id)) {
            throw Error(ErrorCode::InvalidArgument,
                        "device '" + d.id + "' uses unknown profile '" + d.profile_id + "'", d.id);
        }
    }
    const std::size_t sites = storage ? storage->sites.size() : 0;
    if (storage_batteries.size() != sites) {
        throw Error(ErrorCode::InvalidArgument, "storage devices and battery sites do not match");
    }
    if (storage) {
        for (const BatterySite& site : storage->sites) {
            site.battery.validate();
            const auto it = std::find(storage_batteries.begin(), storage_batteries.end(), site.battery.id);
            if (it == storage_batteries.end()) {
                throw Error(ErrorCode::InvalidArgument, "battery '" + site.battery.id + "' has no storage device",
                            site.battery.id);
            }
            storage_batteries.erase(it);
            const auto dev = std::find_if(feeder.devices().begin(), feeder.devices().end(), [&](const Device& d) {
                return d.kind == DeviceKind::Storage && d.battery_id == site.battery.id;
            });
            if (dev->node != site.node) {
                throw Error(ErrorCode::InvalidArgument,
                            "battery '" + site.battery.id + "' site and storage device disagree on the node",
                            site.battery.id);
            }
        }
        if (storage->architecture.kind == Architecture::Kind::A2 && storage->sites.size() != 3) {
            throw Error(ErrorCode::InvalidArgument, "architecture A2 needs exactly three batteries");
        }
        if (storage->architecture.kind == Architecture::Kind::A1 && storage->sites.size() != 1) {
            throw Error(ErrorCode::InvalidArgument, "architecture A1 needs exactly one battery");
        }
    }
}

bool operator==(const Scenario& a, const Scenario& b) {
    return a.name == b.name && a.feeder.to_spec() == b.feeder.to_spec() && a.horizon_h == b.horizon_h &&
           a.dt_h == b.dt_h && a.profiles == b.profiles && a.storage == b.storage && a.seed == b.seed;
}

FeederSpec chain_spec(std::size_t node_count, double length_km) {
    FeederSpec spec;
    spec.source_node = NodeId{"N0"};
    for (std::size_t k = 0; k < node_count; ++k) spec.nodes.emplace_back("N" + std::to_string(k));
    for (std::size_t k = 1; k < node_count; ++k) {
        LineSegment seg;
        seg.id = "S" + std::to_string(k);
        seg.from_node = spec.nodes[k - 1];
        seg.to_node = spec.nodes[k];
        seg.length_km = length_km;
        spec.segments.push_back(seg);
    }
    return spec;
}

std::vector<double> constant_profile(int steps, double value) {
    return std::vector<double>(static_cast<std::size_t>(steps), value);
}

std::vector<double> window_profile(int steps, double dt_h, Window window) {
    std::vector<double> out(static_cast<std::size_t>(steps), 0.0);
    for (int s = 0; s < steps; ++s) out[static_cast<std::size_t>(s)] = window.contains(s * dt_h) ? 1.0 : 0.0;
    return out;
}

namespace {

Device balanced_load(const std::string& id, const NodeId& node, double kw_per_phase) {
    Device d;
    d.id = id;
    d.node = node;
    d.connection = PhaseConnection::balanced_three_phase();
    d.kind = DeviceKind::Load;
    d.s_rated_kva = {kw_per_phase, 0.0};
    d.profile_id = "const";
    return d;
}

bool is_downstream_node(const NodeId& node) {
    for (std::size_t k = 1; k < kChainNodes; ++k) {
        if (node.name == "N" + std::to_string(k)) return true;
    }
    return false;
}

std::string format_pct(double pct) {
    const double rounded = std::round(pct);
    if (std::abs(pct - rounded) < 1e-9) return std::to_string(static_cast<long long>(rounded));
    std::string s = std::to_string(pct);
    while (!s.empty() && s.back() == '0') s.pop_back();
    return s;
}

}  // namespace

Scenario build_sweep_scenario(double total_phase_load_kw, const NodeId& device_node, DeviceKind kind,
                              double penetration_pct, NetworkClass network_class, DevicePlacement placement) {
    if (!is_downstream_node(device_node)) {
        throw Error(ErrorCode::UnknownNode, "sweep devices sit on N1..N5, not '" + device_node.name + "'",
                    device_node.name);
    }
    if (!(penetration_pct >= 0.0 && penetration_pct <= 200.0)) {
        throw Error(ErrorCode::InvalidArgument, "penetration must lie in [0, 200] percent", "penetration_pct");
    }
    if (!(total_phase_load_kw >= 0.0) || !std::isfinite(total_phase_load_kw)) {
        throw Error(ErrorCode::InvalidArgument, "phase load must be non-negative", "total_phase_load_kw");
    }
    if (kind != DeviceKind::DG && kind != DeviceKind::EV) {
        throw Error(ErrorCode::InvalidArgument, "sweeps place a DG or an EV");
    }

    FeederSpec spec = chain_spec(kChainNodes, segment_length_km(network_class));
    const double per_node = total_phase_load_kw / static_cast<double>(kChainNodes - 1);
    for (std::size_t k = 1; k < kChainNodes; ++k) {
        spec.devices.push_back(balanced_load("L" + std::to_string(k), spec.nodes[k], per_node));
    }

    const double magnitude = penetration_pct * total_phase_load_kw / 100.0;
    Device device;
    device.id = kind == DeviceKind::DG ? "DG1" : "EV1";
    device.node = device_node;
    device.kind = kind;
    device.profile_id = "const";
    double per_phase = magnitude;
    if (placement == DevicePlacement::Balanced) {
        device.connection = PhaseConnection::balanced_three_phase();
        per_phase = magnitude / 3.0;
    } else {
        device.connection = PhaseConnection::single(Phase::A);
    }
    device.s_rated_kva = {kind == DeviceKind::DG ? -per_phase : per_phase, 0.0};
    spec.devices.push_back(device);

    Scenario sc;
    sc.name = std::string(to_string(network_class)) + "-" + std::string(to_string(kind)) + "-" + device_node.name +
              "-" + format_pct(penetration_pct) + (placement == DevicePlacement::Balanced ? "-balanced" : "");
    sc.feeder = build_feeder(spec);
    sc.profiles["const"] = constant_profile(sc.steps());
    return sc;
}

Scenario build_stylized_scenario(std::optional<Architecture> arch, const NodeId& storage_node, double battery_kw,
                                 ControllerId controller) {
    FeederSpec spec = chain_spec(kChainNodes, segment_length_km(NetworkClass::Compact));
    for (std::size_t k = 1; k < kChainNodes; ++k) {
        spec.devices.push_back(balanced_load("L" + std::to_string(k), spec.nodes[k], 2.0));
    }
    StylizedScheduleCfg schedule;

    Device pv;
    pv.id = "PV3";
    pv.node = NodeId{"N3"};
    pv.connection = PhaseConnection::single(schedule.target_phase);
    pv.kind = DeviceKind::DG;
    pv.s_rated_kva = {-10.0, 0.0};
    pv.profile_id = "dg_window";
    spec.devices.push_back(pv);

    Device ev;
    ev.id = "EV3";
    ev.node = NodeId{"N3"};
    ev.connection = PhaseConnection::single(schedule.target_phase);
    ev.kind = DeviceKind::EV;
    ev.s_rated_kva = {10.0, 0.0};
    ev.profile_id = "ev_window";
    spec.devices.push_back(ev);

    Scenario sc;
    sc.name = "stylized-nostorage";
    if (arch) {
        if (storage_node != NodeId{"N0"} && storage_node != NodeId{"N5"}) {
            throw Error(ErrorCode::UnsupportedNode, "storage sits at N0 or N5, not '" + storage_node.name + "'",
                        storage_node.name);
        }
        if (!(battery_kw > 0.0) || !std::isfinite(battery_kw)) {
            throw Error(ErrorCode::InvalidArgument, "battery power must be positive", "battery_kw");
        }
        StorageSetup storage;
        storage.architecture = *arch;
        storage.controller = controller;
        storage.schedule = schedule;

        auto add_site = [&](const std::string& id, double kw, Phase home) {
            // Schedule-driven units start empty when they charge first and
            // full when they discharge first; the balancing controller
            // starts from half charge.
            Battery b = Battery::sized(id, kw);
            if (controller == ControllerId::FixedSchedule) {
                const bool charges_first = arch->kind == Architecture::Kind::A1 || home == schedule.target_phase;
                b.soc_kwh = charges_first ? 0.0 : b.e_max_kwh;
            } else {
                b.soc_kwh = 0.5 * b.e_max_kwh;
            }
            storage.sites.push_back({b, storage_node, home});
            Device d;
            d.id = "ST_" + id;
            d.node = storage_node;
            d.connection = PhaseConnection::single(home);
            d.kind = DeviceKind::Storage;
            d.battery_id = id;
            spec.devices.push_back(d);
        };
        if (arch->kind == Architecture::Kind::A1) {
            add_site("BAT1", battery_kw, schedule.target_phase);
        } else {
            for (const Phase p : kPhases) add_site("BAT_" + std::string(to_string(p)), battery_kw / 3.0, p);
        }
        sc.storage = storage;
        sc.name = lowercase(std::string(to_string(arch->kind))) + "-" + lowercase(storage_node.name) +
                  (arch->allow_load_shift ? "" : "-noshift");
    }

    sc.feeder = build_feeder(spec);
    const int n = sc.steps();
    sc.profiles["const"] = constant_profile(n);
    sc.profiles["dg_window"] = window_profile(n, sc.dt_h, schedule.charge_window);
    sc.profiles["ev_window"] = window_profile(n, sc.dt_h, schedule.discharge_window);
    return sc;
}

namespace {

struct Accumulator {
    double vuf_sum = 0.0;
    std::size_t vuf_count = 0;
};

PerPhase measured_net_kw(const Scenario& scenario, int step) {
    PerPhase net{};
    const auto s = static_cast<std::size_t>(step);
    for (const Device& d : scenario.feeder.devices()) {
        if (d.kind == DeviceKind::Storage) continue;
        const double p = d.s_rated_kva.real() * scenario.profiles.at(d.profile_id)[s];
        if (d.connection.balanced) {
            for (double& x : net) x += p;
        } else {
            net[index(d.connection.phase)] += p;
        }
    }
    return net;
}

}  // namespace

ScenarioResult run_scenario(const Scenario& scenario, const SolverSettings& settings) {
    scenario.validate();
    settings.validate();
    const Feeder& feeder = scenario.feeder;
    const int steps = scenario.steps();
    const double dt = scenario.dt_h;
    const std::size_t n = feeder.node_count();

    std::vector<BatterySite> sites;
    if (scenario.storage) sites = scenario.storage->sites;

    ScenarioResult result;
    result.name = scenario.name;
    std::vector<double> vuf_sum(n, 0.0);
    std::vector<double> drop_sum(n, 0.0);
    double vuf_total = 0.0;
    std::size_t vuf_samples = 0;

    for (int step = 0; step < steps; ++step) {
        const double hour = step * dt;
        const auto s = static_cast<std::size_t>(step);

        std::vector<DispatchAction> actions;
        bool saturated = false;
        if (scenario.storage) {
            const StorageSetup& storage = *scenario.storage;
            switch (storage.controller) {
                case ControllerId::None:
                    for (const BatterySite& site : sites) actions.push_back({site.battery.id, site.home_phase, 0.0, 0.0});
                    break;
                case ControllerId::FixedSchedule: {
                    ControllerOutput out =
                        fixed_schedule_controller(hour, storage.architecture, storage.schedule, sites, dt);
                    actions = std::move(out.actions);
                    saturated = out.saturated;
                    break;
                }
                case ControllerId::Greedy:
                    actions = greedy_balance_controller(measured_net_kw(scenario, step), storage.architecture, sites, dt);
                    break;
            }
            for (std::size_t i = 0; i < sites.size(); ++i) {
                actions[i] = feasible_action(sites[i].battery, actions[i], dt);
                sites[i].battery = apply_action(sites[i].battery, actions[i], dt);
            }
        }

        Injections injections;
        injections.reserve(feeder.devices().size());
        for (const Device& d : feeder.devices()) {
            if (d.kind == DeviceKind::Storage) {
                Injection inj;
                for (std::size_t i = 0; i < sites.size(); ++i) {
                    if (sites[i].battery.id == d.battery_id) {
                        inj.s_kva = {actions[i].p_kw, actions[i].q_kvar};
                        inj.phase = actions[i].phase;
                    }
                }
                injections.push_back(inj);
            } else {
                injections.push_back({d.s_rated_kva * scenario.profiles.at(d.profile_id)[s], std::nullopt});
            }
        }

        VoltageSolution solution;
        try {
            solution = solve_snapshot(feeder, injections, settings);
        } catch (const SolverError& e) {
            throw e.at_timestep(step);
        }
        const FlowSummary flows = summarize_flows(feeder, solution);
        const std::vector<NodeMetrics> metrics = node_metrics(solution, feeder);

        StepRecord rec;
        rec.step = step;
        rec.hour = hour;
        rec.iterations = solution.iterations;
        rec.source_kva = flows.source_injection;
        Complex head_neutral{};
        for (const std::size_t child : feeder.children(0)) head_neutral += solution.branch_current[child - 1][kNeutral];
        rec.head_neutral_current_a = std::abs(head_neutral);
        rec.phase_loss_kw = flows.total_phase_loss_kw();
        rec.neutral_loss_kw = flows.total_neutral_loss_kw();
        rec.balance_residual_kw = power_balance_residual_kw(flows);
        rec.storage_saturated = saturated;
        result.steps.push_back(rec);

        result.phase_loss_kwh += flows.total_phase_loss_kw() * dt;
        result.neutral_loss_kwh += flows.total_neutral_loss_kw() * dt;
        result.total_loss_kwh += flows.total_loss_kw() * dt;
        const PerPhase by_phase = flows.phase_loss_by_phase_kw();
        for (std::size_t p = 0; p < 3; ++p) result.phase_loss_kwh_by_phase[p] += by_phase[p] * dt;

        for (std::size_t k = 0; k < n; ++k) {
            NodeStepRecord row;
            row.step = step;
            row.hour = hour;
            row.node = feeder.nodes()[k];
            for (const Phase p : kPhases) row.v_pn[index(p)] = std::abs(solution.phase_to_neutral(k, p));
            row.v_neutral = std::abs(solution.v[k][kNeutral]);
            row.metrics = metrics[k];
            if (k > 0) {
                row.flow = flows.segments[k - 1];
                row.neutral_current_a = std::abs(solution.branch_current[k - 1][kNeutral]);
            }
            for (std::size_t i = 0; i < sites.size(); ++i) {
                if (sites[i].node == row.node) {
                    row.battery_p_kw += actions[i].p_kw;
                    row.battery_q_kvar += actions[i].q_kvar;
                    row.battery_soc_kwh += sites[i].battery.soc_kwh;
                }
            }
            result.node_steps.push_back(row);

            vuf_sum[k] += metrics[k].vuf_pct;
            drop_sum[k] += metrics[k].sum_drop_pct();
            if (k > 0) {
                vuf_total += metrics[k].vuf_pct;
                ++vuf_samples;
                result.max_vuf_pct = std::max(result.max_vuf_pct, metrics[k].vuf_pct);
                for (const double d : metrics[k].drop_pct) {
                    result.max_drop_pct = std::max(result.max_drop_pct, -d);
                    result.max_rise_pct = std::max(result.max_rise_pct, d);
                }
            }
        }
        for (std::size_t i = 0; i < sites.size(); ++i) {
            result.battery_steps.push_back({step, hour, sites[i].battery.id, sites[i].node, actions[i].phase,
                                            actions[i].p_kw, actions[i].q_kvar, sites[i].battery.soc_kwh});
        }
    }

    result.mean_vuf_pct = vuf_samples > 0 ? vuf_total / static_cast<double>(vuf_samples) : 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        result.vuf_at[feeder.nodes()[k]] = vuf_sum[k] / steps;
        result.sum_drop_at[feeder.nodes()[k]] = drop_sum[k] / steps;
    }
    return result;
}

std::vector<SweepRow> sweep_and_tabulate(const SweepTemplate& tmpl, const std::vector<double>& penetrations,
                                         const std::vector<NodeId>& nodes, const std::vector<DeviceKind>& kinds,
                                         const SolverSettings& settings, unsigned jobs) {
    if (penetrations.empty() || nodes.empty() || kinds.empty()) {
        throw Error(ErrorCode::InvalidArgument, "sweep needs at least one penetration, node and kind");
    }
    std::vector<SweepRow> rows;
    for (const DeviceKind kind : kinds) {
        for (const NodeId& node : nodes) {
            for (const double pen : penetrations) {
                SweepRow row;
                row.kind = kind;
                row.node = node;
                row.penetration_pct = pen;
                rows.push_back(row);
            }
        }
    }

    auto run_cell = [&](SweepRow& row) {
        try {
            const Scenario sc = build_sweep_scenario(tmpl.total_phase_load_kw, row.node, row.kind,
                                                     row.penetration_pct, tmpl.network_class, tmpl.placement);
            row.result = run_scenario(sc, settings);
        } catch (const Error& e) {
            row.error_code = e.code();
            row.error = e.what();
        }
    };

    const unsigned workers = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(rows.size())));
    if (workers == 1) {
        for (SweepRow& row : rows) run_cell(row);
        return rows;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < rows.size(); i = next++) run_cell(rows[i]);
        });
    }
    for (auto& t : pool) t.join();
    return rows;
}

std::vector<double> standard_penetration_grid() {
    std::vector<double> grid;
    for (int p = 0; p <= 100; p += 10) grid.push_back(p);
    grid.push_back(120.0);
    return grid;
}

const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names{
        "baseline-n1", "baseline-n5", "overload-n5", "sparse-n5", "stylized-nostorage",
        "a1-n0",       "a1-n5",       "a2-n0",       "a2-n5",     "a2-n5-noshift",
    };
    return names;
}

Scenario make_preset(const std::string& name) {
    auto sweep_cell = [&](NetworkClass cls, const char* node) {
        Scenario sc = build_sweep_scenario(default_phase_load_kw(cls), NodeId{node}, DeviceKind::DG, 120.0, cls);
        sc.name = name;
        return sc;
    };
    auto stylized = [&](Architecture::Kind kind, const char* node, bool shift) {
        Scenario sc = build_stylized_scenario(Architecture{kind, shift}, NodeId{node}, 3.0,
                                              ControllerId::FixedSchedule);
        sc.name = name;
        return sc;
    };
    if (name == "baseline-n1") return sweep_cell(NetworkClass::Compact, "N1");
    if (name == "baseline-n5") return sweep_cell(NetworkClass::Compact, "N5");
    if (name == "overload-n5") return sweep_cell(NetworkClass::Overload, "N5");
    if (name == "sparse-n5") return sweep_cell(NetworkClass::Sparse, "N5");
    if (name == "stylized-nostorage") return build_stylized_scenario(std::nullopt, NodeId{"N5"}, 0.0, ControllerId::None);
    if (name == "a1-n0") return stylized(Architecture::Kind::A1, "N0", true);
    if (name == "a1-n5") return stylized(Architecture::Kind::A1, "N5", true);
    if (name == "a2-n0") return stylized(Architecture::Kind::A2, "N0", true);
    if (name == "a2-n5") return stylized(Architecture::Kind::A2, "N5", true);
    if (name == "a2-n5-noshift") return stylized(Architecture::Kind::A2, "N5", false);
    throw Error(ErrorCode::InvalidArgument, "unknown preset '" + name + "'", name);
}

}  // namespace phasebal
