#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "phasebal/error.hpp"
#include "phasebal/metrics.hpp"
#include "phasebal/network.hpp"
#include "phasebal/powerflow.hpp"
#include "phasebal/storage.hpp"

namespace phasebal {

/// Feeder classes of the penetration study. Each fixes a segment length
/// and a default per-phase load.
enum class NetworkClass { Compact, Overload, Sparse };

std::string_view to_string(NetworkClass c) noexcept;
NetworkClass parse_network_class(std::string_view text);
double segment_length_km(NetworkClass c) noexcept;
double default_phase_load_kw(NetworkClass c) noexcept;

enum class ControllerId { None, FixedSchedule, Greedy };

std::string_view to_string(ControllerId c) noexcept;
ControllerId parse_controller(std::string_view text);

struct StorageSetup {
    Architecture architecture;
    ControllerId controller = ControllerId::None;
    std::vector<BatterySite> sites;
    StylizedScheduleCfg schedule;

    friend bool operator==(const StorageSetup&, const StorageSetup&) = default;
};

using ProfileMap = std::map<std::string, std::vector<double>>;

struct Scenario {
    std::string name;
    Feeder feeder;
    double horizon_h = 24.0;
    double dt_h = 1.0;
    /// Per-unit multipliers, one per timestep.
    ProfileMap profiles;
    std::optional<StorageSetup> storage;
    std::uint64_t seed = 0;

    int steps() const;
    /// Throws InvalidArgument when the horizon is not a multiple of dt, a
    /// profile is missing or has the wrong length, or storage devices and
    /// battery sites do not match one-to-one.
    void validate() const;

    friend bool operator==(const Scenario& a, const Scenario& b);
};

/// Chain N0 - N1 - ... - N<count-1> with uniform segments "S1".."S<count-1>".
FeederSpec chain_spec(std::size_t node_count, double length_km);

/// Constant profile named "const" for the given number of steps.
std::vector<double> constant_profile(int steps, double value = 1.0);
/// 1 inside [start, end) hours, 0 elsewhere.
std::vector<double> window_profile(int steps, double dt_h, Window window);

enum class DevicePlacement {
    /// All of the device on phase A.
    Unbalanced,
    /// The device split equally over the three phases.
    Balanced,
};

/// Six-node chain with the per-phase load spread over N1..N5 and one DG or
/// EV of |S| = penetration% x load at `device_node`. The network class sets
/// the segment length. Throws UnknownNode if device_node is not N1..N5.
Scenario build_sweep_scenario(double total_phase_load_kw, const NodeId& device_node, DeviceKind kind,
                              double penetration_pct, NetworkClass network_class,
                              DevicePlacement placement = DevicePlacement::Unbalanced);

/// Six-node chain, 2 kW per phase per consumer on N1..N5, a 10 kW phase-A
/// PV at N3 from 10:00 to 15:00 and a 10 kW phase-A EV load at N3 from
/// 18:00 to 23:00, with optional storage at N0 or N5.
/// A1 uses one battery of battery_kw; A2 and A3 use three units of
/// battery_kw / 3. Throws UnsupportedNode for any other storage node.
Scenario build_stylized_scenario(std::optional<Architecture> arch, const NodeId& storage_node, double battery_kw,
                                 ControllerId controller);

struct NodeStepRecord {
    int step = 0;
    double hour = 0.0;
    NodeId node;
    /// |V_ph - V_N| per phase and |V_N|, volts.
    PerPhase v_pn{};
    double v_neutral = 0.0;
    NodeMetrics metrics;
    /// Segment feeding this node; zero at the source.
    SegmentFlow flow;
    double neutral_current_a = 0.0;
    double battery_p_kw = 0.0;
    double battery_q_kvar = 0.0;
    double battery_soc_kwh = 0.0;
};

struct BatteryStepRecord {
    int step = 0;
    double hour = 0.0;
    std::string battery;
    NodeId node;
    Phase phase = Phase::A;
    double p_kw = 0.0;
    double q_kvar = 0.0;
    double soc_kwh = 0.0;
};

struct StepRecord {
    int step = 0;
    double hour = 0.0;
    int iterations = 0;
    std::array<Complex, 3> source_kva{};
    double head_neutral_current_a = 0.0;
    double phase_loss_kw = 0.0;
    double neutral_loss_kw = 0.0;
    double balance_residual_kw = 0.0;
    bool storage_saturated = false;
};

struct ScenarioResult {
    std::string name;
    double mean_vuf_pct = 0.0;
    double max_vuf_pct = 0.0;
    double neutral_loss_kwh = 0.0;
    double phase_loss_kwh = 0.0;
    PerPhase phase_loss_kwh_by_phase{};
    double total_loss_kwh = 0.0;
    /// Largest drop below / rise above nominal, percent, as magnitudes.
    double max_drop_pct = 0.0;
    double max_rise_pct = 0.0;
    /// Mean over timesteps of the three phases' signed deviations.
    std::map<NodeId, double> sum_drop_at;
    /// Mean VUF over timesteps, per node.
    std::map<NodeId, double> vuf_at;
    std::vector<StepRecord> steps;
    std::vector<NodeStepRecord> node_steps;
    std::vector<BatteryStepRecord> battery_steps;

    double max_deviation_pct() const noexcept { return std::max(max_drop_pct, max_rise_pct); }
};

/// Time-stepped simulation. Solver failures are rethrown as SolverError
/// tagged with the timestep.
ScenarioResult run_scenario(const Scenario& scenario, const SolverSettings& settings = {});

struct SweepTemplate {
    double total_phase_load_kw = 5.0;
    NetworkClass network_class = NetworkClass::Compact;
    DevicePlacement placement = DevicePlacement::Unbalanced;

    friend bool operator==(const SweepTemplate&, const SweepTemplate&) = default;
};

struct SweepRow {
    DeviceKind kind = DeviceKind::DG;
    NodeId node;
    double penetration_pct = 0.0;
    std::optional<ScenarioResult> result;
    std::optional<ErrorCode> error_code;
    std::string error;
};

/// Runs every (kind, node, penetration) cell, kinds outermost and
/// penetrations innermost. A failing cell records its error and does not
/// stop the others. Cells run on up to `jobs` threads; row order does not
/// depend on completion order.
std::vector<SweepRow> sweep_and_tabulate(const SweepTemplate& tmpl, const std::vector<double>& penetrations,
                                         const std::vector<NodeId>& nodes, const std::vector<DeviceKind>& kinds,
                                         const SolverSettings& settings = {}, unsigned jobs = 1);

/// 0, 10, ..., 100, 120.
std::vector<double> standard_penetration_grid();

/// Names of the shipped single-run presets.
const std::vector<std::string>& preset_names();
/// Throws InvalidArgument for an unknown name.
Scenario make_preset(const std::string& name);

}  // namespace phasebal
