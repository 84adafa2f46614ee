#pragma once

#include <optional>
#include <vector>

#include "phasebal/network.hpp"

namespace phasebal {

struct SolverSettings {
    double tol_pu = 1e-8;
    int max_iter = 100;

    /// Throws InvalidArgument unless tol_pu > 0 and max_iter >= 1.
    void validate() const;

    friend bool operator==(const SolverSettings&, const SolverSettings&) = default;
};

/// Complex power drawn by one device for a snapshot (kVA per connected
/// phase, consumption positive). `phase` re-routes a storage device onto a
/// different phase for this snapshot (phase selector); it must stay empty
/// for every other kind.
struct Injection {
    Complex s_kva{};
    std::optional<Phase> phase;
};

/// One entry per feeder device, in feeder device order.
using Injections = std::vector<Injection>;

/// Device ratings scaled by one multiplier per device; storage devices get
/// zero injection.
Injections rated_injections(const Feeder& feeder, double multiplier = 1.0);

struct VoltageSolution {
    /// v[node][conductor], volts; conductor order A, B, C, N.
    std::vector<ConductorSet> v;
    /// branch_current[node - 1][conductor], amps, positive from parent to
    /// child on every conductor including the neutral.
    std::vector<ConductorSet> branch_current;
    /// Current drawn by each device on its phase, amps.
    std::vector<PhaseCurrents> device_current;
    int iterations = 0;
    bool converged = false;
    /// Largest voltage change in the last iteration, in pu.
    double residual_pu = 0.0;

    Complex phase_to_neutral(std::size_t node, Phase p) const {
        return v[node][index(p)] - v[node][kNeutral];
    }
};

/// Source voltages: v_base_ln at 0°, -120°, +120°, neutral 0.
ConductorSet source_voltages(double v_base_ln);

/// Forward-backward sweep on the radial feeder with constant-power devices.
/// Throws SolverError(NonConvergence) after max_iter sweeps and
/// SolverError(VoltageCollapse) when any device terminal voltage drops
/// below 0.5 pu.
VoltageSolution solve_snapshot(const Feeder& feeder, const Injections& injections,
                               const SolverSettings& settings = {});

/// Verification route: assembles the dense 4n x 4n nodal impedance matrix
/// from shared source paths and fixed-point iterates device currents
/// against it. Limited to feeders of at most 12 nodes.
VoltageSolution oracle_solve(const Feeder& feeder, const Injections& injections,
                             const SolverSettings& settings = {});

inline constexpr std::size_t kOracleMaxNodes = 12;

struct SegmentFlow {
    PerPhase phase_loss_kw{};
    double neutral_loss_kw = 0.0;
    /// Re(I^H R_mutual I); zero unless segments carry resistive coupling.
    double coupling_loss_kw = 0.0;
};

struct FlowSummary {
    /// flows[node - 1] describes the segment feeding node.
    std::vector<SegmentFlow> segments;
    /// Complex power delivered by the source per phase, kVA.
    std::array<Complex, 3> source_injection{};
    /// Complex power actually absorbed by each device (all its phases), kVA.
    std::vector<Complex> device_power_kva;

    double total_phase_loss_kw() const;
    double total_neutral_loss_kw() const;
    double total_loss_kw() const;
    /// Per-phase conductor losses summed over segments.
    PerPhase phase_loss_by_phase_kw() const;
};

/// Throws Error(UnconvergedSolution) if the solution did not converge.
FlowSummary summarize_flows(const Feeder& feeder, const VoltageSolution& solution);

/// Re(source) - Re(devices) - losses, kW.
double power_balance_residual_kw(const FlowSummary& summary);

/// Largest KCL mismatch over all nodes and conductors, amps.
double kcl_residual_a(const Feeder& feeder, const VoltageSolution& solution);

}  // namespace phasebal
