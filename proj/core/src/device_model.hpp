#pragma once

// Constant-power device model shared by both load-flow routes.

#include <vector>

#include "phasebal/error.hpp"
#include "phasebal/powerflow.hpp"

namespace phasebal::detail {

inline constexpr double kCollapsePu = 0.5;

/// Validates the injection vector against the feeder's devices.
void check_injections(const Feeder& feeder, const Injections& injections);

/// Phases a device draws from for this snapshot.
std::vector<Phase> connected_phases(const Device& device, const Injection& injection);

/// Device currents for the node voltages `v`. Throws
/// SolverError(VoltageCollapse) if a loaded terminal is below 0.5 pu.
std::vector<PhaseCurrents> device_currents(const Feeder& feeder, const Injections& injections,
                                           const std::vector<ConductorSet>& v, int iteration);

/// Current leaving the network at each node on each conductor.
std::vector<ConductorSet> nodal_draw(const Feeder& feeder, const std::vector<PhaseCurrents>& device_current);

}  // namespace phasebal::detail
