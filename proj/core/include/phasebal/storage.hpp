#pragma once

// Battery state, dispatch limits and the storage controllers.
//
// Sign convention for active power: positive charges (the battery is a
// load), negative discharges (the battery injects). Reactive power is
// bounded only by the converter rating and never changes the SoC.

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "phasebal/types.hpp"

namespace phasebal {

struct Battery {
    std::string id;
    double p_max_kw = 0.0;
    double e_max_kwh = 0.0;
    double soc_kwh = 0.0;
    double eta_c = 1.0;
    double eta_d = 1.0;
    double s_conv_kva = 0.0;

    /// Five hours of energy at rated power, converter sized to p_max.
    static Battery sized(std::string id, double p_max_kw, double soc_kwh = 0.0);

    /// Throws InvalidArgument when an invariant is broken.
    void validate() const;

    friend bool operator==(const Battery&, const Battery&) = default;
};

struct DispatchAction {
    std::string battery_id;
    Phase phase = Phase::A;
    double p_kw = 0.0;
    double q_kvar = 0.0;

    friend bool operator==(const DispatchAction&, const DispatchAction&) = default;
};

struct Architecture {
    enum class Kind { A1, A2, A3 };
    Kind kind = Kind::A1;
    /// When false, batteries must not shift energy in time: the fleet's
    /// active power sums to zero every timestep.
    bool allow_load_shift = true;

    /// Whether batteries may switch phase between timesteps.
    bool has_phase_selector() const noexcept { return kind != Kind::A2; }

    friend bool operator==(const Architecture&, const Architecture&) = default;
};

std::string_view to_string(Architecture::Kind kind) noexcept;
Architecture::Kind parse_architecture(std::string_view text);

/// A battery together with where it is connected. For fixed-phase units
/// `home_phase` is the connection; selector-equipped units start there.
struct BatterySite {
    Battery battery;
    NodeId node;
    Phase home_phase = Phase::A;

    friend bool operator==(const BatterySite&, const BatterySite&) = default;
};

/// Feasible active-power interval [discharge, charge] in kW for a step of
/// dt_h hours, combining energy headroom and converter limits.
std::pair<double, double> power_range(const Battery& battery, double dt_h);

/// Advances the SoC by one step. Throws RatingExceeded, SocUnderflow or
/// SocOverflow when the action is not feasible; run it through
/// feasible_action first.
Battery apply_action(const Battery& battery, const DispatchAction& action, double dt_h);

/// Clips the desired action: energy headroom first, then the power rating,
/// then q is shrunk to fit the converter's apparent-power circle.
DispatchAction feasible_action(const Battery& battery, const DispatchAction& desired, double dt_h);

struct Window {
    double start_h = 0.0;
    double end_h = 0.0;
    /// Half-open: [start, end).
    bool contains(double t_h) const noexcept { return t_h >= start_h && t_h < end_h; }

    friend bool operator==(const Window&, const Window&) = default;
};

/// Hand-written schedule of the stylized example: batteries on the target
/// phase charge during the generation window and discharge during the EV
/// window; batteries on the other phases do the opposite.
struct StylizedScheduleCfg {
    Window charge_window{10.0, 15.0};
    Window discharge_window{18.0, 23.0};
    Phase target_phase = Phase::A;

    friend bool operator==(const StylizedScheduleCfg&, const StylizedScheduleCfg&) = default;
};

struct ControllerOutput {
    std::vector<DispatchAction> actions;
    /// Set when clipping kept a no-load-shift fleet from summing to zero.
    bool saturated = false;
};

/// Removes the common offset from the fleet's active power so it sums to
/// zero. Starts with plain mean removal; if that breaks a battery's limits
/// the offset is re-solved over the clipped powers. `saturated` is set when
/// no offset reaches zero within the limits.
ControllerOutput sum_to_zero(const std::vector<DispatchAction>& actions, const std::vector<Battery>& batteries,
                             double dt_h);

ControllerOutput fixed_schedule_controller(double t_h, const Architecture& arch, const StylizedScheduleCfg& cfg,
                                           const std::vector<BatterySite>& sites, double dt_h);

/// Power-step resolution of the balancing controller, kW.
inline constexpr double kGreedyStepKw = 0.1;

/// Max-min spread of per-phase power.
double phase_spread(const PerPhase& per_phase_kw) noexcept;

/// Chooses battery phases (where selectors exist) and powers on a 0.1 kW
/// grid minimizing the spread of the adjusted per-phase power
/// (net + battery charge). Ties go to the earliest phase assignment, then
/// the smallest total |p|. Never increases the spread.
std::vector<DispatchAction> greedy_balance_controller(const PerPhase& per_phase_net_kw, const Architecture& arch,
                                                      const std::vector<BatterySite>& sites, double dt_h);

/// Adjusted per-phase power after applying `actions` at their phases.
PerPhase adjusted_per_phase(const PerPhase& per_phase_net_kw, const std::vector<DispatchAction>& actions);

}  // namespace phasebal
