#include "phasebal/storage.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include "phasebal/error.hpp"

namespace phasebal {

namespace {

constexpr double kRelTol = 1e-9;

double energy_tol(const Battery& b) { return kRelTol * std::max(1.0, b.e_max_kwh); }

const Battery& find_battery(const std::vector<Battery>& batteries, const std::string& id) {
    for (const Battery& b : batteries) {
        if (b.id == id) return b;
    }
    throw Error(ErrorCode::InvalidArgument, "no battery with id '" + id + "'", id);
}

}  // namespace

Battery Battery::sized(std::string id, double p_max_kw, double soc_kwh) {
    Battery b;
    b.id = std::move(id);
    b.p_max_kw = p_max_kw;
    b.e_max_kwh = 5.0 * p_max_kw;
    b.soc_kwh = soc_kwh;
    b.s_conv_kva = p_max_kw;
    b.validate();
    return b;
}

void Battery::validate() const {
    auto fail = [&](const std::string& what) {
        throw Error(ErrorCode::InvalidArgument, "battery '" + id + "': " + what, id);
    };
    for (const double x : {p_max_kw, e_max_kwh, soc_kwh, eta_c, eta_d, s_conv_kva}) {
        if (!std::isfinite(x)) fail("non-finite parameter");
    }
    if (p_max_kw < 0.0 || e_max_kwh < 0.0) fail("ratings must be non-negative");
    if (soc_kwh < 0.0 || soc_kwh > e_max_kwh) fail("SoC outside [0, e_max]");
    if (!(eta_c > 0.0 && eta_c <= 1.0) || !(eta_d > 0.0 && eta_d <= 1.0)) fail("efficiencies must be in (0, 1]");
    if (p_max_kw > s_conv_kva) fail("p_max exceeds converter rating");
}

std::string_view to_string(Architecture::Kind kind) noexcept {
    switch (kind) {
        case Architecture::Kind::A1: return "A1";
        case Architecture::Kind::A2: return "A2";
        case Architecture::Kind::A3: return "A3";
    }
    return "?";
}

Architecture::Kind parse_architecture(std::string_view text) {
    std::string upper(text);
    std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
    if (upper == "A1") return Architecture::Kind::A1;
    if (upper == "A2") return Architecture::Kind::A2;
    if (upper == "A3") return Architecture::Kind::A3;
    throw Error(ErrorCode::InvalidArgument, "unknown storage architecture '" + std::string(text) + "'",
                std::string(text));
}

std::pair<double, double> power_range(const Battery& battery, double dt_h) {
    const double limit = std::min(battery.p_max_kw, battery.s_conv_kva);
    const double charge = std::min(limit, (battery.e_max_kwh - battery.soc_kwh) / (battery.eta_c * dt_h));
    const double discharge = std::min(limit, battery.soc_kwh * battery.eta_d / dt_h);
    return {-std::max(0.0, discharge), std::max(0.0, charge)};
}

Battery apply_action(const Battery& battery, const DispatchAction& action, double dt_h) {
    if (!(dt_h > 0.0)) throw Error(ErrorCode::InvalidArgument, "timestep must be positive");
    const double p = action.p_kw;
    const double q = action.q_kvar;
    if (std::abs(p) > battery.p_max_kw * (1.0 + kRelTol) + kRelTol ||
        std::hypot(p, q) > battery.s_conv_kva * (1.0 + kRelTol) + kRelTol) {
        throw Error(ErrorCode::RatingExceeded, "action on battery '" + battery.id + "' exceeds its converter rating",
                    battery.id);
    }
    Battery out = battery;
    const double delta = p > 0.0 ? battery.eta_c * p * dt_h : p * dt_h / battery.eta_d;
    double soc = battery.soc_kwh + delta;
    if (soc < -energy_tol(battery)) {
        throw Error(ErrorCode::SocUnderflow, "battery '" + battery.id + "' would discharge below empty", battery.id);
    }
    if (soc > battery.e_max_kwh + energy_tol(battery)) {
        throw Error(ErrorCode::SocOverflow, "battery '" + battery.id + "' would charge above capacity", battery.id);
    }
    out.soc_kwh = std::clamp(soc, 0.0, battery.e_max_kwh);
    return out;
}

DispatchAction feasible_action(const Battery& battery, const DispatchAction& desired, double dt_h) {
    DispatchAction out = desired;
    const auto [lo, hi] = power_range(battery, dt_h);
    out.p_kw = std::clamp(desired.p_kw, lo, hi);
    const double q_room = std::sqrt(std::max(0.0, battery.s_conv_kva * battery.s_conv_kva - out.p_kw * out.p_kw));
    out.q_kvar = std::clamp(desired.q_kvar, -q_room, q_room);
    return out;
}

ControllerOutput sum_to_zero(const std::vector<DispatchAction>& actions, const std::vector<Battery>& batteries,
                             double dt_h) {
    ControllerOutput out;
    out.actions = actions;
    if (actions.empty()) return out;

    std::vector<double> lo(actions.size());
    std::vector<double> hi(actions.size());
    double mean = 0.0;
    for (std::size_t i = 0; i < actions.size(); ++i) {
        std::tie(lo[i], hi[i]) = power_range(find_battery(batteries, actions[i].battery_id), dt_h);
        mean += actions[i].p_kw;
    }
    mean /= static_cast<double>(actions.size());

    auto shifted = [&](double offset) {
        std::vector<double> p(actions.size());
        for (std::size_t i = 0; i < actions.size(); ++i) p[i] = std::clamp(actions[i].p_kw - offset, lo[i], hi[i]);
        return p;
    };
    auto total = [](const std::vector<double>& p) {
        double s = 0.0;
        for (const double x : p) s += x;
        return s;
    };

    bool within = true;
    for (std::size_t i = 0; i < actions.size(); ++i) {
        const double p = actions[i].p_kw - mean;
        within = within && p >= lo[i] - kRelTol && p <= hi[i] + kRelTol;
    }
    double offset = mean;
    if (!within) {
        // The clipped sum is piecewise linear and nonincreasing in the
        // offset; locate its zero between consecutive breakpoints.
        std::vector<double> knots;
        for (std::size_t i = 0; i < actions.size(); ++i) {
            knots.push_back(actions[i].p_kw - hi[i]);
            knots.push_back(actions[i].p_kw - lo[i]);
        }
        std::sort(knots.begin(), knots.end());
        const double f_first = total(shifted(knots.front()));
        const double f_last = total(shifted(knots.back()));
        if (f_first < 0.0) {
            offset = knots.front();
            out.saturated = true;
        } else if (f_last > 0.0) {
            offset = knots.back();
            out.saturated = true;
        } else {
            offset = knots.back();
            for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
                const double fa = total(shifted(knots[k]));
                const double fb = total(shifted(knots[k + 1]));
                if (fa >= 0.0 && fb <= 0.0) {
                    offset = fa == fb ? knots[k] : knots[k] + (knots[k + 1] - knots[k]) * fa / (fa - fb);
                    break;
                }
            }
        }
    }
    const auto p = shifted(offset);
    for (std::size_t i = 0; i < actions.size(); ++i) {
        out.actions[i].p_kw = p[i];
        out.actions[i] = feasible_action(find_battery(batteries, actions[i].battery_id), out.actions[i], dt_h);
    }
    if (std::abs(total(p)) > 1e-9) out.saturated = true;
    return out;
}

ControllerOutput fixed_schedule_controller(double t_h, const Architecture& arch, const StylizedScheduleCfg& cfg,
                                           const std::vector<BatterySite>& sites, double dt_h) {
    ControllerOutput out;
    double direction = 0.0;
    if (cfg.charge_window.contains(t_h)) {
        direction = 1.0;
    } else if (cfg.discharge_window.contains(t_h)) {
        direction = -1.0;
    }

    std::vector<Battery> batteries;
    for (const BatterySite& site : sites) {
        DispatchAction desired;
        desired.battery_id = site.battery.id;
        if (arch.kind == Architecture::Kind::A1) {
            // the selector parks the single battery on the unbalanced phase
            desired.phase = cfg.target_phase;
            desired.p_kw = direction * site.battery.p_max_kw;
        } else {
            desired.phase = site.home_phase;
            const double sign = site.home_phase == cfg.target_phase ? 1.0 : -1.0;
            desired.p_kw = sign * direction * site.battery.p_max_kw;
        }
        out.actions.push_back(feasible_action(site.battery, desired, dt_h));
        batteries.push_back(site.battery);
    }
    if (!arch.allow_load_shift) {
        out = sum_to_zero(out.actions, batteries, dt_h);
    }
    return out;
}

double phase_spread(const PerPhase& per_phase_kw) noexcept {
    const auto [lo, hi] = std::minmax_element(per_phase_kw.begin(), per_phase_kw.end());
    return *hi - *lo;
}

PerPhase adjusted_per_phase(const PerPhase& per_phase_net_kw, const std::vector<DispatchAction>& actions) {
    PerPhase out = per_phase_net_kw;
    for (const DispatchAction& a : actions) out[index(a.phase)] += a.p_kw;
    return out;
}

namespace {

struct StepRange {
    long lo = 0;
    long hi = 0;
};

/// Per-phase moves (in 0.1 kW steps) minimizing the spread, then total
/// |move|. Returns the moves and the resulting spread.
struct PhasePlan {
    std::array<long, 3> moves{};
    double spread = std::numeric_limits<double>::infinity();
    long effort = std::numeric_limits<long>::max();
};

double value_at(const PerPhase& net, std::size_t p, long move) {
    return net[p] + static_cast<double>(move) / 10.0;
}

bool better(double spread, long effort, const PhasePlan& best) {
    constexpr double tie = 1e-9;
    if (spread < best.spread - tie) return true;
    return spread <= best.spread + tie && effort < best.effort;
}

PhasePlan plan_free(const PerPhase& net, const std::array<StepRange, 3>& range) {
    // The optimum has some phase at its lowest adjusted value L; every other
    // phase then sits at the smallest reachable value >= L. Scan all L.
    std::vector<double> levels;
    for (std::size_t p = 0; p < 3; ++p) {
        for (long m = range[p].lo; m <= range[p].hi; ++m) levels.push_back(value_at(net, p, m));
    }
    double best_spread = std::numeric_limits<double>::infinity();
    for (const double floor_level : levels) {
        double top = floor_level;
        double bottom = std::numeric_limits<double>::infinity();
        for (std::size_t p = 0; p < 3; ++p) {
            long m = range[p].hi;
            for (long k = range[p].lo; k <= range[p].hi; ++k) {
                if (value_at(net, p, k) >= floor_level - 1e-12) {
                    m = k;
                    break;
                }
            }
            top = std::max(top, value_at(net, p, m));
            bottom = std::min(bottom, value_at(net, p, m));
        }
        best_spread = std::min(best_spread, top - bottom);
    }

    // Second pass: among windows of width best_spread, keep each phase as
    // close to its unadjusted value as possible.
    PhasePlan plan;
    for (const double floor_level : levels) {
        const double ceiling = floor_level + best_spread + 1e-9;
        std::array<long, 3> moves{};
        bool ok = true;
        for (std::size_t p = 0; p < 3 && ok; ++p) {
            bool found = false;
            long chosen = 0;
            for (long k = range[p].lo; k <= range[p].hi; ++k) {
                const double v = value_at(net, p, k);
                if (v < floor_level - 1e-9 || v > ceiling) continue;
                if (!found || std::labs(k) < std::labs(chosen)) chosen = k;
                found = true;
            }
            ok = found;
            moves[p] = chosen;
        }
        if (!ok) continue;
        PerPhase adjusted{};
        long effort = 0;
        for (std::size_t p = 0; p < 3; ++p) {
            adjusted[p] = value_at(net, p, moves[p]);
            effort += std::labs(moves[p]);
        }
        const double spread = phase_spread(adjusted);
        if (better(spread, effort, plan)) plan = {moves, spread, effort};
    }
    return plan;
}

PhasePlan plan_zero_sum(const PerPhase& net, const std::array<StepRange, 3>& range) {
    PhasePlan plan;
    for (long a = range[0].lo; a <= range[0].hi; ++a) {
        for (long b = range[1].lo; b <= range[1].hi; ++b) {
            const long c = -a - b;
            if (c < range[2].lo || c > range[2].hi) continue;
            const PerPhase adjusted{value_at(net, 0, a), value_at(net, 1, b), value_at(net, 2, c)};
            const double spread = phase_spread(adjusted);
            const long effort = std::labs(a) + std::labs(b) + std::labs(c);
            if (better(spread, effort, plan)) plan = {{a, b, c}, spread, effort};
        }
    }
    return plan;
}

}  // namespace

std::vector<DispatchAction> greedy_balance_controller(const PerPhase& per_phase_net_kw, const Architecture& arch,
                                                      const std::vector<BatterySite>& sites, double dt_h) {
    const std::size_t count = sites.size();
    std::vector<StepRange> steps(count);
    for (std::size_t i = 0; i < count; ++i) {
        const auto [lo, hi] = power_range(sites[i].battery, dt_h);
        steps[i] = {static_cast<long>(std::ceil(lo * 10.0 - 1e-9)), static_cast<long>(std::floor(hi * 10.0 + 1e-9))};
        steps[i].lo = std::min(steps[i].lo, 0L);
        steps[i].hi = std::max(steps[i].hi, 0L);
    }

    // phase assignments in lexicographic order (A < B < C per battery)
    std::vector<std::vector<Phase>> assignments;
    if (arch.has_phase_selector()) {
        std::size_t combos = 1;
        for (std::size_t i = 0; i < count; ++i) combos *= 3;
        for (std::size_t code = 0; code < combos; ++code) {
            std::vector<Phase> phases(count);
            std::size_t rest = code;
            for (std::size_t i = count; i-- > 0;) {
                phases[i] = kPhases[rest % 3];
                rest /= 3;
            }
            assignments.push_back(std::move(phases));
        }
    } else {
        std::vector<Phase> phases;
        for (const BatterySite& s : sites) phases.push_back(s.home_phase);
        assignments.push_back(std::move(phases));
    }

    PhasePlan best;
    std::vector<Phase> best_phases;
    for (const auto& phases : assignments) {
        std::array<StepRange, 3> group{};
        for (std::size_t i = 0; i < count; ++i) {
            group[index(phases[i])].lo += steps[i].lo;
            group[index(phases[i])].hi += steps[i].hi;
        }
        const PhasePlan plan = arch.allow_load_shift ? plan_free(per_phase_net_kw, group)
                                                     : plan_zero_sum(per_phase_net_kw, group);
        // earlier assignments win ties on spread
        if (best_phases.empty() || plan.spread < best.spread - 1e-9) {
            best = plan;
            best_phases = phases;
        }
    }

    // split each phase's move over its batteries in order
    std::vector<DispatchAction> actions(count);
    std::array<long, 3> remaining = best.moves;
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t p = index(best_phases[i]);
        const long take = std::clamp(remaining[p], steps[i].lo, steps[i].hi);
        remaining[p] -= take;
        actions[i].battery_id = sites[i].battery.id;
        actions[i].phase = best_phases[i];
        actions[i].p_kw = static_cast<double>(take) / 10.0;
    }
    return actions;
}

}  // namespace phasebal
