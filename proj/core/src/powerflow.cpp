#include "phasebal/powerflow.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "device_model.hpp"

namespace phasebal {

void SolverSettings::validate() const {
    if (!(tol_pu > 0.0) || !std::isfinite(tol_pu)) {
        throw Error(ErrorCode::InvalidArgument, "solver tolerance must be positive", "tol_pu");
    }
    if (max_iter < 1) throw Error(ErrorCode::InvalidArgument, "max_iter must be at least 1", "max_iter");
}

ConductorSet source_voltages(double v_base_ln) {
    ConductorSet v{};
    for (const Phase p : kPhases) v[index(p)] = std::polar(v_base_ln, nominal_angle_rad(p));
    v[kNeutral] = Complex{};
    return v;
}

Injections rated_injections(const Feeder& feeder, double multiplier) {
    Injections out;
    out.reserve(feeder.devices().size());
    for (const Device& d : feeder.devices()) {
        out.push_back({d.kind == DeviceKind::Storage ? Complex{} : d.s_rated_kva * multiplier, std::nullopt});
    }
    return out;
}

namespace detail {

void check_injections(const Feeder& feeder, const Injections& injections) {
    if (injections.size() != feeder.devices().size()) {
        throw Error(ErrorCode::InvalidArgument, "expected " + std::to_string(feeder.devices().size()) +
                                                    " injections, got " + std::to_string(injections.size()));
    }
    for (std::size_t i = 0; i < injections.size(); ++i) {
        const Device& d = feeder.devices()[i];
        if (!is_finite(injections[i].s_kva)) {
            throw Error(ErrorCode::InvalidArgument, "injection for device '" + d.id + "' is not finite", d.id);
        }
        if (injections[i].phase && d.kind != DeviceKind::Storage) {
            throw Error(ErrorCode::InvalidArgument, "only storage devices may switch phase ('" + d.id + "')", d.id);
        }
    }
}

std::vector<Phase> connected_phases(const Device& device, const Injection& injection) {
    if (injection.phase) return {*injection.phase};
    if (device.connection.balanced) return {kPhases.begin(), kPhases.end()};
    return {device.connection.phase};
}

std::vector<PhaseCurrents> device_currents(const Feeder& feeder, const Injections& injections,
                                           const std::vector<ConductorSet>& v, int iteration) {
    const double floor_v = kCollapsePu * feeder.v_base_ln();
    std::vector<PhaseCurrents> currents(injections.size(), PhaseCurrents{});
    for (std::size_t i = 0; i < injections.size(); ++i) {
        const Complex s_va = injections[i].s_kva * 1000.0;
        if (s_va == Complex{}) continue;
        const Device& device = feeder.devices()[i];
        const std::size_t node = feeder.device_node_index(i);
        for (const Phase p : connected_phases(device, injections[i])) {
            const Complex v_pn = v[node][index(p)] - v[node][kNeutral];
            if (std::abs(v_pn) < floor_v) {
                throw SolverError(ErrorCode::VoltageCollapse,
                                  "phase " + std::string(to_string(p)) + " at node '" + feeder.nodes()[node].name +
                                      "' fell to " + std::to_string(std::abs(v_pn) / feeder.v_base_ln()) + " pu",
                                  iteration, std::abs(v_pn) / feeder.v_base_ln());
            }
            currents[i][index(p)] = std::conj(s_va / v_pn);
        }
    }
    return currents;
}

std::vector<ConductorSet> nodal_draw(const Feeder& feeder, const std::vector<PhaseCurrents>& device_current) {
    std::vector<ConductorSet> draw(feeder.node_count(), ConductorSet{});
    for (std::size_t i = 0; i < device_current.size(); ++i) {
        ConductorSet& at = draw[feeder.device_node_index(i)];
        for (const Phase p : kPhases) {
            at[index(p)] += device_current[i][index(p)];
            at[kNeutral] -= device_current[i][index(p)];
        }
    }
    return draw;
}

}  // namespace detail

VoltageSolution solve_snapshot(const Feeder& feeder, const Injections& injections, const SolverSettings& settings) {
    settings.validate();
    detail::check_injections(feeder, injections);

    const std::size_t n = feeder.node_count();
    const ConductorSet source = source_voltages(feeder.v_base_ln());

    VoltageSolution sol;
    sol.v.assign(n, source);
    sol.branch_current.assign(n > 0 ? n - 1 : 0, ConductorSet{});
    std::vector<ConductorSet> next_v(n);
    next_v[0] = source;

    for (int iter = 1; iter <= settings.max_iter; ++iter) {
        sol.device_current = detail::device_currents(feeder, injections, sol.v, iter);
        const auto draw = detail::nodal_draw(feeder, sol.device_current);

        // backward sweep: leaves to root
        for (std::size_t k = n; k-- > 1;) {
            ConductorSet total = draw[k];
            for (const std::size_t child : feeder.children(k)) {
                for (std::size_t c = 0; c < kConductors; ++c) total[c] += sol.branch_current[child - 1][c];
            }
            sol.branch_current[k - 1] = total;
        }

        // forward sweep: root to leaves
        double delta = 0.0;
        for (std::size_t k = 1; k < n; ++k) {
            const ImpedanceMatrix& z = feeder.feeding_impedance(k);
            const ConductorSet& parent_v = next_v[feeder.parent(k)];
            const ConductorSet& i_branch = sol.branch_current[k - 1];
            for (std::size_t r = 0; r < kConductors; ++r) {
                Complex drop{};
                for (std::size_t c = 0; c < kConductors; ++c) drop += z[r][c] * i_branch[c];
                next_v[k][r] = parent_v[r] - drop;
                delta = std::max(delta, std::abs(next_v[k][r] - sol.v[k][r]));
            }
        }
        for (std::size_t k = 1; k < n; ++k) sol.v[k] = next_v[k];

        sol.iterations = iter;
        sol.residual_pu = delta / feeder.v_base_ln();
        if (sol.residual_pu <= settings.tol_pu) {
            sol.converged = true;
            return sol;
        }
    }
    throw SolverError(ErrorCode::NonConvergence,
                      "no convergence after " + std::to_string(settings.max_iter) + " sweeps (residual " +
                          std::to_string(sol.residual_pu) + " pu)",
                      settings.max_iter, sol.residual_pu);
}

double FlowSummary::total_phase_loss_kw() const {
    double total = 0.0;
    for (const auto& s : segments) total += s.phase_loss_kw[0] + s.phase_loss_kw[1] + s.phase_loss_kw[2];
    return total;
}

double FlowSummary::total_neutral_loss_kw() const {
    double total = 0.0;
    for (const auto& s : segments) total += s.neutral_loss_kw;
    return total;
}

double FlowSummary::total_loss_kw() const {
    double coupling = 0.0;
    for (const auto& s : segments) coupling += s.coupling_loss_kw;
    return total_phase_loss_kw() + total_neutral_loss_kw() + coupling;
}

PerPhase FlowSummary::phase_loss_by_phase_kw() const {
    PerPhase out{};
    for (const auto& s : segments) {
        for (std::size_t p = 0; p < 3; ++p) out[p] += s.phase_loss_kw[p];
    }
    return out;
}

FlowSummary summarize_flows(const Feeder& feeder, const VoltageSolution& solution) {
    if (!solution.converged) {
        throw Error(ErrorCode::UnconvergedSolution, "flow summary needs a converged solution");
    }
    FlowSummary out;
    const std::size_t n = feeder.node_count();
    out.segments.resize(n > 0 ? n - 1 : 0);
    for (std::size_t k = 1; k < n; ++k) {
        const ImpedanceMatrix& z = feeder.feeding_impedance(k);
        const ConductorSet& i = solution.branch_current[k - 1];
        SegmentFlow& flow = out.segments[k - 1];
        for (const Phase p : kPhases) {
            const std::size_t c = index(p);
            flow.phase_loss_kw[c] = std::norm(i[c]) * z[c][c].real() / 1000.0;
        }
        flow.neutral_loss_kw = std::norm(i[kNeutral]) * z[kNeutral][kNeutral].real() / 1000.0;
        double coupling = 0.0;
        for (std::size_t r = 0; r < kConductors; ++r) {
            for (std::size_t c = 0; c < kConductors; ++c) {
                if (r != c) coupling += (std::conj(i[r]) * z[r][c].real() * i[c]).real();
            }
        }
        flow.coupling_loss_kw = coupling / 1000.0;
    }

    const ConductorSet& v0 = solution.v[0];
    for (const std::size_t child : feeder.children(0)) {
        for (const Phase p : kPhases) {
            out.source_injection[index(p)] +=
                v0[index(p)] * std::conj(solution.branch_current[child - 1][index(p)]) / 1000.0;
        }
    }
    // devices at the source node are fed directly by it
    out.device_power_kva.assign(feeder.devices().size(), Complex{});
    for (std::size_t d = 0; d < feeder.devices().size(); ++d) {
        const std::size_t node = feeder.device_node_index(d);
        for (const Phase p : kPhases) {
            const Complex s = solution.phase_to_neutral(node, p) * std::conj(solution.device_current[d][index(p)]) / 1000.0;
            out.device_power_kva[d] += s;
            if (node == 0) out.source_injection[index(p)] += s;
        }
    }
    return out;
}

double power_balance_residual_kw(const FlowSummary& summary) {
    double source = 0.0;
    for (const Complex s : summary.source_injection) source += s.real();
    double devices = 0.0;
    for (const Complex s : summary.device_power_kva) devices += s.real();
    return source - devices - summary.total_loss_kw();
}

double kcl_residual_a(const Feeder& feeder, const VoltageSolution& solution) {
    const auto draw = detail::nodal_draw(feeder, solution.device_current);
    double worst = 0.0;
    for (std::size_t k = 1; k < feeder.node_count(); ++k) {
        for (std::size_t c = 0; c < kConductors; ++c) {
            Complex out = draw[k][c];
            for (const std::size_t child : feeder.children(k)) out += solution.branch_current[child - 1][c];
            worst = std::max(worst, std::abs(solution.branch_current[k - 1][c] - out));
        }
    }
    return worst;
}

}  // namespace phasebal
