#pragma once

#include <string_view>
#include <vector>

#include "phasebal/network.hpp"
#include "phasebal/powerflow.hpp"

namespace phasebal {

/// Zero, positive and negative sequence phasors of a three-phase set.
struct SequenceComponents {
    Complex v0;
    Complex v1;
    Complex v2;
};

SequenceComponents fortescue(Complex va, Complex vb, Complex vc) noexcept;

/// Inverse transform: va = v0 + v1 + v2, vb = v0 + a²v1 + a v2, vc = v0 + a v1 + a² v2.
std::array<Complex, 3> inverse_fortescue(const SequenceComponents& seq) noexcept;

/// Voltage unbalance factor, percent: 100 |v2| / |v1|. Ratios below the
/// transform's rounding floor (|v2| <= 16 eps |v1|) are reported as 0.
/// Throws Error(ZeroPositiveSequence) when |v1| == 0.
double vuf(const SequenceComponents& seq);

double rms_voltage(double va_mag, double vb_mag, double vc_mag) noexcept;

struct NodeMetrics {
    double vuf_pct = 0.0;
    /// Signed deviation of |V_ph - V_N| from nominal, percent (negative = drop).
    PerPhase drop_pct{};
    double v_rms = 0.0;

    double sum_drop_pct() const noexcept { return drop_pct[0] + drop_pct[1] + drop_pct[2]; }
};

/// Metrics from phase-to-neutral voltages, one entry per feeder node in
/// feeder order. Throws Error(UnconvergedSolution).
std::vector<NodeMetrics> node_metrics(const VoltageSolution& solution, const Feeder& feeder);

/// Voltage unbalance limits by utility or standard.
enum class NormId { PGE, NEMA, BCH_STD, BCH_RURAL, EN50160_LV_MV, EN50160_HV };

/// Limit in percent.
double vuf_limit_pct(NormId norm) noexcept;
std::string_view to_string(NormId norm) noexcept;
/// Throws Error(UnknownNorm).
NormId parse_norm(std::string_view name);

/// True iff vuf_pct is within the norm's limit (inclusive).
bool check_vuf_norm(double vuf_pct, NormId norm) noexcept;
/// Convenience overload taking the norm by name. Throws Error(UnknownNorm).
bool check_vuf_norm(double vuf_pct, std::string_view norm);

}  // namespace phasebal
