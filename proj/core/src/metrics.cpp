#include "phasebal/metrics.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "phasebal/error.hpp"

namespace phasebal {

SequenceComponents fortescue(Complex va, Complex vb, Complex vc) noexcept {
    const Complex a = kRotation;
    const Complex a2 = a * a;
    return {(va + vb + vc) / 3.0, (va + a * vb + a2 * vc) / 3.0, (va + a2 * vb + a * vc) / 3.0};
}

std::array<Complex, 3> inverse_fortescue(const SequenceComponents& seq) noexcept {
    const Complex a = kRotation;
    const Complex a2 = a * a;
    return {seq.v0 + seq.v1 + seq.v2, seq.v0 + a2 * seq.v1 + a * seq.v2, seq.v0 + a * seq.v1 + a2 * seq.v2};
}

double vuf(const SequenceComponents& seq) {
    const double positive = std::abs(seq.v1);
    if (positive == 0.0) throw Error(ErrorCode::ZeroPositiveSequence, "positive-sequence magnitude is zero");
    const double negative = std::abs(seq.v2);
    if (negative <= 16.0 * std::numeric_limits<double>::epsilon() * positive) return 0.0;
    return 100.0 * negative / positive;
}

double rms_voltage(double va_mag, double vb_mag, double vc_mag) noexcept {
    return std::sqrt((va_mag * va_mag + vb_mag * vb_mag + vc_mag * vc_mag) / 3.0);
}

std::vector<NodeMetrics> node_metrics(const VoltageSolution& solution, const Feeder& feeder) {
    if (!solution.converged) throw Error(ErrorCode::UnconvergedSolution, "node metrics need a converged solution");
    const double base = feeder.v_base_ln();
    std::vector<NodeMetrics> out(feeder.node_count());
    for (std::size_t k = 0; k < feeder.node_count(); ++k) {
        const Complex va = solution.phase_to_neutral(k, Phase::A);
        const Complex vb = solution.phase_to_neutral(k, Phase::B);
        const Complex vc = solution.phase_to_neutral(k, Phase::C);
        NodeMetrics& m = out[k];
        m.vuf_pct = vuf(fortescue(va, vb, vc));
        const std::array<double, 3> mags{std::abs(va), std::abs(vb), std::abs(vc)};
        for (std::size_t p = 0; p < 3; ++p) m.drop_pct[p] = 100.0 * (mags[p] - base) / base;
        m.v_rms = rms_voltage(mags[0], mags[1], mags[2]);
    }
    return out;
}

double vuf_limit_pct(NormId norm) noexcept {
    switch (norm) {
        case NormId::PGE: return 2.5;
        case NormId::NEMA: return 1.0;
        case NormId::BCH_STD: return 2.0;
        case NormId::BCH_RURAL: return 3.0;
        case NormId::EN50160_LV_MV: return 2.0;
        case NormId::EN50160_HV: return 1.0;
    }
    return 0.0;
}

std::string_view to_string(NormId norm) noexcept {
    switch (norm) {
        case NormId::PGE: return "PGE";
        case NormId::NEMA: return "NEMA";
        case NormId::BCH_STD: return "BCH_STD";
        case NormId::BCH_RURAL: return "BCH_RURAL";
        case NormId::EN50160_LV_MV: return "EN50160_LV_MV";
        case NormId::EN50160_HV: return "EN50160_HV";
    }
    return "?";
}

NormId parse_norm(std::string_view name) {
    for (const NormId n : {NormId::PGE, NormId::NEMA, NormId::BCH_STD, NormId::BCH_RURAL, NormId::EN50160_LV_MV,
                           NormId::EN50160_HV}) {
        if (to_string(n) == name) return n;
    }
    throw Error(ErrorCode::UnknownNorm, "unknown unbalance norm '" + std::string(name) + "'", std::string(name));
}

bool check_vuf_norm(double vuf_pct, NormId norm) noexcept { return vuf_pct <= vuf_limit_pct(norm); }

bool check_vuf_norm(double vuf_pct, std::string_view norm) { return check_vuf_norm(vuf_pct, parse_norm(norm)); }

}  // namespace phasebal
