#pragma once

#include <array>
#include <cmath>
#include <compare>
#include <complex>
#include <cstddef>
#include <functional>
#include <numbers>
#include <string>
#include <string_view>
#include <utility>

namespace phasebal {

using Complex = std::complex<double>;

/// Phase conductors in deterministic order A < B < C.
enum class Phase : int { A = 0, B = 1, C = 2 };

inline constexpr std::array<Phase, 3> kPhases{Phase::A, Phase::B, Phase::C};

/// Conductor slots of a four-wire segment: the three phases then the neutral.
inline constexpr std::size_t kNeutral = 3;
inline constexpr std::size_t kConductors = 4;

constexpr std::size_t index(Phase p) noexcept { return static_cast<std::size_t>(p); }

std::string_view to_string(Phase p) noexcept;
/// Accepts "A", "B", "C" (case-insensitive). Throws Error on anything else.
Phase parse_phase(std::string_view text);

/// 1∠120°.
inline const Complex kRotation{-0.5, std::numbers::sqrt3 / 2.0};

/// Nominal angle of a phase in a positive-sequence set: 0°, -120°, +120°.
inline double nominal_angle_rad(Phase p) noexcept {
    constexpr double third = 2.0 * std::numbers::pi / 3.0;
    switch (p) {
        case Phase::A: return 0.0;
        case Phase::B: return -third;
        case Phase::C: return third;
    }
    return 0.0;
}

inline bool is_finite(Complex z) noexcept { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

/// Feeder node identifier. Compared by name.
struct NodeId {
    std::string name;

    NodeId() = default;
    NodeId(std::string n) : name(std::move(n)) {}
    NodeId(const char* n) : name(n) {}

    friend auto operator<=>(const NodeId&, const NodeId&) = default;
    friend bool operator==(const NodeId&, const NodeId&) = default;
};

/// Four conductor phasors (A, B, C, N).
using ConductorSet = std::array<Complex, kConductors>;

/// Per-phase real quantities (A, B, C).
using PerPhase = std::array<double, 3>;

/// Per-phase complex currents (A, B, C).
using PhaseCurrents = std::array<Complex, 3>;

}  // namespace phasebal

template <>
struct std::hash<phasebal::NodeId> {
    std::size_t operator()(const phasebal::NodeId& id) const noexcept { return std::hash<std::string>{}(id.name); }
};
