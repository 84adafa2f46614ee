#pragma once

// Shared fixtures: random radial feeders and closed-form references.

#include <cmath>
#include <complex>
#include <random>
#include <string>

#include "phasebal/network.hpp"
#include "phasebal/powerflow.hpp"

namespace phasebal::testing {

struct RandomCase {
    Feeder feeder;
    Injections injections;
};

// Tree with 2..max_nodes nodes, each node hanging off a random earlier one,
// and 1..4 loads/DGs/EVs scattered over the non-source nodes. Mutual
// coupling is switched on for roughly a third of the feeders.
inline RandomCase random_case(std::mt19937_64& rng, std::size_t max_nodes = 6) {
    std::uniform_int_distribution<std::size_t> count(2, max_nodes);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::size_t n = count(rng);
    const bool coupled = unit(rng) < 0.35;

    FeederSpec spec;
    spec.nodes.push_back(NodeId{"N0"});
    for (std::size_t k = 1; k < n; ++k) {
        spec.nodes.push_back(NodeId{"N" + std::to_string(k)});
        std::uniform_int_distribution<std::size_t> parent(0, k - 1);
        LineSegment seg;
        seg.id = "S" + std::to_string(k);
        seg.from_node = spec.nodes[parent(rng)];
        seg.to_node = spec.nodes[k];
        seg.length_km = 0.05 + 0.25 * unit(rng);
        seg.z_phase_per_km = {0.2 + 0.4 * unit(rng), 0.05 + 0.1 * unit(rng)};
        seg.z_neutral_per_km = {0.2 + 0.6 * unit(rng), 0.05 + 0.1 * unit(rng)};
        if (coupled) seg.z_mutual_per_km = {0.02 * unit(rng), 0.03 * unit(rng)};
        spec.segments.push_back(seg);
    }

    std::uniform_int_distribution<int> devices(1, 4);
    std::uniform_int_distribution<std::size_t> where(1, n - 1);
    std::uniform_int_distribution<int> which(0, 3);
    const int m = devices(rng);
    for (int i = 0; i < m; ++i) {
        Device d;
        d.id = "D" + std::to_string(i);
        d.node = spec.nodes[where(rng)];
        const int w = which(rng);
        d.connection = w == 3 ? PhaseConnection::balanced_three_phase() : PhaseConnection::single(kPhases[static_cast<std::size_t>(w)]);
        const double kind = unit(rng);
        if (kind < 0.5) {
            d.kind = DeviceKind::Load;
            d.s_rated_kva = {8.0 * unit(rng), 3.0 * (unit(rng) - 0.3)};
        } else if (kind < 0.75) {
            d.kind = DeviceKind::DG;
            d.s_rated_kva = {-8.0 * unit(rng), 0.0};
        } else {
            d.kind = DeviceKind::EV;
            d.s_rated_kva = {7.0 * unit(rng), 0.0};
        }
        spec.devices.push_back(d);
    }
    RandomCase c{build_feeder(spec), {}};
    c.injections = rated_injections(c.feeder);
    return c;
}

// |V| at the load end of a single impedance z feeding constant power s
// (VA) from a stiff source vs: the larger root of
// |V|^4 + (2 Re(z conj(s)) - vs^2)|V|^2 + |z|^2 |s|^2 = 0.
inline double two_bus_voltage(double vs, Complex z, Complex s_va) {
    const double b = 2.0 * (z.real() * s_va.real() + z.imag() * s_va.imag()) - vs * vs;
    const double c = std::norm(z) * std::norm(s_va);
    return std::sqrt((-b + std::sqrt(b * b - 4.0 * c)) / 2.0);
}

inline FeederSpec two_bus_spec(double length_km, Complex z_per_km) {
    FeederSpec spec;
    spec.nodes = {NodeId{"N0"}, NodeId{"N1"}};
    LineSegment seg;
    seg.id = "S1";
    seg.from_node = NodeId{"N0"};
    seg.to_node = NodeId{"N1"};
    seg.length_km = length_km;
    seg.z_phase_per_km = z_per_km;
    seg.z_neutral_per_km = z_per_km;
    spec.segments.push_back(seg);
    return spec;
}

inline Device make_device(std::string id, std::string node, PhaseConnection conn, DeviceKind kind, Complex s) {
    Device d;
    d.id = std::move(id);
    d.node = NodeId{std::move(node)};
    d.connection = conn;
    d.kind = kind;
    d.s_rated_kva = s;
    return d;
}

}  // namespace phasebal::testing
