#pragma once

// Radial three-phase four-wire feeder model.
//
// A Feeder is immutable once built: nodes are held in breadth-first order
// from the source (index 0), and every non-source node is fed by exactly one
// segment. The neutral is solidly grounded at the source only.

#include <array>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "phasebal/types.hpp"

namespace phasebal {

/// 4x4 series impedance of a segment in ohms, conductor order (A, B, C, N).
using ImpedanceMatrix = std::array<std::array<Complex, kConductors>, kConductors>;

struct LineSegment {
    std::string id;
    NodeId from_node;
    NodeId to_node;
    double length_km = 0.0;
    Complex z_phase_per_km{0.32, 0.08};
    Complex z_neutral_per_km{0.32, 0.08};
    /// Phase-phase and phase-neutral coupling.
    Complex z_mutual_per_km{0.0, 0.0};

    /// Total impedance matrix for the segment length.
    ImpedanceMatrix impedance() const;

    friend bool operator==(const LineSegment&, const LineSegment&) = default;
};

struct PhaseConnection {
    bool balanced = false;
    /// Meaningful only when !balanced.
    Phase phase = Phase::A;

    static PhaseConnection single(Phase p) { return {false, p}; }
    static PhaseConnection balanced_three_phase() { return {true, Phase::A}; }

    friend bool operator==(const PhaseConnection&, const PhaseConnection&) = default;
};

enum class DeviceKind { Load, DG, EV, Storage };

std::string_view to_string(DeviceKind kind) noexcept;
DeviceKind parse_device_kind(std::string_view text);

/// A per-phase device. `s_rated_kva` applies to each connected phase: a
/// balanced 1 kW load draws 1 kW on A, B and C. Loads and EVs consume
/// (P >= 0), DGs inject (P <= 0). Storage devices have no rating; their
/// injection comes from the dispatch action each timestep.
struct Device {
    std::string id;
    NodeId node;
    PhaseConnection connection;
    DeviceKind kind = DeviceKind::Load;
    Complex s_rated_kva{0.0, 0.0};
    std::string profile_id = "const";
    std::string battery_id;

    friend bool operator==(const Device&, const Device&) = default;
};

struct FeederSpec {
    NodeId source_node{"N0"};
    std::vector<NodeId> nodes;
    std::vector<LineSegment> segments;
    std::vector<Device> devices;
    double v_base_ln = 230.0;
    double s_base_kva = 100.0;

    friend bool operator==(const FeederSpec&, const FeederSpec&) = default;
};

class Feeder {
public:
    const NodeId& source_node() const noexcept { return nodes_.front(); }
    /// Nodes in breadth-first order; index 0 is the source.
    const std::vector<NodeId>& nodes() const noexcept { return nodes_; }
    std::size_t node_count() const noexcept { return nodes_.size(); }
    std::size_t node_index(const NodeId& id) const;
    bool has_node(const NodeId& id) const noexcept { return index_.contains(id); }

    /// Parent node index; undefined for the source.
    std::size_t parent(std::size_t node) const { return parent_.at(node); }
    const std::vector<std::size_t>& children(std::size_t node) const { return children_.at(node); }
    /// Segment feeding `node` (node >= 1).
    const LineSegment& feeding_segment(std::size_t node) const { return segments_.at(node - 1); }
    const ImpedanceMatrix& feeding_impedance(std::size_t node) const { return impedances_.at(node - 1); }
    /// Segments ordered so that segments()[k - 1] feeds nodes()[k].
    const std::vector<LineSegment>& segments() const noexcept { return segments_; }
    /// Number of segments between the source and `node`.
    std::size_t depth(std::size_t node) const { return depth_.at(node); }

    const std::vector<Device>& devices() const noexcept { return devices_; }
    std::size_t device_node_index(std::size_t device) const { return device_node_.at(device); }

    double v_base_ln() const noexcept { return v_base_ln_; }
    double s_base_kva() const noexcept { return s_base_kva_; }
    /// Rated current per phase at s_base split over three phases.
    double i_base() const noexcept { return s_base_kva_ * 1000.0 / (3.0 * v_base_ln_); }

    /// Spec equivalent to this feeder (normalized order).
    FeederSpec to_spec() const;

private:
    friend Feeder build_feeder(const FeederSpec& spec);
    friend Feeder attach_device(const Feeder& feeder, const Device& device);

    std::vector<NodeId> nodes_;
    std::unordered_map<NodeId, std::size_t> index_;
    std::vector<std::size_t> parent_;
    std::vector<std::vector<std::size_t>> children_;
    std::vector<std::size_t> depth_;
    std::vector<LineSegment> segments_;
    std::vector<ImpedanceMatrix> impedances_;
    std::vector<Device> devices_;
    std::vector<std::size_t> device_node_;
    double v_base_ln_ = 230.0;
    double s_base_kva_ = 100.0;
};

/// Validates the spec and normalizes node order to breadth-first from the
/// source (children in the order their segments are listed).
/// Throws Error with CyclicTopology, DisconnectedNode, UnknownNode,
/// DuplicateNode, NonPositiveLength, InvalidImpedance or
/// SignConventionViolation naming the offending element.
Feeder build_feeder(const FeederSpec& spec);

/// New feeder with `device` appended; `feeder` is left untouched.
Feeder attach_device(const Feeder& feeder, const Device& device);

/// Throws if the device violates the sign convention or is non-finite.
void validate_device(const Device& device);

/// Number of distinct source-to-node paths in the segment graph
/// (1 for every node of a valid feeder).
std::size_t count_paths(const Feeder& feeder, std::size_t node);

}  // namespace phasebal
