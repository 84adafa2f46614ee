#include "phasebal/network.hpp"

#include <algorithm>
#include <cctype>
#include <deque>

#include "phasebal/error.hpp"

namespace phasebal {

ImpedanceMatrix LineSegment::impedance() const {
    ImpedanceMatrix z{};
    const Complex zp = z_phase_per_km * length_km;
    const Complex zn = z_neutral_per_km * length_km;
    const Complex zm = z_mutual_per_km * length_km;
    for (std::size_t r = 0; r < kConductors; ++r) {
        for (std::size_t c = 0; c < kConductors; ++c) {
            if (r == c) {
                z[r][c] = r == kNeutral ? zn : zp;
            } else {
                z[r][c] = zm;
            }
        }
    }
    return z;
}

std::string_view to_string(DeviceKind kind) noexcept {
    switch (kind) {
        case DeviceKind::Load: return "load";
        case DeviceKind::DG: return "dg";
        case DeviceKind::EV: return "ev";
        case DeviceKind::Storage: return "storage";
    }
    return "?";
}

DeviceKind parse_device_kind(std::string_view text) {
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower == "load") return DeviceKind::Load;
    if (lower == "dg") return DeviceKind::DG;
    if (lower == "ev") return DeviceKind::EV;
    if (lower == "storage") return DeviceKind::Storage;
    throw Error(ErrorCode::InvalidArgument, "unknown device kind '" + lower + "'", lower);
}

std::size_t Feeder::node_index(const NodeId& id) const {
    const auto it = index_.find(id);
    if (it == index_.end()) throw Error(ErrorCode::UnknownNode, "node '" + id.name + "' is not in the feeder", id.name);
    return it->second;
}

FeederSpec Feeder::to_spec() const {
    FeederSpec spec;
    spec.source_node = source_node();
    spec.nodes = nodes_;
    spec.segments = segments_;
    spec.devices = devices_;
    spec.v_base_ln = v_base_ln_;
    spec.s_base_kva = s_base_kva_;
    return spec;
}

void validate_device(const Device& device) {
    if (!is_finite(device.s_rated_kva)) {
        throw Error(ErrorCode::InvalidArgument, "device '" + device.id + "' has a non-finite rating", device.id);
    }
    const double p = device.s_rated_kva.real();
    switch (device.kind) {
        case DeviceKind::Load:
        case DeviceKind::EV:
            if (p < 0.0) {
                throw Error(ErrorCode::SignConventionViolation,
                            "device '" + device.id + "' consumes power and needs P >= 0", device.id);
            }
            break;
        case DeviceKind::DG:
            if (p > 0.0) {
                throw Error(ErrorCode::SignConventionViolation,
                            "DG '" + device.id + "' injects power and needs P <= 0", device.id);
            }
            break;
        case DeviceKind::Storage:
            if (device.s_rated_kva != Complex{}) {
                throw Error(ErrorCode::SignConventionViolation,
                            "storage device '" + device.id + "' must not carry a fixed rating", device.id);
            }
            if (device.battery_id.empty()) {
                throw Error(ErrorCode::InvalidArgument, "storage device '" + device.id + "' names no battery",
                            device.id);
            }
            break;
    }
}

namespace {

void validate_segment(const LineSegment& seg) {
    if (!(seg.length_km > 0.0) || !std::isfinite(seg.length_km)) {
        throw Error(ErrorCode::NonPositiveLength,
                    "segment '" + seg.id + "' has non-positive length " + std::to_string(seg.length_km), seg.id);
    }
    for (const Complex z : {seg.z_phase_per_km, seg.z_neutral_per_km, seg.z_mutual_per_km}) {
        if (!is_finite(z)) {
            throw Error(ErrorCode::InvalidImpedance, "segment '" + seg.id + "' has a non-finite impedance", seg.id);
        }
    }
    if (seg.z_phase_per_km.real() < 0.0 || seg.z_neutral_per_km.real() < 0.0) {
        throw Error(ErrorCode::InvalidImpedance, "segment '" + seg.id + "' has negative resistance", seg.id);
    }
    if (seg.from_node == seg.to_node) {
        throw Error(ErrorCode::CyclicTopology, "segment '" + seg.id + "' connects node '" + seg.from_node.name +
                                                   "' to itself",
                    seg.id);
    }
}

}  // namespace

Feeder build_feeder(const FeederSpec& spec) {
    if (!(spec.v_base_ln > 0.0) || !(spec.s_base_kva > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "base voltage and power must be positive");
    }

    std::unordered_map<NodeId, std::size_t> declared;
    for (std::size_t i = 0; i < spec.nodes.size(); ++i) {
        if (!declared.emplace(spec.nodes[i], i).second) {
            throw Error(ErrorCode::DuplicateNode, "node '" + spec.nodes[i].name + "' is listed twice",
                        spec.nodes[i].name);
        }
    }
    if (!declared.contains(spec.source_node)) {
        throw Error(ErrorCode::UnknownNode, "source node '" + spec.source_node.name + "' is not listed",
                    spec.source_node.name);
    }

    // adjacency: declared node index -> (segment index, neighbour)
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adjacency(spec.nodes.size());
    for (std::size_t s = 0; s < spec.segments.size(); ++s) {
        const LineSegment& seg = spec.segments[s];
        for (const NodeId* end : {&seg.from_node, &seg.to_node}) {
            if (!declared.contains(*end)) {
                throw Error(ErrorCode::UnknownNode,
                            "segment '" + seg.id + "' references unknown node '" + end->name + "'", end->name);
            }
        }
        validate_segment(seg);
        const std::size_t a = declared.at(seg.from_node);
        const std::size_t b = declared.at(seg.to_node);
        adjacency[a].emplace_back(s, b);
        adjacency[b].emplace_back(s, a);
    }

    Feeder feeder;
    feeder.v_base_ln_ = spec.v_base_ln;
    feeder.s_base_kva_ = spec.s_base_kva;

    constexpr std::size_t kUnvisited = static_cast<std::size_t>(-1);
    std::vector<std::size_t> order_of(spec.nodes.size(), kUnvisited);
    std::vector<bool> segment_used(spec.segments.size(), false);
    std::deque<std::size_t> queue;

    const std::size_t root = declared.at(spec.source_node);
    order_of[root] = 0;
    feeder.nodes_.push_back(spec.nodes[root]);
    feeder.parent_.push_back(0);
    feeder.depth_.push_back(0);
    queue.push_back(root);

    while (!queue.empty()) {
        const std::size_t current = queue.front();
        queue.pop_front();
        for (const auto& [s, next] : adjacency[current]) {
            if (segment_used[s]) continue;
            segment_used[s] = true;
            if (order_of[next] != kUnvisited) {
                throw Error(ErrorCode::CyclicTopology,
                            "segment '" + spec.segments[s].id + "' closes a loop at node '" + spec.nodes[next].name +
                                "'",
                            spec.segments[s].id);
            }
            order_of[next] = feeder.nodes_.size();
            feeder.nodes_.push_back(spec.nodes[next]);
            feeder.parent_.push_back(order_of[current]);
            feeder.depth_.push_back(feeder.depth_[order_of[current]] + 1);

            LineSegment oriented = spec.segments[s];
            if (oriented.from_node != spec.nodes[current]) std::swap(oriented.from_node, oriented.to_node);
            feeder.segments_.push_back(std::move(oriented));
            queue.push_back(next);
        }
    }

    for (std::size_t i = 0; i < spec.nodes.size(); ++i) {
        if (order_of[i] == kUnvisited) {
            throw Error(ErrorCode::DisconnectedNode,
                        "node '" + spec.nodes[i].name + "' is not reachable from the source", spec.nodes[i].name);
        }
    }
    for (std::size_t s = 0; s < spec.segments.size(); ++s) {
        // only possible for segments whose both ends are unreachable, which
        // the disconnected check above already reports
        if (!segment_used[s]) {
            throw Error(ErrorCode::CyclicTopology, "segment '" + spec.segments[s].id + "' is not part of the tree",
                        spec.segments[s].id);
        }
    }

    for (std::size_t k = 0; k < feeder.nodes_.size(); ++k) feeder.index_.emplace(feeder.nodes_[k], k);
    feeder.children_.assign(feeder.nodes_.size(), {});
    for (std::size_t k = 1; k < feeder.nodes_.size(); ++k) feeder.children_[feeder.parent_[k]].push_back(k);
    feeder.impedances_.reserve(feeder.segments_.size());
    for (const auto& seg : feeder.segments_) feeder.impedances_.push_back(seg.impedance());

    for (const Device& device : spec.devices) feeder = attach_device(feeder, device);
    return feeder;
}

Feeder attach_device(const Feeder& feeder, const Device& device) {
    if (!feeder.has_node(device.node)) {
        throw Error(ErrorCode::UnknownNode,
                    "device '" + device.id + "' is attached to unknown node '" + device.node.name + "'",
                    device.node.name);
    }
    validate_device(device);
    Feeder out = feeder;
    out.devices_.push_back(device);
    out.device_node_.push_back(feeder.node_index(device.node));
    return out;
}

std::size_t count_paths(const Feeder& feeder, std::size_t node) {
    // Depth-first enumeration of simple paths over the undirected segment
    // graph. Exponential in general, fine for validation-sized feeders.
    const std::size_t n = feeder.node_count();
    std::vector<std::vector<std::size_t>> adjacency(n);
    for (const auto& seg : feeder.segments()) {
        const std::size_t a = feeder.node_index(seg.from_node);
        const std::size_t b = feeder.node_index(seg.to_node);
        adjacency[a].push_back(b);
        adjacency[b].push_back(a);
    }
    std::vector<bool> on_path(n, false);
    std::size_t paths = 0;
    auto walk = [&](auto&& self, std::size_t at) -> void {
        if (at == node) {
            ++paths;
            return;
        }
        on_path[at] = true;
        for (const std::size_t next : adjacency[at]) {
            if (!on_path[next]) self(self, next);
        }
        on_path[at] = false;
    };
    walk(walk, 0);
    return paths;
}

}  // namespace phasebal
