#pragma once

// JSON scenario configuration. The layout is published in
// docs/config.schema.json; every object rejects keys it does not know.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "phasebal/powerflow.hpp"
#include "phasebal/scenarios.hpp"

namespace phasebal {

inline constexpr int kConfigSchemaVersion = 1;

/// Penetration study: one sweep-scenario per (kind, node, penetration).
struct SweepSpec {
    SweepTemplate tmpl;
    std::vector<double> penetrations;
    std::vector<NodeId> nodes;
    std::vector<DeviceKind> kinds;

    friend bool operator==(const SweepSpec&, const SweepSpec&) = default;
};

struct RunConfig {
    /// Exactly one of scenario and sweep is set.
    std::optional<Scenario> scenario;
    std::optional<SweepSpec> sweep;
    SolverSettings solver;
    std::string out_dir = "out";
};

/// Parses and validates a configuration. Any problem, including a feeder
/// that fails topology checks, raises ConfigInvalid whose subject is the
/// JSON pointer of the offending field. `origin` prefixes messages.
RunConfig parse_config(std::string_view json_text, const std::string& origin = "<config>");

/// Reads and parses a file. Throws Io when it cannot be read.
RunConfig load_config(const std::filesystem::path& path);

/// Pretty-printed JSON that parse_config reads back to an equal RunConfig.
std::string emit_config(const RunConfig& config);

/// Keys accepted by each object, keyed by a schema-style path such as
/// "/scenario/feeder/segments/*". Used to keep the published schema honest.
const std::map<std::string, std::vector<std::string>>& config_keys();

}  // namespace phasebal
