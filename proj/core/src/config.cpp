#include "phasebal/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "phasebal/error.hpp"

namespace phasebal {

using nlohmann::json;

const std::map<std::string, std::vector<std::string>>& config_keys() {
    static const std::map<std::string, std::vector<std::string>> keys{
        {"/", {"schema_version", "solver", "output", "scenario", "sweep"}},
        {"/solver", {"tol_pu", "max_iter"}},
        {"/output", {"dir"}},
        {"/scenario", {"name", "horizon_h", "dt_h", "seed", "feeder", "profiles", "storage"}},
        {"/scenario/feeder", {"source_node", "v_base_ln", "s_base_kva", "nodes", "segments", "devices"}},
        {"/scenario/feeder/segments/*",
         {"id", "from", "to", "length_km", "z_phase_ohm_per_km", "z_neutral_ohm_per_km", "z_mutual_ohm_per_km"}},
        {"/scenario/feeder/devices/*", {"id", "node", "phases", "kind", "p_kw", "q_kvar", "profile", "battery"}},
        {"/scenario/storage", {"architecture", "allow_load_shift", "controller", "schedule", "batteries"}},
        {"/scenario/storage/schedule", {"charge_window", "discharge_window", "target_phase"}},
        {"/scenario/storage/batteries/*",
         {"id", "node", "home_phase", "p_max_kw", "e_max_kwh", "soc_kwh", "eta_c", "eta_d", "s_conv_kva"}},
        {"/sweep", {"total_phase_load_kw", "network_class", "placement", "penetrations_pct", "nodes", "kinds"}},
    };
    return keys;
}

namespace {

// Cursor over one JSON object: knows its pointer for messages and refuses
// keys outside its entry in config_keys().
class Cursor {
public:
    Cursor(const json& node, std::string pointer, std::string schema_key, const std::string& origin)
        : node_(node), pointer_(std::move(pointer)), origin_(origin) {
        if (!node_.is_object()) fail(pointer_, "expected an object");
        const auto& allowed = config_keys().at(schema_key);
        for (const auto& item : node_.items()) {
            if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
                fail(child(item.key()), "unknown key '" + item.key() + "'");
            }
        }
    }

    [[noreturn]] void fail(const std::string& pointer, const std::string& reason) const {
        throw Error(ErrorCode::ConfigInvalid, origin_ + ": " + pointer + ": " + reason, pointer);
    }

    std::string child(std::string_view key) const { return (pointer_ == "/" ? "" : pointer_) + "/" + std::string(key); }
    const std::string& pointer() const noexcept { return pointer_; }
    const std::string& origin() const noexcept { return origin_; }
    bool has(std::string_view key) const { return node_.contains(std::string(key)); }

    const json& required(std::string_view key) const {
        const auto it = node_.find(std::string(key));
        if (it == node_.end()) fail(child(key), "missing required key");
        return *it;
    }

    double number(std::string_view key) const { return as_number(required(key), child(key)); }
    double number(std::string_view key, double fallback) const {
        return has(key) ? number(key) : fallback;
    }
    std::string text(std::string_view key) const { return as_text(required(key), child(key)); }
    std::string text(std::string_view key, const std::string& fallback) const {
        return has(key) ? text(key) : fallback;
    }
    bool flag(std::string_view key, bool fallback) const {
        if (!has(key)) return fallback;
        const json& v = required(key);
        if (!v.is_boolean()) fail(child(key), "expected true or false");
        return v.get<bool>();
    }
    Complex complex(std::string_view key, Complex fallback) const {
        if (!has(key)) return fallback;
        const json& v = required(key);
        if (!v.is_array() || v.size() != 2) fail(child(key), "expected [real, imag]");
        return {as_number(v[0], child(key) + "/0"), as_number(v[1], child(key) + "/1")};
    }
    const json& array(std::string_view key) const {
        const json& v = required(key);
        if (!v.is_array()) fail(child(key), "expected an array");
        return v;
    }

    double as_number(const json& v, const std::string& pointer) const {
        if (!v.is_number()) fail(pointer, "expected a number");
        return v.get<double>();
    }
    std::string as_text(const json& v, const std::string& pointer) const {
        if (!v.is_string()) fail(pointer, "expected a string");
        return v.get<std::string>();
    }

    // Runs a library parser (phase, kind, ...) and reports its failure at `pointer`.
    template <typename F>
    auto guarded(const std::string& pointer, F&& f) const -> decltype(f()) {
        try {
            return f();
        } catch (const Error& e) {
            fail(pointer, e.what());
        }
    }

private:
    const json& node_;
    std::string pointer_;
    const std::string& origin_;
};

std::string index_pointer(const std::string& base, std::size_t i) { return base + "/" + std::to_string(i); }

SolverSettings parse_solver(const Cursor& parent) {
    SolverSettings s;
    if (!parent.has("solver")) return s;
    const Cursor c(parent.required("solver"), parent.child("solver"), "/solver", parent.origin());
    s.tol_pu = c.number("tol_pu", s.tol_pu);
    if (c.has("max_iter")) {
        const json& v = c.required("max_iter");
        if (!v.is_number_integer()) c.fail(c.child("max_iter"), "expected an integer");
        s.max_iter = v.get<int>();
    }
    c.guarded(c.pointer(), [&] { s.validate(); });
    return s;
}

PhaseConnection parse_phases(const Cursor& c, std::string_view key) {
    const std::string text = c.text(key);
    if (text == "ABC") return PhaseConnection::balanced_three_phase();
    return PhaseConnection::single(c.guarded(c.child(key), [&] { return parse_phase(text); }));
}

Window parse_window(const Cursor& c, std::string_view key, Window fallback) {
    if (!c.has(key)) return fallback;
    const json& v = c.required(key);
    if (!v.is_array() || v.size() != 2) c.fail(c.child(key), "expected [start_h, end_h]");
    Window w{c.as_number(v[0], c.child(key) + "/0"), c.as_number(v[1], c.child(key) + "/1")};
    if (!(w.start_h <= w.end_h)) c.fail(c.child(key), "window ends before it starts");
    return w;
}

FeederSpec parse_feeder(const Cursor& parent) {
    const Cursor c(parent.required("feeder"), parent.child("feeder"), "/scenario/feeder", parent.origin());
    FeederSpec spec;
    spec.source_node = NodeId{c.text("source_node", spec.source_node.name)};
    spec.v_base_ln = c.number("v_base_ln", spec.v_base_ln);
    spec.s_base_kva = c.number("s_base_kva", spec.s_base_kva);
    if (!(spec.v_base_ln > 0.0)) c.fail(c.child("v_base_ln"), "must be positive");
    if (!(spec.s_base_kva > 0.0)) c.fail(c.child("s_base_kva"), "must be positive");

    const json& nodes = c.array("nodes");
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        spec.nodes.emplace_back(c.as_text(nodes[i], index_pointer(c.child("nodes"), i)));
    }

    const json& segments = c.array("segments");
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const Cursor s(segments[i], index_pointer(c.child("segments"), i), "/scenario/feeder/segments/*", c.origin());
        LineSegment seg;
        seg.id = s.text("id");
        seg.from_node = NodeId{s.text("from")};
        seg.to_node = NodeId{s.text("to")};
        seg.length_km = s.number("length_km");
        if (!(seg.length_km > 0.0)) {
            s.fail(s.child("length_km"), "segment '" + seg.id + "' must have a positive length");
        }
        seg.z_phase_per_km = s.complex("z_phase_ohm_per_km", seg.z_phase_per_km);
        seg.z_neutral_per_km = s.complex("z_neutral_ohm_per_km", seg.z_neutral_per_km);
        seg.z_mutual_per_km = s.complex("z_mutual_ohm_per_km", seg.z_mutual_per_km);
        spec.segments.push_back(seg);
    }

    if (c.has("devices")) {
        const json& devices = c.array("devices");
        for (std::size_t i = 0; i < devices.size(); ++i) {
            const Cursor d(devices[i], index_pointer(c.child("devices"), i), "/scenario/feeder/devices/*", c.origin());
            Device dev;
            dev.id = d.text("id");
            dev.node = NodeId{d.text("node")};
            dev.connection = parse_phases(d, "phases");
            dev.kind = d.guarded(d.child("kind"), [&] { return parse_device_kind(d.text("kind")); });
            dev.s_rated_kva = {d.number("p_kw", 0.0), d.number("q_kvar", 0.0)};
            dev.profile_id = d.text("profile", dev.profile_id);
            dev.battery_id = d.text("battery", "");
            if (dev.kind == DeviceKind::Storage && dev.battery_id.empty()) {
                d.fail(d.child("battery"), "storage devices name their battery");
            }
            d.guarded(d.pointer(), [&] { validate_device(dev); });
            spec.devices.push_back(dev);
        }
    }
    return spec;
}

std::optional<StorageSetup> parse_storage(const Cursor& parent) {
    if (!parent.has("storage")) return std::nullopt;
    const json& node = parent.required("storage");
    if (node.is_null()) return std::nullopt;
    const Cursor c(node, parent.child("storage"), "/scenario/storage", parent.origin());
    StorageSetup st;
    st.architecture.kind =
        c.guarded(c.child("architecture"), [&] { return parse_architecture(c.text("architecture")); });
    st.architecture.allow_load_shift = c.flag("allow_load_shift", true);
    st.controller = c.guarded(c.child("controller"), [&] { return parse_controller(c.text("controller")); });
    if (c.has("schedule")) {
        const Cursor s(c.required("schedule"), c.child("schedule"), "/scenario/storage/schedule", c.origin());
        st.schedule.charge_window = parse_window(s, "charge_window", st.schedule.charge_window);
        st.schedule.discharge_window = parse_window(s, "discharge_window", st.schedule.discharge_window);
        if (s.has("target_phase")) {
            st.schedule.target_phase =
                s.guarded(s.child("target_phase"), [&] { return parse_phase(s.text("target_phase")); });
        }
    }
    const json& batteries = c.array("batteries");
    for (std::size_t i = 0; i < batteries.size(); ++i) {
        const Cursor b(batteries[i], index_pointer(c.child("batteries"), i), "/scenario/storage/batteries/*",
                       c.origin());
        BatterySite site;
        site.battery.id = b.text("id");
        site.node = NodeId{b.text("node")};
        site.home_phase = b.guarded(b.child("home_phase"), [&] { return parse_phase(b.text("home_phase")); });
        site.battery.p_max_kw = b.number("p_max_kw");
        site.battery.e_max_kwh = b.number("e_max_kwh");
        site.battery.soc_kwh = b.number("soc_kwh");
        site.battery.eta_c = b.number("eta_c", 1.0);
        site.battery.eta_d = b.number("eta_d", 1.0);
        site.battery.s_conv_kva = b.number("s_conv_kva", site.battery.p_max_kw);
        b.guarded(b.pointer(), [&] { site.battery.validate(); });
        st.sites.push_back(site);
    }
    return st;
}

Scenario parse_scenario(const Cursor& parent) {
    const Cursor c(parent.required("scenario"), parent.child("scenario"), "/scenario", parent.origin());
    Scenario sc;
    sc.name = c.text("name");
    sc.horizon_h = c.number("horizon_h", sc.horizon_h);
    sc.dt_h = c.number("dt_h", sc.dt_h);
    if (c.has("seed")) {
        const json& v = c.required("seed");
        if (!v.is_number_unsigned()) c.fail(c.child("seed"), "expected a non-negative integer");
        sc.seed = v.get<std::uint64_t>();
    }
    const FeederSpec spec = parse_feeder(c);
    sc.feeder = c.guarded(c.child("feeder"), [&] { return build_feeder(spec); });

    if (c.has("profiles")) {
        const json& profiles = c.required("profiles");
        if (!profiles.is_object()) c.fail(c.child("profiles"), "expected an object of arrays");
        for (const auto& item : profiles.items()) {
            const std::string pointer = c.child("profiles") + "/" + item.key();
            if (!item.value().is_array()) c.fail(pointer, "expected an array");
            std::vector<double> series;
            for (std::size_t i = 0; i < item.value().size(); ++i) {
                series.push_back(c.as_number(item.value()[i], index_pointer(pointer, i)));
            }
            sc.profiles.emplace(item.key(), std::move(series));
        }
    }
    sc.storage = parse_storage(c);
    c.guarded(c.pointer(), [&] { sc.validate(); });
    return sc;
}

SweepSpec parse_sweep(const Cursor& parent) {
    const Cursor c(parent.required("sweep"), parent.child("sweep"), "/sweep", parent.origin());
    SweepSpec sw;
    sw.tmpl.network_class =
        c.guarded(c.child("network_class"), [&] { return parse_network_class(c.text("network_class", "compact")); });
    sw.tmpl.total_phase_load_kw = c.number("total_phase_load_kw", default_phase_load_kw(sw.tmpl.network_class));
    const std::string placement = c.text("placement", "unbalanced");
    if (placement == "unbalanced") {
        sw.tmpl.placement = DevicePlacement::Unbalanced;
    } else if (placement == "balanced") {
        sw.tmpl.placement = DevicePlacement::Balanced;
    } else {
        c.fail(c.child("placement"), "expected 'unbalanced' or 'balanced'");
    }
    const json& pens = c.array("penetrations_pct");
    for (std::size_t i = 0; i < pens.size(); ++i) {
        const double p = c.as_number(pens[i], index_pointer(c.child("penetrations_pct"), i));
        if (!(p >= 0.0 && p <= 200.0)) c.fail(index_pointer(c.child("penetrations_pct"), i), "must lie in [0, 200]");
        sw.penetrations.push_back(p);
    }
    const json& nodes = c.array("nodes");
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        sw.nodes.emplace_back(c.as_text(nodes[i], index_pointer(c.child("nodes"), i)));
    }
    const json& kinds = c.array("kinds");
    for (std::size_t i = 0; i < kinds.size(); ++i) {
        const std::string pointer = index_pointer(c.child("kinds"), i);
        const DeviceKind k = c.guarded(pointer, [&] { return parse_device_kind(c.as_text(kinds[i], pointer)); });
        if (k != DeviceKind::DG && k != DeviceKind::EV) c.fail(pointer, "sweeps place 'dg' or 'ev' devices");
        sw.kinds.push_back(k);
    }
    if (sw.penetrations.empty()) c.fail(c.child("penetrations_pct"), "must not be empty");
    if (sw.nodes.empty()) c.fail(c.child("nodes"), "must not be empty");
    if (sw.kinds.empty()) c.fail(c.child("kinds"), "must not be empty");
    return sw;
}

json complex_json(Complex z) { return json::array({z.real(), z.imag()}); }

std::string phases_text(const PhaseConnection& c) {
    return c.balanced ? std::string("ABC") : std::string(to_string(c.phase));
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char ch) { return std::tolower(ch); });
    return out;
}

json scenario_json(const Scenario& sc) {
    const FeederSpec spec = sc.feeder.to_spec();
    json feeder = json::object();
    feeder["source_node"] = spec.source_node.name;
    feeder["v_base_ln"] = spec.v_base_ln;
    feeder["s_base_kva"] = spec.s_base_kva;
    feeder["nodes"] = json::array();
    for (const NodeId& n : spec.nodes) feeder["nodes"].push_back(n.name);
    feeder["segments"] = json::array();
    for (const LineSegment& s : spec.segments) {
        feeder["segments"].push_back({{"id", s.id},
                                      {"from", s.from_node.name},
                                      {"to", s.to_node.name},
                                      {"length_km", s.length_km},
                                      {"z_phase_ohm_per_km", complex_json(s.z_phase_per_km)},
                                      {"z_neutral_ohm_per_km", complex_json(s.z_neutral_per_km)},
                                      {"z_mutual_ohm_per_km", complex_json(s.z_mutual_per_km)}});
    }
    feeder["devices"] = json::array();
    for (const Device& d : spec.devices) {
        json dev = {{"id", d.id},
                    {"node", d.node.name},
                    {"phases", phases_text(d.connection)},
                    {"kind", std::string(to_string(d.kind))}};
        dev["p_kw"] = d.s_rated_kva.real();
        dev["q_kvar"] = d.s_rated_kva.imag();
        dev["profile"] = d.profile_id;
        if (d.kind == DeviceKind::Storage) dev["battery"] = d.battery_id;
        feeder["devices"].push_back(dev);
    }

    json out = {{"name", sc.name}, {"horizon_h", sc.horizon_h}, {"dt_h", sc.dt_h}, {"seed", sc.seed}};
    out["feeder"] = feeder;
    out["profiles"] = json::object();
    for (const auto& [id, series] : sc.profiles) out["profiles"][id] = series;
    if (sc.storage) {
        const StorageSetup& st = *sc.storage;
        json storage = {
            {"architecture", std::string(to_string(st.architecture.kind))},
            {"allow_load_shift", st.architecture.allow_load_shift},
            {"controller", std::string(to_string(st.controller))},
            {"schedule",
             {{"charge_window", {st.schedule.charge_window.start_h, st.schedule.charge_window.end_h}},
              {"discharge_window", {st.schedule.discharge_window.start_h, st.schedule.discharge_window.end_h}},
              {"target_phase", std::string(to_string(st.schedule.target_phase))}}},
        };
        storage["batteries"] = json::array();
        for (const BatterySite& site : st.sites) {
            const Battery& b = site.battery;
            storage["batteries"].push_back({{"id", b.id},
                                            {"node", site.node.name},
                                            {"home_phase", std::string(to_string(site.home_phase))},
                                            {"p_max_kw", b.p_max_kw},
                                            {"e_max_kwh", b.e_max_kwh},
                                            {"soc_kwh", b.soc_kwh},
                                            {"eta_c", b.eta_c},
                                            {"eta_d", b.eta_d},
                                            {"s_conv_kva", b.s_conv_kva}});
        }
        out["storage"] = storage;
    }
    return out;
}

json sweep_json(const SweepSpec& sw) {
    json out = {
        {"network_class", std::string(to_string(sw.tmpl.network_class))},
        {"total_phase_load_kw", sw.tmpl.total_phase_load_kw},
        {"placement", sw.tmpl.placement == DevicePlacement::Balanced ? "balanced" : "unbalanced"},
        {"penetrations_pct", sw.penetrations},
    };
    out["nodes"] = json::array();
    for (const NodeId& n : sw.nodes) out["nodes"].push_back(n.name);
    out["kinds"] = json::array();
    for (const DeviceKind k : sw.kinds) out["kinds"].push_back(lower(to_string(k)));
    return out;
}

}  // namespace

RunConfig parse_config(std::string_view json_text, const std::string& origin) {
    json root;
    try {
        root = json::parse(json_text.begin(), json_text.end());
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ConfigInvalid, origin + ": /: malformed JSON: " + e.what(), "/");
    }
    const Cursor c(root, "/", "/", origin);
    const json& version = c.required("schema_version");
    if (!version.is_number_integer() || version.get<int>() != kConfigSchemaVersion) {
        c.fail("/schema_version", "expected " + std::to_string(kConfigSchemaVersion));
    }
    RunConfig cfg;
    cfg.solver = parse_solver(c);
    if (c.has("output")) {
        const Cursor o(c.required("output"), "/output", "/output", origin);
        cfg.out_dir = o.text("dir", cfg.out_dir);
    }
    if (c.has("scenario") == c.has("sweep")) c.fail("/", "exactly one of 'scenario' and 'sweep' is required");
    if (c.has("scenario")) cfg.scenario = parse_scenario(c);
    if (c.has("sweep")) cfg.sweep = parse_sweep(c);
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot read config '" + path.string() + "'", path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw Error(ErrorCode::Io, "cannot read config '" + path.string() + "'", path.string());
    return parse_config(buf.str(), path.string());
}

std::string emit_config(const RunConfig& config) {
    json root = {{"schema_version", kConfigSchemaVersion},
                 {"solver", {{"tol_pu", config.solver.tol_pu}, {"max_iter", config.solver.max_iter}}},
                 {"output", {{"dir", config.out_dir}}}};
    if (config.scenario) root["scenario"] = scenario_json(*config.scenario);
    if (config.sweep) root["sweep"] = sweep_json(*config.sweep);
    return root.dump(2) + "\n";
}

}  // namespace phasebal
