#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "phasebal/cli.hpp"
#include "phasebal/config.hpp"
#include "phasebal/error.hpp"

using namespace phasebal;
using nlohmann::json;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string pointer_of(const std::string& text) {
    try {
        parse_config(text, "test.json");
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ConfigInvalid) << e.what();
        return e.subject();
    }
    ADD_FAILURE() << "config was accepted";
    return {};
}

json preset_json(const std::string& name) {
    RunConfig cfg;
    cfg.scenario = make_preset(name);
    return json::parse(emit_config(cfg));
}

// Walks the published schema down a config_keys() path.
const json& schema_object(const json& schema, const std::string& path) {
    const json* node = &schema;
    std::stringstream ss(path);
    std::string part;
    while (std::getline(ss, part, '/')) {
        if (part.empty()) continue;
        node = part == "*" ? &node->at("items") : &node->at("properties").at(part);
    }
    return *node;
}

}  // namespace

TEST(ConfigRoundTrip, EveryPresetReparsesToTheSameScenario) {
    for (const std::string& name : preset_names()) {
        RunConfig cfg;
        cfg.scenario = make_preset(name);
        cfg.solver.tol_pu = 1e-9;
        cfg.out_dir = "runs/" + name;
        const std::string text = emit_config(cfg);
        const RunConfig back = parse_config(text);
        ASSERT_TRUE(back.scenario) << name;
        EXPECT_TRUE(*back.scenario == *cfg.scenario) << name;
        EXPECT_EQ(back.solver, cfg.solver);
        EXPECT_EQ(back.out_dir, cfg.out_dir);
        EXPECT_EQ(emit_config(back), text) << name;
    }
}

TEST(ConfigRoundTrip, SweepPresets) {
    for (const std::string& name : sweep_preset_names()) {
        RunConfig cfg;
        cfg.sweep = make_sweep_preset(name);
        const RunConfig back = parse_config(emit_config(cfg));
        ASSERT_TRUE(back.sweep);
        EXPECT_FALSE(back.scenario);
        EXPECT_EQ(*back.sweep, *cfg.sweep) << name;
    }
}

TEST(ConfigValidation, UnknownKeysAreRejectedWithTheirPointer) {
    json j = preset_json("a1-n5");
    j["scenario"]["feeder"]["segments"][2]["colour"] = "red";
    EXPECT_EQ(pointer_of(j.dump()), "/scenario/feeder/segments/2/colour");

    j = preset_json("a1-n5");
    j["scenario"]["storage"]["batteries"][0]["chemistry"] = "LFP";
    EXPECT_EQ(pointer_of(j.dump()), "/scenario/storage/batteries/0/chemistry");

    j = preset_json("baseline-n1");
    j["extra"] = 1;
    EXPECT_EQ(pointer_of(j.dump()), "/extra");
}

TEST(ConfigValidation, NegativeLengthNamesTheSegment) {
    json j = preset_json("baseline-n1");
    j["scenario"]["feeder"]["segments"][3]["length_km"] = -0.1;
    try {
        parse_config(j.dump(), "neg.json");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ConfigInvalid);
        EXPECT_EQ(e.subject(), "/scenario/feeder/segments/3/length_km");
        EXPECT_NE(std::string(e.what()).find("'S4'"), std::string::npos) << e.what();
        EXPECT_NE(std::string(e.what()).find("neg.json"), std::string::npos);
    }
}

TEST(ConfigValidation, StructuralErrors) {
    EXPECT_EQ(pointer_of("{not json"), "/");
    EXPECT_EQ(pointer_of(R"({"schema_version": 2, "sweep": {}})"), "/schema_version");
    EXPECT_EQ(pointer_of(R"({"schema_version": 1})"), "/");

    json j = preset_json("baseline-n1");
    j["sweep"] = make_sweep_preset("sweep-compact").penetrations;
    EXPECT_EQ(pointer_of(j.dump()), "/");

    j = preset_json("baseline-n1");
    j["scenario"]["feeder"]["devices"][0]["kind"] = "heat-pump";
    EXPECT_EQ(pointer_of(j.dump()), "/scenario/feeder/devices/0/kind");

    j = preset_json("baseline-n1");
    j["scenario"]["feeder"]["devices"][5]["p_kw"] = 1.0;  // a DG that consumes
    EXPECT_EQ(pointer_of(j.dump()), "/scenario/feeder/devices/5");

    j = preset_json("baseline-n1");
    j["scenario"]["feeder"]["segments"][1]["to"] = "N9";
    EXPECT_EQ(pointer_of(j.dump()), "/scenario/feeder");

    j = preset_json("baseline-n1");
    j["scenario"]["profiles"]["const"].erase(0);
    EXPECT_EQ(pointer_of(j.dump()), "/scenario");

    j = preset_json("baseline-n1");
    j["solver"] = {{"tol_pu", 0.0}};
    EXPECT_EQ(pointer_of(j.dump()), "/solver");

    j = preset_json("a2-n5");
    j["scenario"]["storage"]["batteries"][1]["soc_kwh"] = 99.0;
    EXPECT_EQ(pointer_of(j.dump()), "/scenario/storage/batteries/1");
}

TEST(ConfigValidation, MinimalEmptyFeeder) {
    const RunConfig cfg = parse_config(R"({
      "schema_version": 1,
      "scenario": {"name": "bare", "feeder": {"nodes": ["N0", "N1"],
        "segments": [{"id": "S1", "from": "N0", "to": "N1", "length_km": 0.1}]}}
    })");
    ASSERT_TRUE(cfg.scenario);
    EXPECT_EQ(cfg.scenario->feeder.node_count(), 2u);
    EXPECT_TRUE(cfg.scenario->feeder.devices().empty());
    EXPECT_EQ(cfg.scenario->steps(), 24);
    EXPECT_EQ(cfg.out_dir, "out");
}

TEST(ConfigFiles, MissingFileIsAnIoError) {
    try {
        load_config("/nonexistent/phasebal.json");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Io);
    }
}

TEST(ConfigSchema, PublishedSchemaListsExactlyTheAcceptedKeys) {
    const json schema = json::parse(slurp(PHASEBAL_SOURCE_DIR "/docs/config.schema.json"));
    for (const auto& [path, keys] : config_keys()) {
        const json& obj = schema_object(schema, path);
        EXPECT_EQ(obj.at("additionalProperties"), false) << path;
        std::vector<std::string> published;
        for (const auto& item : obj.at("properties").items()) published.push_back(item.key());
        std::vector<std::string> accepted = keys;
        std::sort(published.begin(), published.end());
        std::sort(accepted.begin(), accepted.end());
        EXPECT_EQ(published, accepted) << path;
    }
}
