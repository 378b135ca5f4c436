#include "softscreen/scenario.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

using namespace softscreen;
using config::ConfigError;
using config::json;

namespace {

json quickstart() {
    return json::parse(R"({
      "name": "q",
      "lumen": {"fixture": "pipe84"},
      "commands": [{"t_s": 0.0, "motor_radps": 1000.0, "p1_kPa": "matched", "p2_kPa": 12.0}]
    })");
}

std::string field_of(const json& doc) {
    try {
        scenario::parse_scenario(doc);
    } catch (const ConfigError& e) {
        return e.field;
    }
    return "<none>";
}

}  // namespace

TEST(Calibration, DefaultDocumentParses) {
    const auto& cal = testing_support::calibration();
    EXPECT_NEAR(cal.gear.max_motor_speed_radps, transmission::rpm_to_radps(12000.0), 1e-9);
    EXPECT_EQ(cal.gear.gear_ratio, 256.0);
    EXPECT_EQ(cal.worm.pitch_mm, 6.0);
    EXPECT_EQ(cal.max_pressure_kPa, 20.0);
    EXPECT_EQ(cal.membrane.profile.flange_style, membrane::FlangeStyle::Lateral);
}

TEST(Calibration, UnknownFieldIsNamed) {
    json doc = config::default_calibration_document();
    doc["tracks"]["mu_track_lumen_x"] = 0.5;
    try {
        config::parse_calibration(doc);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.field, "tracks.mu_track_lumen_x");
    }
}

TEST(Calibration, MissingAndMistypedFieldsAreNamed) {
    json doc = config::default_calibration_document();
    doc["membrane"].erase("mu_kPa");
    try {
        config::parse_calibration(doc);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.field, "membrane.mu_kPa");
    }
    doc = config::default_calibration_document();
    doc["sim"]["gravity"] = "yes";
    try {
        config::parse_calibration(doc);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.field, "sim.gravity");
    }
}

TEST(Calibration, InvariantViolationsAreNamed) {
    json doc = config::default_calibration_document();
    doc["transmission"]["efficiency"] = 1.5;
    EXPECT_THROW(config::parse_calibration(doc), ConfigError);
    doc = config::default_calibration_document();
    doc["membrane"]["n_nodes"] = 47;
    EXPECT_THROW(config::parse_calibration(doc), ConfigError);
}

TEST(Calibration, HashIsStableAndSensitive) {
    const json a = config::default_calibration_document();
    json b = a;
    EXPECT_EQ(config::config_hash(a), config::config_hash(b));
    b["robot"]["weight_N"] = 0.41;
    EXPECT_NE(config::config_hash(a), config::config_hash(b));
    EXPECT_EQ(config::config_hash(a).rfind("fnv1a64:", 0), 0u);
}

TEST(Scenario, QuickstartResolvesMatchedPressure) {
    const auto ls = scenario::parse_scenario(quickstart());
    const auto& c = ls.scenario.schedule[0].command;
    EXPECT_NEAR(ls.scenario.robot.free_radius_mm(c.p1_kPa), 42.0 + ls.calibration.matched_interference_mm, 1e-6);
    EXPECT_EQ(c.p2_kPa, 12.0);
    EXPECT_EQ(ls.lumen_name, "pipe84");
    EXPECT_TRUE(ls.resolved.at("calibration").is_object());
}

TEST(Scenario, MalformedUnitKeyNamesTheField) {
    json doc = quickstart();
    doc["commands"][0].erase("p2_kPa");
    doc["commands"][0]["p2_kpa"] = 10.0;
    EXPECT_EQ(field_of(doc), "commands[0].p2_kPa");

    doc = quickstart();
    doc["commands"][0]["p2_psi"] = 1.0;
    EXPECT_EQ(field_of(doc), "commands[0].p2_psi");

    doc = quickstart();
    doc["duration_min"] = 1.0;
    EXPECT_EQ(field_of(doc), "duration_min");
}

TEST(Scenario, OverridesMustExistWithTheSameType) {
    json doc = quickstart();
    doc["robot"] = {{"tracks", {{"mu_track_lumen", 0.6}}}};
    EXPECT_NO_THROW(scenario::parse_scenario(doc));
    doc["robot"] = {{"tracks", {{"mu_track_lumens", 0.6}}}};
    EXPECT_EQ(field_of(doc), "robot.tracks.mu_track_lumens");
    doc["robot"] = {{"geometry", {{"weight_N", "heavy"}}}};
    EXPECT_EQ(field_of(doc), "robot.geometry.weight_N");
    doc = quickstart();
    doc["sim"] = {{"dt_ms", 10}};
    EXPECT_EQ(field_of(doc), "sim.dt_ms");
}

TEST(Scenario, OverridesChangeTheModel) {
    json doc = quickstart();
    doc["robot"] = {{"geometry", {{"weight_N", 0.9}}}};
    doc["sim"] = {{"dt_s", 0.1}};
    const auto ls = scenario::parse_scenario(doc);
    EXPECT_EQ(ls.scenario.robot.geometry.weight_N, 0.9);
    EXPECT_EQ(ls.scenario.config.dt_s, 0.1);
    EXPECT_NE(ls.config_hash, scenario::parse_scenario(quickstart()).config_hash);
}

TEST(Scenario, PressuresOutsideLimitsAreRejected) {
    json doc = quickstart();
    doc["commands"][0]["p2_kPa"] = 25.0;
    EXPECT_EQ(field_of(doc), "commands[0].p2_kPa");
    doc["commands"][0]["p2_kPa"] = -1.0;
    EXPECT_EQ(field_of(doc), "commands[0].p2_kPa");
    doc = quickstart();
    doc["commands"][0]["motor_radps"] = 5000.0;
    EXPECT_EQ(field_of(doc), "commands[0].motor_radps");
}

TEST(Scenario, UnknownFixtureIsNamed) {
    json doc = quickstart();
    doc["lumen"]["fixture"] = "pipe99";
    EXPECT_EQ(field_of(doc), "lumen.fixture");
}

TEST(Scenario, StartAtExit) {
    json doc = quickstart();
    doc["start_s_mm"] = "exit";
    const auto ls = scenario::parse_scenario(doc);
    EXPECT_EQ(ls.scenario.start_s_mm, ls.scenario.lumen->total_length());
    doc["start_s_mm"] = "middle";
    EXPECT_EQ(field_of(doc), "start_s_mm");
}

TEST(Scenario, InlineLumen) {
    json doc = quickstart();
    doc["lumen"] = json::parse(R"({
      "segments": [
        {"kind": "straight", "length_mm": 100.0, "diameter_mm": 80.0},
        {"kind": "elbow", "bend_radius_mm": 80.0, "sweep_deg": 45.0, "diameter_mm": 80.0}
      ],
      "wall": {"kind": "elastic", "hoop_stiffness_N_per_mm": 0.02, "collapsed": true,
               "collapse_preload_N": 0.1, "conformity": 0.5},
      "mu_wall": 0.8
    })");
    const auto ls = scenario::parse_scenario(doc);
    EXPECT_EQ(ls.lumen_name, "inline");
    EXPECT_TRUE(ls.scenario.lumen->is_collapsed());
    EXPECT_EQ(ls.scenario.lumen->elbows_entered(ls.scenario.lumen->total_length()), 1);

    doc["lumen"]["segments"][1]["kind"] = "bend";
    EXPECT_EQ(field_of(doc), "lumen.segments[1].kind");
    doc["lumen"]["segments"][1]["kind"] = "elbow";
    doc["lumen"]["wall"]["kind"] = "soft";
    EXPECT_EQ(field_of(doc), "lumen.wall.kind");
}

TEST(Scenario, CheckedInScenariosLoad) {
    for (const char* f : {"pipe84_quickstart.json", "phantom_collapsed_backward.json", "inline_bend.json"}) {
        EXPECT_NO_THROW(scenario::load_scenario((testing_support::source_dir() / "scenarios" / f).string())) << f;
    }
}

TEST(Scenario, TraceCsvHasHeaderAndOneLinePerRow) {
    auto ls = scenario::parse_scenario(quickstart());
    ls.scenario.duration_s = 1.0;
    const auto t = navigation::run_scenario(ls.scenario);
    std::ostringstream os;
    scenario::write_trace_csv(os, t);
    const auto text = os.str();
    EXPECT_EQ(text.rfind("time_s,s_mm,v_mmps,tilt_deg,p1_kPa,p2_kPa,traction_N,contacts\n", 0), 0u);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), static_cast<long>(t.rows.size()) + 1);
}

TEST(Scenario, ManifestCarriesHashAndVersions) {
    const auto m = scenario::manifest_json("run", "fnv1a64:0", json::object());
    EXPECT_EQ(m.at("config_hash"), "fnv1a64:0");
    EXPECT_TRUE(m.at("libraries").contains("eigen"));
    EXPECT_TRUE(m.contains("determinism"));
}
