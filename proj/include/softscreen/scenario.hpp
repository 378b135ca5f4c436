// Scenario documents (robot/sim overrides on a named calibration, a lumen,
// and a command schedule) plus the trace, summary and manifest writers.
#pragma once

#include "softscreen/config.hpp"
#include "softscreen/navigation.hpp"
#include "softscreen/version.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <Eigen/Core>
#include <boost/version.hpp>

#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

namespace softscreen::scenario {

using config::ConfigError;
using config::Fields;
using config::json;

struct LoadedScenario {
    navigation::Scenario scenario;
    config::Calibration calibration;
    std::string lumen_name;  // fixture name, or "inline"
    json resolved;           // scenario with its calibration expanded
    std::string config_hash;
};

namespace detail {

/// Every key of an override must already exist in the calibration block it
/// patches, with a value of the same kind.
inline void check_override(const json& patch, const json& base, const std::string& path) {
    if (!patch.is_object()) throw ConfigError(path, "expected an object");
    for (auto it = patch.begin(); it != patch.end(); ++it) {
        const std::string p = path + "." + it.key();
        if (!base.contains(it.key())) throw ConfigError(p, "unknown field");
        const json& b = base.at(it.key());
        if (b.is_object()) {
            check_override(it.value(), b, p);
        } else if (b.is_number() != it.value().is_number() || b.is_boolean() != it.value().is_boolean() ||
                   b.is_string() != it.value().is_string()) {
            throw ConfigError(p, "value has the wrong type");
        }
    }
}

inline lumen::LumenModel parse_inline_lumen(Fields& f) {
    std::vector<lumen::LumenSegment> segs;
    const json& arr = f.raw("segments");
    if (!arr.is_array() || arr.empty()) throw ConfigError(f.path_of("segments"), "expected a non-empty array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
        Fields s(arr[i], f.path_of("segments") + "[" + std::to_string(i) + "]");
        lumen::LumenSegment seg;
        const std::string kind = s.string("kind");
        if (kind == "straight") {
            seg.kind = lumen::Straight{s.number("length_mm")};
        } else if (kind == "elbow") {
            seg.kind = lumen::Elbow{s.number("bend_radius_mm"), s.number("sweep_deg")};
        } else {
            throw ConfigError(s.path_of("kind"), "expected 'straight' or 'elbow'");
        }
        seg.diameter_mm = s.number("diameter_mm");
        seg.waviness.amplitude_mm = s.number_or("waviness_amplitude_mm", 0.0);
        seg.waviness.period_mm = s.number_or("waviness_period_mm", 1.0);
        s.finish();
        segs.push_back(seg);
    }
    Fields w = f.object("wall");
    lumen::Wall wall = lumen::RigidWall{};
    const std::string kind = w.string("kind");
    if (kind == "elastic") {
        lumen::ElasticWall e;
        e.hoop_stiffness_N_per_mm = w.number("hoop_stiffness_N_per_mm");
        e.collapsed = w.boolean("collapsed");
        e.collapse_preload_N = w.number("collapse_preload_N");
        e.conformity = w.number("conformity");
        wall = e;
    } else if (kind != "rigid") {
        throw ConfigError(w.path_of("kind"), "expected 'rigid' or 'elastic'");
    }
    w.finish();
    std::vector<double> supports;
    if (f.has("supports_mm")) {
        const json& sj = f.raw("supports_mm");
        if (!sj.is_array()) throw ConfigError(f.path_of("supports_mm"), "expected an array");
        for (const auto& v : sj) {
            if (!v.is_number()) throw ConfigError(f.path_of("supports_mm"), "expected numbers");
            supports.push_back(v.get<double>());
        }
    }
    const double mu = f.number("mu_wall");
    const bool lube = f.has("lubricated") ? f.boolean("lubricated") : false;
    const double factor = f.number_or("lubrication_factor", 0.6);
    try {
        return lumen::LumenModel(std::move(segs), wall, mu, std::move(supports), lube, factor);
    } catch (const InvalidArgument& e) {
        throw ConfigError(f.path(), e.what());
    }
}

}  // namespace detail

/// Resolves a calibration reference: "default" or a JSON file path
/// relative to `base_dir`.
inline json calibration_document(const std::string& ref, const std::filesystem::path& base_dir) {
    if (ref == "default") return config::default_calibration_document();
    std::filesystem::path p(ref);
    if (p.is_relative()) p = base_dir / p;
    return config::read_json_file(p.string());
}

inline LoadedScenario parse_scenario(const json& doc, const std::filesystem::path& base_dir = ".") {
    LoadedScenario out;
    Fields root(doc, "");
    auto& sc = out.scenario;
    sc.name = root.string("name");

    json cal = calibration_document(root.has("calibration") ? root.string("calibration") : "default", base_dir);
    if (root.has("robot")) {
        Fields robot = root.object("robot");
        static const std::pair<const char*, const char*> blocks[] = {
            {"transmission", "transmission"}, {"membrane", "membrane"}, {"tracks", "tracks"}, {"geometry", "robot"}};
        for (const auto& [key, target] : blocks) {
            if (!robot.has(key)) continue;
            const json& patch = robot.raw(key);
            detail::check_override(patch, cal.at(target), robot.path_of(key));
            cal[target].merge_patch(patch);
        }
        robot.finish();
    }
    if (root.has("sim")) {
        const json& patch = root.raw("sim");
        detail::check_override(patch, cal.at("sim"), "sim");
        cal["sim"].merge_patch(patch);
    }
    out.calibration = config::parse_calibration(cal);
    const auto& c = out.calibration;
    sc.robot = config::make_robot(c);
    sc.config = c.sim;

    {
        Fields l = root.object("lumen");
        if (l.has("fixture")) {
            out.lumen_name = l.string("fixture");
            sc.lumen = config::fixture(c, out.lumen_name);
        } else {
            out.lumen_name = "inline";
            sc.lumen = std::make_shared<const lumen::LumenModel>(detail::parse_inline_lumen(l));
        }
        l.finish();
    }

    if (root.has("start_s_mm")) {
        const json& v = root.raw("start_s_mm");
        if (v.is_string() && v.get<std::string>() == "exit")
            sc.start_s_mm = sc.lumen->total_length();
        else if (v.is_number())
            sc.start_s_mm = v.get<double>();
        else
            throw ConfigError("start_s_mm", "expected a number or \"exit\"");
    }
    sc.duration_s = root.number_or("duration_s", 0.0);

    const json& cmds = root.raw("commands");
    if (!cmds.is_array() || cmds.empty()) throw ConfigError("commands", "expected a non-empty array");
    for (std::size_t i = 0; i < cmds.size(); ++i) {
        const std::string path = "commands[" + std::to_string(i) + "]";
        Fields f(cmds[i], path);
        navigation::TimedCommand tc;
        tc.t_s = f.number("t_s");
        tc.command.motor_speed_radps = f.number("motor_radps");
        if (std::abs(tc.command.motor_speed_radps) > c.gear.max_motor_speed_radps * (1.0 + 1e-12))
            throw ConfigError(f.path_of("motor_radps"),
                              fmt::format("exceeds max motor speed {:.4f} rad/s", c.gear.max_motor_speed_radps));
        const auto pressure = [&](const std::string& key) {
            const json& v = f.raw(key);
            if (v.is_string() && v.get<std::string>() == "matched")
                return sc.robot.matched_pressure_kPa(sc.lumen->local_radius(sc.start_s_mm), c.matched_interference_mm);
            if (!v.is_number()) throw ConfigError(f.path_of(key), "expected a number or \"matched\"");
            const double p = v.get<double>();
            if (p < 0.0 || p > c.max_pressure_kPa)
                throw ConfigError(f.path_of(key), fmt::format("must lie in [0, {}] kPa", c.max_pressure_kPa));
            return p;
        };
        tc.command.p1_kPa = pressure("p1_kPa");
        tc.command.p2_kPa = pressure("p2_kPa");
        f.finish();
        sc.schedule.push_back(tc);
    }
    root.finish();
    try {
        sc.validate();
    } catch (const ConfigError&) {
        throw;
    } catch (const InvalidArgument& e) {
        throw ConfigError("", e.what());
    }

    out.resolved = doc;
    out.resolved["calibration"] = cal;
    out.config_hash = config::config_hash(out.resolved);
    return out;
}

inline LoadedScenario load_scenario(const std::string& path) {
    const json doc = config::read_json_file(path);
    return parse_scenario(doc, std::filesystem::path(path).parent_path());
}

inline void write_trace_csv(std::ostream& os, const navigation::SimTrace& trace) {
    os << "time_s,s_mm,v_mmps,tilt_deg,p1_kPa,p2_kPa,traction_N,contacts\n";
    for (const auto& r : trace.rows)
        fmt::print(os, "{:.3f},{:.6f},{:.6f},{:.6f},{:.4f},{:.4f},{:.6f},{}\n", r.time_s, r.state.s_mm, r.state.v_mmps,
                   r.state.tilt_deg, r.state.p1_kPa, r.state.p2_kPa, r.traction.available_traction_N,
                   r.contact.tracks_in_contact);
}

inline json summary_json(const LoadedScenario& ls, const navigation::SimTrace& trace) {
    const auto& sm = trace.summary;
    const auto& sc = ls.scenario;
    const double vt = std::abs(
        transmission::track_speed(sc.robot.gear, sc.robot.worm, sc.schedule.front().command.motor_speed_radps));
    return json{{"scenario", sc.name},
                {"lumen", ls.lumen_name},
                {"config_hash", ls.config_hash},
                {"theoretical_speed_mmps", vt},
                {"mean_speed_mmps", sm.mean_speed_mmps},
                {"distance_mm", sm.distance_mm},
                {"duration_s", sm.duration_s},
                {"steps", sm.steps},
                {"completed", sm.completed},
                {"stall_events", sm.stall_events},
                {"end_reason", sm.end_reason}};
}

inline json manifest_json(const std::string& command, const std::string& hash, const json& inputs) {
    return json{{"tool", "softscreen"},
                {"version", kVersion},
                {"command", command},
                {"config_hash", hash},
                {"inputs", inputs},
                {"libraries",
                 {{"eigen", fmt::format("{}.{}.{}", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION, EIGEN_MINOR_VERSION)},
                  {"boost", BOOST_LIB_VERSION},
                  {"nlohmann_json", fmt::format("{}.{}.{}", NLOHMANN_JSON_VERSION_MAJOR, NLOHMANN_JSON_VERSION_MINOR,
                                                NLOHMANN_JSON_VERSION_PATCH)},
                  {"fmt", FMT_VERSION}}},
                {"determinism",
                 "no random seeds are used; outputs depend only on the resolved inputs hashed above"}};
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out) throw Error("write failed for " + path.string());
}

inline void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

inline void write_pressure_curve_csv(std::ostream& os, const std::vector<membrane::CurveRow>& rows) {
    os << "pressure_kPa,radial_displacement_mm\n";
    for (const auto& r : rows) fmt::print(os, "{:.4f},{:.6f}\n", r.pressure_kPa, r.radial_displacement_mm);
}

}  // namespace softscreen::scenario
