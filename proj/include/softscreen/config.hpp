// Calibration documents: strict parsing of the unit-suffixed JSON blocks
// into model parameters, and construction of robots and fixtures from them.
#pragma once

#include "softscreen/contact.hpp"
#include "softscreen/lumen.hpp"
#include "softscreen/membrane.hpp"
#include "softscreen/navigation.hpp"
#include "softscreen/transmission.hpp"
#include "softscreen/default_calibration_data.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <sstream>
#include <string>

namespace softscreen::config {

using json = nlohmann::json;

/// A configuration document violates its schema. The message names the
/// offending field by its dotted path.
class ConfigError : public InvalidArgument {
public:
    ConfigError(const std::string& path, const std::string& what)
        : InvalidArgument(path.empty() ? what : "field '" + path + "': " + what), field(path) {}
    std::string field;
};

/// Reads one JSON object, remembering which keys were consumed so that
/// leftovers (typos, wrong unit suffixes) are reported.
class Fields {
public:
    Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_, "expected an object");
    }

    std::string path_of(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    bool has(const std::string& key) const { return j_.contains(key); }
    const std::string& path() const { return path_; }

    const json& raw(const std::string& key) {
        if (!j_.contains(key)) throw ConfigError(path_of(key), "missing");
        used_.insert(key);
        return j_.at(key);
    }

    double number(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_number()) throw ConfigError(path_of(key), "expected a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) throw ConfigError(path_of(key), "must be finite");
        return d;
    }

    double number_or(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

    long integer(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_number_integer()) throw ConfigError(path_of(key), "expected an integer");
        return v.get<long>();
    }

    bool boolean(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_boolean()) throw ConfigError(path_of(key), "expected true or false");
        return v.get<bool>();
    }

    std::string string(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_string()) throw ConfigError(path_of(key), "expected a string");
        return v.get<std::string>();
    }

    Fields object(const std::string& key) { return Fields(raw(key), path_of(key)); }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!used_.count(it.key())) throw ConfigError(path_of(it.key()), "unknown field");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

/// Runs `fn` and re-labels parameter validation failures with the block path.
template <class F>
void checked(const std::string& path, F&& fn) {
    try {
        fn();
    } catch (const ConfigError&) {
        throw;
    } catch (const InvalidArgument& e) {
        throw ConfigError(path, e.what());
    }
}

struct MembraneBlock {
    membrane::ChamberProfile profile;
    membrane::OgdenMaterial material;
    membrane::ChamberOptions options;
    double table_step_kPa = 0.5;
    double table_max_kPa = 30.0;
};

struct Calibration {
    transmission::GearheadParams gear;
    transmission::WormGearParams worm;
    MembraneBlock membrane;
    contact::TrackSet tracks;
    contact::RobotGeometry geometry;
    lumen::PipeParams pipe;
    double matched_interference_mm = 1.5;
    lumen::PhantomParams phantom;
    double hold_position_mm = 120.0;
    navigation::SimConfig sim;
    double max_pressure_kPa = 20.0;
    json document;  // the parsed source, kept for hashing and manifests
};

inline Calibration parse_calibration(const json& doc) {
    Calibration c;
    c.document = doc;
    Fields root(doc, "");
    {
        Fields t = root.object("transmission");
        c.worm.pitch_mm = t.number("pitch_mm");
        c.worm.pitch_diameter_mm = t.number("pitch_diameter_mm");
        c.worm.lead_angle_rad = transmission::deg_to_rad(t.number("lead_angle_deg"));
        c.worm.pressure_angle_rad = transmission::deg_to_rad(t.number("pressure_angle_deg"));
        c.gear.motor_torque_Nmm = t.number("motor_torque_Nmm");
        c.gear.gear_ratio = t.number("gear_ratio");
        c.gear.efficiency = t.number("efficiency");
        c.gear.max_motor_speed_radps = transmission::rpm_to_radps(t.number("max_motor_speed_rpm"));
        t.finish();
        checked("transmission", [&] {
            c.worm.validate();
            c.gear.validate();
        });
    }
    {
        Fields m = root.object("membrane");
        auto& b = c.membrane;
        const std::string style = m.string("flange_style");
        checked(m.path_of("flange_style"), [&] { b.profile.flange_style = membrane::flange_style_from_string(style); });
        b.profile.footprint_width_mm = m.number("footprint_width_mm");
        b.profile.rest_outer_radius_mm = m.number("rest_outer_radius_mm");
        b.profile.chassis_radius_mm = m.number("chassis_radius_mm");
        b.profile.n_nodes = static_cast<int>(m.integer("n_nodes"));
        b.material.mu_kPa = m.number("mu_kPa");
        b.material.alpha = m.number("alpha");
        b.material.thickness_mm = m.number("thickness_mm");
        b.options.energy.contact_modulus_N_per_mm3 = m.number("contact_modulus_N_per_mm3");
        b.options.energy.bending_scale = m.number("bending_scale");
        b.options.solver.stretch_cap = m.number("stretch_cap");
        b.table_step_kPa = m.number("table_step_kPa");
        b.table_max_kPa = m.number("table_max_kPa");
        m.finish();
        checked("membrane", [&] {
            b.profile.validate();
            b.material.validate();
            require_positive(b.options.energy.contact_modulus_N_per_mm3, "contact_modulus_N_per_mm3");
            require_nonneg(b.options.energy.bending_scale, "bending_scale");
            require(b.options.solver.stretch_cap > 1.0, "stretch_cap must exceed 1");
            require_positive(b.table_step_kPa, "table_step_kPa");
            require(b.table_max_kPa > b.table_step_kPa, "table_max_kPa must exceed table_step_kPa");
        });
    }
    {
        Fields t = root.object("tracks");
        auto& ts = c.tracks;
        ts.n_tracks = static_cast<int>(t.integer("n_tracks"));
        ts.mu_track_lumen = t.number("mu_track_lumen");
        ts.mu_track_chamber = t.number("mu_track_chamber");
        ts.track_band_stiffness_N_per_mm = t.number("track_band_stiffness_N_per_mm");
        ts.guide_compliance = t.number("guide_compliance");
        ts.max_guide_opening_deg = t.number("max_guide_opening_deg");
        ts.guide_link_length_mm = t.number("guide_link_length_mm");
        ts.track_thickness_mm = t.number("track_thickness_mm");
        ts.drag_coefficient_N_per_kPa = t.number("drag_coefficient_N_per_kPa");
        t.finish();
        checked("tracks", [&] { ts.validate(); });
    }
    {
        Fields r = root.object("robot");
        c.geometry.chamber_rest_radius_mm = c.membrane.profile.rest_outer_radius_mm;
        c.geometry.chamber_spacing_mm = r.number("chamber_spacing_mm");
        c.geometry.body_length_mm = r.number("body_length_mm");
        c.geometry.weight_N = r.number("weight_N");
        r.finish();
        checked("robot", [&] { c.geometry.validate(); });
    }
    {
        Fields p = root.object("pipe");
        c.pipe.length_mm = p.number("length_mm");
        c.pipe.mu_wall = p.number("mu_wall");
        c.matched_interference_mm = p.number("matched_interference_mm");
        p.finish();
        checked("pipe", [&] {
            require_positive(c.pipe.length_mm, "length_mm");
            require_positive(c.pipe.mu_wall, "mu_wall");
            require_nonneg(c.matched_interference_mm, "matched_interference_mm");
        });
    }
    {
        Fields p = root.object("phantom");
        auto& ph = c.phantom;
        ph.diameter_mm = p.number("diameter_mm");
        ph.elbow_radius_mm = p.number("elbow_radius_mm");
        ph.total_length_mm = p.number("total_length_mm");
        ph.waviness.amplitude_mm = p.number("waviness_amplitude_mm");
        ph.waviness.period_mm = p.number("waviness_period_mm");
        ph.mu_wall = p.number("mu_wall");
        ph.hoop_stiffness_N_per_mm = p.number("hoop_stiffness_N_per_mm");
        ph.collapse_preload_N = p.number("collapse_preload_N");
        ph.conformity_supported = p.number("conformity_supported");
        ph.conformity_collapsed = p.number("conformity_collapsed");
        ph.lubrication_factor = p.number("lubrication_factor");
        c.hold_position_mm = p.number("hold_position_mm");
        p.finish();
        checked("phantom", [&] {
            require(ph.total_length_mm > ph.elbow_radius_mm * std::numbers::pi / 2.0,
                    "total_length_mm must exceed the elbow arc");
            (void)lumen::make_phantom(true, ph);
            require(c.hold_position_mm >= 0.0 && c.hold_position_mm <= ph.total_length_mm,
                    "hold_position_mm must lie within the phantom");
        });
    }
    {
        Fields s = root.object("sim");
        auto& sc = c.sim;
        sc.dt_s = s.number("dt_s");
        sc.gravity = s.boolean("gravity");
        sc.slip_exponent = s.number("slip_exponent");
        sc.max_steps = s.integer("max_steps");
        sc.stall_timeout_s = s.number("stall_timeout_s");
        sc.collapse_drag_cap_N = s.number("collapse_drag_cap_N");
        sc.tether.base_N = s.number("tether_base_N");
        sc.tether.drag_per_flexure_N = s.number("tether_drag_per_flexure_N");
        sc.tether.cap_N = s.number("tether_cap_N");
        sc.tether.reverse_factor = s.number("tether_reverse_factor");
        s.finish();
        checked("sim", [&] { sc.validate(); });
    }
    {
        Fields l = root.object("limits");
        c.max_pressure_kPa = l.number("max_pressure_kPa");
        l.finish();
        checked("limits", [&] { require_positive(c.max_pressure_kPa, "max_pressure_kPa"); });
    }
    root.finish();
    return c;
}

inline json parse_json_text(const std::string& text, const std::string& origin) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("", origin + ": " + e.what());
    }
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_json_text(ss.str(), path);
}

inline const json& default_calibration_document() {
    static const json doc = parse_json_text(kDefaultCalibrationJson, "default calibration");
    return doc;
}

inline Calibration default_calibration() { return parse_calibration(default_calibration_document()); }

/// FNV-1a (64 bit) over the canonical serialization of a document.
inline std::string config_hash(const json& doc) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : doc.dump()) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    std::ostringstream os;
    os << "fnv1a64:" << std::hex;
    os.width(16);
    os.fill('0');
    os << h;
    return os.str();
}

inline membrane::Chamber make_chamber(const MembraneBlock& b) {
    return membrane::Chamber(b.profile, b.material, b.options);
}

/// Chamber tables are shared between robots built from the same membrane
/// block; sampling one costs a few hundred equilibrium solves.
inline std::shared_ptr<const contact::ChamberTable> chamber_table(const Calibration& c) {
    static std::mutex mu;
    static std::map<std::string, std::shared_ptr<const contact::ChamberTable>> cache;
    const std::string key = c.document.at("membrane").dump();
    {
        std::lock_guard<std::mutex> lock(mu);
        if (auto it = cache.find(key); it != cache.end()) return it->second;
    }
    auto table = std::make_shared<const contact::ChamberTable>(contact::ChamberTable::sample(
        make_chamber(c.membrane), c.membrane.table_step_kPa, c.membrane.table_max_kPa));
    std::lock_guard<std::mutex> lock(mu);
    return cache.emplace(key, std::move(table)).first->second;
}

inline navigation::Robot make_robot(const Calibration& c) {
    navigation::Robot r;
    r.gear = c.gear;
    r.worm = c.worm;
    r.tracks = c.tracks;
    r.geometry = c.geometry;
    r.chamber = chamber_table(c);
    return r;
}

inline std::map<std::string, lumen::LumenModel> fixtures(const Calibration& c) {
    return lumen::paper_fixtures(c.phantom, c.pipe);
}

inline std::shared_ptr<const lumen::LumenModel> fixture(const Calibration& c, const std::string& name) {
    auto all = fixtures(c);
    auto it = all.find(name);
    if (it == all.end()) throw ConfigError("lumen.fixture", "unknown fixture '" + name + "'");
    return std::make_shared<const lumen::LumenModel>(it->second);
}

}  // namespace softscreen::config
