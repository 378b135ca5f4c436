// The reference experiment suite: inflation curve and stiffness trend,
// rigid-pipe and phantom runs, static traction, over-inflation stall and
// tilt, each compared against its reference value with a verdict.
#pragma once

#include "softscreen/config.hpp"
#include "softscreen/navigation.hpp"
#include "softscreen/scenario.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace softscreen::suite {

using config::json;

/// Inflation levels at which the two flange styles are compared.
inline constexpr std::array<double, 4> kStiffnessLevels_kPa{12.0, 14.0, 16.0, 18.0};
inline constexpr double kShearProbe_N = 0.5;
inline constexpr std::array<double, 5> kTractionPressures_kPa{0.0, 5.0, 10.0, 13.0, 16.0};
inline constexpr std::array<double, 3> kPhantomPressures_kPa{0.0, 10.0, 16.0};
inline constexpr std::array<double, 3> kPipeDiameters_mm{74.0, 84.0, 94.0};
inline constexpr double kTheoreticalSpeed_mmps = 4.6875;

struct Row {
    std::string id;
    std::string quantity;
    double simulated = std::numeric_limits<double>::quiet_NaN();
    double reference = std::numeric_limits<double>::quiet_NaN();
    std::string tolerance;
    bool pass = false;
    std::string note;
};

struct RunRecord {
    std::string id;
    std::string lumen;
    int direction = 1;
    double pressure_kPa = 0.0;
    navigation::Summary summary;
};

struct Report {
    std::vector<Row> rows;
    std::vector<membrane::CurveRow> inflation_curve;
    std::vector<navigation::TractionRow> traction;
    std::vector<RunRecord> runs;
    std::string config_hash;

    const Row* find(const std::string& id) const {
        for (const auto& r : rows)
            if (r.id == id) return &r;
        return nullptr;
    }
    int failed() const {
        return static_cast<int>(std::count_if(rows.begin(), rows.end(), [](const Row& r) { return !r.pass; }));
    }
};

namespace detail {

inline Row within(std::string id, std::string quantity, double sim, double ref, double rel) {
    const bool ok = std::isfinite(sim) && std::abs(sim - ref) <= rel * std::abs(ref);
    return {std::move(id), std::move(quantity), sim, ref, fmt::format("±{:g}%", rel * 100.0), ok, ""};
}

inline Row check(std::string id, std::string quantity, double sim, double ref, std::string tol, bool ok,
                 std::string note = "") {
    return {std::move(id), std::move(quantity), sim, ref, std::move(tol), ok, std::move(note)};
}

/// Runs `body`; if it throws, a failed row carrying the message replaces
/// whatever the section would have produced.
inline void section(Report& rep, const std::string& id, const std::function<void()>& body) {
    try {
        body();
    } catch (const std::exception& e) {
        rep.rows.push_back({id, "section error", std::numeric_limits<double>::quiet_NaN(),
                            std::numeric_limits<double>::quiet_NaN(), "", false, e.what()});
    }
}

}  // namespace detail

inline navigation::Summary drive(const config::Calibration& cal, const navigation::Robot& robot,
                                 const std::string& lumen_name, int direction, double p_kPa) {
    navigation::Scenario sc;
    sc.name = lumen_name;
    sc.lumen = config::fixture(cal, lumen_name);
    sc.robot = robot;
    sc.config = cal.sim;
    sc.schedule = {{0.0, {direction * cal.gear.max_motor_speed_radps, p_kPa, p_kPa}}};
    sc.start_s_mm = direction > 0 ? 0.0 : sc.lumen->total_length();
    return navigation::run_scenario(sc).summary;
}

/// Largest |tilt| over a pressure grid in a rigid pipe, and the worst
/// antisymmetry defect tilt(a, b) + tilt(b, a).
struct TiltSweep {
    double max_abs_deg = 0.0;
    double antisymmetry_defect_deg = 0.0;
};

inline TiltSweep tilt_sweep(const navigation::Robot& robot, double lumen_radius_mm, double max_kPa, double step_kPa,
                            bool gravity) {
    TiltSweep out;
    const contact::WallContact wall{lumen_radius_mm};
    const int n = static_cast<int>(std::floor(max_kPa / step_kPa + 1e-9));
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j) {
            const double a = i * step_kPa, b = j * step_kPa;
            const double t1 = contact::tilt_angle({a, b}, wall, robot.tracks, robot.geometry, *robot.chamber, gravity).tilt_deg;
            const double t2 = contact::tilt_angle({b, a}, wall, robot.tracks, robot.geometry, *robot.chamber, gravity).tilt_deg;
            out.max_abs_deg = std::max(out.max_abs_deg, std::abs(t1));
            out.antisymmetry_defect_deg = std::max(out.antisymmetry_defect_deg, std::abs(t1 + t2));
        }
    return out;
}

inline Report run(const config::Calibration& cal) {
    Report rep;
    rep.config_hash = config::config_hash(cal.document);
    const auto robot = config::make_robot(cal);

    detail::section(rep, "theoretical_speed", [&] {
        const double v = transmission::track_speed(cal.gear, cal.worm, cal.gear.max_motor_speed_radps);
        rep.rows.push_back(detail::check("theoretical_speed", "no-slip speed at max motor speed (mm/s)", v,
                                         kTheoreticalSpeed_mmps, "±1e-9",
                                         std::abs(v - kTheoreticalSpeed_mmps) <= 1e-9));
    });

    detail::section(rep, "membrane", [&] {
        const auto lf = config::make_chamber(cal.membrane);
        auto cf_block = cal.membrane;
        cf_block.profile.flange_style = membrane::FlangeStyle::Central;
        const auto cf = config::make_chamber(cf_block);

        std::vector<double> ps;
        for (double p = 0.0; p <= cal.max_pressure_kPa + 1e-9; p += 1.0) ps.push_back(p);
        rep.inflation_curve = lf.pressure_curve(ps);
        double peak = 0.0;
        bool monotone = true;
        for (std::size_t i = 0; i < rep.inflation_curve.size(); ++i) {
            peak = std::max(peak, rep.inflation_curve[i].radial_displacement_mm);
            if (i && rep.inflation_curve[i].radial_displacement_mm < rep.inflation_curve[i - 1].radial_displacement_mm)
                monotone = false;
        }
        rep.rows.push_back(detail::check("membrane.lf_peak_displacement",
                                         fmt::format("LF max radial displacement within 0-{:g} kPa (mm)", cal.max_pressure_kPa),
                                         peak, 16.0, ">= 16 mm", peak >= 16.0));
        rep.rows.push_back(detail::check("membrane.curve_monotone", "displacement non-decreasing along the sweep",
                                         monotone ? 1.0 : 0.0, 1.0, "exact", monotone));

        std::vector<double> ka_lf;
        for (double p : kStiffnessLevels_kPa) {
            const double a = lf.axial_stiffness(p, kShearProbe_N).axial_stiffness_N_per_mm;
            const double b = cf.axial_stiffness(p, kShearProbe_N).axial_stiffness_N_per_mm;
            ka_lf.push_back(a);
            rep.rows.push_back(detail::check(fmt::format("membrane.ka_lf@{:g}kPa", p), "LF axial stiffness (N/mm)", a,
                                             std::numeric_limits<double>::quiet_NaN(), "reported", a > 0.0));
            rep.rows.push_back(detail::check(fmt::format("membrane.ka_ratio@{:g}kPa", p),
                                             "k_a(LF)/k_a(CF), reference ratio from shell analysis", a / b, 4.0,
                                             "ordering > 1", a > b));
        }
        bool decreasing = true;
        for (std::size_t i = 1; i < ka_lf.size(); ++i) decreasing = decreasing && ka_lf[i] < ka_lf[i - 1];
        rep.rows.push_back(detail::check("membrane.ka_decreasing", "LF k_a strictly decreasing over the levels",
                                         decreasing ? 1.0 : 0.0, 1.0, "exact", decreasing));

        // Peak stresses are compared where each profile first reaches 16 mm.
        const auto stress_at_16 = [&](const membrane::Chamber& ch) {
            std::optional<membrane::ChamberShape> prev;
            for (double p = 0.5; p <= cal.membrane.table_max_kPa; p += 0.5) {
                auto s = ch.inflate(p, prev ? &*prev : nullptr);
                if (s.max_radial_displacement_mm >= 16.0) return s.max_principal_stress_kPa;
                prev = std::move(s);
            }
            throw Error("profile never reaches 16 mm radial displacement");
        };
        const double s_lf = stress_at_16(lf), s_cf = stress_at_16(cf);
        rep.rows.push_back(detail::check("membrane.stress_ordering", "peak stress CF/LF at 16 mm displacement",
                                         s_cf / s_lf, 0.49 / 0.61, "ordering < 1", s_cf < s_lf));
    });

    detail::section(rep, "pipes", [&] {
        for (double d : kPipeDiameters_mm) {
            const std::string name = fmt::format("pipe{:g}", d);
            const double p = robot.matched_pressure_kPa(0.5 * d, cal.matched_interference_mm);
            const auto f = drive(cal, robot, name, +1, p);
            const auto b = drive(cal, robot, name, -1, p);
            rep.runs.push_back({name + ".forward", name, +1, p, f});
            rep.runs.push_back({name + ".backward", name, -1, p, b});
            rep.rows.push_back(detail::within(name + ".forward", fmt::format("mean speed at {:.2f} kPa (mm/s)", p),
                                              f.mean_speed_mmps, kTheoreticalSpeed_mmps, 0.15));
            rep.rows.push_back(detail::within(name + ".backward", fmt::format("mean speed at {:.2f} kPa (mm/s)", p),
                                              b.mean_speed_mmps, kTheoreticalSpeed_mmps, 0.15));
            const double mean = 0.5 * (f.mean_speed_mmps + b.mean_speed_mmps);
            const double asym = mean > 0.0 ? std::abs(f.mean_speed_mmps - b.mean_speed_mmps) / mean : INFINITY;
            rep.rows.push_back(detail::check(name + ".asymmetry", "forward/backward speed asymmetry", asym, 0.0,
                                             "< 10%", asym < 0.10));
        }
    });

    detail::section(rep, "phantoms", [&] {
        struct Target {
            const char* lumen;
            int dir;
            const char* label;
            double ref;
            bool each;  // every case within tolerance, otherwise only the peak
        };
        const Target targets[] = {{"phantom_supported", +1, "supported.forward", 3.4, false},
                                  {"phantom_supported", -1, "supported.backward", 3.9, false},
                                  {"phantom_collapsed", +1, "collapsed.forward", 2.35, true},
                                  {"phantom_collapsed", -1, "collapsed.backward", 3.1, false}};
        for (const auto& t : targets) {
            double peak = 0.0;
            for (double p : kPhantomPressures_kPa) {
                const auto s = drive(cal, robot, t.lumen, t.dir, p);
                const std::string id = fmt::format("{}@{:g}kPa", t.label, p);
                rep.runs.push_back({id, t.lumen, t.dir, p, s});
                peak = std::max(peak, s.mean_speed_mmps);
                if (t.each) {
                    rep.rows.push_back(detail::within(id, "mean speed (mm/s)", s.mean_speed_mmps, t.ref, 0.20));
                } else {
                    rep.rows.push_back(detail::check(id, "mean speed (mm/s)", s.mean_speed_mmps, t.ref, "<= ref +20%",
                                                     s.mean_speed_mmps <= 1.2 * t.ref));
                }
            }
            if (!t.each)
                rep.rows.push_back(
                    detail::within(std::string(t.label) + ".peak", "peak mean speed over inflations (mm/s)", peak, t.ref, 0.20));
        }
        // strict ordering at full motor speed: slowest rigid-pipe run, fastest phantom runs
        double rigid = INFINITY, supported = 0.0, collapsed = 0.0;
        for (const auto& r : rep.runs) {
            if (r.direction < 0) continue;
            if (r.lumen.rfind("pipe", 0) == 0) rigid = std::min(rigid, r.summary.mean_speed_mmps);
            if (r.lumen == "phantom_supported") supported = std::max(supported, r.summary.mean_speed_mmps);
            if (r.lumen == "phantom_collapsed") collapsed = std::max(collapsed, r.summary.mean_speed_mmps);
        }
        const bool ordered = rigid > supported && supported > collapsed;
        rep.rows.push_back(detail::check("speed_ordering", "rigid > supported > collapsed (forward)",
                                         ordered ? 1.0 : 0.0, 1.0, "strict", ordered,
                                         fmt::format("{:.3f} > {:.3f} > {:.3f}", rigid, supported, collapsed)));
    });

    detail::section(rep, "traction", [&] {
        const auto lumen = config::fixture(cal, "phantom_collapsed");
        rep.traction = navigation::traction_sweep(*lumen, cal.hold_position_mm, robot, cal.sim,
                                                  {kTractionPressures_kPa.begin(), kTractionPressures_kPa.end()});
        bool monotone = true;
        for (std::size_t i = 0; i < rep.traction.size(); ++i) {
            const auto& r = rep.traction[i];
            rep.rows.push_back(detail::check(fmt::format("traction@{:g}kPa", r.pressure_kPa), "available traction (N)",
                                             r.available_traction_N, std::numeric_limits<double>::quiet_NaN(),
                                             "reported", !r.stalled));
            if (i && !r.stalled && r.available_traction_N < rep.traction[i - 1].available_traction_N) monotone = false;
        }
        const double t0 = rep.traction.front().available_traction_N;
        const double t16 = rep.traction.back().available_traction_N;
        const double ratio = t0 > 0.0 ? t16 / t0 : INFINITY;
        rep.rows.push_back(detail::check("traction.monotone", "non-decreasing before stall", monotone ? 1.0 : 0.0, 1.0,
                                         "exact", monotone));
        rep.rows.push_back(detail::check("traction.ratio", "traction(16 kPa) / traction(0 kPa)", ratio, 2.0,
                                         "[1.7, 2.3]", ratio >= 1.7 && ratio <= 2.3));
        rep.rows.push_back(detail::check("traction.peak", "traction at 16 kPa (N)", t16, 2.0, "[1.5, 2.5]",
                                         t16 >= 1.5 && t16 <= 2.5));
    });

    detail::section(rep, "stall", [&] {
        const auto lumen = config::fixture(cal, "phantom_collapsed");
        const auto scan = navigation::stall_scan(*lumen, cal.hold_position_mm, robot, cal.sim, 16.0, 0.25);
        const double th = scan.threshold_kPa.value_or(std::numeric_limits<double>::quiet_NaN());
        const bool ok = scan.threshold_kPa && th > 16.0 && th < scan.overinflation_kPa;
        rep.rows.push_back(detail::check("stall.threshold", "over-inflation stall pressure (kPa)", th, 16.0,
                                         fmt::format("(16, {:g}) kPa", scan.overinflation_kPa), ok,
                                         scan.threshold_kPa ? "" : "no stall before the scan ended"));
    });

    detail::section(rep, "tilt", [&] {
        const auto t = tilt_sweep(robot, 47.0, cal.max_pressure_kPa, 1.0, cal.sim.gravity);
        rep.rows.push_back(detail::check("tilt.max", "max |tilt| in the 94 mm pipe (deg)", t.max_abs_deg, 10.0, "±2 deg",
                                         std::abs(t.max_abs_deg - 10.0) <= 2.0));
        rep.rows.push_back(detail::check("tilt.antisymmetry", "max |tilt(a,b) + tilt(b,a)| (deg)",
                                         t.antisymmetry_defect_deg, 0.0, "exact", t.antisymmetry_defect_deg == 0.0));
    });
    return rep;
}

inline json to_json(const Report& rep) {
    const auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    json rows = json::array();
    for (const auto& r : rep.rows)
        rows.push_back({{"id", r.id},
                        {"quantity", r.quantity},
                        {"simulated", num(r.simulated)},
                        {"reference", num(r.reference)},
                        {"tolerance", r.tolerance},
                        {"verdict", r.pass ? "pass" : "fail"},
                        {"note", r.note}});
    json curve = json::array();
    for (const auto& c : rep.inflation_curve)
        curve.push_back({{"pressure_kPa", c.pressure_kPa},
                         {"radial_displacement_mm", c.radial_displacement_mm},
                         {"snap_through", c.snap_through}});
    json traction = json::array();
    for (const auto& t : rep.traction)
        traction.push_back({{"pressure_kPa", t.pressure_kPa},
                            {"available_traction_N", t.available_traction_N},
                            {"total_normal_N", t.total_normal_N},
                            {"tracks_in_contact", t.tracks_in_contact},
                            {"internal_drag_N", t.internal_drag_N},
                            {"stalled", t.stalled}});
    json runs = json::array();
    for (const auto& r : rep.runs)
        runs.push_back({{"id", r.id},
                        {"lumen", r.lumen},
                        {"direction", r.direction},
                        {"pressure_kPa", r.pressure_kPa},
                        {"mean_speed_mmps", r.summary.mean_speed_mmps},
                        {"completed", r.summary.completed},
                        {"stall_events", r.summary.stall_events},
                        {"end_reason", r.summary.end_reason}});
    return json{{"version", kVersion},
                {"config_hash", rep.config_hash},
                {"rows", rows},
                {"inflation_curve", curve},
                {"traction_sweep", traction},
                {"runs", runs},
                {"totals", {{"rows", rep.rows.size()}, {"failed", rep.failed()}}}};
}

/// Plain-text comparison table.
inline std::string table(const Report& rep) {
    std::string out = fmt::format("{:<34} {:>12} {:>10} {:>16}  {}\n", "row", "simulated", "reference", "tolerance",
                                  "verdict");
    for (const auto& r : rep.rows) {
        const auto show = [](double v) { return std::isfinite(v) ? fmt::format("{:.4g}", v) : std::string("-"); };
        out += fmt::format("{:<34} {:>12} {:>10} {:>16}  {}{}\n", r.id, show(r.simulated), show(r.reference),
                           r.tolerance, r.pass ? "PASS" : "FAIL", r.note.empty() ? "" : "  (" + r.note + ")");
    }
    out += fmt::format("{} rows, {} failed\n", rep.rows.size(), rep.failed());
    return out;
}

}  // namespace softscreen::suite
