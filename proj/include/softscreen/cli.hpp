// Batch commands behind the `softscreen` executable. Each writes its
// artifacts plus a manifest into an output directory and returns the
// process exit code.
#pragma once

#include "softscreen/paper_suite.hpp"
#include "softscreen/scenario.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace softscreen::cli {

namespace fs = std::filesystem;
using config::json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitStall = 2;
inline constexpr const char* kOutDirEnv = "SOFTSCREEN_OUT_DIR";

/// --out if given, else $SOFTSCREEN_OUT_DIR, else ./out.
inline fs::path resolve_out_dir(const std::string& flag) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
    return "out";
}

inline int exit_code(const navigation::Summary& s) { return s.end_reason == "stall" ? kExitStall : kExitOk; }

struct RunResult {
    navigation::SimTrace trace;
    json summary;
    int exit_code = kExitOk;
};

inline RunResult run_loaded(const scenario::LoadedScenario& ls, const fs::path& out) {
    RunResult r;
    r.trace = navigation::run_scenario(ls.scenario);
    r.summary = scenario::summary_json(ls, r.trace);
    r.exit_code = exit_code(r.trace.summary);
    std::ostringstream csv;
    scenario::write_trace_csv(csv, r.trace);
    scenario::write_text(out / "trace.csv", csv.str());
    scenario::write_json(out / "summary.json", r.summary);
    scenario::write_json(out / "resolved_scenario.json", ls.resolved);
    scenario::write_json(out / "manifest.json",
                         scenario::manifest_json("run", ls.config_hash,
                                                 {{"scenario", ls.scenario.name}, {"resolved", "resolved_scenario.json"}}));
    return r;
}

inline int cmd_run(const std::string& path, const fs::path& out, std::ostream& log) {
    const auto ls = scenario::load_scenario(path);
    const auto r = run_loaded(ls, out);
    const auto& s = r.trace.summary;
    fmt::print(log, "{}: {:.3f} mm/s over {:.1f} mm in {:.2f} s ({})\n", ls.scenario.name, s.mean_speed_mmps,
               s.distance_mm, s.duration_s, s.end_reason);
    return r.exit_code;
}

inline json calibration_for(const std::string& ref) {
    return scenario::calibration_document(ref.empty() ? "default" : ref, fs::current_path());
}

inline int cmd_paper_suite(const std::string& calibration_ref, const fs::path& out, std::ostream& log) {
    const json doc = calibration_for(calibration_ref);
    const auto cal = config::parse_calibration(doc);
    const auto rep = suite::run(cal);
    const auto text = suite::table(rep);
    scenario::write_json(out / "paper_suite.json", suite::to_json(rep));
    scenario::write_text(out / "paper_suite.txt", text);
    std::ostringstream curve;
    scenario::write_pressure_curve_csv(curve, rep.inflation_curve);
    scenario::write_text(out / "inflation_curve.csv", curve.str());
    std::ostringstream tr;
    tr << "pressure_kPa,available_traction_N,total_normal_N,tracks_in_contact,internal_drag_N,stalled\n";
    for (const auto& t : rep.traction)
        fmt::print(tr, "{:.2f},{:.6f},{:.6f},{},{:.6f},{}\n", t.pressure_kPa, t.available_traction_N, t.total_normal_N,
                   t.tracks_in_contact, t.internal_drag_N, t.stalled ? 1 : 0);
    scenario::write_text(out / "traction_sweep.csv", tr.str());
    scenario::write_json(out / "calibration.json", doc);
    scenario::write_json(out / "manifest.json",
                         scenario::manifest_json("paper-suite", rep.config_hash, {{"calibration", "calibration.json"}}));
    log << text;
    return kExitOk;
}

/// Sweep documents: a base scenario plus a grid of JSON-pointer overrides;
/// every combination is run as its own case.
struct SweepCase {
    std::string id;
    json overrides;
    json scenario;
};

inline std::vector<SweepCase> expand_sweep(const json& doc, const fs::path& base_dir, fs::path& scenario_dir) {
    config::Fields f(doc, "");
    fs::path base = f.string("base");
    if (base.is_relative()) base = base_dir / base;
    scenario_dir = base.parent_path();
    const json base_doc = config::read_json_file(base.string());
    const json& grid = f.raw("grid");
    if (!grid.is_object() || grid.empty()) throw config::ConfigError("grid", "expected a non-empty object");
    f.finish();

    std::vector<std::pair<json::json_pointer, std::vector<json>>> axes;
    for (auto it = grid.begin(); it != grid.end(); ++it) {
        if (!it.value().is_array() || it.value().empty())
            throw config::ConfigError("grid." + it.key(), "expected a non-empty array");
        json::json_pointer ptr;
        try {
            ptr = json::json_pointer(it.key());
        } catch (const json::exception& e) {
            throw config::ConfigError("grid." + it.key(), e.what());
        }
        if (!base_doc.contains(ptr)) throw config::ConfigError("grid." + it.key(), "not present in the base scenario");
        axes.emplace_back(ptr, std::vector<json>(it.value().begin(), it.value().end()));
    }
    std::vector<SweepCase> cases;
    std::vector<std::size_t> idx(axes.size(), 0);
    for (;;) {
        SweepCase c;
        c.id = fmt::format("case_{:04d}", cases.size());
        c.scenario = base_doc;
        c.overrides = json::object();
        for (std::size_t a = 0; a < axes.size(); ++a) {
            c.scenario[axes[a].first] = axes[a].second[idx[a]];
            c.overrides[axes[a].first.to_string()] = axes[a].second[idx[a]];
        }
        c.scenario["name"] = base_doc.value("name", "sweep") + "/" + c.id;
        cases.push_back(std::move(c));
        std::size_t a = 0;
        while (a < axes.size() && ++idx[a] == axes[a].second.size()) idx[a++] = 0;
        if (a == axes.size()) break;
    }
    return cases;
}

inline int cmd_sweep(const std::string& path, const fs::path& out, unsigned jobs, std::ostream& log) {
    fs::path scenario_dir;
    const auto cases = expand_sweep(config::read_json_file(path), fs::path(path).parent_path(), scenario_dir);
    struct Outcome {
        json summary;
        std::string error;
        int code = kExitOk;
    };
    std::vector<Outcome> results(cases.size());
    std::atomic<std::size_t> next{0};
    const unsigned n = std::max(1u, std::min<unsigned>(jobs ? jobs : std::thread::hardware_concurrency(),
                                                       static_cast<unsigned>(cases.size())));
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < n; ++w)
        pool.emplace_back([&] {
            for (std::size_t i; (i = next.fetch_add(1)) < cases.size();) {
                try {
                    const auto ls = scenario::parse_scenario(cases[i].scenario, scenario_dir);
                    const auto r = run_loaded(ls, out / cases[i].id);
                    results[i] = {r.summary, "", r.exit_code};
                } catch (const std::exception& e) {
                    results[i] = {json(), e.what(), kExitError};
                }
            }
        });
    for (auto& t : pool) t.join();

    json index = json::array();
    std::ostringstream csv;
    csv << "case,overrides,mean_speed_mmps,distance_mm,end_reason,error\n";
    int worst = kExitOk;
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const auto& r = results[i];
        index.push_back({{"case", cases[i].id}, {"overrides", cases[i].overrides}, {"summary", r.summary}, {"error", r.error}});
        std::string ov = cases[i].overrides.dump();
        std::string quoted = "\"";
        for (char ch : ov) quoted += ch == '"' ? std::string("\"\"") : std::string(1, ch);
        quoted += "\"";
        if (r.error.empty())
            fmt::print(csv, "{},{},{:.6f},{:.6f},{},\n", cases[i].id, quoted, r.summary.at("mean_speed_mmps").get<double>(),
                       r.summary.at("distance_mm").get<double>(), r.summary.at("end_reason").get<std::string>());
        else
            fmt::print(csv, "{},{},,,,\"{}\"\n", cases[i].id, quoted, r.error);
        if (r.code == kExitError) worst = kExitError;
        else if (r.code == kExitStall && worst == kExitOk) worst = kExitStall;
    }
    scenario::write_text(out / "sweep.csv", csv.str());
    scenario::write_json(out / "sweep.json", index);
    scenario::write_json(out / "manifest.json",
                         scenario::manifest_json("sweep", config::config_hash(index), {{"sweep", path}, {"workers", n}}));
    fmt::print(log, "{} cases on {} workers\n", cases.size(), n);
    return worst;
}

inline int cmd_inflate_curve(const std::string& calibration_ref, const std::string& flange, double max_kPa,
                             double step_kPa, const fs::path& out, std::ostream& log) {
    require_positive(step_kPa, "step_kPa");
    require_nonneg(max_kPa, "max_kPa");
    json doc = calibration_for(calibration_ref);
    if (!flange.empty()) doc["membrane"]["flange_style"] = flange;
    const auto cal = config::parse_calibration(doc);
    const auto ch = config::make_chamber(cal.membrane);
    std::vector<double> ps;
    for (int i = 0; i * step_kPa <= max_kPa + 1e-9; ++i) ps.push_back(i * step_kPa);
    const auto rows = ch.pressure_curve(ps);
    std::ostringstream csv;
    scenario::write_pressure_curve_csv(csv, rows);
    scenario::write_text(out / "inflation_curve.csv", csv.str());
    scenario::write_json(out / "manifest.json",
                         scenario::manifest_json("inflate-curve", config::config_hash(doc),
                                                 {{"flange_style", doc["membrane"]["flange_style"]},
                                                  {"max_kPa", max_kPa},
                                                  {"step_kPa", step_kPa}}));
    log << csv.str();
    return kExitOk;
}

inline int cmd_traction(const std::string& calibration_ref, const std::string& lumen_name,
                        const std::vector<double>& pressures, const fs::path& out, std::ostream& log) {
    const json doc = calibration_for(calibration_ref);
    const auto cal = config::parse_calibration(doc);
    const auto robot = config::make_robot(cal);
    const auto lumen = config::fixture(cal, lumen_name);
    const auto rows = navigation::traction_sweep(*lumen, std::min(cal.hold_position_mm, lumen->total_length()), robot,
                                                 cal.sim, pressures);
    std::ostringstream csv;
    csv << "pressure_kPa,available_traction_N,total_normal_N,tracks_in_contact,internal_drag_N,stalled\n";
    for (const auto& t : rows)
        fmt::print(csv, "{:.2f},{:.6f},{:.6f},{},{:.6f},{}\n", t.pressure_kPa, t.available_traction_N, t.total_normal_N,
                   t.tracks_in_contact, t.internal_drag_N, t.stalled ? 1 : 0);
    scenario::write_text(out / "traction_sweep.csv", csv.str());
    scenario::write_json(out / "manifest.json",
                         scenario::manifest_json("traction", config::config_hash(doc),
                                                 {{"lumen", lumen_name}, {"pressures_kPa", pressures}}));
    log << csv.str();
    return kExitOk;
}

}  // namespace softscreen::cli
