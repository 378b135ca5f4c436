#include "softscreen/cli.hpp"
#include "softscreen/service/server.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

using namespace softscreen;

int serve(const std::string& path, unsigned short port, const std::string& address, double rate, double scale,
          const std::string& static_dir, const std::filesystem::path& out) {
    const auto ls = scenario::load_scenario(path);
    service::Session session(ls.scenario,
                             service::Limits{ls.calibration.max_pressure_kPa, ls.calibration.gear.max_motor_speed_radps});
    service::ServerOptions opts;
    opts.address = address;
    opts.port = port;
    opts.rate_hz = rate;
    opts.time_scale = scale;
    opts.static_dir = static_dir;
    service::Server server(session, opts, [&](const navigation::SimTrace& trace) {
        std::ostringstream csv;
        scenario::write_trace_csv(csv, trace);
        scenario::write_text(out / "trace.csv", csv.str());
        const auto summary = scenario::summary_json(ls, trace);
        scenario::write_json(out / "summary.json", summary);
        scenario::write_json(out / "resolved_scenario.json", ls.resolved);
        scenario::write_json(out / "manifest.json",
                             scenario::manifest_json("serve", ls.config_hash,
                                                     {{"scenario", ls.scenario.name},
                                                      {"resolved", "resolved_scenario.json"},
                                                      {"rate_hz", rate},
                                                      {"time_scale", scale}}));
        return config::json{{"out_dir", out.string()}, {"steps", trace.rows.size()}, {"summary", summary}};
    });
    fmt::print("serving '{}' on http://{}:{} (ws /ws)\n", ls.scenario.name, address, server.port());
    std::fflush(stdout);
    const auto flushed = server.run();
    fmt::print("stopped; trace written to {}\n", out.string());
    return flushed.contains("summary") ? cli::exit_code(session.trace().summary) : cli::kExitError;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"softscreen: quasi-static simulator of a soft tracked capsule robot"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string out_flag;
    app.add_option("--out", out_flag, "output directory (default: $SOFTSCREEN_OUT_DIR or ./out)");
    app.set_version_flag("--version", std::string(softscreen::kVersion));

    std::string scenario_path;
    auto* run = app.add_subcommand("run", "run one scenario file");
    run->add_option("scenario", scenario_path, "scenario JSON")->required();

    std::string calibration;
    auto* suite = app.add_subcommand("paper-suite", "run the reference experiment suite");
    suite->add_option("--calibration", calibration, "calibration JSON (default: built-in)");

    std::string sweep_path;
    unsigned jobs = 0;
    auto* sweep = app.add_subcommand("sweep", "run a grid of scenario variants");
    sweep->add_option("sweep", sweep_path, "sweep JSON")->required();
    sweep->add_option("-j,--jobs", jobs, "worker threads (default: hardware)");

    std::string flange;
    double max_kPa = 20.0, step_kPa = 0.5;
    auto* curve = app.add_subcommand("inflate-curve", "free-inflation pressure curve");
    curve->add_option("--calibration", calibration, "calibration JSON");
    curve->add_option("--flange", flange, "LF or CF")->check(CLI::IsMember({"LF", "CF"}));
    curve->add_option("--max-kPa", max_kPa, "highest pressure")->check(CLI::NonNegativeNumber);
    curve->add_option("--step-kPa", step_kPa, "pressure step")->check(CLI::PositiveNumber);

    std::string lumen_name = "phantom_collapsed";
    std::vector<double> pressures{0.0, 5.0, 10.0, 13.0, 16.0};
    auto* traction = app.add_subcommand("traction", "static traction at a set of pressures");
    traction->add_option("--calibration", calibration, "calibration JSON");
    traction->add_option("--lumen", lumen_name, "fixture name");
    traction->add_option("--pressures", pressures, "pressures in kPa")->delimiter(',');

    unsigned short port = 8080;
    std::string address = "127.0.0.1", static_dir;
    double rate = softscreen::service::kDefaultRate_Hz, scale = 1.0;
    auto* serve_cmd = app.add_subcommand("serve", "live teleoperation service");
    serve_cmd->add_option("scenario", scenario_path, "scenario JSON")->required();
    serve_cmd->add_option("--port", port, "TCP port (0 picks one)");
    serve_cmd->add_option("--address", address, "bind address");
    serve_cmd->add_option("--rate-hz", rate, "state frame rate")->check(CLI::PositiveNumber);
    serve_cmd->add_option("--time-scale", scale, "simulated seconds per wall second")->check(CLI::PositiveNumber);
    serve_cmd->add_option("--static", static_dir, "directory of console assets to serve");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? 0 : softscreen::cli::kExitError;
    }

    try {
        const auto out = softscreen::cli::resolve_out_dir(out_flag);
        if (*run) return softscreen::cli::cmd_run(scenario_path, out, std::cout);
        if (*suite) return softscreen::cli::cmd_paper_suite(calibration, out, std::cout);
        if (*sweep) return softscreen::cli::cmd_sweep(sweep_path, out, jobs, std::cout);
        if (*curve) return softscreen::cli::cmd_inflate_curve(calibration, flange, max_kPa, step_kPa, out, std::cout);
        if (*traction) return softscreen::cli::cmd_traction(calibration, lumen_name, pressures, out, std::cout);
        if (*serve_cmd) return serve(scenario_path, port, address, rate, scale, static_dir, out);
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return softscreen::cli::kExitError;
    }
    return softscreen::cli::kExitError;
}
