// Quasi-static stepping of the robot along a lumen.
#pragma once

#include "softscreen/contact.hpp"
#include "softscreen/lumen.hpp"
#include "softscreen/transmission.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace softscreen::navigation {

struct Robot {
    transmission::GearheadParams gear;
    transmission::WormGearParams worm;
    contact::TrackSet tracks;
    contact::RobotGeometry geometry;
    std::shared_ptr<const contact::ChamberTable> chamber;

    void validate() const {
        gear.validate();
        worm.validate();
        tracks.validate();
        geometry.validate();
        require(chamber != nullptr, "Robot.chamber is not set");
    }

    transmission::TransmissionForces forces() const { return transmission::drivetrain_forces(gear, worm); }

    double free_radius_mm(double pressure_kPa) const {
        return contact::free_radius_mm(*chamber, tracks, geometry, pressure_kPa);
    }
    double rest_radius_mm() const { return geometry.chamber_rest_radius_mm + tracks.track_thickness_mm; }

    /// Pressure at which the free radius exceeds `lumen_radius_mm` by
    /// `interference_mm`.
    double matched_pressure_kPa(double lumen_radius_mm, double interference_mm) const {
        const double dr = lumen_radius_mm + interference_mm - rest_radius_mm();
        return dr <= 0.0 ? 0.0 : chamber->pressure_for_displacement(dr);
    }
};

struct TetherModel {
    double base_N = 0.0;
    double drag_per_flexure_N = 0.0;
    double cap_N = 4.0;
    /// Fraction of the drag felt when backing out (the tether is pulled
    /// along rather than dragged behind).
    double reverse_factor = 0.0;

    void validate() const {
        require_nonneg(base_N, "TetherModel.base_N");
        require_nonneg(drag_per_flexure_N, "TetherModel.drag_per_flexure_N");
        require_nonneg(cap_N, "TetherModel.cap_N");
        require_finite(reverse_factor, "TetherModel.reverse_factor");
        require(reverse_factor >= 0.0 && reverse_factor <= 1.0, "TetherModel.reverse_factor must lie in [0, 1]");
    }

    double drag_N(int elbows_passed, bool forward) const {
        const double d = std::min(cap_N, base_N + drag_per_flexure_N * elbows_passed);
        return forward ? d : reverse_factor * d;
    }
};

struct SimConfig {
    double dt_s = 0.05;
    TetherModel tether;
    bool gravity = true;
    double slip_exponent = 2.0;
    long max_steps = 200000;
    double stall_timeout_s = 5.0;
    /// Ceiling on the draping drag of a collapsed lumen: the everting
    /// tracks open the lining ahead of the nose.
    double collapse_drag_cap_N = 0.5;

    void validate() const {
        require_positive(dt_s, "SimConfig.dt_s");
        tether.validate();
        require_finite(slip_exponent, "SimConfig.slip_exponent");
        require(slip_exponent >= 1.0, "SimConfig.slip_exponent must be >= 1");
        require(max_steps > 0, "SimConfig.max_steps must be > 0");
        require_positive(stall_timeout_s, "SimConfig.stall_timeout_s");
        require_nonneg(collapse_drag_cap_N, "SimConfig.collapse_drag_cap_N");
    }
};

struct Command {
    double motor_speed_radps = 0.0;
    double p1_kPa = 0.0;
    double p2_kPa = 0.0;
};

struct TimedCommand {
    double t_s = 0.0;
    Command command;
};

struct RobotState {
    double s_mm = 0.0;
    double v_mmps = 0.0;
    double tilt_deg = 0.0;
    double p1_kPa = 0.0;
    double p2_kPa = 0.0;
    double motor_speed_radps = 0.0;
    bool stalled = false;
};

struct Resistance {
    double wall_sliding_N = 0.0;
    double tether_N = 0.0;
    double gravity_N = 0.0;
    double collapse_N = 0.0;

    double total() const { return wall_sliding_N + tether_N + gravity_N + collapse_N; }
};

struct StepOutput {
    RobotState state;
    contact::ContactState contact;
    contact::TractionResult traction;
    Resistance resistance;
    double track_speed_mmps = 0.0;
};

/// A failure inside one simulation step.
class StepError : public Error {
public:
    StepError(long index, const std::string& cause)
        : Error("step " + std::to_string(index) + ": " + cause), step_index(index) {}
    long step_index;
};

inline contact::WallContact wall_at(const lumen::LumenModel& lumen, double s) {
    const auto w = lumen.local_wall(s);
    return {lumen.local_radius(s), w.stiffness_N_per_mm, w.collapsed, w.collapse_preload_N};
}

inline contact::ContactState contact_at(const lumen::LumenModel& lumen, double s, double p1, double p2,
                                        const Robot& robot, const SimConfig& config) {
    return contact::equilibrium_contact({p1, p2}, wall_at(lumen, s), robot.tracks, robot.geometry, *robot.chamber,
                                        config.gravity);
}

/// Resistance to motion at `s` for a direction of travel (+1 deeper, -1 out).
inline Resistance resistance(const lumen::LumenModel& lumen, double s, int direction,
                             const contact::ContactState& c, const Robot& robot, const SimConfig& config) {
    Resistance r;
    const auto w = lumen.local_wall(s);
    const double mu = lumen.sliding_friction();
    const double preload = c.total_preload_N();
    r.wall_sliding_N = mu * w.conformity * std::max(0.0, c.total_normal_N() - preload);
    if (w.collapsed) r.collapse_N = std::min(mu * w.conformity * preload, config.collapse_drag_cap_N);
    r.tether_N = config.tether.drag_N(lumen.elbows_entered(s), direction > 0);
    // climbing resists, descending does not push the robot faster
    const double slope = lumen.centerline_pose(s).tangent[2];
    r.gravity_N = std::max(0.0, robot.geometry.weight_N * slope * direction);
    return r;
}

inline StepOutput step(const RobotState& state, const Command& cmd, const lumen::LumenModel& lumen, const Robot& robot,
                       const SimConfig& config) {
    require_nonneg(cmd.p1_kPa, "command p1_kPa");
    require_nonneg(cmd.p2_kPa, "command p2_kPa");
    require_finite(cmd.motor_speed_radps, "command motor_speed_radps");
    require(std::abs(cmd.motor_speed_radps) <= robot.gear.max_motor_speed_radps * (1.0 + 1e-12),
            "command motor speed exceeds max_motor_speed_radps");

    StepOutput out;
    out.track_speed_mmps = transmission::track_speed(robot.gear, robot.worm, cmd.motor_speed_radps);
    const int direction = out.track_speed_mmps > 0.0 ? 1 : (out.track_speed_mmps < 0.0 ? -1 : 0);
    out.contact = contact_at(lumen, state.s_mm, cmd.p1_kPa, cmd.p2_kPa, robot, config);
    out.resistance = resistance(lumen, state.s_mm, direction >= 0 ? 1 : -1, out.contact, robot, config);
    const double required = direction == 0 ? 0.0 : out.resistance.total();
    out.traction = contact::traction(out.contact, robot.tracks, robot.forces(), required);

    RobotState next = state;
    next.p1_kPa = cmd.p1_kPa;
    next.p2_kPa = cmd.p2_kPa;
    next.motor_speed_radps = cmd.motor_speed_radps;
    next.tilt_deg = out.contact.tilt_deg;
    next.stalled = false;
    next.v_mmps = 0.0;
    if (direction != 0) {
        const double a = out.traction.available_traction_N;
        if (out.traction.stalled || !(a > required)) {
            next.stalled = true;
        } else {
            const double slip = std::pow(required / a, config.slip_exponent);
            next.v_mmps = out.track_speed_mmps * std::clamp(1.0 - slip, 0.0, 1.0);
        }
    }
    next.s_mm = std::clamp(state.s_mm + next.v_mmps * config.dt_s, 0.0, lumen.total_length());
    out.state = next;
    return out;
}

struct TraceRow {
    double time_s = 0.0;
    RobotState state;
    contact::TractionResult traction;
    contact::ContactState contact;
    double camera_offset_mm = 0.0;
};

struct Summary {
    double mean_speed_mmps = 0.0;
    double distance_mm = 0.0;
    double duration_s = 0.0;
    bool completed = false;
    int stall_events = 0;
    long steps = 0;
    std::string end_reason;  // "exit", "stall" or "limit"
};

struct SimTrace {
    std::vector<TraceRow> rows;
    Summary summary;
};

/// Recomputes the summary of a run from its rows.
inline Summary summarize(const std::vector<TraceRow>& rows, double start_s_mm, double lumen_length_mm,
                         double stall_timeout_s, double dt_s) {
    Summary sm;
    sm.steps = static_cast<long>(rows.size());
    if (rows.empty()) {
        sm.end_reason = "limit";
        return sm;
    }
    const auto& last = rows.back();
    sm.duration_s = last.time_s;
    sm.distance_mm = std::abs(last.state.s_mm - start_s_mm);
    sm.mean_speed_mmps = sm.duration_s > 0.0 ? sm.distance_mm / sm.duration_s : 0.0;
    bool prev = false;
    long run = 0;
    for (const auto& r : rows) {
        if (r.state.stalled && !prev) ++sm.stall_events;
        run = r.state.stalled ? run + 1 : 0;
        prev = r.state.stalled;
    }
    const double dir = last.state.motor_speed_radps;
    sm.completed = (dir > 0.0 && last.state.s_mm >= lumen_length_mm) || (dir < 0.0 && last.state.s_mm <= 0.0);
    if (sm.completed)
        sm.end_reason = "exit";
    else if (run * dt_s > stall_timeout_s)
        sm.end_reason = "stall";
    else
        sm.end_reason = "limit";
    return sm;
}

struct Scenario {
    std::string name;
    std::shared_ptr<const lumen::LumenModel> lumen;
    Robot robot;
    SimConfig config;
    std::vector<TimedCommand> schedule;
    double start_s_mm = 0.0;
    double duration_s = 0.0;  // 0: until exit, stall or max_steps

    void validate() const {
        require(lumen != nullptr, "scenario has no lumen");
        robot.validate();
        config.validate();
        require(!schedule.empty(), "scenario command schedule is empty");
        for (std::size_t i = 0; i < schedule.size(); ++i) {
            require_nonneg(schedule[i].t_s, "schedule t_s");
            if (i) require(schedule[i].t_s > schedule[i - 1].t_s, "schedule times must increase");
        }
        require(schedule.front().t_s == 0.0, "schedule must start at t_s = 0");
        require_finite(start_s_mm, "start_s_mm");
        require(start_s_mm >= 0.0 && start_s_mm <= lumen->total_length(), "start_s_mm must lie within the lumen");
        require_nonneg(duration_s, "duration_s");
    }

    const Command& command_at(double t) const {
        std::size_t i = 0;
        while (i + 1 < schedule.size() && schedule[i + 1].t_s <= t + 1e-12) ++i;
        return schedule[i].command;
    }
};

inline SimTrace run_scenario(const Scenario& sc) {
    sc.validate();
    const auto& lumen = *sc.lumen;
    const auto& cfg = sc.config;
    SimTrace trace;
    RobotState state;
    state.s_mm = sc.start_s_mm;
    long stalled_steps = 0;
    for (long k = 0; k < cfg.max_steps; ++k) {
        const double t0 = static_cast<double>(k) * cfg.dt_s;
        const Command& cmd = sc.command_at(t0);
        StepOutput out;
        try {
            out = step(state, cmd, lumen, sc.robot, cfg);
        } catch (const Error& e) {
            throw StepError(k, e.what());
        }
        state = out.state;
        TraceRow row{static_cast<double>(k + 1) * cfg.dt_s, state, out.traction, out.contact,
                     contact::camera_offset_mm(out.contact, sc.robot.geometry)};
        trace.rows.push_back(std::move(row));

        const bool exited = (cmd.motor_speed_radps > 0.0 && state.s_mm >= lumen.total_length()) ||
                            (cmd.motor_speed_radps < 0.0 && state.s_mm <= 0.0);
        if (exited) break;
        stalled_steps = state.stalled ? stalled_steps + 1 : 0;
        if (stalled_steps * cfg.dt_s > cfg.stall_timeout_s) break;
        if (sc.duration_s > 0.0 && trace.rows.back().time_s >= sc.duration_s - 1e-9) break;
    }
    trace.summary = summarize(trace.rows, sc.start_s_mm, lumen.total_length(), cfg.stall_timeout_s, cfg.dt_s);
    return trace;
}

struct TractionRow {
    double pressure_kPa = 0.0;
    double available_traction_N = 0.0;
    double total_normal_N = 0.0;
    int tracks_in_contact = 0;
    double internal_drag_N = 0.0;
    bool stalled = false;
};

/// Static pull test: the robot is held at `s_mm` with both chambers at
/// each pressure and the tracks driven at full budget.
inline std::vector<TractionRow> traction_sweep(const lumen::LumenModel& lumen, double s_mm, const Robot& robot,
                                               const SimConfig& config, const std::vector<double>& pressures) {
    robot.validate();
    std::vector<TractionRow> rows;
    for (double p : pressures) {
        const auto c = contact_at(lumen, s_mm, p, p, robot, config);
        const auto tr = contact::traction(c, robot.tracks, robot.forces());
        rows.push_back({p, tr.available_traction_N, c.total_normal_N(), c.tracks_in_contact, c.internal_drag_N,
                        tr.stalled});
    }
    return rows;
}

struct StallScan {
    std::optional<double> threshold_kPa;
    double overinflation_kPa = INFINITY;
    double last_pressure_kPa = 0.0;
};

/// Raises a common pressure from `from_kPa` until the robot, trying to move
/// forward at `s_mm`, stalls. Stops without a threshold if the chamber
/// over-inflates first.
inline StallScan stall_scan(const lumen::LumenModel& lumen, double s_mm, const Robot& robot, const SimConfig& config,
                            double from_kPa, double step_kPa) {
    robot.validate();
    require_nonneg(from_kPa, "from_kPa");
    require_positive(step_kPa, "step_kPa");
    StallScan out;
    out.overinflation_kPa = robot.chamber->overinflation_kPa();
    for (int i = 0;; ++i) {
        const double p = from_kPa + i * step_kPa;
        if (p > robot.chamber->max_pressure_kPa()) break;
        out.last_pressure_kPa = p;
        const auto c = contact_at(lumen, s_mm, p, p, robot, config);
        const auto r = resistance(lumen, s_mm, 1, c, robot, config);
        if (contact::traction(c, robot.tracks, robot.forces(), r.total()).stalled) {
            out.threshold_kPa = p;
            break;
        }
    }
    return out;
}

}  // namespace softscreen::navigation
