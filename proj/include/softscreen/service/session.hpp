// Teleoperation session: the single stepper that owns the simulation
// state, the command clamp, and the text encodings of every frame type
// that crosses the wire.
#pragma once

#include "softscreen/navigation.hpp"
#include "softscreen/scenario.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace softscreen::service {

using nlohmann::json;

inline constexpr int kProtoVersion = 1;
inline constexpr double kDefaultRate_Hz = 20.0;

/// A command frame as sent by an operator, before clamping.
struct CommandFrame {
    std::optional<double> motor_speed_radps;
    std::optional<double> p1_kPa;
    std::optional<double> p2_kPa;
    std::optional<bool> pause;
};

struct Limits {
    double max_pressure_kPa = 20.0;
    double max_motor_speed_radps = 0.0;
};

/// Result of clamping one command frame. `clamped` lists the fields whose
/// requested value was replaced.
struct ClampedCommand {
    navigation::Command command;
    bool paused = false;
    std::vector<std::string> clamped;
};

class MalformedFrame : public Error {
public:
    using Error::Error;
};

/// Parses a CommandFrame document. Omitted fields keep their current value;
/// anything else (unknown keys, wrong types, non-finite numbers) is rejected.
inline CommandFrame parse_command(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw MalformedFrame(std::string("not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw MalformedFrame("command frame must be an object");
    CommandFrame f;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const auto& k = it.key();
        const auto& v = it.value();
        if (k == "type") {
            if (!v.is_string() || v.get<std::string>() != "command") throw MalformedFrame("type must be \"command\"");
        } else if (k == "proto_version") {
            if (!v.is_number_integer() || v.get<int>() != kProtoVersion) throw MalformedFrame("unsupported proto_version");
        } else if (k == "pause") {
            if (!v.is_boolean()) throw MalformedFrame("pause must be a boolean");
            f.pause = v.get<bool>();
        } else if (k == "motor_speed_radps" || k == "p1_kPa" || k == "p2_kPa") {
            if (!v.is_number() || !std::isfinite(v.get<double>())) throw MalformedFrame(k + " must be a finite number");
            const double x = v.get<double>();
            if (k == "motor_speed_radps")
                f.motor_speed_radps = x;
            else if (k == "p1_kPa")
                f.p1_kPa = x;
            else
                f.p2_kPa = x;
        } else {
            throw MalformedFrame("unknown field " + k);
        }
    }
    return f;
}

inline ClampedCommand clamp_command(const CommandFrame& f, const navigation::Command& current, bool paused,
                                    const Limits& lim) {
    ClampedCommand out{current, f.pause.value_or(paused), {}};
    const auto clamp = [&](const std::optional<double>& v, double lo, double hi, const char* name, double& dst) {
        if (!v) return;
        dst = std::clamp(*v, lo, hi);
        if (dst != *v) out.clamped.emplace_back(name);
    };
    clamp(f.motor_speed_radps, -lim.max_motor_speed_radps, lim.max_motor_speed_radps, "motor_speed_radps",
          out.command.motor_speed_radps);
    clamp(f.p1_kPa, 0.0, lim.max_pressure_kPa, "p1_kPa", out.command.p1_kPa);
    clamp(f.p2_kPa, 0.0, lim.max_pressure_kPa, "p2_kPa", out.command.p2_kPa);
    return out;
}

struct Ack {
    long command_id = 0;
    ClampedCommand applied;
    long effective_step = 0;
};

inline json command_json(const navigation::Command& c) {
    return {{"motor_speed_radps", c.motor_speed_radps}, {"p1_kPa", c.p1_kPa}, {"p2_kPa", c.p2_kPa}};
}

inline json ack_json(const Ack& a) {
    json applied = command_json(a.applied.command);
    applied["pause"] = a.applied.paused;
    return {{"type", "ack"},
            {"proto_version", kProtoVersion},
            {"command_id", a.command_id},
            {"effective_step", a.effective_step},
            {"applied", applied},
            {"clamped", a.applied.clamped}};
}

inline json error_json(const std::string& what) {
    return {{"type", "error"}, {"proto_version", kProtoVersion}, {"error", what}};
}

struct StateFrame {
    long seq = 0;
    long step = 0;
    navigation::TraceRow row;
    bool paused = false;
    double theoretical_speed_mmps = 0.0;
    long last_command_id = 0;
    std::vector<std::string> clamped;  // from the last applied command
    int elbows_passed = 0;
};

inline json state_json(const StateFrame& f) {
    const auto& r = f.row;
    return {{"type", "state"},
            {"proto_version", kProtoVersion},
            {"seq", f.seq},
            {"step", f.step},
            {"time_s", r.time_s},
            {"s_mm", r.state.s_mm},
            {"v_mmps", r.state.v_mmps},
            {"theoretical_speed_mmps", f.theoretical_speed_mmps},
            {"tilt_deg", r.state.tilt_deg},
            {"pressures_kPa", {r.state.p1_kPa, r.state.p2_kPa}},
            {"motor_speed_radps", r.state.motor_speed_radps},
            {"tracks_in_contact", r.contact.tracks_in_contact},
            {"per_track_normal_N", r.contact.per_track_normal_N},
            {"available_traction_N", r.traction.available_traction_N},
            {"required_force_N", r.traction.required_force_N},
            {"traction_margin_N", r.traction.margin_N},
            {"stalled", r.state.stalled},
            {"camera_offset_mm", r.camera_offset_mm},
            {"elbows_passed", f.elbows_passed},
            {"paused", f.paused},
            {"last_command_id", f.last_command_id},
            {"clamped", f.clamped}};
}

inline json end_json(long seq, const std::string& reason) {
    return {{"type", "end"}, {"proto_version", kProtoVersion}, {"seq", seq}, {"reason", reason}};
}

inline json health_json(const std::string& scenario_name) {
    return {{"status", "ok"}, {"proto_version", kProtoVersion}, {"version", kVersion}, {"scenario", scenario_name}};
}

/// Centerline samples and segment markers for the side view.
inline json lumen_json(const lumen::LumenModel& lumen, double sample_mm = 5.0) {
    json pts = json::array();
    const double L = lumen.total_length();
    const int n = std::max(1, static_cast<int>(std::ceil(L / sample_mm)));
    for (int i = 0; i <= n; ++i) {
        const double s = L * i / n;
        const auto pose = lumen.centerline_pose(s);
        pts.push_back({{"s_mm", s}, {"position_mm", pose.position}, {"radius_mm", lumen.local_radius(s)}});
    }
    json segs = json::array();
    for (std::size_t i = 0; i < lumen.segments().size(); ++i) {
        const auto& seg = lumen.segments()[i];
        segs.push_back({{"kind", seg.is_elbow() ? "elbow" : "straight"},
                        {"start_mm", lumen.segment_start(i)},
                        {"length_mm", seg.length()},
                        {"diameter_mm", seg.diameter_mm}});
    }
    return {{"proto_version", kProtoVersion},
            {"total_length_mm", L},
            {"rigid", lumen.is_rigid()},
            {"collapsed", lumen.is_collapsed()},
            {"supports_mm", lumen.supports()},
            {"segments", segs},
            {"centerline", pts}};
}

/// Owns the simulation state. Commands are queued from any thread and
/// applied in arrival order at the next step boundary; `advance` and
/// `snapshot` are called only by the stepping thread.
class Session {
public:
    explicit Session(navigation::Scenario sc)
        : sc_(std::move(sc)),
          limits_{20.0, sc_.robot.gear.max_motor_speed_radps},
          command_(sc_.schedule.front().command) {
        sc_.validate();
        state_.s_mm = sc_.start_s_mm;
        theoretical_ = std::abs(transmission::track_speed(sc_.robot.gear, sc_.robot.worm, limits_.max_motor_speed_radps));
        // frame 0 describes the robot at rest under the initial command
        apply_step(false);
    }

    Session(navigation::Scenario sc, Limits limits) : Session(std::move(sc)) { limits_ = limits; }

    const navigation::Scenario& scenario() const { return sc_; }
    const Limits& limits() const { return limits_; }

    /// Clamps and queues a command; thread-safe.
    Ack submit(const CommandFrame& f) {
        std::lock_guard lock(mu_);
        const auto& base = queue_.empty() ? pending_base_() : queue_.back().applied;
        Ack a{++next_id_, clamp_command(f, base.command, base.paused, limits_), step_ + 1};
        queue_.push_back(a);
        return a;
    }

    /// Applies queued commands in arrival order. Called at step boundaries.
    void drain() {
        std::lock_guard lock(mu_);
        while (!queue_.empty()) {
            const auto& a = queue_.front();
            command_ = a.applied.command;
            paused_ = a.applied.paused;
            last_id_ = a.command_id;
            last_clamped_ = a.applied.clamped;
            queue_.pop_front();
        }
    }

    /// Advances the simulation by one dt; false if paused or finished.
    bool step_once() {
        if (paused_ || finished()) return false;
        apply_step(true);
        return true;
    }

    /// One step boundary: drain, then step.
    bool advance() {
        drain();
        return step_once();
    }

    StateFrame snapshot() {
        StateFrame f;
        f.seq = ++seq_;
        f.step = step_;
        f.row = last_row_;
        f.paused = paused_;
        f.theoretical_speed_mmps = theoretical_;
        f.last_command_id = last_id_;
        f.clamped = last_clamped_;
        f.elbows_passed = sc_.lumen->elbows_entered(last_row_.state.s_mm);
        return f;
    }

    long seq() const { return seq_; }
    long next_seq() { return ++seq_; }
    long step_index() const { return step_; }
    bool paused() const { return paused_; }
    double sim_time_s() const { return step_ * sc_.config.dt_s; }

    /// Why the session cannot step any further, if it cannot.
    std::optional<std::string> finished() const {
        const double L = sc_.lumen->total_length();
        const auto& s = last_row_.state;
        if (step_ > 0 && ((s.motor_speed_radps > 0.0 && s.s_mm >= L) || (s.motor_speed_radps < 0.0 && s.s_mm <= 0.0)))
            return std::string("exit");
        if (stalled_steps_ * sc_.config.dt_s > sc_.config.stall_timeout_s) return std::string("stall");
        if (step_ >= sc_.config.max_steps) return std::string("limit");
        if (sc_.duration_s > 0.0 && sim_time_s() >= sc_.duration_s - 1e-9) return std::string("limit");
        return std::nullopt;
    }

    /// Trace of every applied step, for flushing on stop.
    navigation::SimTrace trace() const {
        navigation::SimTrace t;
        t.rows = rows_;
        t.summary = navigation::summarize(rows_, sc_.start_s_mm, sc_.lumen->total_length(),
                                          sc_.config.stall_timeout_s, sc_.config.dt_s);
        return t;
    }

private:
    const ClampedCommand& pending_base_() {
        base_ = ClampedCommand{command_, paused_, {}};
        return base_;
    }

    void apply_step(bool record) {
        const auto out = navigation::step(state_, command_, *sc_.lumen, sc_.robot, sc_.config);
        if (record) {
            state_ = out.state;
            ++step_;
            stalled_steps_ = state_.stalled ? stalled_steps_ + 1 : 0;
        }
        auto shown = record ? out.state : state_;
        if (!record) {
            shown.p1_kPa = command_.p1_kPa;
            shown.p2_kPa = command_.p2_kPa;
            shown.motor_speed_radps = command_.motor_speed_radps;
            shown.tilt_deg = out.contact.tilt_deg;
        }
        last_row_ = {step_ * sc_.config.dt_s, shown, out.traction, out.contact,
                     contact::camera_offset_mm(out.contact, sc_.robot.geometry)};
        if (record) rows_.push_back(last_row_);
    }

    navigation::Scenario sc_;
    Limits limits_;
    navigation::Command command_;
    navigation::RobotState state_;
    navigation::TraceRow last_row_;
    std::vector<navigation::TraceRow> rows_;
    double theoretical_ = 0.0;
    long step_ = 0;
    long seq_ = 0;
    long stalled_steps_ = 0;
    bool paused_ = false;
    long last_id_ = 0;
    std::vector<std::string> last_clamped_;

    std::mutex mu_;
    std::deque<Ack> queue_;
    ClampedCommand base_;
    long next_id_ = 0;
};

}  // namespace softscreen::service
