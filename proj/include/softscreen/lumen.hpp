// Lumen environments: piecewise centerline (straights and elbows), local
// radius with optional waviness, wall compliance, supports and friction.
#pragma once

#include "softscreen/core/error.hpp"

#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

namespace softscreen::lumen {

struct Straight {
    double length_mm = 0.0;
};

/// Planar bend, turning left in the horizontal plane.
struct Elbow {
    double bend_radius_mm = 0.0;
    double sweep_deg = 0.0;
};

struct Waviness {
    double amplitude_mm = 0.0;
    double period_mm = 1.0;
};

struct LumenSegment {
    std::variant<Straight, Elbow> kind;
    double diameter_mm = 0.0;
    Waviness waviness;

    double length() const {
        if (const auto* s = std::get_if<Straight>(&kind)) return s->length_mm;
        const auto& e = std::get<Elbow>(kind);
        return e.bend_radius_mm * e.sweep_deg * std::numbers::pi / 180.0;
    }
    bool is_elbow() const { return std::holds_alternative<Elbow>(kind); }

    void validate() const {
        if (const auto* s = std::get_if<Straight>(&kind)) {
            require_positive(s->length_mm, "Straight.length_mm");
        } else {
            const auto& e = std::get<Elbow>(kind);
            require_positive(e.bend_radius_mm, "Elbow.bend_radius_mm");
            require_finite(e.sweep_deg, "Elbow.sweep_deg");
            require(e.sweep_deg > 0.0 && e.sweep_deg <= 180.0, "Elbow.sweep_deg must lie in (0, 180]");
        }
        require_positive(diameter_mm, "LumenSegment.diameter_mm");
        require_nonneg(waviness.amplitude_mm, "Waviness.amplitude_mm");
        require_positive(waviness.period_mm, "Waviness.period_mm");
        require(waviness.amplitude_mm < diameter_mm / 4.0, "Waviness.amplitude_mm must be < diameter/4");
    }
};

struct RigidWall {};

/// Soft wall. A collapsed wall drapes onto the robot: it presses each track
/// with `collapse_preload_N` even at zero interference, and conforms between
/// the tracks so that `conformity` of the contact load is carried by sliding
/// (non-track) surfaces.
struct ElasticWall {
    double hoop_stiffness_N_per_mm = 0.0;
    bool collapsed = false;
    double collapse_preload_N = 0.0;
    double conformity = 0.0;
};

using Wall = std::variant<RigidWall, ElasticWall>;

/// Wall properties resolved at one arclength position.
struct LocalWall {
    bool rigid = true;
    double stiffness_N_per_mm = INFINITY;  // per track contact
    bool collapsed = false;
    double collapse_preload_N = 0.0;
    double conformity = 0.0;
};

struct Pose {
    std::array<double, 3> position{};  // mm; x along the entry axis, z up
    std::array<double, 3> tangent{1.0, 0.0, 0.0};
};

inline constexpr double kSupportHalfWidth_mm = 20.0;

class LumenModel {
public:
    LumenModel(std::vector<LumenSegment> segments, Wall wall, double mu_wall,
               std::vector<double> supports = {}, bool lubricated = false,
               double lubrication_factor = 0.6)
        : segments_(std::move(segments)),
          wall_(wall),
          mu_wall_(mu_wall),
          supports_(std::move(supports)),
          lubricated_(lubricated),
          lubrication_factor_(lubrication_factor) {
        require(!segments_.empty(), "LumenModel needs at least one segment");
        require_positive(mu_wall_, "LumenModel.mu_wall");
        require_finite(lubrication_factor_, "LumenModel.lubrication_factor");
        require(lubrication_factor_ > 0.0 && lubrication_factor_ <= 1.0,
                "LumenModel.lubrication_factor must lie in (0, 1]");
        if (const auto* e = std::get_if<ElasticWall>(&wall_)) {
            require_positive(e->hoop_stiffness_N_per_mm, "ElasticWall.hoop_stiffness_N_per_mm");
            require_nonneg(e->collapse_preload_N, "ElasticWall.collapse_preload_N");
            require(e->conformity >= 0.0 && e->conformity <= 1.0, "ElasticWall.conformity must lie in [0, 1]");
        }
        starts_.reserve(segments_.size());
        double s = 0.0;
        for (const auto& seg : segments_) {
            seg.validate();
            starts_.push_back(s);
            s += seg.length();
        }
        total_ = s;
        for (double p : supports_) {
            require_finite(p, "support position");
            require(p >= 0.0 && p <= total_, "support position must lie within the lumen");
        }
        for (std::size_t i = 1; i < segments_.size(); ++i) {
            const double joint = starts_[i];
            if (std::abs(radius_in(i - 1, joint) - radius_in(i, joint)) > 1e-9)
                throw InvalidArgument("local radius is discontinuous at the joint before segment " +
                                      std::to_string(i));
        }
    }

    const std::vector<LumenSegment>& segments() const { return segments_; }
    const Wall& wall() const { return wall_; }
    double mu_wall() const { return mu_wall_; }
    const std::vector<double>& supports() const { return supports_; }
    bool lubricated() const { return lubricated_; }
    double total_length() const { return total_; }
    bool is_rigid() const { return std::holds_alternative<RigidWall>(wall_); }
    bool is_collapsed() const {
        const auto* e = std::get_if<ElasticWall>(&wall_);
        return e && e->collapsed;
    }

    /// Wall friction for resistive sliding terms (lubrication applied).
    double sliding_friction() const { return mu_wall_ * (lubricated_ ? lubrication_factor_ : 1.0); }

    double segment_start(std::size_t i) const { return starts_.at(i); }

    std::size_t segment_index(double s) const {
        check_range(s);
        std::size_t i = segments_.size() - 1;
        while (i > 0 && s < starts_[i]) --i;
        return i;
    }

    /// Nominal radius plus waviness (phase on the global arclength). A
    /// collapsed wall still reports its rest radius.
    double local_radius(double s) const { return radius_in(segment_index(s), s); }

    LocalWall local_wall(double s) const {
        check_range(s);
        LocalWall w;
        if (const auto* e = std::get_if<ElasticWall>(&wall_)) {
            bool supported = false;
            for (double p : supports_) supported = supported || std::abs(s - p) <= kSupportHalfWidth_mm;
            if (!supported) {
                w.rigid = false;
                w.stiffness_N_per_mm = e->hoop_stiffness_N_per_mm;
                w.collapsed = e->collapsed;
                w.collapse_preload_N = e->collapse_preload_N;
                w.conformity = e->conformity;
            }
        }
        return w;
    }

    /// Number of elbows whose entry lies strictly before `s`.
    int elbows_entered(double s) const {
        int n = 0;
        for (std::size_t i = 0; i < segments_.size(); ++i)
            if (segments_[i].is_elbow() && starts_[i] < s) ++n;
        return n;
    }

    Pose centerline_pose(double s) const {
        const std::size_t idx = segment_index(s);
        Pose pose;  // entry at the origin heading +x
        double heading = 0.0;
        for (std::size_t i = 0; i <= idx; ++i) {
            const double len = (i == idx) ? s - starts_[i] : segments_[i].length();
            advance(pose, heading, segments_[i], len);
        }
        pose.tangent = {std::cos(heading), std::sin(heading), 0.0};
        return pose;
    }

private:
    void check_range(double s) const {
        require_finite(s, "arclength");
        if (s < 0.0 || s > total_)
            throw InvalidArgument("arclength " + std::to_string(s) + " mm outside [0, " +
                                  std::to_string(total_) + "]");
    }

    double radius_in(std::size_t i, double s) const {
        const auto& seg = segments_[i];
        const double wave = seg.waviness.amplitude_mm *
                            std::sin(2.0 * std::numbers::pi * s / seg.waviness.period_mm);
        return 0.5 * seg.diameter_mm + wave;
    }

    static void advance(Pose& pose, double& heading, const LumenSegment& seg, double len) {
        if (const auto* e = std::get_if<Elbow>(&seg.kind)) {
            const double rb = e->bend_radius_mm;
            const double dphi = len / rb;
            // centre of curvature lies to the left of the heading
            const double cx = pose.position[0] - rb * std::sin(heading);
            const double cy = pose.position[1] + rb * std::cos(heading);
            heading += dphi;
            pose.position[0] = cx + rb * std::sin(heading);
            pose.position[1] = cy - rb * std::cos(heading);
        } else {
            pose.position[0] += len * std::cos(heading);
            pose.position[1] += len * std::sin(heading);
        }
    }

    std::vector<LumenSegment> segments_;
    std::vector<double> starts_;
    Wall wall_;
    double mu_wall_;
    std::vector<double> supports_;
    bool lubricated_;
    double lubrication_factor_;
    double total_ = 0.0;
};

/// Parameters of the soft phantom shared by its supported and collapsed
/// variants. Values are calibration inputs.
struct PhantomParams {
    double diameter_mm = 85.0;
    double elbow_radius_mm = 75.0;
    double total_length_mm = 600.0;
    Waviness waviness{2.0, 40.0};
    double mu_wall = 1.0;
    double hoop_stiffness_N_per_mm = 0.018;
    double collapse_preload_N = 0.13;
    double conformity_supported = 0.37;
    double conformity_collapsed = 0.6;
    double lubrication_factor = 0.6;
};

struct PipeParams {
    double length_mm = 300.0;
    double mu_wall = 0.5;
};

/// Default support positions: entrance, exit, and either side of the elbow.
inline std::vector<double> phantom_supports(const PhantomParams& p) {
    const double elbow = p.elbow_radius_mm * std::numbers::pi / 2.0;
    const double straight = 0.5 * (p.total_length_mm - elbow);
    return {0.0, straight, straight + elbow, p.total_length_mm};
}

inline LumenModel make_pipe(double diameter_mm, const PipeParams& p = {}) {
    return LumenModel({LumenSegment{Straight{p.length_mm}, diameter_mm, {}}}, RigidWall{}, p.mu_wall);
}

inline LumenModel make_phantom(bool collapsed, const PhantomParams& p = {}) {
    const double elbow = p.elbow_radius_mm * std::numbers::pi / 2.0;
    const double straight = 0.5 * (p.total_length_mm - elbow);
    std::vector<LumenSegment> segs{
        {Straight{straight}, p.diameter_mm, p.waviness},
        {Elbow{p.elbow_radius_mm, 90.0}, p.diameter_mm, p.waviness},
        {Straight{straight}, p.diameter_mm, p.waviness},
    };
    ElasticWall wall{p.hoop_stiffness_N_per_mm, collapsed, collapsed ? p.collapse_preload_N : 0.0,
                     collapsed ? p.conformity_collapsed : p.conformity_supported};
    return LumenModel(std::move(segs), wall, p.mu_wall,
                      collapsed ? std::vector<double>{} : phantom_supports(p), true, p.lubrication_factor);
}

/// The named test fixtures: three rigid pipes and the two phantom variants.
inline std::map<std::string, LumenModel> paper_fixtures(const PhantomParams& phantom = {},
                                                         const PipeParams& pipe = {}) {
    std::map<std::string, LumenModel> m;
    m.emplace("pipe74", make_pipe(74.0, pipe));
    m.emplace("pipe84", make_pipe(84.0, pipe));
    m.emplace("pipe94", make_pipe(94.0, pipe));
    m.emplace("phantom_supported", make_phantom(false, phantom));
    m.emplace("phantom_collapsed", make_phantom(true, phantom));
    return m;
}

}  // namespace softscreen::lumen
