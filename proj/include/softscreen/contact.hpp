// Robot-lumen interaction: per-track normal forces from a series-spring
// balance between the inflated chambers and the wall, Coulomb traction,
// internal track-chamber drag and the differential-inflation tilt.
//
// Frame: looking along the robot axis, angles are measured from the
// horizontal, +y is up. The robot centre of each chamber section may sag
// by an offset e (positive downward) when gravity is on.
#pragma once

#include "softscreen/core/error.hpp"
#include "softscreen/membrane.hpp"
#include "softscreen/transmission.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace softscreen::contact {

inline constexpr double kContactThreshold_N = 1e-3;

/// Anything that tells the contact model how far one chamber pushes its
/// tracks out at a pressure and how stiff the crown ring is there.
template <class C>
concept ChamberModel = requires(const C& c, double p) {
    { c.radial_displacement_mm(p) } -> std::convertible_to<double>;
    { c.ring_stiffness_N_per_mm(p) } -> std::convertible_to<double>;
};

/// Piecewise-linear chamber response sampled from the membrane solver.
class ChamberTable {
public:
    ChamberTable() = default;

    ChamberTable(std::vector<double> pressures, std::vector<double> displacement,
                 std::vector<double> stiffness, double overinflation_kPa = INFINITY)
        : p_(std::move(pressures)),
          dr_(std::move(displacement)),
          k_(std::move(stiffness)),
          overinflation_kPa_(overinflation_kPa) {
        require(p_.size() >= 2, "ChamberTable needs at least two samples");
        require(dr_.size() == p_.size() && k_.size() == p_.size(), "ChamberTable columns differ in length");
        require(p_.front() == 0.0, "ChamberTable must start at 0 kPa");
        for (std::size_t i = 0; i < p_.size(); ++i) {
            require_nonneg(dr_[i], "ChamberTable displacement");
            require_positive(k_[i], "ChamberTable stiffness");
            if (i) require(p_[i] > p_[i - 1], "ChamberTable pressures must increase");
        }
    }

    /// Samples a membrane chamber every `step_kPa` up to `max_kPa`. The table
    /// stops at the first over-inflated pressure, which is remembered.
    static ChamberTable sample(const membrane::Chamber& chamber, double step_kPa, double max_kPa) {
        require_positive(step_kPa, "step_kPa");
        require_positive(max_kPa, "max_kPa");
        std::vector<double> p, dr, k;
        double cap = INFINITY;
        std::optional<membrane::ChamberShape> prev;
        const int n = static_cast<int>(std::floor(max_kPa / step_kPa + 1e-9));
        for (int i = 0; i <= n; ++i) {
            const double pi = i * step_kPa;
            try {
                auto shape = chamber.inflate(pi, prev ? &*prev : nullptr);
                const double kr = chamber.radial_secant_stiffness(pi, 0.25, true, &shape);
                p.push_back(pi);
                dr.push_back(shape.max_radial_displacement_mm);
                k.push_back(kr);
                prev = std::move(shape);
            } catch (const membrane::OverInflationError& e) {
                cap = e.pressure_kPa;
                break;
            }
        }
        return ChamberTable(std::move(p), std::move(dr), std::move(k), cap);
    }

    double radial_displacement_mm(double p) const { return lookup(dr_, p); }
    double ring_stiffness_N_per_mm(double p) const { return lookup(k_, p); }
    double max_pressure_kPa() const { return p_.back(); }
    /// First sampled pressure whose equilibrium broke the stretch cap
    /// (infinite when the table ended before reaching it).
    double overinflation_kPa() const { return overinflation_kPa_; }

    /// Lowest tabulated pressure whose displacement reaches `dr` (linear
    /// inverse on the monotone column).
    double pressure_for_displacement(double dr) const {
        require_nonneg(dr, "displacement");
        for (std::size_t i = 1; i < p_.size(); ++i) {
            if (dr_[i] >= dr) {
                const double span = dr_[i] - dr_[i - 1];
                const double w = span > 0.0 ? (dr - dr_[i - 1]) / span : 1.0;
                return p_[i - 1] + w * (p_[i] - p_[i - 1]);
            }
        }
        throw InvalidArgument("displacement " + std::to_string(dr) + " mm is beyond the chamber table");
    }

    const std::vector<double>& pressures() const { return p_; }
    const std::vector<double>& displacements() const { return dr_; }
    const std::vector<double>& stiffnesses() const { return k_; }

private:
    double lookup(const std::vector<double>& col, double p) const {
        require_nonneg(p, "pressure_kPa");
        if (p > p_.back() + 1e-12) {
            if (p >= overinflation_kPa_)
                throw membrane::OverInflationError("pressure " + std::to_string(p) +
                                                       " kPa is past the over-inflation limit",
                                                   INFINITY, p);
            throw InvalidArgument("pressure " + std::to_string(p) + " kPa is beyond the chamber table");
        }
        auto it = std::upper_bound(p_.begin(), p_.end(), p);
        if (it == p_.end()) return col.back();
        const std::size_t i = static_cast<std::size_t>(it - p_.begin());
        const double w = (p - p_[i - 1]) / (p_[i] - p_[i - 1]);
        return col[i - 1] + w * (col[i] - col[i - 1]);
    }

    std::vector<double> p_, dr_, k_;
    double overinflation_kPa_ = INFINITY;
};

struct TrackSet {
    int n_tracks = 6;
    double mu_track_lumen = 0.5;
    double mu_track_chamber = 0.3;
    double track_band_stiffness_N_per_mm = 5.0;
    double guide_compliance = 1.0;
    double max_guide_opening_deg = 60.0;
    double guide_link_length_mm = 24.0;
    double track_thickness_mm = 2.5;
    /// c_p of the internal drag law, N per kPa before the friction factor.
    double drag_coefficient_N_per_kPa = 1.0;

    void validate() const {
        require(n_tracks >= 3, "TrackSet.n_tracks must be >= 3");
        require_finite(mu_track_lumen, "TrackSet.mu_track_lumen");
        require(mu_track_lumen >= 0.0 && mu_track_lumen <= 2.0, "TrackSet.mu_track_lumen must lie in [0, 2]");
        require_finite(mu_track_chamber, "TrackSet.mu_track_chamber");
        require(mu_track_chamber >= 0.0 && mu_track_chamber <= 2.0,
                "TrackSet.mu_track_chamber must lie in [0, 2]");
        require_positive(track_band_stiffness_N_per_mm, "TrackSet.track_band_stiffness_N_per_mm");
        require_finite(guide_compliance, "TrackSet.guide_compliance");
        require(guide_compliance >= 0.0 && guide_compliance <= 1.0, "TrackSet.guide_compliance must lie in [0, 1]");
        require_finite(max_guide_opening_deg, "TrackSet.max_guide_opening_deg");
        require(max_guide_opening_deg > 0.0 && max_guide_opening_deg <= 90.0,
                "TrackSet.max_guide_opening_deg must lie in (0, 90]");
        require_positive(guide_link_length_mm, "TrackSet.guide_link_length_mm");
        require_nonneg(track_thickness_mm, "TrackSet.track_thickness_mm");
        require_nonneg(drag_coefficient_N_per_kPa, "TrackSet.drag_coefficient_N_per_kPa");
    }

    /// Angular position of track k; one track sits at the top, one at the bottom.
    double track_angle_rad(int k) const {
        return std::numbers::pi / 2.0 + 2.0 * std::numbers::pi * k / n_tracks;
    }

    /// Largest radial lift the deployable guides allow.
    double max_lift_mm() const {
        return guide_link_length_mm * std::sin(transmission::deg_to_rad(max_guide_opening_deg));
    }
};

struct RobotGeometry {
    double chamber_rest_radius_mm = 30.0;  // outer radius of an uninflated chamber
    double chamber_spacing_mm = 82.0;      // axial distance between the two chambers
    double body_length_mm = 110.0;
    double weight_N = 0.4;

    void validate() const {
        require_positive(chamber_rest_radius_mm, "RobotGeometry.chamber_rest_radius_mm");
        require_positive(chamber_spacing_mm, "RobotGeometry.chamber_spacing_mm");
        require_positive(body_length_mm, "RobotGeometry.body_length_mm");
        require(body_length_mm >= chamber_spacing_mm, "RobotGeometry.body_length_mm must cover the chamber spacing");
        require_nonneg(weight_N, "RobotGeometry.weight_N");
    }
    /// Distance from the front chamber plane to the nose.
    double nose_overhang_mm() const { return 0.5 * (body_length_mm - chamber_spacing_mm); }
};

/// Wall seen by the tracks at one position.
struct WallContact {
    double lumen_radius_mm = 0.0;
    double stiffness_N_per_mm = INFINITY;  // per track; infinite for a rigid wall
    bool collapsed = false;
    double collapse_preload_N = 0.0;       // per track, only when collapsed

    bool rigid() const { return std::isinf(stiffness_N_per_mm); }
};

/// Resolved contact of a single track against the wall.
struct TrackContact {
    double interference_mm = 0.0;
    double chamber_compression_mm = 0.0;  // chamber + band
    double wall_deflection_mm = 0.0;
    double normal_N = 0.0;
    double chamber_stiffness_N_per_mm = 0.0;  // chamber and band in series
    double wall_stiffness_N_per_mm = INFINITY;
};

struct ContactState {
    double effective_radius_mm = 0.0;
    std::vector<double> per_track_normal_N;
    int tracks_in_contact = 0;
    double internal_drag_N = 0.0;
    double tilt_deg = 0.0;
    bool jammed = false;
    double collapse_preload_N = 0.0;           // per track and section
    std::array<double, 2> free_radius_mm{};
    std::array<double, 2> center_offset_mm{};  // downward sag, front and rear
    std::array<std::vector<TrackContact>, 2> tracks;

    double total_normal_N() const {
        double s = 0.0;
        for (double n : per_track_normal_N) s += n;
        return s;
    }
    /// Draping preload summed over both sections.
    double total_preload_N() const {
        return 2.0 * collapse_preload_N * static_cast<double>(per_track_normal_N.size());
    }
};

struct TractionResult {
    double available_traction_N = 0.0;
    double required_force_N = 0.0;
    double margin_N = 0.0;
    double usable_axial_N = 0.0;
    bool stalled = false;
};

namespace detail {

/// Splits an interference between chamber and wall so both springs carry
/// the same force. Returns the chamber share.
inline double split_interference(double delta, double k_chamber, double k_wall) {
    if (std::isinf(k_wall)) return delta;
    const auto balance = [&](double dc) { return k_chamber * dc - k_wall * (delta - dc); };
    std::uintmax_t iters = 100;
    const auto [lo, hi] = boost::math::tools::toms748_solve(balance, 0.0, delta, balance(0.0), balance(delta),
                                                            boost::math::tools::eps_tolerance<double>(50), iters);
    return 0.5 * (lo + hi);
}

/// Distance from an offset centre (0, -e) to the wall circle along angle theta.
inline double wall_distance(double radius, double e, double theta) {
    if (e == 0.0) return radius;
    const double s = std::sin(theta);
    return e * s + std::sqrt(std::max(0.0, radius * radius - e * e * (1.0 - s * s)));
}

struct Section {
    std::vector<TrackContact> tracks;
    double offset = 0.0;
};

inline Section resolve_section(double free_radius, double wall_radius, double k_cb, const WallContact& wall,
                               const TrackSet& ts, double e) {
    Section out;
    out.offset = e;
    out.tracks.resize(static_cast<std::size_t>(ts.n_tracks));
    for (int k = 0; k < ts.n_tracks; ++k) {
        TrackContact& t = out.tracks[static_cast<std::size_t>(k)];
        t.chamber_stiffness_N_per_mm = k_cb;
        t.wall_stiffness_N_per_mm = wall.stiffness_N_per_mm;
        const double reach = wall_distance(wall_radius, e, ts.track_angle_rad(k));
        t.interference_mm = free_radius - reach;
        if (t.interference_mm > 0.0) {
            t.chamber_compression_mm = split_interference(t.interference_mm, k_cb, wall.stiffness_N_per_mm);
            t.wall_deflection_mm = t.interference_mm - t.chamber_compression_mm;
            t.normal_N = k_cb * t.chamber_compression_mm;
        }
        if (wall.collapsed) t.normal_N += wall.collapse_preload_N;
    }
    return out;
}

/// Net upward wall force on one section.
inline double lift(const Section& s, const TrackSet& ts) {
    double f = 0.0;
    for (int k = 0; k < ts.n_tracks; ++k) f -= s.tracks[static_cast<std::size_t>(k)].normal_N * std::sin(ts.track_angle_rad(k));
    // the track layout is mirror-symmetric; drop rounding noise at e = 0
    return std::abs(f) < 1e-12 ? 0.0 : f;
}

}  // namespace detail

/// Largest chassis tilt before a body corner meets the wall:
/// (L/2)·sin(t) + r·cos(t) = R.
inline double max_tilt_deg(const RobotGeometry& geom, double lumen_radius_mm, double body_radius_mm) {
    const double half = 0.5 * geom.body_length_mm;
    const double reach = std::hypot(half, body_radius_mm);
    if (lumen_radius_mm >= reach) return 90.0;
    if (lumen_radius_mm <= body_radius_mm) return 0.0;
    const double phase = std::atan2(body_radius_mm, half);
    return transmission::rad_to_deg(std::asin(lumen_radius_mm / reach) - phase);
}

/// Free outer radius of one chamber section, tracks included.
template <ChamberModel C>
double free_radius_mm(const C& chamber, const TrackSet& tracks, const RobotGeometry& geom, double pressure_kPa) {
    const double dr = std::min(chamber.radial_displacement_mm(pressure_kPa), tracks.max_lift_mm());
    return geom.chamber_rest_radius_mm + dr + tracks.track_thickness_mm;
}

template <ChamberModel C>
double internal_drag_N(const C& chamber, const TrackSet& tracks, const RobotGeometry& geom, double pressure_kPa) {
    const double r0 = free_radius_mm(chamber, tracks, geom, 0.0);
    const double area_scale = free_radius_mm(chamber, tracks, geom, pressure_kPa) / r0;
    return tracks.mu_track_chamber * tracks.drag_coefficient_N_per_kPa * pressure_kPa * area_scale *
           (1.0 - 0.5 * tracks.guide_compliance);
}

/// Quasi-static contact of both chamber sections against the wall.
///
/// Each track is a chamber spring (crown ring stiffness shared by the
/// tracks, in series with the track band) pressed against a wall spring.
/// A collapsed wall lies on the uninflated robot: its contact radius is the
/// robot's rest radius and every track carries the draping preload on top
/// of the spring force. With gravity each section sags until the net wall
/// lift carries half the weight.
template <ChamberModel C>
ContactState equilibrium_contact(std::array<double, 2> pressures_kPa, const WallContact& wall, const TrackSet& tracks,
                                 const RobotGeometry& geom, const C& chamber, bool gravity) {
    tracks.validate();
    geom.validate();
    require_positive(wall.lumen_radius_mm, "lumen_radius_mm");
    require(wall.stiffness_N_per_mm > 0.0, "wall stiffness must be > 0");
    require_nonneg(wall.collapse_preload_N, "collapse_preload_N");
    for (double p : pressures_kPa) require_nonneg(p, "pressure_kPa");

    ContactState st;
    st.collapse_preload_N = wall.collapsed ? wall.collapse_preload_N : 0.0;
    const double rest_radius = geom.chamber_rest_radius_mm + tracks.track_thickness_mm;
    const double wall_radius = wall.collapsed ? rest_radius : wall.lumen_radius_mm;
    st.jammed = rest_radius > wall.lumen_radius_mm;
    st.per_track_normal_N.assign(static_cast<std::size_t>(tracks.n_tracks), 0.0);

    double extent_max = 0.0;
    for (int side = 0; side < 2; ++side) {
        const double p = pressures_kPa[static_cast<std::size_t>(side)];
        const double rf = free_radius_mm(chamber, tracks, geom, p);
        const double kc = chamber.ring_stiffness_N_per_mm(p) / tracks.n_tracks;
        const double kcb = 1.0 / (1.0 / kc + 1.0 / tracks.track_band_stiffness_N_per_mm);
        st.free_radius_mm[static_cast<std::size_t>(side)] = rf;
        st.internal_drag_N += internal_drag_N(chamber, tracks, geom, p);

        detail::Section sec = detail::resolve_section(rf, wall_radius, kcb, wall, tracks, 0.0);
        const double target = gravity ? 0.5 * geom.weight_N : 0.0;
        if (target > 0.0) {
            const auto residual = [&](double e) {
                return detail::lift(detail::resolve_section(rf, wall_radius, kcb, wall, tracks, e), tracks) - target;
            };
            double hi = 1.0;
            int guard = 0;
            while (residual(hi) < 0.0) {
                hi *= 2.0;
                if (++guard > 60) throw Error("gravity balance has no bracket");
            }
            std::uintmax_t iters = 200;
            const auto [a, b] = boost::math::tools::toms748_solve(
                residual, 0.0, hi, residual(0.0), residual(hi), boost::math::tools::eps_tolerance<double>(50), iters);
            sec = detail::resolve_section(rf, wall_radius, kcb, wall, tracks, 0.5 * (a + b));
        }
        st.center_offset_mm[static_cast<std::size_t>(side)] = sec.offset;

        double extent = 0.0;
        for (int k = 0; k < tracks.n_tracks; ++k) {
            const auto& t = sec.tracks[static_cast<std::size_t>(k)];
            st.per_track_normal_N[static_cast<std::size_t>(k)] += t.normal_N;
            extent += t.interference_mm > 0.0 ? rf - t.chamber_compression_mm : rf;
        }
        if (wall.rigid() && sec.offset == 0.0 && rf > wall_radius) extent = tracks.n_tracks * wall_radius;
        extent_max = std::max(extent_max, extent / tracks.n_tracks);
        st.tracks[static_cast<std::size_t>(side)] = std::move(sec.tracks);
    }
    st.effective_radius_mm = extent_max;
    for (double n : st.per_track_normal_N)
        if (n > kContactThreshold_N) ++st.tracks_in_contact;

    if (st.jammed) {
        st.tilt_deg = 0.0;
    } else {
        // Sign is fixed from the ordered pair so that swapping the chambers
        // flips the result exactly.
        const double ef = st.center_offset_mm[0], er = st.center_offset_mm[1];
        const double mag = transmission::rad_to_deg(std::atan2(std::abs(er - ef), geom.chamber_spacing_mm));
        const double limit = max_tilt_deg(geom, wall.lumen_radius_mm, rest_radius);
        const double t = std::min(mag, limit);
        st.tilt_deg = er > ef ? t : (er < ef ? -t : 0.0);
    }
    return st;
}

inline TractionResult traction(const ContactState& state, const TrackSet& tracks,
                               const transmission::TransmissionForces& forces, double required_force_N = 0.0) {
    require_nonneg(required_force_N, "required_force_N");
    TractionResult r;
    r.required_force_N = required_force_N;
    r.usable_axial_N = forces.axial_N - state.internal_drag_N;
    const double friction = tracks.mu_track_lumen * state.total_normal_N();
    r.available_traction_N = std::max(0.0, std::min(friction, r.usable_axial_N));
    r.margin_N = r.available_traction_N - required_force_N;
    // At rest the tracks only move the body when traction beats the load.
    r.stalled = r.usable_axial_N <= 0.0 || (required_force_N > 0.0 && r.available_traction_N <= required_force_N);
    return r;
}

struct TiltResult {
    double tilt_deg = 0.0;
    bool jammed = false;
};

template <ChamberModel C>
TiltResult tilt_angle(std::array<double, 2> pressures_kPa, const WallContact& wall, const TrackSet& tracks,
                      const RobotGeometry& geom, const C& chamber, bool gravity) {
    const auto st = equilibrium_contact(pressures_kPa, wall, tracks, geom, chamber, gravity);
    return {st.tilt_deg, st.jammed};
}

/// Vertical offset of the nose from the lumen axis (up positive): the
/// front section's sag carried forward along the tilted axis.
inline double camera_offset_mm(const ContactState& st, const RobotGeometry& geom) {
    return -st.center_offset_mm[0] + geom.nose_overhang_mm() * std::tan(transmission::deg_to_rad(st.tilt_deg));
}

}  // namespace softscreen::contact
