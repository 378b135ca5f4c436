// Rest geometry and result types for the axisymmetric toroidal chamber.
//
// The chamber cross-section is a closed polyline in the (r, z) half-plane:
// a rounded rectangle whose inner wall rests on the chassis cylinder. Both
// flange styles share the same loop and the same discretization; they differ
// only in which inner-wall nodes are clamped to the chassis.
#pragma once

#include "softscreen/core/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace softscreen::membrane {

enum class FlangeStyle { Central, Lateral };

inline std::string to_string(FlangeStyle style) {
    return style == FlangeStyle::Central ? "CF" : "LF";
}

inline FlangeStyle flange_style_from_string(const std::string& s) {
    if (s == "CF" || s == "central") return FlangeStyle::Central;
    if (s == "LF" || s == "lateral") return FlangeStyle::Lateral;
    throw InvalidArgument("unknown flange style '" + s + "' (expected CF or LF)");
}

/// First-order incompressible Ogden membrane.
struct OgdenMaterial {
    double mu_kPa = 0.0;
    double alpha = 0.0;
    double thickness_mm = 0.0;

    void validate() const {
        require_positive(mu_kPa, "OgdenMaterial.mu_kPa");
        require_finite(alpha, "OgdenMaterial.alpha");
        require(alpha != 0.0, "OgdenMaterial.alpha must be non-zero");
        require_positive(thickness_mm, "OgdenMaterial.thickness_mm");
    }
};

struct ChamberProfile {
    FlangeStyle flange_style = FlangeStyle::Lateral;
    double footprint_width_mm = 0.0;
    double rest_outer_radius_mm = 0.0;
    double chassis_radius_mm = 0.0;
    int n_nodes = 48;

    void validate() const {
        require_positive(chassis_radius_mm, "ChamberProfile.chassis_radius_mm");
        require_positive(footprint_width_mm, "ChamberProfile.footprint_width_mm");
        require_finite(rest_outer_radius_mm, "ChamberProfile.rest_outer_radius_mm");
        require(rest_outer_radius_mm > chassis_radius_mm,
                "ChamberProfile.rest_outer_radius_mm must exceed chassis_radius_mm");
        require(n_nodes >= 16, "ChamberProfile.n_nodes must be >= 16");
        require(n_nodes % 2 == 0, "ChamberProfile.n_nodes must be even (mirror-symmetric mesh)");
    }
};

struct Node {
    double r = 0.0;  // mm
    double z = 0.0;  // mm
};

/// Discretized rest configuration. Node order runs around the closed loop;
/// segment i joins node i and node (i + 1) mod n.
struct RestGeometry {
    std::vector<Node> nodes;
    std::vector<bool> pinned;
    std::vector<bool> crown;       // outer flat wall, carries the tracks
    std::vector<bool> inner_wall;  // rests on the chassis when unloaded
    double chassis_radius_mm = 0.0;
    double rest_outer_radius_mm = 0.0;

    std::size_t size() const { return nodes.size(); }
};

/// Inflated equilibrium of one chamber.
struct ChamberShape {
    std::vector<Node> nodes;
    double pressure_kPa = 0.0;
    double enclosed_volume_mm3 = 0.0;
    double max_radial_displacement_mm = 0.0;
    double chassis_contact_pressure_kPa = 0.0;
    double chassis_contact_area_mm2 = 0.0;
    double max_principal_stress_kPa = 0.0;
    double max_principal_stretch = 1.0;
    double gradient_norm = 0.0;
    int iterations = 0;
    double total_energy_Nmm = 0.0;
};

struct StiffnessResult {
    double shear_force_N = 0.0;
    double lateral_displacement_mm = 0.0;
    double axial_stiffness_N_per_mm = 0.0;
};

namespace detail {

struct Section {
    // Straight when arc_radius == 0, otherwise a circular arc about (cr, cz)
    // swept from angle a0 to a1 (angles measured in the (z, r) plane).
    Node from, to;
    double arc_radius = 0.0;
    double cr = 0.0, cz = 0.0, a0 = 0.0, a1 = 0.0;
    bool inner = false;
    bool crown = false;

    double length() const {
        if (arc_radius == 0.0) return std::hypot(to.r - from.r, to.z - from.z);
        return arc_radius * std::abs(a1 - a0);
    }
    Node at(double t) const {
        if (arc_radius == 0.0)
            return {from.r + t * (to.r - from.r), from.z + t * (to.z - from.z)};
        const double a = a0 + t * (a1 - a0);
        return {cr + arc_radius * std::sin(a), cz + arc_radius * std::cos(a)};
    }
};

inline Section line(Node a, Node b, bool inner = false, bool crown = false) {
    Section s;
    s.from = a;
    s.to = b;
    s.inner = inner;
    s.crown = crown;
    return s;
}

inline Section arc(double cr, double cz, double radius, double a0, double a1) {
    Section s;
    s.arc_radius = radius;
    s.cr = cr;
    s.cz = cz;
    s.a0 = a0;
    s.a1 = a1;
    s.from = s.at(0.0);
    s.to = s.at(1.0);
    return s;
}

// Largest-remainder allocation with at least one node per section.
inline std::vector<int> allocate_nodes(const std::vector<double>& lengths, int total) {
    double sum = 0.0;
    for (double l : lengths) sum += l;
    const int k = static_cast<int>(lengths.size());
    std::vector<int> count(k, 1);
    int remaining = total - k;
    require(remaining >= 0, "too few nodes for the chamber sections");
    std::vector<double> share(k);
    int assigned = 0;
    for (int i = 0; i < k; ++i) {
        share[i] = remaining * lengths[i] / sum;
        const int whole = static_cast<int>(std::floor(share[i]));
        count[i] += whole;
        assigned += whole;
        share[i] -= whole;
    }
    for (int left = remaining - assigned; left > 0; --left) {
        const auto it = std::max_element(share.begin(), share.end());
        ++count[static_cast<std::size_t>(it - share.begin())];
        *it = -1.0;
    }
    return count;
}

}  // namespace detail

/// Corner radius of the rounded-rectangle cross-section.
inline double corner_radius(const ChamberProfile& p) {
    return 0.2 * std::min(p.rest_outer_radius_mm - p.chassis_radius_mm, p.footprint_width_mm);
}

/// Builds the mirror-symmetric rest loop. Node 0 sits at the middle of the
/// inner wall, node n/2 at the middle of the crown.
inline RestGeometry build_rest_geometry(const ChamberProfile& profile) {
    profile.validate();
    const double rc_in = profile.chassis_radius_mm;
    const double rc_out = profile.rest_outer_radius_mm;
    const double half_w = 0.5 * profile.footprint_width_mm;
    const double corner = corner_radius(profile);
    const double flat_end = half_w - corner;             // inner/outer flats end here
    const double flange_width = profile.footprint_width_mm / 6.0;
    const double central_edge = 0.5 * flange_width;      // CF flange: |z| <= central_edge
    const double lateral_start = flat_end - flange_width;  // LF flange: lateral_start <= |z| <= flat_end
    constexpr double pi = std::numbers::pi;

    // Half loop from the inner-wall centre to the crown centre (z >= 0).
    std::vector<detail::Section> half{
        detail::line({rc_in, 0.0}, {rc_in, central_edge}, true),
        detail::line({rc_in, central_edge}, {rc_in, lateral_start}, true),
        detail::line({rc_in, lateral_start}, {rc_in, flat_end}, true),
        detail::arc(rc_in + corner, flat_end, corner, -0.5 * pi, 0.0),
        detail::line({rc_in + corner, half_w}, {rc_out - corner, half_w}),
        detail::arc(rc_out - corner, flat_end, corner, 0.0, 0.5 * pi),
        detail::line({rc_out, flat_end}, {rc_out, 0.0}, false, true),
    };
    std::vector<double> lengths;
    for (const auto& s : half) lengths.push_back(s.length());
    const int n = profile.n_nodes;
    const auto counts = detail::allocate_nodes(lengths, n / 2);

    RestGeometry g;
    g.chassis_radius_mm = rc_in;
    g.rest_outer_radius_mm = rc_out;
    g.nodes.resize(n);
    g.inner_wall.assign(n, false);
    g.crown.assign(n, false);
    g.pinned.assign(n, false);

    int idx = 0;
    for (std::size_t s = 0; s < half.size(); ++s) {
        for (int j = 0; j < counts[s]; ++j, ++idx) {
            g.nodes[idx] = half[s].at(static_cast<double>(j) / counts[s]);
            // A section start belongs to the previous section's flags as well
            // (shared breakpoint), so inner/crown flags use the closed interval.
            g.inner_wall[idx] = half[s].inner || (j == 0 && s > 0 && half[s - 1].inner);
            g.crown[idx] = half[s].crown;
        }
    }
    g.nodes[n / 2] = {rc_out, 0.0};
    g.crown[n / 2] = true;
    for (int k = 1; k < n / 2; ++k) {
        g.nodes[n - k] = {g.nodes[k].r, -g.nodes[k].z};
        g.inner_wall[n - k] = g.inner_wall[k];
        g.crown[n - k] = g.crown[k];
    }
    g.nodes[0] = {rc_in, 0.0};

    constexpr double tol = 1e-9;
    for (int i = 0; i < n; ++i) {
        if (!g.inner_wall[i]) continue;
        const double az = std::abs(g.nodes[i].z);
        if (profile.flange_style == FlangeStyle::Central)
            g.pinned[i] = az <= central_edge + tol;
        else
            g.pinned[i] = az >= lateral_start - tol && az <= flat_end + tol;
    }
    return g;
}

/// Volume of revolution enclosed by the loop (Pappus / Green), mm^3.
inline double enclosed_volume(const std::vector<Node>& nodes) {
    const std::size_t n = nodes.size();
    double v = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Node& a = nodes[i];
        const Node& b = nodes[(i + 1) % n];
        v += (a.z - b.z) * (a.r * a.r + a.r * b.r + b.r * b.r);
    }
    return std::numbers::pi / 3.0 * v;
}

}  // namespace softscreen::membrane
