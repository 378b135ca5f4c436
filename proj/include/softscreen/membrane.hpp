// Reduced-order axisymmetric model of one toroidal inflatable chamber.
//
// Equilibria are local minimizers of the total potential energy (see
// membrane/energy.hpp), reached by pressure continuation from the rest
// state or from a previous solution.
#pragma once

#include "softscreen/membrane/energy.hpp"
#include "softscreen/membrane/model.hpp"
#include "softscreen/membrane/solver.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace softscreen::membrane {

struct ChamberOptions {
    EnergyOptions energy;
    SolverOptions solver;
};

struct CurveRow {
    double pressure_kPa = 0.0;
    double radial_displacement_mm = 0.0;
    bool snap_through = false;
};

/// A pressure-curve point failed; `pressure_kPa` names it.
class SweepError : public Error {
public:
    SweepError(double pressure, const std::string& cause)
        : Error("pressure " + std::to_string(pressure) + " kPa: " + cause), pressure_kPa(pressure) {}
    double pressure_kPa;
};

class Chamber {
public:
    Chamber(const ChamberProfile& profile, const OgdenMaterial& material, ChamberOptions options = {})
        : Chamber(build_rest_geometry(profile), material, options) {}

    Chamber(RestGeometry rest, const OgdenMaterial& material, ChamberOptions options = {})
        : energy_(std::move(rest), material, options.energy), options_(options) {}

    const MembraneEnergy& energy() const { return energy_; }
    const ChamberOptions& options() const { return options_; }

    ChamberShape rest_shape() const { return describe(energy_.rest().nodes, LoadCase{}, 0.0, 0); }

    /// Free-inflation equilibrium at `pressure_kPa`. Continues from `warm`
    /// when given (it must be an equilibrium at a lower or equal pressure).
    ChamberShape inflate(double pressure_kPa, const ChamberShape* warm = nullptr) const {
        require_nonneg(pressure_kPa, "pressure_kPa");
        LoadCase load;
        return solve_to(pressure_kPa, warm, load);
    }

    std::vector<CurveRow> pressure_curve(std::span<const double> pressures) const {
        require(!pressures.empty(), "pressure list must not be empty");
        require(pressures.front() >= 0.0, "pressures must start at >= 0");
        for (std::size_t i = 1; i < pressures.size(); ++i)
            require(pressures[i] > pressures[i - 1], "pressures must be strictly increasing");

        std::vector<CurveRow> rows;
        std::optional<ChamberShape> prev;
        double prev_rate = -1.0;
        for (double p : pressures) {
            ChamberShape shape;
            try {
                shape = inflate(p, prev ? &*prev : nullptr);
            } catch (const Error& e) {
                throw SweepError(p, e.what());
            }
            CurveRow row{p, shape.max_radial_displacement_mm, false};
            if (!rows.empty()) {
                const double rate = (row.radial_displacement_mm - rows.back().radial_displacement_mm) /
                                    (p - rows.back().pressure_kPa);
                row.snap_through = prev_rate > 0.0 && rate > 4.0 * prev_rate &&
                                   row.radial_displacement_mm - rows.back().radial_displacement_mm > 1.0;
                prev_rate = rate;
            }
            rows.push_back(row);
            prev = std::move(shape);
        }
        return rows;
    }

    /// k_a = F / d for an axial crown load F on the inflated chamber, where d
    /// is the largest axial displacement among the loaded nodes.
    StiffnessResult axial_stiffness(double pressure_kPa, double shear_force_N,
                                    const ChamberShape* inflated = nullptr) const {
        require_positive(shear_force_N, "shear_force_N");
        const ChamberShape base = inflated ? *inflated : inflate(pressure_kPa);
        LoadCase load;
        load.pressure_kPa = pressure_kPa;
        load.crown_axial_force_N = shear_force_N;
        const auto loaded = minimize(energy_, load, base.nodes, options_.solver).nodes;
        double d = 0.0;
        for (std::size_t i = 0; i < loaded.size(); ++i)
            if (energy_.rest().crown[i]) d = std::max(d, std::abs(loaded[i].z - base.nodes[i].z));
        if (!(d > 1e-9))
            throw Error("axial displacement below numerical floor; stiffness not resolvable");
        return {shear_force_N, d, shear_force_N / d};
    }

    /// Secant radial stiffness of the whole crown ring (N/mm) about the free
    /// inflated state. Positive `delta_mm` compresses, negative extends.
    double radial_secant_stiffness(double pressure_kPa, double delta_mm = 0.25,
                                   bool include_pressure_work = true,
                                   const ChamberShape* inflated = nullptr) const {
        require(delta_mm != 0.0 && std::isfinite(delta_mm), "delta_mm must be finite and non-zero");
        const ChamberShape base = inflated ? *inflated : inflate(pressure_kPa);
        LoadCase load;
        load.pressure_kPa = pressure_kPa;
        load.include_pressure_work = include_pressure_work;
        load.crown_spring_N_per_mm = kImposeSpring;
        load.crown_radius_targets.assign(base.nodes.size(), 0.0);
        for (std::size_t i = 0; i < base.nodes.size(); ++i)
            load.crown_radius_targets[i] = base.nodes[i].r - delta_mm;
        // Without pressure work the free state is no longer an equilibrium;
        // relax it first so the secant is taken about a balanced state.
        std::vector<Node> start = base.nodes;
        std::vector<Node> reference = base.nodes;
        if (!include_pressure_work && pressure_kPa > 0.0) {
            LoadCase relaxed;
            relaxed.include_pressure_work = false;
            reference = minimize(energy_, relaxed, base.nodes, options_.solver).nodes;
            for (std::size_t i = 0; i < base.nodes.size(); ++i)
                load.crown_radius_targets[i] = reference[i].r - delta_mm;
            start = reference;
        }
        const auto loaded = minimize(energy_, load, start, options_.solver).nodes;
        double force = 0.0, moved = 0.0;
        int count = 0;
        for (std::size_t i = 0; i < loaded.size(); ++i) {
            if (!energy_.rest().crown[i]) continue;
            force += kImposeSpring * (loaded[i].r - load.crown_radius_targets[i]);
            moved += reference[i].r - loaded[i].r;
            ++count;
        }
        moved /= count;
        if (!(std::abs(moved) > 1e-12)) throw Error("imposed radial displacement not resolvable");
        return force / moved;
    }

    /// Builds the diagnostics for an arbitrary node set at a given pressure.
    ChamberShape describe(const std::vector<Node>& nodes, const LoadCase& load, double grad_norm,
                          int iterations) const {
        ChamberShape s;
        s.nodes = nodes;
        s.pressure_kPa = load.pressure_kPa;
        s.enclosed_volume_mm3 = enclosed_volume(nodes);
        const auto& rest = energy_.rest();
        double rmax = 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            rmax = std::max(rmax, nodes[i].r);
            const double cp = energy_.contact_pressure_kPa(nodes, i);
            s.chassis_contact_pressure_kPa = std::max(s.chassis_contact_pressure_kPa, cp);
            if (cp > 0.0) s.chassis_contact_area_mm2 += energy_.tributary_area(i);
            s.max_principal_stress_kPa =
                std::max(s.max_principal_stress_kPa, energy_.principal_stress_kPa(nodes, i));
        }
        s.max_radial_displacement_mm = std::max(0.0, rmax - rest.rest_outer_radius_mm);
        s.max_principal_stretch = max_stretch(energy_, nodes);
        s.gradient_norm = grad_norm;
        s.iterations = iterations;
        s.total_energy_Nmm = energy_.value(nodes, load);
        return s;
    }

private:
    static constexpr double kImposeSpring = 1e4;  // N/mm per crown node

    ChamberShape solve_to(double target, const ChamberShape* warm, LoadCase load) const {
        std::vector<Node> x = warm ? warm->nodes : energy_.rest().nodes;
        double p = warm ? warm->pressure_kPa : 0.0;
        if (warm && warm->nodes.size() != energy_.rest().size())
            throw InvalidArgument("warm start has the wrong node count");
        if (p > target) {  // unloading: restart from rest
            x = energy_.rest().nodes;
            p = 0.0;
        }
        MinimizeResult res{x, 0.0, 0.0, 0};
        const double step = options_.solver.continuation_step_kPa;
        do {
            p = std::min(target, p + step);
            if (target - p < 1e-12) p = target;
            load.pressure_kPa = p;
            res = minimize(energy_, load, res.nodes, options_.solver);
            const double stretch = max_stretch(energy_, res.nodes);
            if (stretch > options_.solver.stretch_cap)
                throw OverInflationError("principal stretch " + std::to_string(stretch) +
                                             " exceeds cap at " + std::to_string(p) + " kPa",
                                         stretch, p);
        } while (p < target);
        return describe(res.nodes, load, res.gradient_norm, res.iterations);
    }

    MembraneEnergy energy_;
    ChamberOptions options_;
};

inline ChamberShape inflate(const ChamberProfile& profile, const OgdenMaterial& material,
                            double pressure_kPa, const ChamberOptions& options = {}) {
    return Chamber(profile, material, options).inflate(pressure_kPa);
}

inline std::vector<CurveRow> pressure_curve(const ChamberProfile& profile, const OgdenMaterial& material,
                                            std::span<const double> pressures,
                                            const ChamberOptions& options = {}) {
    return Chamber(profile, material, options).pressure_curve(pressures);
}

inline StiffnessResult axial_stiffness(const ChamberProfile& profile, const OgdenMaterial& material,
                                       double pressure_kPa, double shear_force_N,
                                       const ChamberOptions& options = {}) {
    return Chamber(profile, material, options).axial_stiffness(pressure_kPa, shear_force_N);
}

inline double radial_secant_stiffness(const ChamberProfile& profile, const OgdenMaterial& material,
                                      double pressure_kPa, const ChamberOptions& options = {}) {
    return Chamber(profile, material, options).radial_secant_stiffness(pressure_kPa);
}

}  // namespace softscreen::membrane
