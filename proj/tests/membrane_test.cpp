#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace softscreen;
using namespace softscreen::membrane;
using testing_support::chamber;

namespace {

constexpr double kShear_N = 0.5;
constexpr double kLevels[] = {12.0, 14.0, 16.0, 18.0};

/// Energy gradient against a central finite difference at `nodes`.
double gradient_error(const MembraneEnergy& energy, const std::vector<Node>& nodes, const LoadCase& load) {
    Eigen::VectorXd g;
    energy.gradient_hessian(nodes, load, g, nullptr);
    const Eigen::VectorXd x = energy.pack(nodes);
    Eigen::VectorXd fd(x.size());
    const double h = 1e-6;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        Eigen::VectorXd a = x, b = x;
        a[i] += h;
        b[i] -= h;
        fd[i] = (energy.value(energy.unpack(a), load) - energy.value(energy.unpack(b), load)) / (2.0 * h);
    }
    return (g - fd).lpNorm<Eigen::Infinity>() / std::max(1e-12, g.lpNorm<Eigen::Infinity>());
}

/// Perturbs the free nodes only; pinned nodes stay where the energy expects them.
std::vector<Node> jitter(const MembraneEnergy& e, std::vector<Node> nodes, double amount, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-amount, amount);
    for (auto& n : nodes) {
        n.r += u(rng);
        n.z += u(rng);
    }
    return e.unpack(e.pack(nodes));
}

}  // namespace

TEST(MembraneEnergy, GradientMatchesCentralDifferences) {
    for (auto style : {FlangeStyle::Lateral, FlangeStyle::Central}) {
        const auto ch = chamber(style);
        const auto& e = ch.energy();
        const auto inflated = ch.inflate(10.0);
        for (unsigned seed : {1u, 2u, 3u}) {
            LoadCase load;
            load.pressure_kPa = 10.0;
            load.crown_axial_force_N = 0.5;
            load.crown_spring_N_per_mm = 3.0;
            for (const auto& n : inflated.nodes) load.crown_radius_targets.push_back(n.r - 0.3);
            const auto x = jitter(e, inflated.nodes, 0.05, seed);
            EXPECT_LT(gradient_error(e, x, load), 1e-4) << to_string(style) << " seed " << seed;
        }
        // rest state with pressure only
        LoadCase rest;
        rest.pressure_kPa = 3.0;
        EXPECT_LT(gradient_error(e, jitter(e, e.rest().nodes, 0.02, 7u), rest), 1e-4) << to_string(style);
    }
}

TEST(MembraneEnergy, EquilibriumHasNegligibleGradient) {
    const auto ch = chamber(FlangeStyle::Lateral);
    const auto s = ch.inflate(12.0);
    LoadCase load;
    load.pressure_kPa = 12.0;
    Eigen::VectorXd g;
    ch.energy().gradient_hessian(s.nodes, load, g, nullptr);
    EXPECT_LT(g.lpNorm<Eigen::Infinity>(), 1e-3);
}

TEST(MembraneEnergy, PressureDerivativeOfOptimumIsMinusVolume) {
    // envelope theorem: d(min energy)/dp = -V at the optimum
    const auto ch = chamber(FlangeStyle::Lateral);
    const double p = 10.0, h = 0.05;
    const auto lo = ch.inflate(p - h);
    const auto mid = ch.inflate(p, &lo);
    const auto hi = ch.inflate(p + h, &mid);
    const double dE = (hi.total_energy_Nmm - lo.total_energy_Nmm) / (2.0 * h);
    const double expected = -mid.enclosed_volume_mm3 * kPa_to_N_per_mm2;
    EXPECT_NEAR(dE, expected, 1e-3 * std::abs(expected));
}

TEST(MembraneChamber, RestStateAtZeroPressure) {
    for (auto style : {FlangeStyle::Lateral, FlangeStyle::Central}) {
        const auto s = chamber(style).inflate(0.0);
        EXPECT_NEAR(s.max_radial_displacement_mm, 0.0, 1e-6) << to_string(style);
    }
}

TEST(MembraneChamber, WarmStartedSweepIsMonotone) {
    for (auto style : {FlangeStyle::Lateral, FlangeStyle::Central}) {
        const auto ch = chamber(style);
        std::vector<double> ps;
        const double top = style == FlangeStyle::Lateral ? 20.0 : 18.0;
        for (double p = 0.0; p <= top + 1e-9; p += 0.5) ps.push_back(p);
        const auto rows = ch.pressure_curve(ps);
        ASSERT_EQ(rows.size(), ps.size());
        for (std::size_t i = 1; i < rows.size(); ++i)
            EXPECT_GE(rows[i].radial_displacement_mm, rows[i - 1].radial_displacement_mm)
                << to_string(style) << " at " << rows[i].pressure_kPa << " kPa";
    }
}

TEST(MembraneChamber, WarmStartAgreesWithColdStart) {
    const auto ch = chamber(FlangeStyle::Lateral);
    const auto warm0 = ch.inflate(12.0);
    const auto warm = ch.inflate(15.0, &warm0);
    const auto cold = ch.inflate(15.0);
    EXPECT_NEAR(warm.max_radial_displacement_mm, cold.max_radial_displacement_mm, 1e-3);
}

TEST(MembraneChamber, LateralFlangeStifferThanCentralAtEveryLevel) {
    const auto lf = chamber(FlangeStyle::Lateral);
    const auto cf = chamber(FlangeStyle::Central);
    for (double p : kLevels) {
        const double a = lf.axial_stiffness(p, kShear_N).axial_stiffness_N_per_mm;
        const double b = cf.axial_stiffness(p, kShear_N).axial_stiffness_N_per_mm;
        EXPECT_GT(a, b) << p << " kPa";
        ::testing::Test::RecordProperty("ka_ratio_" + std::to_string(static_cast<int>(p)) + "kPa",
                                        std::to_string(a / b));
    }
}

TEST(MembraneChamber, AxialStiffnessDecreasesWithPressure) {
    const auto lf = chamber(FlangeStyle::Lateral);
    double prev = INFINITY;
    std::optional<ChamberShape> warm;
    for (double p : kLevels) {
        const auto s = lf.inflate(p, warm ? &*warm : nullptr);
        const double k = lf.axial_stiffness(p, kShear_N, &s).axial_stiffness_N_per_mm;
        EXPECT_LT(k, prev) << p << " kPa";
        prev = k;
        warm = s;
    }
}

TEST(MembraneChamber, CentralFlangeStiffnessDecreasesBeforeBallooning) {
    const auto cf = chamber(FlangeStyle::Central);
    double prev = INFINITY;
    for (double p : {2.0, 6.0, 10.0, 14.0}) {
        const double k = cf.axial_stiffness(p, kShear_N).axial_stiffness_N_per_mm;
        EXPECT_LT(k, prev) << p << " kPa";
        prev = k;
    }
}

TEST(MembraneChamber, CentralFlangeBalloonsPastItsLimitPoint) {
    // Past ~15 kPa the CF displacement runs away and strain stiffening
    // makes k_a climb again.
    const auto cf = chamber(FlangeStyle::Central);
    const auto lf = chamber(FlangeStyle::Lateral);
    const double d14 = cf.inflate(14.0).max_radial_displacement_mm;
    const double d18 = cf.inflate(18.0).max_radial_displacement_mm;
    EXPECT_GT(d18, 2.0 * d14);
    EXPECT_GT(d18, lf.inflate(18.0).max_radial_displacement_mm);
    EXPECT_GT(cf.axial_stiffness(18.0, kShear_N).axial_stiffness_N_per_mm,
              cf.axial_stiffness(14.0, kShear_N).axial_stiffness_N_per_mm);
}

TEST(MembraneChamber, AxialResponseIsLinearForSmallLoads) {
    const auto ch = chamber(FlangeStyle::Lateral);
    const auto s = ch.inflate(14.0);
    const double d1 = ch.axial_stiffness(14.0, 0.01, &s).lateral_displacement_mm;
    const double d2 = ch.axial_stiffness(14.0, 0.02, &s).lateral_displacement_mm;
    EXPECT_NEAR(d2 / d1, 2.0, 0.01);
}

TEST(MembraneChamber, LateralFlangeReaches16mmWithinCalibratedRange) {
    const auto& cal = testing_support::calibration();
    const auto ch = chamber(FlangeStyle::Lateral);
    const auto rows = ch.pressure_curve(std::vector<double>{0.0, 5.0, 10.0, 15.0, cal.max_pressure_kPa});
    EXPECT_GE(rows.back().radial_displacement_mm, 16.0);
}

TEST(MembraneChamber, MeshRefinementChangesDisplacementLittle) {
    for (auto [style, p] : {std::pair{FlangeStyle::Lateral, 16.0}, std::pair{FlangeStyle::Central, 12.0}}) {
        const double coarse = chamber(style, 48).inflate(p).max_radial_displacement_mm;
        const double fine = chamber(style, 96).inflate(p).max_radial_displacement_mm;
        EXPECT_LT(std::abs(fine - coarse) / fine, 0.02) << to_string(style);
    }
}

TEST(MembraneChamber, InflatedShapeIsMirrorSymmetric) {
    const auto s = chamber(FlangeStyle::Lateral).inflate(14.0);
    for (const auto& a : s.nodes) {
        const bool mirrored = std::any_of(s.nodes.begin(), s.nodes.end(), [&](const Node& b) {
            return std::abs(a.r - b.r) < 1e-4 && std::abs(a.z + b.z) < 1e-4;
        });
        EXPECT_TRUE(mirrored) << a.r << ", " << a.z;
    }
}

TEST(MembraneChamber, ContactPressureOnlyWherePenetrating) {
    const auto ch = chamber(FlangeStyle::Lateral);
    const auto s = ch.inflate(16.0);
    const auto& e = ch.energy();
    bool any = false;
    for (std::size_t i = 0; i < s.nodes.size(); ++i) {
        const double cp = e.contact_pressure_kPa(s.nodes, i);
        EXPECT_GE(cp, 0.0);
        if (cp > 0.0) {
            any = true;
            EXPECT_LT(s.nodes[i].r, e.rest().chassis_radius_mm);
        } else {
            EXPECT_EQ(e.contact_force(s.nodes, i), 0.0);
        }
    }
    EXPECT_TRUE(any) << "the lateral flange bears on the chassis once inflated";
    EXPECT_GT(s.chassis_contact_area_mm2, chamber(FlangeStyle::Central).inflate(16.0).chassis_contact_area_mm2);
}

TEST(MembraneChamber, RadialSecantIsSymmetricForSmallSteps) {
    const auto ch = chamber(FlangeStyle::Lateral);
    for (double p : {0.0, 8.0, 16.0}) {
        const auto s = ch.inflate(p);
        const double kc = ch.radial_secant_stiffness(p, 0.25, true, &s);
        const double ke = ch.radial_secant_stiffness(p, -0.25, true, &s);
        EXPECT_GT(kc, 0.0);
        EXPECT_NEAR(kc / ke, 1.0, 0.10) << p << " kPa";
    }
}

TEST(MembraneChamber, StressLowerForCentralFlangeAtMatchedDisplacement) {
    const auto at16 = [](const Chamber& ch) {
        std::optional<ChamberShape> prev;
        for (double p = 0.5; p <= 30.0; p += 0.5) {
            auto s = ch.inflate(p, prev ? &*prev : nullptr);
            if (s.max_radial_displacement_mm >= 16.0) return s.max_principal_stress_kPa;
            prev = std::move(s);
        }
        return std::numeric_limits<double>::quiet_NaN();
    };
    EXPECT_LT(at16(chamber(FlangeStyle::Central)), at16(chamber(FlangeStyle::Lateral)));
}

TEST(MembraneChamber, OverInflationRaises) {
    const auto ch = chamber(FlangeStyle::Central);
    try {
        ch.inflate(25.0);
        FAIL() << "expected over-inflation";
    } catch (const OverInflationError& e) {
        EXPECT_GT(e.max_stretch, 3.0);
        EXPECT_LE(e.pressure_kPa, 25.0);
    }
}

TEST(MembraneChamber, InvalidInputsAreRejected) {
    EXPECT_THROW(chamber(FlangeStyle::Lateral, 47), InvalidArgument);
    EXPECT_THROW(chamber(FlangeStyle::Lateral).inflate(-1.0), InvalidArgument);
    EXPECT_THROW(chamber(FlangeStyle::Lateral).axial_stiffness(10.0, 0.0), InvalidArgument);
    EXPECT_THROW(chamber(FlangeStyle::Lateral).pressure_curve(std::vector<double>{0.0, 5.0, 4.0}), InvalidArgument);
    OgdenMaterial bad{0.0, 3.0, 4.0};
    EXPECT_THROW(bad.validate(), InvalidArgument);
}
