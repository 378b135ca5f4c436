#include "softscreen/transmission.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace softscreen;
using namespace softscreen::transmission;

namespace {

GearheadParams gearhead() {
    GearheadParams g;
    g.motor_torque_Nmm = 0.0352;
    g.gear_ratio = 256.0;
    g.efficiency = 0.5;
    g.max_motor_speed_radps = rpm_to_radps(12000.0);
    return g;
}

WormGearParams worm() {
    WormGearParams w;
    w.pitch_mm = 6.0;
    w.pitch_diameter_mm = 18.0;
    w.lead_angle_rad = deg_to_rad(5.5);
    w.pressure_angle_rad = 0.0;
    return w;
}

}  // namespace

TEST(Transmission, TheoreticalSpeedAtFullMotorSpeed) {
    const double v = track_speed(gearhead(), worm(), rpm_to_radps(12000.0));
    EXPECT_NEAR(v, 4.6875, 1e-9);
}

TEST(Transmission, RobotSpeedIsOnePitchPerShaftRevolution) {
    EXPECT_DOUBLE_EQ(robot_speed(2.0 * std::numbers::pi, 6.0), 6.0);
    EXPECT_DOUBLE_EQ(robot_speed(0.0, 6.0), 0.0);
}

TEST(Transmission, SpeedIsOddInMotorCommand) {
    for (double w : {1.0, 250.0, 1256.6}) {
        EXPECT_DOUBLE_EQ(track_speed(gearhead(), worm(), -w), -track_speed(gearhead(), worm(), w));
    }
}

TEST(Transmission, SpeedIsLinearInMotorCommand) {
    const double a = track_speed(gearhead(), worm(), 100.0);
    const double b = track_speed(gearhead(), worm(), 300.0);
    EXPECT_NEAR(b, 3.0 * a, 1e-12);
}

TEST(Transmission, SquareToothHasNoRadialForce) {
    const auto f = drivetrain_forces(gearhead(), worm());
    EXPECT_EQ(f.radial_N, 0.0);
    EXPECT_GT(f.axial_N, f.tangential_N);
}

TEST(Transmission, ForceBudgetFollowsGearChain) {
    const auto g = gearhead();
    const auto w = worm();
    const auto f = drivetrain_forces(g, w);
    const double torque = g.motor_torque_Nmm * g.gear_ratio * g.efficiency;
    EXPECT_NEAR(f.gearhead_torque_Nmm, torque, 1e-12);
    EXPECT_NEAR(f.tangential_N, 2.0 * torque / w.pitch_diameter_mm, 1e-12);
    EXPECT_NEAR(f.axial_N, f.tangential_N / std::tan(w.lead_angle_rad), 1e-12);
}

TEST(Transmission, PressureAngleAddsRadialComponent) {
    auto w = worm();
    w.pressure_angle_rad = deg_to_rad(20.0);
    const auto f = drivetrain_forces(gearhead(), w);
    EXPECT_NEAR(f.radial_N, f.axial_N * std::tan(deg_to_rad(20.0)), 1e-12);
}

TEST(Transmission, SmallerLeadAngleGivesMoreThrust) {
    auto a = worm();
    auto b = worm();
    b.lead_angle_rad = deg_to_rad(3.0);
    EXPECT_GT(drivetrain_forces(gearhead(), b).axial_N, drivetrain_forces(gearhead(), a).axial_N);
}

TEST(Transmission, InvalidParametersAreRejected) {
    auto w = worm();
    w.lead_angle_rad = 0.0;
    EXPECT_THROW(drivetrain_forces(gearhead(), w), InvalidArgument);
    auto g = gearhead();
    g.efficiency = 1.5;
    EXPECT_THROW(drivetrain_forces(g, worm()), InvalidArgument);
    g = gearhead();
    g.gear_ratio = 0.5;
    EXPECT_THROW(g.validate(), InvalidArgument);
    EXPECT_THROW(robot_speed(1.0, 0.0), InvalidArgument);
    EXPECT_THROW(robot_speed(NAN, 6.0), InvalidArgument);
}

TEST(Transmission, UnitConversionsRoundTrip) {
    EXPECT_NEAR(rad_to_deg(deg_to_rad(37.5)), 37.5, 1e-12);
    EXPECT_NEAR(rpm_to_radps(60.0), 2.0 * std::numbers::pi, 1e-12);
}
