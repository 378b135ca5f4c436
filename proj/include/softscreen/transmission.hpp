// Worm-gear track drivetrain: motor command to track speed, gearhead torque
// to the force budget available at the tracks.
#pragma once

#include "softscreen/core/error.hpp"

#include <cmath>
#include <numbers>

namespace softscreen::transmission {

inline constexpr double rpm_to_radps(double rpm) { return rpm * 2.0 * std::numbers::pi / 60.0; }
inline constexpr double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline constexpr double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

struct WormGearParams {
    double pitch_mm = 0.0;
    double pitch_diameter_mm = 0.0;
    double lead_angle_rad = 0.0;
    double pressure_angle_rad = 0.0;

    void validate() const {
        require_positive(pitch_mm, "WormGearParams.pitch_mm");
        require_positive(pitch_diameter_mm, "WormGearParams.pitch_diameter_mm");
        require_finite(lead_angle_rad, "WormGearParams.lead_angle_rad");
        require(lead_angle_rad > 0.0 && lead_angle_rad < 0.5 * std::numbers::pi,
                "WormGearParams.lead_angle_rad must lie in (0, pi/2)");
        require_finite(pressure_angle_rad, "WormGearParams.pressure_angle_rad");
        require(pressure_angle_rad >= 0.0 && pressure_angle_rad < 0.5 * std::numbers::pi,
                "WormGearParams.pressure_angle_rad must lie in [0, pi/2)");
    }
};

/// Motor + gearbox. `motor_torque_Nmm` is the torque available at the
/// operating speed; it has no measured value and is a calibration input.
struct GearheadParams {
    double motor_torque_Nmm = 0.0;
    double gear_ratio = 1.0;
    double efficiency = 1.0;
    double max_motor_speed_radps = 0.0;

    void validate() const {
        require_nonneg(motor_torque_Nmm, "GearheadParams.motor_torque_Nmm");
        require_finite(gear_ratio, "GearheadParams.gear_ratio");
        require(gear_ratio >= 1.0, "GearheadParams.gear_ratio must be >= 1");
        require_finite(efficiency, "GearheadParams.efficiency");
        require(efficiency > 0.0 && efficiency <= 1.0, "GearheadParams.efficiency must lie in (0, 1]");
        require_positive(max_motor_speed_radps, "GearheadParams.max_motor_speed_radps");
    }

    /// Worm shaft speed for a motor speed (the worm sits on the gearbox output).
    double shaft_speed(double motor_speed_radps) const { return motor_speed_radps / gear_ratio; }
};

struct TransmissionForces {
    double tangential_N = 0.0;
    double axial_N = 0.0;
    double radial_N = 0.0;
    double gearhead_torque_Nmm = 0.0;
};

/// Linear speed of the robot for a worm shaft speed under no slip (mm/s).
/// One shaft revolution advances the tracks by one pitch.
inline double robot_speed(double shaft_speed_radps, double pitch_mm) {
    require_finite(shaft_speed_radps, "shaft_speed_radps");
    require_positive(pitch_mm, "pitch_mm");
    return shaft_speed_radps * pitch_mm / (2.0 * std::numbers::pi);
}

inline TransmissionForces drivetrain_forces(const GearheadParams& gear, const WormGearParams& worm) {
    gear.validate();
    worm.validate();
    TransmissionForces f;
    f.gearhead_torque_Nmm = gear.motor_torque_Nmm * gear.gear_ratio * gear.efficiency;
    f.tangential_N = 2.0 * f.gearhead_torque_Nmm / worm.pitch_diameter_mm;
    f.axial_N = f.tangential_N / std::tan(worm.lead_angle_rad);
    // tan(0) is exactly 0, so a squared tooth produces no radial component.
    f.radial_N = f.axial_N * std::tan(worm.pressure_angle_rad);
    return f;
}

/// Theoretical track speed at a motor command (mm/s), signed.
inline double track_speed(const GearheadParams& gear, const WormGearParams& worm, double motor_speed_radps) {
    return robot_speed(gear.shaft_speed(motor_speed_radps), worm.pitch_mm);
}

}  // namespace softscreen::transmission
