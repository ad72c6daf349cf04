#pragma once

#include "iontrap/constants.hpp"
#include "iontrap/core_physics.hpp"

#include <cmath>

namespace iontrap::test {

inline constexpr double kB = constants::boltzmann;
inline constexpr double two_pi = constants::two_pi;

inline GaussianBeam setup_beam() {
    GaussianBeam b;
    b.power = 0.275;
    b.waist = 7e-6;
    b.detuning = -two_pi * 300e9;
    b.wavelength = 280e-9;
    b.direction = GaussianBeam::direction_at_angle(constants::pi / 4);
    return b;
}

inline GaussianBeam lifetime_scan_beam() {
    GaussianBeam b = setup_beam();
    b.power = 0.19;
    b.detuning = -two_pi * 275e9;
    return b;
}

inline TrapConfiguration setup_trap() {
    TrapConfiguration t;
    t.rf_drive = two_pi * 56e6;
    t.omega_x = two_pi * 900e3;
    t.omega_y = two_pi * 900e3;
    t.omega_z = two_pi * 45e3;
    t.electrode_distance = 0.8e-3;
    return t;
}

inline bool within(double value, double target, double rel) {
    return std::abs(value - target) <= rel * std::abs(target);
}

}  // namespace iontrap::test
