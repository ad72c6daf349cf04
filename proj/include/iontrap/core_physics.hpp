#pragma once

#include "iontrap/vec3.hpp"

#include <optional>
#include <string>

namespace iontrap {

/// Mass and optical-transition constants of the trapped ion.
struct IonSpecies {
    double mass = 0.0;                   // kg
    double transition_wavelength = 0.0;  // m
    double linewidth = 0.0;              // natural linewidth Gamma, rad/s
    double charge = 0.0;                 // C
    std::string label;

    /// Throws InputError unless every physical field is strictly positive.
    void validate() const;

    /// 24Mg+ on the S1/2 <-> P3/2 line.
    static IonSpecies magnesium24();
};

/// Focused Gaussian dipole-trap beam. Red detuning is negative.
struct GaussianBeam {
    double power = 0.0;        // W
    double waist = 0.0;        // 1/e^2 intensity radius at the focus, m
    double detuning = 0.0;     // rad/s
    double wavelength = 0.0;   // m
    Vec3 direction{0.0, 0.0, 1.0};
    Vec3 focus{};

    void validate() const;

    /// Unit propagation vector in the x-z plane, `angle` radians away from the trap z axis.
    static Vec3 direction_at_angle(double angle);
};

/// Radial (x, y) and axial (z) confinement of the linear RF trap plus its static fields.
struct TrapConfiguration {
    double rf_drive = 0.0;           // Omega_RF, rad/s
    double omega_x = 0.0;            // full-amplitude pseudopotential secular frequency, rad/s
    double omega_y = 0.0;            // rad/s
    double omega_z = 0.0;            // DC axial frequency, rad/s
    double electrode_distance = 0.0; // R0, m
    Vec3 stray_force{};              // uniform residual force, N

    void validate() const;
};

struct TrapFrequencies {
    double radial = 0.0;  // perpendicular to the beam, rad/s
    double axial = 0.0;   // along the beam, rad/s
};

struct RadialForce {
    double two_depth_over_waist = 0.0;  // 2 U0 / w0
    double exact = 0.0;             // max |dU/dr| of the Gaussian profile, at r = w0/2
};

struct DipoleTrapDerived {
    double saturation_intensity = 0.0;  // W/m^2
    double peak_intensity = 0.0;        // W/m^2
    double depth = 0.0;                 // U0, J
    double omega_radial = 0.0;          // rad/s
    double omega_axial = 0.0;           // rad/s
    double scattering_rate = 0.0;       // 1/s
    double recoil_energy = 0.0;         // J
    RadialForce max_force;
    std::optional<double> recoil_lifetime;  // unset when nothing scatters
};

double saturation_intensity(const IonSpecies& species);
double peak_intensity(const GaussianBeam& beam);
double rayleigh_range(const GaussianBeam& beam);

/// |U0| = (hbar Gamma^2 / 8|Delta|) (I0 / Isat). Throws DomainError for zero detuning.
double dipole_potential_depth(const GaussianBeam& beam, const IonSpecies& species);

/// Peak-intensity photon scattering rate (Gamma/8)(Gamma/Delta)^2 (I0/Isat).
double scattering_rate(const GaussianBeam& beam, const IonSpecies& species);

/// Single-photon recoil energy hbar^2 k^2 / 2m on the cooling transition.
double recoil_energy(const IonSpecies& species);

/// Harmonic frequencies at the beam focus. Throws DomainError if the beam carries no power.
TrapFrequencies trap_frequencies(const GaussianBeam& beam, const IonSpecies& species);

RadialForce max_radial_force(const GaussianBeam& beam, const IonSpecies& species);

/// Zero-temperature escape time U0 / (Gamma_s * 2 E_r). Throws DomainError if nothing scatters.
double recoil_lifetime_estimate(const GaussianBeam& beam, const IonSpecies& species);

/// Order-of-magnitude radial RF depth: the pseudopotential evaluated at the electrode distance.
double rf_trap_depth_estimate(const TrapConfiguration& trap, const IonSpecies& species);

/// Collects every closed-form quantity above. Zero power yields zero depth and no lifetime.
DipoleTrapDerived derive_dipole_trap(const GaussianBeam& beam, const IonSpecies& species);

}  // namespace iontrap
