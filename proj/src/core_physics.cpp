#include "iontrap/core_physics.hpp"

#include "iontrap/constants.hpp"
#include "iontrap/errors.hpp"

#include <cmath>

namespace iontrap {

namespace c = constants;

namespace {

void require_positive(double value, const char* name) {
    if (!(value > 0.0) || !std::isfinite(value)) {
        throw InputError(std::string(name) + " must be positive and finite");
    }
}

void require_detuned(const GaussianBeam& beam) {
    if (beam.detuning == 0.0) {
        throw DomainError("dipole potential undefined at zero detuning");
    }
}

}  // namespace

void IonSpecies::validate() const {
    require_positive(mass, "species.mass");
    require_positive(transition_wavelength, "species.transition_wavelength");
    require_positive(linewidth, "species.linewidth");
    require_positive(charge, "species.charge");
}

IonSpecies IonSpecies::magnesium24() {
    return IonSpecies{
        .mass = 24.0 * c::atomic_mass_unit,
        .transition_wavelength = 279.6e-9,
        .linewidth = c::two_pi * 41.8e6,
        .charge = c::elementary_charge,
        .label = "24Mg+",
    };
}

void GaussianBeam::validate() const {
    if (!(power >= 0.0) || !std::isfinite(power)) {
        throw InputError("beam.power must be non-negative");
    }
    require_positive(waist, "beam.waist");
    require_positive(wavelength, "beam.wavelength");
    if (!std::isfinite(detuning)) {
        throw InputError("beam.detuning must be finite");
    }
    if (std::abs(norm(direction) - 1.0) > 1e-9) {
        throw InputError("beam.direction must be a unit vector");
    }
    if (!is_finite(focus)) {
        throw InputError("beam.focus must be finite");
    }
}

Vec3 GaussianBeam::direction_at_angle(double angle) {
    return {std::sin(angle), 0.0, std::cos(angle)};
}

void TrapConfiguration::validate() const {
    require_positive(rf_drive, "trap.rf_drive");
    if (omega_x < 0.0 || omega_y < 0.0 || omega_z < 0.0) {
        throw InputError("trap frequencies must be non-negative");
    }
    require_positive(electrode_distance, "trap.electrode_distance");
    if (!is_finite(stray_force)) {
        throw InputError("trap.stray_force must be finite");
    }
}

double saturation_intensity(const IonSpecies& species) {
    const double lambda = species.transition_wavelength;
    return c::pi * c::planck * c::speed_of_light * species.linewidth / (3.0 * lambda * lambda * lambda);
}

double peak_intensity(const GaussianBeam& beam) {
    return 2.0 * beam.power / (c::pi * beam.waist * beam.waist);
}

double rayleigh_range(const GaussianBeam& beam) {
    return c::pi * beam.waist * beam.waist / beam.wavelength;
}

double dipole_potential_depth(const GaussianBeam& beam, const IonSpecies& species) {
    require_detuned(beam);
    const double gamma = species.linewidth;
    const double s = peak_intensity(beam) / saturation_intensity(species);
    return c::hbar * gamma * gamma / (8.0 * std::abs(beam.detuning)) * s;
}

double scattering_rate(const GaussianBeam& beam, const IonSpecies& species) {
    require_detuned(beam);
    const double gamma = species.linewidth;
    const double ratio = gamma / beam.detuning;
    const double s = peak_intensity(beam) / saturation_intensity(species);
    return gamma / 8.0 * ratio * ratio * s;
}

double recoil_energy(const IonSpecies& species) {
    const double k = c::two_pi / species.transition_wavelength;
    return c::hbar * c::hbar * k * k / (2.0 * species.mass);
}

TrapFrequencies trap_frequencies(const GaussianBeam& beam, const IonSpecies& species) {
    if (!(beam.power > 0.0)) {
        throw DomainError("trap frequencies need a beam with non-zero power");
    }
    const double u0 = dipole_potential_depth(beam, species);
    const double w0 = beam.waist;
    const double zr = rayleigh_range(beam);
    return {
        .radial = std::sqrt(4.0 * u0 / (species.mass * w0 * w0)),
        .axial = std::sqrt(2.0 * u0 / (species.mass * zr * zr)),
    };
}

RadialForce max_radial_force(const GaussianBeam& beam, const IonSpecies& species) {
    const double u0 = beam.power > 0.0 ? dipole_potential_depth(beam, species) : 0.0;
    const double f = 2.0 * u0 / beam.waist;
    return {.two_depth_over_waist = f, .exact = f * std::exp(-0.5)};
}

double recoil_lifetime_estimate(const GaussianBeam& beam, const IonSpecies& species) {
    const double rate = scattering_rate(beam, species);
    if (!(rate > 0.0)) {
        throw DomainError("recoil lifetime undefined without photon scattering");
    }
    return dipole_potential_depth(beam, species) / (rate * 2.0 * recoil_energy(species));
}

double rf_trap_depth_estimate(const TrapConfiguration& trap, const IonSpecies& species) {
    const double omega = std::max(trap.omega_x, trap.omega_y);
    const double r0 = trap.electrode_distance;
    return 0.5 * species.mass * omega * omega * r0 * r0;
}

DipoleTrapDerived derive_dipole_trap(const GaussianBeam& beam, const IonSpecies& species) {
    DipoleTrapDerived d;
    d.saturation_intensity = saturation_intensity(species);
    d.peak_intensity = peak_intensity(beam);
    d.depth = dipole_potential_depth(beam, species);
    d.scattering_rate = scattering_rate(beam, species);
    d.recoil_energy = recoil_energy(species);
    d.max_force = max_radial_force(beam, species);
    if (beam.power > 0.0) {
        const auto f = trap_frequencies(beam, species);
        d.omega_radial = f.radial;
        d.omega_axial = f.axial;
        d.recoil_lifetime = recoil_lifetime_estimate(beam, species);
    }
    return d;
}

}  // namespace iontrap
