#pragma once

#include "iontrap/core_physics.hpp"
#include "iontrap/vec3.hpp"

#include <functional>
#include <optional>
#include <variant>
#include <vector>

namespace iontrap {

/// Time envelope in [0, 1]. An empty envelope means "always 1".
using Envelope = std::function<double(double)>;

inline double evaluate(const Envelope& envelope, double t) {
    return envelope ? envelope(t) : 1.0;
}

/// Optical dipole potential of a focused Gaussian beam (attractive for red detuning):
///   U(rho, z) = -U0 (w0 / w(z))^2 exp(-2 rho^2 / w(z)^2),  w(z) = w0 sqrt(1 + (z/zR)^2)
/// with rho and z measured in the beam frame around the focus.
class DipoleBeamField {
public:
    DipoleBeamField(const GaussianBeam& beam, const IonSpecies& species, Envelope gate = {});

    double value(const Vec3& r, double t) const;
    Vec3 force(const Vec3& r, double t) const;

    /// I(r) / I0, ignoring the gate.
    double relative_intensity(const Vec3& r) const;
    double gate(double t) const { return evaluate(gate_, t); }

    double depth() const { return depth_; }
    double rayleigh_range() const { return rayleigh_range_; }
    const GaussianBeam& beam() const { return beam_; }

    /// Split of r - focus into (distance along the beam, distance from the beam axis).
    struct BeamCoordinates {
        double along;
        double transverse;
    };
    BeamCoordinates beam_coordinates(const Vec3& r) const;

private:
    GaussianBeam beam_;
    double depth_ = 0.0;
    double rayleigh_range_ = 0.0;
    Envelope gate_;
};

enum class RfMode { full_drive, pseudopotential };

/// Linear Paul trap radial RF field with an amplitude envelope.
///
/// Pseudopotential mode: U = 1/2 m (f w_x)^2 x^2 + 1/2 m (f w_y)^2 y^2.
/// Full-drive mode: ideal traceless quadrupole, U = -(m Omega^2 / 4) f q cos(Omega t) (x^2 - y^2),
/// q = 2 sqrt(2) w_x / Omega (lowest-order relation between q and the secular frequency).
class RFField {
public:
    RFField(const TrapConfiguration& trap, double mass, RfMode mode, Envelope envelope = {});

    double value(const Vec3& r, double t) const;
    Vec3 force(const Vec3& r, double t) const;

    double envelope(double t) const { return evaluate(envelope_, t); }
    RfMode mode() const { return mode_; }
    double mathieu_q() const;

private:
    double drive_;
    double omega_x_;
    double omega_y_;
    double mass_;
    RfMode mode_;
    Envelope envelope_;
};

/// Static endcap field: focusing along z, defocusing by half the curvature along x and y.
/// With a barrier distance set, the axial term becomes harmonic-minus-quartic,
///   U(z) = 1/2 m w_z^2 z^2 (1 - z^2 / (2 z_b^2)),
/// which peaks at |z| = z_b with height 1/4 m w_z^2 z_b^2 and falls off beyond.
class DCField {
public:
    DCField(double omega_z, double mass, std::optional<double> barrier_distance = std::nullopt);

    /// Landscape parameterized by its barrier; the curvature at the origin follows from both.
    static DCField from_landscape(double barrier_distance, double well_depth, double mass);

    double value(const Vec3& r, double t) const;
    Vec3 force(const Vec3& r, double t) const;

    double omega_z() const { return omega_z_; }
    std::optional<double> barrier_distance() const { return barrier_; }
    /// Barrier height above the origin; infinite without a landscape.
    double well_depth() const;

private:
    double omega_z_;
    double mass_;
    std::optional<double> barrier_;
};

/// Uniform residual force from uncompensated stray fields.
struct StrayForce {
    Vec3 force;

    double value(const Vec3& r, double) const { return -dot(force, r); }
    Vec3 force_at(const Vec3&, double) const { return force; }
};

/// Anisotropic harmonic well aligned with the coordinate axes.
struct HarmonicWell {
    Vec3 omega;  // rad/s per axis
    double mass = 0.0;
    Vec3 center{};

    double value(const Vec3& r, double) const;
    Vec3 force_at(const Vec3& r, double) const;
};

using Field = std::variant<DipoleBeamField, RFField, DCField, StrayForce, HarmonicWell>;

double field_value(const Field& field, const Vec3& r, double t);
Vec3 field_force(const Field& field, const Vec3& r, double t);

/// Sum of fields sharing one time base.
class CompositeField {
public:
    explicit CompositeField(std::vector<Field> fields);

    double value(const Vec3& r, double t) const;
    Vec3 force(const Vec3& r, double t) const;

    const std::vector<Field>& members() const { return fields_; }
    /// First dipole beam among the members, if any.
    const DipoleBeamField* dipole() const;
    const RFField* rf() const;

private:
    std::vector<Field> fields_;
};

/// Throws InputError on an empty list.
CompositeField compose(std::vector<Field> fields);

}  // namespace iontrap
