#include "iontrap/potentials.hpp"

#include "iontrap/errors.hpp"

#include <cmath>

namespace iontrap {

DipoleBeamField::DipoleBeamField(const GaussianBeam& beam, const IonSpecies& species, Envelope gate)
    : beam_(beam), rayleigh_range_(iontrap::rayleigh_range(beam)), gate_(std::move(gate)) {
    beam_.validate();
    depth_ = beam.power > 0.0 ? dipole_potential_depth(beam, species) : 0.0;
}

DipoleBeamField::BeamCoordinates DipoleBeamField::beam_coordinates(const Vec3& r) const {
    const Vec3 rel = r - beam_.focus;
    const double along = dot(rel, beam_.direction);
    const double rho2 = std::max(0.0, norm2(rel) - along * along);
    return {along, std::sqrt(rho2)};
}

double DipoleBeamField::relative_intensity(const Vec3& r) const {
    const Vec3 rel = r - beam_.focus;
    const double along = dot(rel, beam_.direction);
    const double rho2 = std::max(0.0, norm2(rel) - along * along);
    const double zeta = along / rayleigh_range_;
    const double s = 1.0 / (1.0 + zeta * zeta);  // (w0 / w(z))^2
    return s * std::exp(-2.0 * rho2 * s / (beam_.waist * beam_.waist));
}

double DipoleBeamField::value(const Vec3& r, double t) const {
    if (depth_ == 0.0) {
        return 0.0;
    }
    return -depth_ * gate(t) * relative_intensity(r);
}

Vec3 DipoleBeamField::force(const Vec3& r, double t) const {
    const double g = gate(t);
    if (depth_ == 0.0 || g == 0.0) {
        return {};
    }
    const double w02 = beam_.waist * beam_.waist;
    const Vec3 rel = r - beam_.focus;
    const Vec3& d = beam_.direction;
    const double along = dot(rel, d);
    const Vec3 radial = rel - d * along;
    const double rho2 = norm2(radial);
    const double zeta = along / rayleigh_range_;
    const double s = 1.0 / (1.0 + zeta * zeta);
    const double e = std::exp(-2.0 * rho2 * s / w02);
    const double u0 = depth_ * g;

    // U = -u0 s e; derivatives with respect to rho^2 and the along-beam coordinate.
    const double du_drho2 = 2.0 * u0 * s * s * e / w02;
    const double ds_dz = -2.0 * zeta / rayleigh_range_ * s * s;
    const double du_dz = -u0 * e * ds_dz * (1.0 - 2.0 * rho2 * s / w02);

    return -(radial * (2.0 * du_drho2) + d * du_dz);
}

RFField::RFField(const TrapConfiguration& trap, double mass, RfMode mode, Envelope envelope)
    : drive_(trap.rf_drive),
      omega_x_(trap.omega_x),
      omega_y_(trap.omega_y),
      mass_(mass),
      mode_(mode),
      envelope_(std::move(envelope)) {
    if (!(drive_ > 0.0)) {
        throw InputError("trap.rf_drive must be positive");
    }
}

double RFField::mathieu_q() const {
    return 2.0 * std::sqrt(2.0) * omega_x_ / drive_;
}

double RFField::value(const Vec3& r, double t) const {
    const double f = envelope(t);
    if (mode_ == RfMode::pseudopotential) {
        const double wx = f * omega_x_;
        const double wy = f * omega_y_;
        return 0.5 * mass_ * (wx * wx * r.x * r.x + wy * wy * r.y * r.y);
    }
    const double k = 0.25 * mass_ * drive_ * drive_ * f * mathieu_q() * std::cos(drive_ * t);
    return -k * (r.x * r.x - r.y * r.y);
}

Vec3 RFField::force(const Vec3& r, double t) const {
    const double f = envelope(t);
    if (mode_ == RfMode::pseudopotential) {
        const double wx = f * omega_x_;
        const double wy = f * omega_y_;
        return {-mass_ * wx * wx * r.x, -mass_ * wy * wy * r.y, 0.0};
    }
    const double k = 0.5 * mass_ * drive_ * drive_ * f * mathieu_q() * std::cos(drive_ * t);
    return {k * r.x, -k * r.y, 0.0};
}

DCField::DCField(double omega_z, double mass, std::optional<double> barrier_distance)
    : omega_z_(omega_z), mass_(mass), barrier_(barrier_distance) {
    if (omega_z_ < 0.0) {
        throw InputError("dc.omega_z must be non-negative");
    }
    if (barrier_ && !(*barrier_ > 0.0)) {
        throw InputError("dc.barrier_distance must be positive");
    }
}

DCField DCField::from_landscape(double barrier_distance, double well_depth, double mass) {
    if (!(barrier_distance > 0.0) || !(well_depth > 0.0)) {
        throw InputError("landscape barrier distance and depth must be positive");
    }
    const double omega = std::sqrt(4.0 * well_depth / (mass * barrier_distance * barrier_distance));
    return DCField(omega, mass, barrier_distance);
}

double DCField::well_depth() const {
    if (!barrier_) {
        return INFINITY;
    }
    return 0.25 * mass_ * omega_z_ * omega_z_ * *barrier_ * *barrier_;
}

double DCField::value(const Vec3& r, double) const {
    const double k = 0.5 * mass_ * omega_z_ * omega_z_;
    double axial = r.z * r.z;
    if (barrier_) {
        axial *= 1.0 - r.z * r.z / (2.0 * *barrier_ * *barrier_);
    }
    return k * (axial - 0.5 * (r.x * r.x + r.y * r.y));
}

Vec3 DCField::force(const Vec3& r, double) const {
    const double k = mass_ * omega_z_ * omega_z_;
    double fz = -k * r.z;
    if (barrier_) {
        fz *= 1.0 - r.z * r.z / (*barrier_ * *barrier_);
    }
    return {0.5 * k * r.x, 0.5 * k * r.y, fz};
}

double HarmonicWell::value(const Vec3& r, double) const {
    const Vec3 d = r - center;
    return 0.5 * mass *
           (omega.x * omega.x * d.x * d.x + omega.y * omega.y * d.y * d.y + omega.z * omega.z * d.z * d.z);
}

Vec3 HarmonicWell::force_at(const Vec3& r, double) const {
    const Vec3 d = r - center;
    return {-mass * omega.x * omega.x * d.x, -mass * omega.y * omega.y * d.y, -mass * omega.z * omega.z * d.z};
}

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

}  // namespace

double field_value(const Field& field, const Vec3& r, double t) {
    return std::visit([&](const auto& f) { return f.value(r, t); }, field);
}

Vec3 field_force(const Field& field, const Vec3& r, double t) {
    return std::visit(overloaded{
                          [&](const StrayForce& f) { return f.force_at(r, t); },
                          [&](const HarmonicWell& f) { return f.force_at(r, t); },
                          [&](const auto& f) { return f.force(r, t); },
                      },
                      field);
}

CompositeField::CompositeField(std::vector<Field> fields) : fields_(std::move(fields)) {
    if (fields_.empty()) {
        throw InputError("cannot compose an empty field list");
    }
}

double CompositeField::value(const Vec3& r, double t) const {
    double u = 0.0;
    for (const auto& f : fields_) {
        u += field_value(f, r, t);
    }
    return u;
}

Vec3 CompositeField::force(const Vec3& r, double t) const {
    Vec3 total;
    for (const auto& f : fields_) {
        total += field_force(f, r, t);
    }
    return total;
}

const DipoleBeamField* CompositeField::dipole() const {
    for (const auto& f : fields_) {
        if (const auto* d = std::get_if<DipoleBeamField>(&f)) {
            return d;
        }
    }
    return nullptr;
}

const RFField* CompositeField::rf() const {
    for (const auto& f : fields_) {
        if (const auto* d = std::get_if<RFField>(&f)) {
            return d;
        }
    }
    return nullptr;
}

CompositeField compose(std::vector<Field> fields) {
    return CompositeField(std::move(fields));
}

}  // namespace iontrap
