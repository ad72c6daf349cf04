#include "iontrap/stability.hpp"

#include "iontrap/errors.hpp"

#include <cmath>
#include <numbers>

namespace iontrap {

std::string_view axis_name(Axis axis) {
    switch (axis) {
        case Axis::x: return "x";
        case Axis::y: return "y";
        case Axis::z: return "z";
    }
    return "?";
}

std::array<MathieuPoint, 3> mathieu_params(const TrapConfiguration& trap, double envelope_fraction) {
    const double omega = trap.rf_drive;
    const double az = std::pow(2.0 * trap.omega_z / omega, 2);
    const double qx = 2.0 * std::numbers::sqrt2 * trap.omega_x * envelope_fraction / omega;
    return {{
        {-0.5 * az, qx, Axis::x},
        {-0.5 * az, -qx, Axis::y},
        {az, 0.0, Axis::z},
    }};
}

namespace {

struct State2 {
    double u;
    double du;
};

// u'' = -(a - 2q cos 2tau) u, one RK4 step.
inline State2 rk4_step(const State2& s, double tau, double h, double a, double q) {
    auto accel = [&](double t, double u) { return -(a - 2.0 * q * std::cos(2.0 * t)) * u; };
    const double k1u = s.du;
    const double k1v = accel(tau, s.u);
    const double k2u = s.du + 0.5 * h * k1v;
    const double k2v = accel(tau + 0.5 * h, s.u + 0.5 * h * k1u);
    const double k3u = s.du + 0.5 * h * k2v;
    const double k3v = accel(tau + 0.5 * h, s.u + 0.5 * h * k2u);
    const double k4u = s.du + h * k3v;
    const double k4v = accel(tau + h, s.u + h * k3u);
    return {s.u + h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u),
            s.du + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)};
}

}  // namespace

FloquetResult floquet_stability(double a, double q, int steps) {
    if (!std::isfinite(a) || !std::isfinite(q)) {
        throw NumericalError("Mathieu parameters must be finite");
    }
    if (steps < 1) {
        throw NumericalError("Floquet integration needs at least one step");
    }
    const double h = std::numbers::pi / steps;
    State2 first{1.0, 0.0};
    State2 second{0.0, 1.0};
    for (int i = 0; i < steps; ++i) {
        const double tau = i * h;
        first = rk4_step(first, tau, h, a, q);
        second = rk4_step(second, tau, h, a, q);
    }
    const double trace = first.u + second.du;
    if (!std::isfinite(trace)) {
        throw NumericalError("Floquet integration diverged");
    }
    FloquetResult r;
    r.trace = trace;
    r.margin = std::abs(trace) / 2.0;
    r.stable = r.margin <= 1.0;
    r.characteristic_exponent =
        r.stable ? std::acos(trace / 2.0) / std::numbers::pi : std::acosh(r.margin) / std::numbers::pi;
    return r;
}

FloquetResult is_stable(const MathieuPoint& point) {
    return floquet_stability(point.a, point.q);
}

double stability_boundary_q(double a, double q_stable, double q_unstable, double tolerance) {
    if (!floquet_stability(a, q_stable).stable || floquet_stability(a, q_unstable).stable) {
        throw NumericalError("stability boundary is not bracketed");
    }
    while (std::abs(q_unstable - q_stable) > tolerance) {
        const double mid = 0.5 * (q_stable + q_unstable);
        if (floquet_stability(a, mid).stable) {
            q_stable = mid;
        } else {
            q_unstable = mid;
        }
    }
    return 0.5 * (q_stable + q_unstable);
}

RampScanResult ramp_scan(const TrapConfiguration& trap, const std::function<double(double)>& envelope,
                         int grid_points) {
    const auto fraction = [&](double s) { return envelope ? envelope(s) : 1.0 - s; };
    const auto axis_stable = [&](double s, int axis) {
        return is_stable(mathieu_params(trap, fraction(s))[axis]).stable;
    };

    RampScanResult result;
    for (int axis = 0; axis < 3; ++axis) {
        double previous = 0.0;
        if (!axis_stable(previous, axis)) {
            result.per_axis[axis] = fraction(previous);
            continue;
        }
        for (int i = 1; i <= grid_points; ++i) {
            const double s = static_cast<double>(i) / grid_points;
            if (axis_stable(s, axis)) {
                previous = s;
                continue;
            }
            double lo = previous;
            double hi = s;
            while (hi - lo > 1e-9) {
                const double mid = 0.5 * (lo + hi);
                (axis_stable(mid, axis) ? lo : hi) = mid;
            }
            result.per_axis[axis] = fraction(hi);
            break;
        }
    }
    for (const auto& f : result.per_axis) {
        if (f && (!result.first_unstable_fraction || *f > *result.first_unstable_fraction)) {
            result.first_unstable_fraction = f;
        }
    }
    if (trap.omega_z > 0.0 && trap.omega_x > 0.0) {
        result.pseudopotential_fraction = trap.omega_z / (std::numbers::sqrt2 * trap.omega_x);
    }
    return result;
}

namespace {

StabilityRecord classify(double a, double q) {
    const auto r = floquet_stability(a, q);
    return {a, q, r.stable, r.margin};
}

}  // namespace

std::vector<StabilityRecord> stability_raster_serial(std::vector<double> const& a_values,
                                                     std::vector<double> const& q_values) {
    std::vector<StabilityRecord> out;
    out.reserve(a_values.size() * q_values.size());
    for (double a : a_values) {
        for (double q : q_values) {
            out.push_back(classify(a, q));
        }
    }
    return out;
}

std::vector<StabilityRecord> stability_raster(std::vector<double> const& a_values,
                                              std::vector<double> const& q_values) {
    const auto na = static_cast<std::ptrdiff_t>(a_values.size());
    const auto nq = static_cast<std::ptrdiff_t>(q_values.size());
    std::vector<StabilityRecord> out(static_cast<std::size_t>(na * nq));
    // Exceptions must not escape an OpenMP region; collect and rethrow after.
    bool failed = false;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t idx = 0; idx < na * nq; ++idx) {
        try {
            out[idx] = classify(a_values[idx / nq], q_values[idx % nq]);
        } catch (...) {
#pragma omp atomic write
            failed = true;
        }
    }
    if (failed) {
        throw NumericalError("Floquet integration failed inside the stability raster");
    }
    return out;
}

}  // namespace iontrap
