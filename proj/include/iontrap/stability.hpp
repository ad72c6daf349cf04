#pragma once

#include "iontrap/core_physics.hpp"

#include <array>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

namespace iontrap {

enum class Axis { x, y, z };

std::string_view axis_name(Axis axis);

/// Dimensionless Mathieu parameters of u'' + (a - 2q cos 2tau) u = 0 for one trap axis.
struct MathieuPoint {
    double a = 0.0;
    double q = 0.0;
    Axis axis = Axis::x;
};

/// (a, q) on x, y, z with the RF amplitude scaled by `envelope_fraction`:
///   a_z = (2 w_z / Omega)^2, a_x = a_y = -a_z / 2, q_x = -q_y = 2 sqrt(2) w_x f / Omega, q_z = 0.
std::array<MathieuPoint, 3> mathieu_params(const TrapConfiguration& trap, double envelope_fraction);

struct FloquetResult {
    bool stable = false;
    double trace = 0.0;   // trace of the one-period monodromy matrix
    double margin = 0.0;  // |trace| / 2; <= 1 inside the stable region
    /// Real part of the Floquet exponent beta for stable points, growth rate mu otherwise.
    double characteristic_exponent = 0.0;
};

inline constexpr int kDefaultFloquetSteps = 4000;

/// Floquet classification by RK4 integration of both fundamental solutions over one
/// period pi. Throws NumericalError if the integration produces non-finite values.
FloquetResult floquet_stability(double a, double q, int steps = kDefaultFloquetSteps);
FloquetResult is_stable(const MathieuPoint& point);

/// Bisects on q in [q_stable, q_unstable] for the edge of the stable region at fixed a.
double stability_boundary_q(double a, double q_stable, double q_unstable, double tolerance = 1e-4);

struct RampScanResult {
    /// Largest RF fraction at which some axis is Floquet-unstable; unset if none down to f = 0.
    std::optional<double> first_unstable_fraction;
    std::array<std::optional<double>, 3> per_axis;
    /// Pseudopotential criterion f w_x = w_z / sqrt(2); unset for w_z = 0.
    std::optional<double> pseudopotential_fraction;
};

/// Scan parameter s runs 0 -> 1 and `envelope(s)` gives the RF fraction; it must be monotone.
/// The default envelope is the linear ramp-down 1 - s.
RampScanResult ramp_scan(const TrapConfiguration& trap, const std::function<double(double)>& envelope = {},
                         int grid_points = 400);

struct StabilityRecord {
    double a = 0.0;
    double q = 0.0;
    bool stable = false;
    double margin = 0.0;
};

/// Row-major raster over a x q (a outer). OpenMP-parallel over grid points.
std::vector<StabilityRecord> stability_raster(std::vector<double> const& a_values,
                                              std::vector<double> const& q_values);
/// Single-threaded reference for stability_raster.
std::vector<StabilityRecord> stability_raster_serial(std::vector<double> const& a_values,
                                                     std::vector<double> const& q_values);

}  // namespace iontrap
