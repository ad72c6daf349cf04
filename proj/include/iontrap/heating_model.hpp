#pragma once

#include "iontrap/rng.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace iontrap {

/// Fit parameters of the Markovian escape model. The trap depth is eps * P, the
/// temperature rises as T0 + gamma * P * t, and escape attempts happen at
/// Omega_M = omega_per_sqrtP * sqrt(P), each succeeding with probability exp(-U0 / kT).
struct MarkovModelParams {
    double eps_over_gamma = 0.0;   // s
    double T0_over_gamma = 0.0;    // W s
    double omega_per_sqrtP = 0.0;  // 1 / (s sqrt(W))
    double C0 = 1.0;               // initialization success, [0, 1]

    void validate() const;
};

struct SurvivalRow {
    double t_dipole = 0.0;  // s
    double p_trap = 0.0;    // W
    std::int64_t n_success = 0;
    std::int64_t n_total = 0;

    double p_hat() const { return n_total > 0 ? static_cast<double>(n_success) / n_total : 0.0; }
};

struct SurvivalDataset {
    std::string label;
    std::vector<SurvivalRow> rows;

    void validate() const;
};

/// Accumulated escape exponent  Omega_M * int_0^T exp(-(eps/gamma) / ((T0/gamma)/P + t)) dt.
/// Adaptive Gauss-Kronrod quadrature; throws NumericalError if the error estimate does not
/// reach 1e-8 relative.
double escape_exponent(double t_dipole, double p_trap, const MarkovModelParams& params);

/// P(T) = C0 exp(-escape_exponent). Zero power returns 0: no dipole trap, no trapping.
double survival_probability(double t_dipole, double p_trap, const MarkovModelParams& params);

/// Time at which P(t) / C0 = 1/e, by bisection. Unset when the curve does not reach 1/e
/// before `search_limit`.
std::optional<double> lifetime(const MarkovModelParams& params, double p_trap, double search_limit);

struct FitOptions {
    int restarts = 12;
    std::uint64_t seed = 1;
    int max_iterations = 6000;
};

struct FitResult {
    MarkovModelParams params;
    MarkovModelParams uncertainty;  // one standard deviation from the residual curvature
    double residual = 0.0;          // weighted sum of squares at the optimum
    bool converged = false;
    /// The data shows no decay; the escape rate collapses to zero and the other shape
    /// parameters are not identifiable.
    bool degenerate_flat = false;
    std::optional<double> lifetime;
    double lifetime_power = 0.0;  // P_trap at which `lifetime` is evaluated
    int best_restart = -1;
    std::size_t design_points = 0;
};

/// Joint weighted least-squares fit of all four parameters shared across `datasets`.
/// Rows at the same (T_dipole, P_trap) are pooled. Needs at least five distinct design points.
FitResult fit_joint(std::span<const SurvivalDataset> datasets, const FitOptions& options = {});

/// Weighted residual for a parameter set, the quantity fit_joint minimizes.
double fit_objective(std::span<const SurvivalDataset> datasets, const MarkovModelParams& params);

struct DesignPoint {
    double t_dipole = 0.0;
    double p_trap = 0.0;
    std::int64_t n_total = 0;
};

/// Binomial draws of n_success at each design point.
SurvivalDataset generate_synthetic(const MarkovModelParams& params, std::span<const DesignPoint> design, Rng& rng,
                                   std::string label = "synthetic");

}  // namespace iontrap
