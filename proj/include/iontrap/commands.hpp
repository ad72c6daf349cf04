#pragma once

#include "iontrap/config.hpp"
#include "iontrap/dynamics.hpp"
#include "iontrap/heating_model.hpp"
#include "iontrap/stability.hpp"

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace iontrap::cli {

/// Exit codes shared by every subcommand.
enum ExitCode : int { ok = 0, input_error = 2, io_error = 3, not_converged = 4 };

/// Entry point of the `iontrap` executable.
int run(int argc, const char* const* argv);

/// key = value report of every closed-form trap quantity, in the units quoted in the lab.
std::string derive_report(const ExperimentConfig& config);
/// Same quantities in SI as a JSON object.
std::string derive_summary(const ExperimentConfig& config);

enum class Sweep { t_dipole, p_trap };
std::vector<double> default_sweep_values(Sweep sweep);
/// One ensemble per grid value; point i runs with seed derived from (config seed, i).
SurvivalDataset simulate_sweep(const ExperimentConfig& config, Sweep sweep, const std::vector<double>& values,
                               std::ostream* progress = nullptr);

/// Delimited t, x, y, z, vx, vy, vz rows.
std::string format_trajectory(const std::vector<IonState>& samples);

std::string fit_report(const FitResult& fit);
std::string fit_summary(const FitResult& fit);
/// Model curve on a dense grid along every sweep present in the data.
std::string fit_curve(const FitResult& fit, std::span<const SurvivalDataset> datasets, int points = 200);

struct RampRecord {
    double fraction;
    MathieuPoint point;
    FloquetResult floquet;
};
std::vector<RampRecord> ramp_records(const TrapConfiguration& trap, int fractions);
std::string format_ramp_records(const std::vector<RampRecord>& records);
std::string format_raster(const std::vector<StabilityRecord>& records);

/// Reference heating-model parameters and the 8-point design used for synthetic data.
MarkovModelParams reference_params();
std::vector<DesignPoint> reference_design(std::int64_t n_total);

}  // namespace iontrap::cli
