#pragma once

#include "iontrap/dynamics.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace iontrap {

/// Everything a CLI run reads from a config file. Frequencies are stored as angular
/// frequencies in memory and as ordinary frequencies (Hz) on disk.
struct ExperimentConfig {
    Scenario scenario;
    double beam_angle = 0.0;  // rad, between beam and trap z axis
    std::int64_t n_trajectories = 200;

    /// Reference handoff set: 275 mW, 7 um, -2pi x 300 GHz, 45 degree crossing.
    static ExperimentConfig defaults();

    /// Re-derives the beam direction from beam_angle and validates every module invariant.
    void finalize();
};

/// INI-style parser: `[section]` headers, `key = value` lines, `#` comments.
/// Unknown sections or keys and malformed values throw InputError naming `section.key`.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical text form; parse_config(write_config(c)) reproduces c exactly.
std::string write_config(const ExperimentConfig& config);

/// Shortest decimal form that round-trips to the same double.
std::string format_double(double value);

}  // namespace iontrap
