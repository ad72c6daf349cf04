#pragma once

#include "iontrap/heating_model.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace iontrap {

inline constexpr std::string_view kDatasetHeader = "t_dipole_s,p_trap_w,n_success,n_total";

/// CSV with header `t_dipole_s,p_trap_w,n_success,n_total`. Throws InputError naming the
/// line of the first malformed row, or for input without any data row.
SurvivalDataset parse_dataset(std::string_view text, std::string label);
SurvivalDataset read_dataset(const std::filesystem::path& path);

std::string format_dataset(const SurvivalDataset& dataset);
/// Throws IoError if the file cannot be written.
void write_text_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace iontrap
