#pragma once

#include <cstdint>
#include <random>

namespace iontrap {

using Rng = std::mt19937_64;

/// Independent generator for `stream` under `master_seed` (splitmix64 seeding).
Rng make_stream(std::uint64_t master_seed, std::uint64_t stream);

}  // namespace iontrap
