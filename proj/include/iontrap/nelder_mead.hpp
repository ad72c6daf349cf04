#pragma once

#include <functional>
#include <vector>

namespace iontrap {

struct SimplexOptions {
    double initial_step = 1.0;
    int max_iterations = 5000;
    /// Stop when the spread of function values falls below this fraction of the best value.
    double relative_tolerance = 1e-13;
    /// ... or when every vertex is within this distance of the best one (per coordinate).
    double simplex_tolerance = 1e-10;
};

struct SimplexResult {
    std::vector<double> x;
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Derivative-free downhill simplex minimization. Both stopping rules are invariant under
/// positive rescaling of the objective.
SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& objective,
                          std::vector<double> start, const SimplexOptions& options = {});

}  // namespace iontrap
