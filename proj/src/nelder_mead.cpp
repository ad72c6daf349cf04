#include "iontrap/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace iontrap {

namespace {

struct Vertex {
    std::vector<double> x;
    double f;
};

std::vector<double> affine(const std::vector<double>& base, const std::vector<double>& toward, double t) {
    std::vector<double> out(base.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
        out[i] = base[i] + t * (toward[i] - base[i]);
    }
    return out;
}

double evaluate(const std::function<double(const std::vector<double>&)>& objective, const std::vector<double>& x) {
    const double f = objective(x);
    return std::isnan(f) ? INFINITY : f;
}

}  // namespace

SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& objective,
                          std::vector<double> start, const SimplexOptions& options) {
    const std::size_t n = start.size();
    std::vector<Vertex> simplex;
    simplex.reserve(n + 1);
    simplex.push_back({start, evaluate(objective, start)});
    for (std::size_t i = 0; i < n; ++i) {
        auto x = start;
        x[i] += options.initial_step;
        simplex.push_back({x, evaluate(objective, x)});
    }

    const auto by_value = [](const Vertex& a, const Vertex& b) { return a.f < b.f; };
    SimplexResult result;
    int iter = 0;
    for (; iter < options.max_iterations; ++iter) {
        std::stable_sort(simplex.begin(), simplex.end(), by_value);
        const double best = simplex.front().f;
        const double worst = simplex.back().f;
        double diameter = 0.0;
        for (std::size_t v = 1; v <= n; ++v) {
            for (std::size_t i = 0; i < n; ++i) {
                diameter = std::max(diameter, std::abs(simplex[v].x[i] - simplex[0].x[i]));
            }
        }
        if (std::isfinite(best) && (worst - best <= options.relative_tolerance * std::abs(best) ||
                                    diameter <= options.simplex_tolerance)) {
            result.converged = true;
            break;
        }

        std::vector<double> centroid(n, 0.0);
        for (std::size_t v = 0; v < n; ++v) {
            for (std::size_t i = 0; i < n; ++i) {
                centroid[i] += simplex[v].x[i] / static_cast<double>(n);
            }
        }
        Vertex& worst_vertex = simplex.back();
        const double second_worst = simplex[n - 1].f;

        auto reflected = affine(centroid, worst_vertex.x, -1.0);
        const double fr = evaluate(objective, reflected);
        if (fr < best) {
            auto expanded = affine(centroid, worst_vertex.x, -2.0);
            const double fe = evaluate(objective, expanded);
            worst_vertex = fe < fr ? Vertex{std::move(expanded), fe} : Vertex{std::move(reflected), fr};
            continue;
        }
        if (fr < second_worst) {
            worst_vertex = {std::move(reflected), fr};
            continue;
        }
        const bool outside = fr < worst_vertex.f;
        auto contracted = outside ? affine(centroid, reflected, 0.5) : affine(centroid, worst_vertex.x, 0.5);
        const double fc = evaluate(objective, contracted);
        if (fc < std::min(fr, worst_vertex.f)) {
            worst_vertex = {std::move(contracted), fc};
            continue;
        }
        for (std::size_t v = 1; v <= n; ++v) {
            simplex[v].x = affine(simplex[0].x, simplex[v].x, 0.5);
            simplex[v].f = evaluate(objective, simplex[v].x);
        }
    }
    std::stable_sort(simplex.begin(), simplex.end(), by_value);
    result.x = simplex.front().x;
    result.value = simplex.front().f;
    result.iterations = iter;
    return result;
}

}  // namespace iontrap
