#include "iontrap/heating_model.hpp"

#include "iontrap/errors.hpp"
#include "iontrap/nelder_mead.hpp"

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <utility>

namespace iontrap {

void MarkovModelParams::validate() const {
    const bool finite = std::isfinite(eps_over_gamma) && std::isfinite(T0_over_gamma) &&
                        std::isfinite(omega_per_sqrtP) && std::isfinite(C0);
    if (!finite || eps_over_gamma < 0.0 || T0_over_gamma < 0.0 || omega_per_sqrtP < 0.0 || C0 < 0.0 || C0 > 1.0) {
        throw InputError("model parameters must be non-negative with C0 <= 1");
    }
}

void SurvivalDataset::validate() const {
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        if (!(r.t_dipole >= 0.0) || !(r.p_trap >= 0.0) || r.n_total < 0 || r.n_success < 0 ||
            r.n_success > r.n_total) {
            throw InputError("invalid survival row " + std::to_string(i + 1) + " in dataset '" + label + "'");
        }
    }
}

namespace {

// Bisection driver around Boost's fixed 31-point Gauss-Kronrod rule. Boost's own adaptive
// driver reports leaf errors without the interval scale, which misjudges narrow and wide
// intervals alike.
template <class F>
double adaptive_gauss_kronrod(const F& f, double a, double b, double tol, int depth, double& error, double& l1) {
    double local_error = 0.0;
    double local_l1 = 0.0;
    const double estimate =
        boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 0, 0.0, &local_error, &local_l1);
    local_error *= 0.5 * (b - a);
    if (depth == 0 || local_error <= tol * local_l1 || !std::isfinite(estimate)) {
        error += local_error;
        l1 += local_l1;
        return estimate;
    }
    const double mid = 0.5 * (a + b);
    return adaptive_gauss_kronrod(f, a, mid, tol, depth - 1, error, l1) +
           adaptive_gauss_kronrod(f, mid, b, tol, depth - 1, error, l1);
}

}  // namespace

double escape_exponent(double t_dipole, double p_trap, const MarkovModelParams& params) {
    if (t_dipole < 0.0 || p_trap < 0.0) {
        throw DomainError("hold time and power must be non-negative");
    }
    const double rate = params.omega_per_sqrtP * std::sqrt(p_trap);
    if (t_dipole == 0.0 || rate == 0.0) {
        return 0.0;
    }
    const double a = params.eps_over_gamma;
    if (a == 0.0) {
        return rate * t_dipole;
    }
    const double b = params.T0_over_gamma / p_trap;
    // Substituting s = a / (b + t) = s1 e^u with s1 = a / (b + T) gives
    //   int_0^T exp(-a / (b + t)) dt = (b + T) e^{-s1} int_0^U exp(-s1 expm1(u) - u) du,
    // U = ln(s0 / s1), s0 = a / b. The new integrand is smooth on every scale of a and b and
    // falls below e^-60 once s - s1 > 60, where the range is cut.
    const double s1 = a / (b + t_dipole);
    const double span = b > 0.0 ? std::min(a * t_dipole / (b * (b + t_dipole)), 60.0) : 60.0;
    const double upper = std::log1p(span / s1);
    const auto integrand = [s1](double u) { return std::exp(-s1 * std::expm1(u) - u); };
    double error = 0.0;
    double l1 = 0.0;
    const double integral = adaptive_gauss_kronrod(integrand, 0.0, upper, 1e-11, 30, error, l1);
    if (!std::isfinite(integral) || error > 1e-8 * l1 + 1e-300) {
        throw NumericalError("escape-exponent quadrature did not converge");
    }
    return rate * (b + t_dipole) * std::exp(-s1) * integral;
}

double survival_probability(double t_dipole, double p_trap, const MarkovModelParams& params) {
    if (p_trap == 0.0) {
        return 0.0;
    }
    return params.C0 * std::exp(-escape_exponent(t_dipole, p_trap, params));
}

std::optional<double> lifetime(const MarkovModelParams& params, double p_trap, double search_limit) {
    if (!(p_trap > 0.0) || params.omega_per_sqrtP == 0.0 || !(search_limit > 0.0)) {
        return std::nullopt;
    }
    if (escape_exponent(search_limit, p_trap, params) < 1.0) {
        return std::nullopt;
    }
    double lo = 0.0;
    double hi = search_limit;
    while (hi - lo > 1e-10 * hi) {
        const double mid = 0.5 * (lo + hi);
        (escape_exponent(mid, p_trap, params) < 1.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

namespace {

// Rows sharing a design point, merged so that the weighted sum of squares is unchanged:
// W (p_bar - m)^2 + scatter = sum_i w_i (p_i - m)^2 with W = sum w_i, p_bar the w-weighted mean.
struct PooledRow {
    double t_dipole;
    double p_trap;
    double p_hat;
    double weight;
    double scatter;
};

double row_weight(const SurvivalRow& r) {
    const auto n = static_cast<double>(r.n_total);
    const double p = r.p_hat();
    return n / (p * (1.0 - p) + 1.0 / n);
}

std::vector<PooledRow> pool(std::span<const SurvivalDataset> datasets) {
    std::map<std::pair<double, double>, std::vector<const SurvivalRow*>> groups;
    for (const auto& ds : datasets) {
        ds.validate();
        for (const auto& r : ds.rows) {
            if (r.n_total > 0) {
                groups[{r.t_dipole, r.p_trap}].push_back(&r);
            }
        }
    }
    std::vector<PooledRow> rows;
    for (const auto& [key, members] : groups) {
        double w = 0.0;
        double wp = 0.0;
        for (const auto* r : members) {
            w += row_weight(*r);
            wp += row_weight(*r) * r->p_hat();
        }
        const double mean = wp / w;
        double scatter = 0.0;
        for (const auto* r : members) {
            scatter += row_weight(*r) * (r->p_hat() - mean) * (r->p_hat() - mean);
        }
        rows.push_back({key.first, key.second, mean, w, scatter});
    }
    return rows;
}

double objective(const std::vector<PooledRow>& rows, const MarkovModelParams& params) {
    double sum = 0.0;
    for (const auto& r : rows) {
        const double d = r.p_hat - survival_probability(r.t_dipole, r.p_trap, params);
        sum += r.weight * d * d + r.scatter;
    }
    return sum;
}

constexpr double kMaxLog = 60.0;

MarkovModelParams from_internal(const std::vector<double>& x) {
    auto bounded_exp = [](double v) { return std::exp(std::clamp(v, -kMaxLog, kMaxLog)); };
    return {bounded_exp(x[0]), bounded_exp(x[1]), bounded_exp(x[2]), 1.0 / (1.0 + std::exp(-x[3]))};
}

double internal_objective(const std::vector<PooledRow>& rows, const std::vector<double>& x) {
    try {
        return objective(rows, from_internal(x));
    } catch (const NumericalError&) {
        return INFINITY;
    }
}

// Power with the most distinct hold times: the time sweep of the data.
double time_sweep_power(const std::vector<PooledRow>& rows) {
    std::map<double, int> per_power;
    for (const auto& r : rows) {
        if (r.p_trap > 0.0) {
            ++per_power[r.p_trap];
        }
    }
    double best = 0.0;
    int count = 0;
    for (const auto& [p, n] : per_power) {
        if (n > count) {
            best = p;
            count = n;
        }
    }
    return best;
}

MarkovModelParams uncertainties(const std::vector<PooledRow>& rows, const std::vector<double>& x, double residual) {
    constexpr int n = 4;
    constexpr double h = 1e-3;
    const auto f = [&](std::vector<double> v) { return internal_objective(rows, v); };
    Eigen::Matrix4d hessian;
    const double f0 = f(x);
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            auto xpp = x, xpm = x, xmp = x, xmm = x;
            xpp[i] += h;
            xpp[j] += h;
            xpm[i] += h;
            xpm[j] -= h;
            xmp[i] -= h;
            xmp[j] += h;
            xmm[i] -= h;
            xmm[j] -= h;
            const double v = i == j ? (f(xpp) - 2.0 * f0 + f(xmm)) / (4.0 * h * h)
                                    : (f(xpp) - f(xpm) - f(xmp) + f(xmm)) / (4.0 * h * h);
            hessian(i, j) = v;
            hessian(j, i) = v;
        }
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    Eigen::LDLT<Eigen::Matrix4d> ldlt(hessian);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || !hessian.allFinite()) {
        return {nan, nan, nan, nan};
    }
    const double dof = std::max<double>(1.0, static_cast<double>(rows.size()) - n);
    const double scale = std::max(1.0, residual / dof);
    const Eigen::Matrix4d cov = 2.0 * scale * ldlt.solve(Eigen::Matrix4d::Identity());
    const auto p = from_internal(x);
    const auto sd = [&](int i) { return cov(i, i) >= 0.0 ? std::sqrt(cov(i, i)) : nan; };
    return {p.eps_over_gamma * sd(0), p.T0_over_gamma * sd(1), p.omega_per_sqrtP * sd(2),
            p.C0 * (1.0 - p.C0) * sd(3)};
}

}  // namespace

double fit_objective(std::span<const SurvivalDataset> datasets, const MarkovModelParams& params) {
    return objective(pool(datasets), params);
}

FitResult fit_joint(std::span<const SurvivalDataset> datasets, const FitOptions& options) {
    if (datasets.empty()) {
        throw InputError("fit needs at least one dataset");
    }
    const auto rows = pool(datasets);
    if (rows.size() < 5) {
        throw InputError("fit needs at least five distinct design points");
    }
    const int restarts = std::max(1, options.restarts);

    double max_p = 0.0;
    double max_t = 0.0;
    for (const auto& r : rows) {
        max_p = std::max(max_p, r.p_hat);
        max_t = std::max(max_t, r.t_dipole);
    }
    const double c0_guess = std::clamp(max_p, 0.05, 0.98);

    // Deterministic starting points, log-uniform over broad physical ranges.
    std::vector<std::vector<double>> starts(restarts);
    Rng rng = make_stream(options.seed, 0xF17);
    std::uniform_real_distribution<double> u;
    auto log_uniform = [&](double lo, double hi) { return std::log(lo) + u(rng) * (std::log(hi) - std::log(lo)); };
    for (auto& s : starts) {
        s = {log_uniform(1e-5, 1e-1), log_uniform(1e-8, 1e-2), log_uniform(1e1, 1e6), std::log(c0_guess / (1.0 - c0_guess))};
    }

    SimplexOptions simplex;
    simplex.max_iterations = options.max_iterations;
    const auto f = [&](const std::vector<double>& x) { return internal_objective(rows, x); };

    std::vector<SimplexResult> results(restarts);
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < restarts; ++i) {
        auto first = nelder_mead(f, starts[i], simplex);
        SimplexOptions polish = simplex;
        polish.initial_step = 0.1;
        auto second = nelder_mead(f, first.x, polish);
        second.converged = second.converged && first.converged;
        second.iterations += first.iterations;
        results[i] = std::move(second);
    }

    int best = 0;
    for (int i = 1; i < restarts; ++i) {
        if (results[i].value < results[best].value) {
            best = i;
        }
    }
    const auto& winner = results[best];

    FitResult fit;
    fit.params = from_internal(winner.x);
    fit.residual = winner.value;
    fit.converged = winner.converged && std::isfinite(winner.value);
    fit.best_restart = best;
    fit.design_points = rows.size();
    fit.lifetime_power = time_sweep_power(rows);

    double max_decay = 0.0;
    for (const auto& r : rows) {
        if (r.p_trap > 0.0) {
            max_decay = std::max(max_decay, 1.0 - std::exp(-escape_exponent(r.t_dipole, r.p_trap, fit.params)));
        }
    }
    if (max_decay < 1e-6) {
        fit.degenerate_flat = true;
        fit.params.omega_per_sqrtP = 0.0;
        const double nan = std::numeric_limits<double>::quiet_NaN();
        fit.uncertainty = {nan, nan, 0.0, nan};
        return fit;
    }
    fit.uncertainty = uncertainties(rows, winner.x, winner.value);
    if (fit.converged && fit.lifetime_power > 0.0) {
        fit.lifetime = iontrap::lifetime(fit.params, fit.lifetime_power, 10.0 * max_t);
    }
    return fit;
}

SurvivalDataset generate_synthetic(const MarkovModelParams& params, std::span<const DesignPoint> design, Rng& rng,
                                   std::string label) {
    params.validate();
    SurvivalDataset ds;
    ds.label = std::move(label);
    for (const auto& d : design) {
        if (d.n_total < 0) {
            throw InputError("design point needs n_total >= 0");
        }
        const double p = std::clamp(survival_probability(d.t_dipole, d.p_trap, params), 0.0, 1.0);
        std::binomial_distribution<std::int64_t> binomial(d.n_total, p);
        ds.rows.push_back({d.t_dipole, d.p_trap, d.n_total > 0 ? binomial(rng) : 0, d.n_total});
    }
    return ds;
}

}  // namespace iontrap
