#include "doctest.h"
#include "support.hpp"

#include "iontrap/stability.hpp"

#include <boost/numeric/odeint.hpp>

#include <array>

using namespace iontrap;
using namespace iontrap::test;

namespace {

// Monodromy trace from an adaptive Dormand-Prince integration at tight tolerance.
double oracle_trace(double a, double q) {
    using State = std::array<double, 2>;
    namespace ode = boost::numeric::odeint;
    auto rhs = [&](const State& u, State& du, double tau) {
        du[0] = u[1];
        du[1] = -(a - 2 * q * std::cos(2 * tau)) * u[0];
    };
    State c{1.0, 0.0};
    State s{0.0, 1.0};
    auto stepper = ode::make_controlled(1e-13, 1e-13, ode::runge_kutta_dopri5<State>());
    ode::integrate_adaptive(stepper, rhs, c, 0.0, constants::pi, 1e-3);
    ode::integrate_adaptive(stepper, rhs, s, 0.0, constants::pi, 1e-3);
    return c[0] + s[1];
}

}  // namespace

TEST_CASE("Mathieu parameters of the handoff trap") {
    const auto trap = setup_trap();
    const auto full = mathieu_params(trap, 1.0);
    CHECK(full[0].q == doctest::Approx(0.045).epsilon(0.02));
    CHECK(full[1].q == doctest::Approx(-full[0].q));
    CHECK(full[2].q == 0.0);
    CHECK(full[2].a == doctest::Approx(2.6e-6).epsilon(0.01));
    CHECK(full[0].a == doctest::Approx(-1.3e-6).epsilon(0.01));
    CHECK(full[0].a == full[1].a);
    CHECK(full[2].axis == Axis::z);

    for (const auto& p : mathieu_params(trap, 0.0)) {
        CHECK(p.q == 0.0);
    }
}

TEST_CASE("Floquet classification against the adaptive oracle") {
    struct Case {
        double a, q;
        bool stable;
    };
    for (const Case c : {Case{0.0, 0.5, true}, Case{0.0, 0.95, false}, Case{0.01, 0.2, true}, Case{-0.01, 0.05, false},
                         Case{0.2, 0.6, true}, Case{1.5, 0.1, true}, Case{1.0, 0.3, false}}) {
        const auto r = floquet_stability(c.a, c.q);
        CHECK(r.stable == c.stable);
        CHECK(r.trace == doctest::Approx(oracle_trace(c.a, c.q)).epsilon(1e-8));
        CHECK(r.margin == doctest::Approx(std::abs(r.trace) / 2));
    }
}

TEST_CASE("first stability boundary on the q axis") {
    const double q = stability_boundary_q(0.0, 0.5, 0.95);
    CHECK(q == doctest::Approx(0.908).epsilon(0.002 / 0.908));
    CHECK(std::abs(oracle_trace(0.0, q - 1e-3)) <= 2.0);
    CHECK(std::abs(oracle_trace(0.0, q + 1e-3)) > 2.0);
}

TEST_CASE("parity in q") {
    for (double a : {-0.05, 0.0, 0.03, 0.2}) {
        for (double q : {0.01, 0.1, 0.4, 0.7, 0.9, 1.1}) {
            const auto plus = floquet_stability(a, q);
            const auto minus = floquet_stability(a, -q);
            CHECK(plus.stable == minus.stable);
            CHECK(plus.trace == doctest::Approx(minus.trace).epsilon(1e-9));
        }
    }
}

TEST_CASE("ramp scan loses the ion before zero RF") {
    const auto trap = setup_trap();
    const auto scan = ramp_scan(trap);
    REQUIRE(scan.first_unstable_fraction.has_value());
    REQUIRE(scan.pseudopotential_fraction.has_value());
    const double f_star = *scan.first_unstable_fraction;
    const double f_pp = *scan.pseudopotential_fraction;
    CHECK(f_star > 0.0);
    CHECK(f_pp == doctest::Approx(45.0 / (900.0 * std::sqrt(2.0))).epsilon(1e-12));
    CHECK(f_pp == doctest::Approx(0.035).epsilon(0.005 / 0.035));
    CHECK(std::abs(f_star - f_pp) <= 0.2 * f_pp);

    // above f* every axis is stable; at f* (within the bisection resolution) one is not
    for (int i = 0; i <= 200; ++i) {
        const double f = f_star + (1.0 - f_star) * (i + 0.5) / 201;
        for (const auto& p : mathieu_params(trap, f)) {
            CHECK(is_stable(p).stable);
        }
    }
    bool any_unstable = false;
    for (const auto& p : mathieu_params(trap, f_star - 1e-7)) {
        any_unstable = any_unstable || !is_stable(p).stable;
    }
    CHECK(any_unstable);
    CHECK_FALSE(scan.per_axis[2].has_value());
}

TEST_CASE("ramp scan without axial confinement stays stable") {
    auto trap = setup_trap();
    trap.omega_z = 0.0;
    const auto scan = ramp_scan(trap);
    CHECK_FALSE(scan.first_unstable_fraction.has_value());
    CHECK_FALSE(scan.pseudopotential_fraction.has_value());
}

TEST_CASE("raster matches the serial reference") {
    std::vector<double> as;
    std::vector<double> qs;
    for (int i = 0; i < 9; ++i) {
        as.push_back(-0.2 + 0.05 * i);
    }
    for (int i = 0; i < 23; ++i) {
        qs.push_back(0.05 * i);
    }
    const auto par = stability_raster(as, qs);
    const auto ser = stability_raster_serial(as, qs);
    REQUIRE(par.size() == as.size() * qs.size());
    REQUIRE(ser.size() == par.size());
    for (std::size_t i = 0; i < par.size(); ++i) {
        CHECK(par[i].a == ser[i].a);
        CHECK(par[i].q == ser[i].q);
        CHECK(par[i].stable == ser[i].stable);
        CHECK(par[i].margin == ser[i].margin);
    }
    CHECK(par[0].a == as[0]);
    CHECK(par[1].q == qs[1]);
}
