#include <doctest.h>

#include <cmath>

#include "cavens/ode.hpp"

using namespace cavens;

TEST_CASE("exponential relaxation") {
    const double k = 3.0;
    ode::Rhs rhs = [k](double, const ode::State& y, ode::State& dy) { dy = -k * (y.array() - 1.0).matrix(); };
    ode::State y0(1);
    y0 << 5.0;
    const auto tr = ode::integrate(rhs, y0, 0.0, 2.0, 21);
    REQUIRE(tr.t.size() == 21);
    CHECK(tr.y.front()(0) == 5.0);
    for (std::size_t i = 0; i < tr.t.size(); ++i)
        CHECK(tr.y[i](0) == doctest::Approx(1.0 + 4.0 * std::exp(-k * tr.t[i])).epsilon(1e-7));
}

TEST_CASE("error shrinks with the tolerance") {
    // Harmonic oscillator over a few periods.
    ode::Rhs rhs = [](double, const ode::State& y, ode::State& dy) {
        dy.resize(2);
        dy << y(1), -y(0);
    };
    ode::State y0(2);
    y0 << 1.0, 0.0;
    double prev = 1.0;
    for (double tol : {1e-4, 1e-7, 1e-10}) {
        ode::Options o;
        o.rel_tol = tol;
        o.abs_tol = tol;
        const auto tr = ode::integrate(rhs, y0, 0.0, 20.0, 2, o);
        const double err = std::abs(tr.y.back()(0) - std::cos(20.0));
        CHECK(err < prev);
        CHECK(err < 200.0 * tol);
        prev = err;
    }
}

TEST_CASE("stiff problem falls back to the implicit stepper") {
    // Fast relaxation onto a slow manifold; the explicit step budget is tiny.
    ode::Rhs rhs = [](double t, const ode::State& y, ode::State& dy) {
        dy.resize(1);
        dy << -1e6 * (y(0) - std::cos(t));
    };
    ode::State y0(1);
    y0 << 0.0;
    ode::Options o;
    o.max_steps = 2000;
    o.rel_tol = 1e-6;
    o.abs_tol = 1e-9;
    const auto tr = ode::integrate(rhs, y0, 0.0, 2.0, 11, o);
    CHECK(tr.stats.switched_to_implicit);
    CHECK(tr.y.back()(0) == doctest::Approx(std::cos(2.0)).epsilon(1e-4));
}

TEST_CASE("times must increase") {
    ode::Rhs rhs = [](double, const ode::State& y, ode::State& dy) { dy = -y; };
    ode::State y0 = ode::State::Ones(1);
    CHECK_THROWS(ode::integrate(rhs, y0, std::vector<double>{0.0, 1.0, 0.5}));
}
