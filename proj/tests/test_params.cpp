#include <doctest.h>

#include "cavens/params.hpp"
#include "test_util.hpp"

using namespace cavens;

TEST_CASE("thermal occupation at the quoted temperatures") {
    // Bose-Einstein occupation of the 6.83 GHz mode.
    const double omega = kRbHyperfineOmega;
    CHECK(thermal_occupation(omega, 0.1) == doctest::Approx(0.0401).epsilon(0.02));
    CHECK(thermal_occupation(omega, 0.7) == doctest::Approx(1.67).epsilon(0.02));
    CHECK(thermal_occupation(omega, 4.0) == doctest::Approx(11.7).epsilon(0.02));
    CHECK(thermal_occupation(omega, 10.0) == doctest::Approx(30.0).epsilon(0.02));
}

TEST_CASE("thermal occupation limits") {
    CHECK(thermal_occupation(kRbHyperfineOmega, 0.0) == 0.0);
    // High temperature: kT / (hbar omega) - 1/2.
    const double T = 1e3;
    const double x = kHbar * kRbHyperfineOmega / (kBoltzmann * T);
    CHECK(thermal_occupation(kRbHyperfineOmega, T) == doctest::Approx(1.0 / x - 0.5).epsilon(1e-6));
    // Round trip through the helper used by the other suites.
    CHECK(thermal_occupation(kRbHyperfineOmega, testutil::temperature_for(0.3)) == doctest::Approx(0.3).epsilon(1e-12));
    CHECK_THROWS_AS(thermal_occupation(kRbHyperfineOmega, -1.0), ConfigError);
    CHECK_THROWS_AS(thermal_occupation(0.0, 1.0), ConfigError);
}

TEST_CASE("effective coupling") {
    CHECK(effective_coupling(3.0, 2) == doctest::Approx(3.0 * std::sqrt(2.0)));
    CHECK(effective_coupling(40.0, 100000) == doctest::Approx(12649.11).epsilon(1e-6));
}

TEST_CASE("validation reports every problem") {
    SystemParams p;
    p.n_atoms = 0;
    p.kappa = -1.0;
    p.temperature = -2.0;
    const auto r = validate(p);
    CHECK_FALSE(r.ok());
    CHECK(r.issues.size() >= 3);
    CHECK_THROWS_AS(validated(p), ConfigError);
}

TEST_CASE("drive frame detunings") {
    SystemParams p;
    p.n_atoms = 2;
    p.g = 3;
    p.kappa = 1;
    p.gamma_a = 0.05;
    p.eta = 0.1;
    p.omega_a = p.omega_m + 2.0;
    p.set_cavity_detuning(-4.0);
    const auto v = validated(p);
    REQUIRE(v.detunings);
    CHECK(v.detunings->delta_m == doctest::Approx(-4.0));
    // omega_a - omega_m stays fixed while the drive moves.
    CHECK(v.detunings->delta_a == doctest::Approx(-2.0));
    CHECK(v.driven());
}
