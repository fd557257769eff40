#include <doctest.h>

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

#include "cavens/cumulant.hpp"
#include "cavens/dicke.hpp"
#include "test_util.hpp"

using namespace cavens;
using CM = Eigen::MatrixXcd;

namespace {

double dist(cplx a, cplx b) { return std::abs(a - b); }

}  // namespace

// At a product of a displaced thermal field and identical uncorrelated atoms
// every cumulant beyond the field variance vanishes, so the truncated
// equations must reproduce the exact Lindblad derivatives of all moments.
TEST_CASE("coherent equations are exact at a Gaussian product state") {
    const int nc = 40, N = 3;
    SystemParams p;
    p.n_atoms = N;
    p.g = 0.7;
    p.kappa = 0.9;
    p.gamma_a = 0.35;
    p.eta = cplx(0.4, 0.2);
    p.omega_l = p.omega_m - 0.3;
    p.omega_a = p.omega_m + 0.45;
    p.temperature = testutil::temperature_for(0.3, p.omega_m);
    p = validated(p);

    dicke::HilbertConfig c;
    c.n_atoms = N;
    c.fock_cutoff = nc;
    const auto ops = dicke::build_operators(c);
    const auto lv = dicke::build_liouvillian(p, c);

    CM af = CM::Zero(nc + 1, nc + 1);
    for (int n = 1; n <= nc; ++n) af(n - 1, n) = std::sqrt(double(n));
    const cplx alpha(0.8, -0.5);
    const double nth = 0.4;
    const CM D = (alpha * af.adjoint() - std::conj(alpha) * af).exp();
    CM th = CM::Zero(nc + 1, nc + 1);
    for (int n = 0; n <= nc; ++n) th(n, n) = std::pow(nth, n) / std::pow(1 + nth, n + 1);
    CM rf = D * th * D.adjoint();
    rf /= rf.trace();
    CM ra(2, 2);
    ra << 0.7, std::conj(cplx(0.25, 0.15)), cplx(0.25, 0.15), 0.3;
    CM rat = ra;
    for (int j = 1; j < N; ++j) rat = Eigen::kroneckerProduct(ra, rat).eval();
    const CM rho = Eigen::kroneckerProduct(rf, rat).eval();
    const CM drho = dicke::unvectorize(lv.L * dicke::vectorize(rho), rho.rows());

    auto E = [&](const dicke::SpMatrix& O) { return (CM(O) * rho).trace(); };
    auto dE = [&](const dicke::SpMatrix& O) { return (CM(O) * drho).trace(); };
    const auto &a = ops.a, &ad = ops.a_dag, &z = ops.sigma_z[0], &sp = ops.sigma_plus[0], &sm = ops.sigma_minus[0];
    const auto &sm2 = ops.sigma_minus[1], &sp2 = ops.sigma_plus[1], &z2 = ops.sigma_z[1];

    cumulant::CoherentState s;
    s.a = E(a);
    s.sz = E(z).real();
    s.sp = E(sp);
    s.a_sp_c = E(a * sp) - s.a * s.sp;
    s.a_sz_c = E(a * z) - s.a * s.sz;
    s.spsm_c = E(sp * sm2) - s.sp * std::conj(s.sp);
    s.ada_c = (E(ad * a) - std::norm(s.a)).real();
    s.a_sm_c = E(a * sm) - s.a * std::conj(s.sp);
    s.adad_c = E(ad * ad) - std::conj(s.a) * std::conj(s.a);
    s.smsm_c = E(sm * sm2) - std::conj(s.sp) * std::conj(s.sp);
    s.szsp_c = E(z * sp2) - s.sz * s.sp;
    s.szsz_c = (E(z * z2) - s.sz * s.sz).real();
    s.adasz_c = E(ad * a * z).real() - s.adasz();
    REQUIRE(std::abs(s.adasz_c) < 1e-12);
    REQUIRE(s.ada_c == doctest::Approx(nth));

    const auto d = cumulant::rhs_coherent(s, p, cumulant::Closure::full);
    const cplx dA = dE(a), dP = dE(sp);
    const double dZ = dE(z).real();
    const double tol = 1e-11;
    CHECK(dist(d.a, dA) < tol);
    CHECK(std::abs(d.sz - dZ) < tol);
    CHECK(dist(d.sp, dP) < tol);
    CHECK(dist(d.a_sp_c, dE(a * sp) - dA * s.sp - s.a * dP) < tol);
    const cplx da_sz_c = dE(a * z) - dA * s.sz - s.a * dZ;
    CHECK(dist(d.a_sz_c, da_sz_c) < tol);
    CHECK(dist(d.spsm_c, dE(sp * sm2) - dP * std::conj(s.sp) - s.sp * std::conj(dP)) < tol);
    const double dada_c = (dE(ad * a) - 2.0 * (std::conj(s.a) * dA)).real();
    CHECK(std::abs(d.ada_c - dada_c) < tol);
    CHECK(dist(d.a_sm_c, dE(a * sm) - dA * std::conj(s.sp) - s.a * std::conj(dP)) < tol);
    CHECK(dist(d.adad_c, dE(ad * ad) - 2.0 * std::conj(s.a) * std::conj(dA)) < 1e-10);
    CHECK(dist(d.smsm_c, dE(sm * sm2) - 2.0 * std::conj(s.sp) * std::conj(dP)) < tol);
    CHECK(dist(d.szsp_c, dE(z * sp2) - dZ * s.sp - s.sz * dP) < tol);
    CHECK(std::abs(d.szsz_c - (dE(z * z2) - 2.0 * s.sz * dZ).real()) < tol);
    const double dfact = dada_c * s.sz + s.ada_c * dZ +
                         2.0 * (da_sz_c * std::conj(s.a) + s.a_sz_c * std::conj(dA)).real() +
                         2.0 * (std::conj(s.a) * dA).real() * s.sz + std::norm(s.a) * dZ;
    CHECK(std::abs(d.adasz_c - (dE(ad * a * z).real() - dfact)) < tol);

    // The reduced closure only differs in the frozen third-order cumulant.
    const auto r = cumulant::rhs_coherent(s, p, cumulant::Closure::reduced);
    CHECK(r.adasz_c == 0.0);
    CHECK(dist(r.a_sp_c, d.a_sp_c) < 1e-14);
}

TEST_CASE("incoherent and coherent systems agree without drive") {
    SystemParams p;
    p.n_atoms = 1000;
    p.g = 2.0;
    p.kappa = 50.0;
    p.gamma_a = 0.3;
    p.w = 0.7;
    p.omega_a = p.omega_m + 1.5;
    p.temperature = 0.3;
    p = validated(p);
    cumulant::IncoherentState s;
    s.sz = 0.2;
    s.a_sp = cplx(0.01, -0.03);
    s.n_ph = 4.0;
    s.spsm = cplx(0.02, 0.0);
    const auto di = cumulant::rhs_incoherent(s, p);
    const auto dc = cumulant::rhs_coherent(cumulant::CoherentState::from_incoherent(s), p, cumulant::Closure::reduced);
    CHECK(di.sz == doctest::Approx(dc.sz).epsilon(1e-12));
    CHECK(dist(di.a_sp, dc.a_sp_c) < 1e-12 * (1 + std::abs(di.a_sp)));
    CHECK(di.n_ph == doctest::Approx(dc.ada_c).epsilon(1e-12));
    CHECK(dist(di.spsm, dc.spsm_c) < 1e-12 * (1 + std::abs(di.spsm)));
    CHECK(std::abs(dc.a) < 1e-15);
}

TEST_CASE("spontaneous seed of an inverted ensemble") {
    SystemParams p;
    p.n_atoms = 100000;
    p.g = 40;
    p.kappa = 7e3;
    p.gamma_a = 0.3;
    p.temperature = 1.0;
    p = validated(p);
    cumulant::IncoherentState s;
    s.sz = 1.0;
    s.n_ph = p.nbar();
    const auto d = cumulant::rhs_incoherent(s, p);
    CHECK(dist(d.a_sp, cplx(0.0, -p.g * (1.0 + p.nbar()))) < 1e-9 * p.g);
}

TEST_CASE("decoupled limits") {
    for (double w : {0.0, 0.1, 0.3, 2.0}) {
        SystemParams p;
        p.n_atoms = 5000;
        p.g = 0.0;
        p.kappa = 7e3;
        p.gamma_a = 0.3;
        p.w = w;
        p.temperature = 0.5;
        p = validated(p);
        const auto a = cumulant::analytic_maser_steady(p);
        CHECK(a.sz == doctest::Approx((w - 0.3) / (w + 0.3)).epsilon(1e-12));
        CHECK(a.n_ph == doctest::Approx(p.nbar()).epsilon(1e-12));
        if (w == 0.3) CHECK(std::abs(a.sz) < 1e-15);
        const auto o = cumulant::steady_incoherent(p);
        CHECK(o.state.sz == doctest::Approx(a.sz).epsilon(1e-7));
        CHECK(o.state.n_ph == doctest::Approx(p.nbar()).epsilon(1e-7));
    }
}

TEST_CASE("photon estimate from the inversion") {
    SystemParams p;
    p.n_atoms = 100000;
    p.g = 40;
    p.kappa = 7e3;
    p.gamma_a = 0.0;
    p.temperature = 4.0;
    p = validated(p);
    CHECK(cumulant::estimated_photons(p, -0.7) == doctest::Approx(p.nbar()));
    const auto st = cumulant::steady_incoherent(p);
    CHECK(st.state.n_ph == doctest::Approx(p.nbar()).epsilon(1e-8));
    p.gamma_a = 3e4;
    p = validated(p);
    const auto cooled = cumulant::steady_incoherent(p);
    CHECK(cumulant::estimated_photons(p, cooled.state.sz) == doctest::Approx(cooled.state.n_ph).epsilon(1e-4));
    CHECK(cooled.state.n_ph < 0.8 * p.nbar());
}

TEST_CASE("analytic steady state matches the integrated one on a 5x5 grid") {
    for (double N : {1e3, 1e4, 1e5, 1e6, 3e6}) {
        for (double w : {0.01, 0.1, 0.5, 5.0, 50.0}) {
            SystemParams p;
            p.n_atoms = static_cast<long>(N);
            p.g = 40;
            p.kappa = 7e3;
            p.gamma_a = 0.3;
            p.w = w;
            p.temperature = 0.1;
            p = validated(p);
            CAPTURE(N);
            CAPTURE(w);
            const auto a = cumulant::analytic_maser_steady(p);
            // Stationary: the right-hand side vanishes at the analytic point.
            const auto r = cumulant::rhs_incoherent(a, p);
            const double scale = p.kappa * (a.n_ph + 1.0);
            CHECK(std::abs(r.n_ph) < 1e-9 * scale);
            CHECK(std::abs(r.sz) < 1e-9 * (p.gamma_a + w));
            const auto o = cumulant::steady_incoherent(p, {}, &a);
            CHECK(o.state.sz == doctest::Approx(a.sz).epsilon(1e-6));
            CHECK(o.state.n_ph == doctest::Approx(a.n_ph).epsilon(1e-6));
            // And starting from the ground state (no guess) reaches the same branch.
            const auto cold = cumulant::steady_incoherent(p);
            CHECK(cold.state.n_ph == doctest::Approx(a.n_ph).epsilon(1e-5));
        }
    }
}

TEST_CASE("bounds monitoring") {
    cumulant::IncoherentState s;
    s.sz = 1.2;
    CHECK(cumulant::bound_violation(s) == doctest::Approx(0.2));
    CHECK_THROWS_AS(cumulant::check_bounds(s), NumericalError);
    s.sz = 0.5;
    s.spsm = cplx(0.2, 0.0);
    CHECK(cumulant::bound_violation(s) == 0.0);
}

TEST_CASE("driven steady state: both closures converge and agree at large kappa") {
    SystemParams p;
    p.n_atoms = 100000;
    p.g = 40;
    p.kappa = 1e5;
    p.gamma_a = 0.3;
    p.eta = 1e3;
    p.temperature = 1.0;
    p.omega_l = p.omega_m;
    p.set_cavity_detuning(3000.0);
    p = validated(p);
    const auto f = cumulant::steady_coherent(p, cumulant::Closure::full);
    const auto r = cumulant::steady_coherent(p, cumulant::Closure::reduced);
    CHECK(f.state.photons() == doctest::Approx(r.state.photons()).epsilon(1e-6));
    CHECK(std::abs(f.state.adasz_c) < 1e-6);
    const auto y = f.state.to_vector();
    ode::State dy(y.size());
    cumulant::coherent_rhs(p)(0.0, y, dy);
    CHECK(dy.lpNorm<Eigen::Infinity>() < 1e-6 * p.kappa * (y.lpNorm<Eigen::Infinity>() + 1));
}
