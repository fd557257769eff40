#pragma once

// Truncated cumulant equations for N identical two-level atoms in a cavity.
//
// Atom labels 1 and 2 denote any two distinct atoms; by permutation symmetry
// every single-atom average equals that of atom 1 and every pair average that
// of the pair (1, 2). Third-order moments are factorized with all third-order
// cumulants dropped,
//     <ABC> = <AB><C> + <AC><B> + <BC><A> - 2<A><B><C>,
// except where a variable explicitly keeps them (adasz_c below).
//
// Incoherent pumping at rate w enters as a sigma+ jump per atom. With
// Gamma = gamma_a + w the inversion relaxes as -Gamma (sz - s0),
// s0 = (w - gamma_a)/(w + gamma_a).
//
// Detunings of the coherent system are taken relative to omega_l (or to
// omega_m when no drive frequency is set), see frame_detunings().

#include <Eigen/Dense>

#include <string>

#include "cavens/ode.hpp"
#include "cavens/params.hpp"

namespace cavens::cumulant {

/// Four-variable system for an undriven ensemble (incoherent pump allowed).
struct IncoherentState {
    double sz = -1.0;          // <sigma_1^z>
    cplx a_sp{0.0, 0.0};       // <a sigma_1^+>
    double n_ph = 0.0;         // <a^dag a>
    cplx spsm{0.0, 0.0};       // <sigma_1^+ sigma_2^->

    static constexpr int kSize = 6;
    ode::State to_vector() const;
    static IncoherentState from_vector(const ode::State& y);
};

/// Driven system: first moments and second-order cumulants (suffix _c), plus
/// the third-order cumulant <a^dag a sigma_1^z>_c.
struct CoherentState {
    cplx a{0.0, 0.0};          // <a>
    double sz = -1.0;          // <sigma_1^z>
    cplx sp{0.0, 0.0};         // <sigma_1^+>
    cplx a_sp_c{0.0, 0.0};     // <a sigma_1^+>_c
    cplx a_sz_c{0.0, 0.0};     // <a sigma_1^z>_c
    cplx spsm_c{0.0, 0.0};     // <sigma_1^+ sigma_2^->_c
    double ada_c = 0.0;        // <a^dag a>_c
    cplx a_sm_c{0.0, 0.0};     // <a sigma_1^->_c
    cplx adad_c{0.0, 0.0};     // <a^dag a^dag>_c
    cplx smsm_c{0.0, 0.0};     // <sigma_1^- sigma_2^->_c
    cplx szsp_c{0.0, 0.0};     // <sigma_1^z sigma_2^+>_c
    double szsz_c = 0.0;       // <sigma_1^z sigma_2^z>_c
    double adasz_c = 0.0;      // <a^dag a sigma_1^z>_c (third order)

    static constexpr int kSize = 22;
    ode::State to_vector() const;
    static CoherentState from_vector(const ode::State& y);

    double photons() const { return ada_c + std::norm(a); }        // <a^dag a>
    cplx a_sp() const { return a_sp_c + a * sp; }                    // <a sigma^+>
    double spsm() const { return spsm_c.real() + std::norm(sp); }    // <sigma_1^+ sigma_2^->
    /// Full moment <a^dag a sigma_1^z>.
    double adasz() const;

    /// Embeds an incoherent state (all phase-bearing averages zero).
    static CoherentState from_incoherent(const IncoherentState& s);
};

enum class Closure {
    full,     // 13-equation set: <a^dag a sigma^z>_c evolves
    reduced,  // 12-equation set: <a^dag a sigma^z>_c held at zero
};

struct FrameDetunings {
    double delta_m = 0.0;  // omega_m - omega_ref
    double delta_a = 0.0;  // omega_a - omega_ref
};
FrameDetunings frame_detunings(const SystemParams& p);

/// d/dt of the incoherent system. Requires eta == 0.
IncoherentState rhs_incoherent(const IncoherentState& s, const SystemParams& p);

/// d/dt of the coherent system (all cumulant variables).
CoherentState rhs_coherent(const CoherentState& s, const SystemParams& p, Closure closure = Closure::full);

/// ODE right-hand sides on the packed real vectors.
ode::Rhs incoherent_rhs(const SystemParams& p);
ode::Rhs coherent_rhs(const SystemParams& p, Closure closure = Closure::full);

/// Physical-bound monitoring. `violation` returns the largest excursion beyond
/// the bounds (0 when all hold): -1 <= sz <= 1, n >= 0, |<s1+ s2->| <= 1/4.
double bound_violation(const IncoherentState& s);
double bound_violation(const CoherentState& s);

/// Throws NumericalError when a bound is exceeded by more than `tol`.
void check_bounds(const IncoherentState& s, double tol = 1e-3, double t = 0.0);
void check_bounds(const CoherentState& s, double tol = 1e-3, double t = 0.0);

enum class SteadyPath { integration, newton };
std::string to_string(SteadyPath path);

struct SteadyOptions {
    double residual_tol = 1e-10;   // ||f||_inf < residual_tol * rate_scale * (||y||_inf + 1)
    double rate_scale = 0.0;       // 0: derived from the parameters by the caller helpers
    double time_cap = 0.0;         // 0: 200 / (slowest positive rate)
    bool newton_only = false;
    bool integrate_only = false;
    int newton_max_iter = 60;
    ode::Options ode;
};

struct SteadyResult {
    ode::State y;
    SteadyPath path = SteadyPath::integration;
    double residual = 0.0;   // ||f||_inf at the returned state
    double t_reached = 0.0;  // integration time used
    int newton_iterations = 0;
};

/// Generic steady-state finder: integrate until the residual criterion holds
/// (doubling the horizon up to the time cap), then fall back to damped Newton
/// with a central-difference Jacobian. Throws NumericalError on failure.
SteadyResult steady_state_ode(const ode::Rhs& rhs, const ode::State& y0, const SteadyOptions& opts);

/// Typical relaxation rates of a parameter set, used for default scales.
double fastest_rate(const SystemParams& p);
double slowest_rate(const SystemParams& p);

struct IncoherentSteady {
    IncoherentState state;
    SteadyResult info;
};
/// Without a guess the search starts from analytic_maser_steady() (falling
/// back to the free-atom inversion with a thermal mode when that fails).
IncoherentSteady steady_incoherent(const SystemParams& p, const SteadyOptions& opts = {},
                                   const IncoherentState* guess = nullptr);

struct CoherentSteady {
    CoherentState state;
    SteadyResult info;
};
CoherentSteady steady_coherent(const SystemParams& p, Closure closure = Closure::full,
                               const SteadyOptions& opts = {}, const CoherentState* guess = nullptr);

/// Closed-form steady state of the incoherent system: the stationarity
/// conditions reduce to a quadratic in sz; the root continuously connected to
/// the decoupled value s0 is returned (computed in cancellation-free form).
/// Throws NumericalError when no root is physical.
IncoherentState analytic_maser_steady(const SystemParams& p);

/// Photon number predicted from the inversion alone for the undriven system:
/// n = nbar - N gamma_a (1 + sz) / (4 kappa)   (w = 0).
double estimated_photons(const SystemParams& p, double sz);

}  // namespace cavens::cumulant
