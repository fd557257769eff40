#include "cavens/cumulant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace cavens::cumulant {

namespace {

constexpr cplx I{0.0, 1.0};

double pump_total(const SystemParams& p) { return p.gamma_a + p.w; }

// Operators entering the moment algebra. Suffix 2 marks a second, distinct atom.
enum class Op { a, ad, p, m, z, p2, m2, z2 };

bool is_field(Op o) { return o == Op::a || o == Op::ad; }
int atom_of(Op o) { return (o == Op::p2 || o == Op::m2 || o == Op::z2) ? 2 : 1; }
char kind(Op o) {
    switch (o) {
        case Op::p: case Op::p2: return 'p';
        case Op::m: case Op::m2: return 'm';
        default: return 'z';
    }
}

// First moments and second cumulants of a CoherentState, addressed by operator.
class Moments {
public:
    explicit Moments(const CoherentState& s) : s_(s) {}

    cplx mean(Op o) const {
        switch (o) {
            case Op::a: return s_.a;
            case Op::ad: return std::conj(s_.a);
            default: break;
        }
        switch (kind(o)) {
            case 'p': return s_.sp;
            case 'm': return std::conj(s_.sp);
            default: return s_.sz;
        }
    }

    // Cumulant <xy>_c for the ordered product x y.
    cplx cum(Op x, Op y) const {
        if (is_field(x) && is_field(y)) {
            if (x == Op::a && y == Op::a) return std::conj(s_.adad_c);
            if (x == Op::ad && y == Op::ad) return s_.adad_c;
            if (x == Op::ad && y == Op::a) return s_.ada_c;
            return s_.ada_c + 1.0;  // a a^dag = a^dag a + 1
        }
        if (is_field(x) || is_field(y)) {
            const Op f = is_field(x) ? x : y;
            const char k = kind(is_field(x) ? y : x);
            if (f == Op::a) return k == 'p' ? s_.a_sp_c : k == 'm' ? s_.a_sm_c : s_.a_sz_c;
            return k == 'p' ? std::conj(s_.a_sm_c) : k == 'm' ? std::conj(s_.a_sp_c) : std::conj(s_.a_sz_c);
        }
        if (atom_of(x) == atom_of(y)) throw std::logic_error("cumulant: same-atom pair must be reduced first");
        const char kx = kind(x), ky = kind(y);
        if (kx == 'p' && ky == 'm') return s_.spsm_c;
        if (kx == 'm' && ky == 'p') return std::conj(s_.spsm_c);
        if (kx == 'm' && ky == 'm') return s_.smsm_c;
        if (kx == 'p' && ky == 'p') return std::conj(s_.smsm_c);
        if (kx == 'z' && ky == 'z') return s_.szsz_c;
        const char other = kx == 'z' ? ky : kx;
        return other == 'p' ? s_.szsp_c : std::conj(s_.szsp_c);
    }

    cplx m2(Op x, Op y) const { return cum(x, y) + mean(x) * mean(y); }

    // Third moment with the third-order cumulant dropped.
    cplx m3(Op x, Op y, Op z) const {
        const cplx mx = mean(x), my = mean(y), mz = mean(z);
        return cum(x, y) * mz + cum(x, z) * my + cum(y, z) * mx + mx * my * mz;
    }

    // Fourth moment with third- and fourth-order cumulants dropped.
    cplx m4(Op w, Op x, Op y, Op z) const {
        const cplx mw = mean(w), mx = mean(x), my = mean(y), mz = mean(z);
        return cum(w, x) * cum(y, z) + cum(w, y) * cum(x, z) + cum(w, z) * cum(x, y) +
               cum(w, x) * my * mz + cum(w, y) * mx * mz + cum(w, z) * mx * my + cum(x, y) * mw * mz +
               cum(x, z) * mw * my + cum(y, z) * mw * mx + mw * mx * my * mz;
    }

private:
    const CoherentState& s_;
};

void put(ode::State& y, int& k, cplx v) {
    y[k++] = v.real();
    y[k++] = v.imag();
}
void put(ode::State& y, int& k, double v) { y[k++] = v; }
cplx take_c(const ode::State& y, int& k) {
    const cplx v(y[k], y[k + 1]);
    k += 2;
    return v;
}
double take_r(const ode::State& y, int& k) { return y[k++]; }

double inf_norm(const ode::State& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; }

}  // namespace

// ---------------------------------------------------------------- packing

ode::State IncoherentState::to_vector() const {
    ode::State y(kSize);
    int k = 0;
    put(y, k, sz);
    put(y, k, a_sp);
    put(y, k, n_ph);
    put(y, k, spsm);
    return y;
}

IncoherentState IncoherentState::from_vector(const ode::State& y) {
    if (y.size() != kSize) throw ConfigError("IncoherentState: wrong vector size");
    IncoherentState s;
    int k = 0;
    s.sz = take_r(y, k);
    s.a_sp = take_c(y, k);
    s.n_ph = take_r(y, k);
    s.spsm = take_c(y, k);
    return s;
}

ode::State CoherentState::to_vector() const {
    ode::State y(kSize);
    int k = 0;
    put(y, k, a);
    put(y, k, sz);
    put(y, k, sp);
    put(y, k, a_sp_c);
    put(y, k, a_sz_c);
    put(y, k, spsm_c);
    put(y, k, ada_c);
    put(y, k, a_sm_c);
    put(y, k, adad_c);
    put(y, k, smsm_c);
    put(y, k, szsp_c);
    put(y, k, szsz_c);
    put(y, k, adasz_c);
    return y;
}

CoherentState CoherentState::from_vector(const ode::State& y) {
    if (y.size() != kSize) throw ConfigError("CoherentState: wrong vector size");
    CoherentState s;
    int k = 0;
    s.a = take_c(y, k);
    s.sz = take_r(y, k);
    s.sp = take_c(y, k);
    s.a_sp_c = take_c(y, k);
    s.a_sz_c = take_c(y, k);
    s.spsm_c = take_c(y, k);
    s.ada_c = take_r(y, k);
    s.a_sm_c = take_c(y, k);
    s.adad_c = take_c(y, k);
    s.smsm_c = take_c(y, k);
    s.szsp_c = take_c(y, k);
    s.szsz_c = take_r(y, k);
    s.adasz_c = take_r(y, k);
    return s;
}

double CoherentState::adasz() const {
    return (Moments(*this).m3(Op::ad, Op::a, Op::z)).real() + adasz_c;
}

CoherentState CoherentState::from_incoherent(const IncoherentState& s) {
    CoherentState c;
    c.sz = s.sz;
    c.a_sp_c = s.a_sp;
    c.ada_c = s.n_ph;
    c.spsm_c = s.spsm;
    return c;
}

FrameDetunings frame_detunings(const SystemParams& p) {
    const double ref = p.omega_l ? *p.omega_l : p.omega_m;
    return {p.omega_m - ref, p.omega_a - ref};
}

// ---------------------------------------------------------------- right-hand sides

IncoherentState rhs_incoherent(const IncoherentState& s, const SystemParams& p) {
    if (p.driven()) throw ConfigError("eta: the incoherent system has no coherent drive");
    if (!std::isfinite(s.sz) || !std::isfinite(s.n_ph) || !std::isfinite(std::abs(s.a_sp)) ||
        !std::isfinite(std::abs(s.spsm)))
        throw NumericalError("rhs_incoherent: non-finite state");
    const double G = pump_total(p);
    const double N = static_cast<double>(p.n_atoms);
    const double delta = p.omega_m - p.omega_a;
    const double kp = p.kappa + 0.5 * G;
    const double im = s.a_sp.imag();

    IncoherentState d;
    d.sz = 4.0 * p.g * im - G * s.sz + (p.w - p.gamma_a);
    d.a_sp = -cplx(kp, delta) * s.a_sp -
             I * p.g * (0.5 * (s.sz + 1.0) + s.n_ph * s.sz + (N - 1.0) * s.spsm);
    d.n_ph = -2.0 * p.g * N * im - 2.0 * p.kappa * (s.n_ph - p.nbar());
    d.spsm = -G * s.spsm - 2.0 * p.g * s.sz * im;
    return d;
}

CoherentState rhs_coherent(const CoherentState& s_in, const SystemParams& p, Closure closure) {
    CoherentState s = s_in;
    if (closure == Closure::reduced) s.adasz_c = 0.0;
    if (!s.to_vector().allFinite()) throw NumericalError("rhs_coherent: non-finite state");

    const Moments mo(s);
    const auto det = frame_detunings(p);
    const double dm = det.delta_m, da = det.delta_a;
    const double G = pump_total(p);
    const double src = p.w - p.gamma_a;  // Gamma * s0
    const double k = p.kappa, g = p.g;
    const double N = static_cast<double>(p.n_atoms);
    const double nbar = p.nbar();
    const cplx eta = p.eta, etac = std::conj(p.eta);

    const cplx A = s.a, P = s.sp, M = std::conj(s.sp);
    const double Z = s.sz;

    // Raw moments used on the right-hand sides.
    const cplx R_ap = mo.m2(Op::a, Op::p);
    const cplx R_am = mo.m2(Op::a, Op::m);
    const cplx R_az = mo.m2(Op::a, Op::z);
    const cplx R_adm = mo.m2(Op::ad, Op::m);
    const cplx R_adz = mo.m2(Op::ad, Op::z);
    const cplx R_pm2 = mo.m2(Op::p, Op::m2);
    const cplx R_mm2 = mo.m2(Op::m, Op::m2);
    const cplx R_zm2 = mo.m2(Op::z, Op::m2);
    const cplx R_zp2 = mo.m2(Op::z, Op::p2);
    const cplx R_zz2 = mo.m2(Op::z, Op::z2);
    const cplx R_aa = mo.m2(Op::a, Op::a);
    const double R_n = mo.m2(Op::ad, Op::a).real();
    const double R_nz = mo.m3(Op::ad, Op::a, Op::z).real() + s.adasz_c;

    // Heisenberg equations of the raw moments (exact up to the moment factorization).
    const cplx dA = -cplx(k, dm) * A - I * g * N * M + eta;
    const double dZ = (2.0 * I * g * (R_adm - R_ap)).real() - G * Z + src;
    const cplx dP = -cplx(0.5 * G, -da) * P - I * g * R_adz;

    const cplx dR_ap = -cplx(k + 0.5 * G, dm - da) * R_ap -
                       I * g * (0.5 * (1.0 + Z) + R_nz + (N - 1.0) * R_pm2) + eta * P;
    const cplx dR_az = -cplx(k + G, dm) * R_az + src * A + I * g * M - I * g * (N - 1.0) * R_zm2 + eta * Z +
                       2.0 * I * g * mo.m3(Op::ad, Op::a, Op::m) - 2.0 * I * g * mo.m3(Op::a, Op::a, Op::p);
    const cplx dR_pm2 = -G * R_pm2 - I * g * mo.m3(Op::ad, Op::z, Op::m2) + I * g * mo.m3(Op::a, Op::p, Op::z2);
    const double dR_n = (I * g * N * (R_ap - R_adm)).real() + 2.0 * (etac * A).real() - 2.0 * k * R_n +
                        2.0 * k * nbar;
    const cplx dR_am = -cplx(k + 0.5 * G, dm + da) * R_am - I * g * (N - 1.0) * R_mm2 + eta * M +
                       I * g * mo.m3(Op::a, Op::a, Op::z);
    const cplx dR_aa = -2.0 * cplx(k, dm) * R_aa - 2.0 * I * g * N * R_am + 2.0 * eta * A;
    const cplx dR_mm2 = -cplx(G, 2.0 * da) * R_mm2 +
                        I * g * (mo.m3(Op::a, Op::z, Op::m2) + mo.m3(Op::a, Op::m, Op::z2));
    const cplx dR_zp2 = -cplx(1.5 * G, -da) * R_zp2 + src * P + 2.0 * I * g * mo.m3(Op::ad, Op::m, Op::p2) -
                        2.0 * I * g * mo.m3(Op::a, Op::p, Op::p2) - I * g * mo.m3(Op::ad, Op::z, Op::z2);
    const double dR_zz2 = (2.0 * I * g *
                           (mo.m3(Op::ad, Op::m, Op::z2) - mo.m3(Op::a, Op::p, Op::z2) +
                            mo.m3(Op::ad, Op::z, Op::m2) - mo.m3(Op::a, Op::z, Op::p2)))
                              .real() -
                          2.0 * G * R_zz2.real() + 2.0 * src * Z;

    // Back to cumulants: d<xy>_c = d<xy> - d<x><y> - <x>d<y>.
    CoherentState d;
    d.a = dA;
    d.sz = dZ;
    d.sp = dP;
    d.a_sp_c = dR_ap - dA * P - A * dP;
    d.a_sz_c = dR_az - dA * Z - A * dZ;
    d.spsm_c = dR_pm2 - dP * M - P * std::conj(dP);
    d.ada_c = dR_n - 2.0 * (std::conj(A) * dA).real();
    d.a_sm_c = dR_am - dA * M - A * std::conj(dP);
    d.adad_c = std::conj(dR_aa - 2.0 * A * dA);
    d.smsm_c = dR_mm2 - 2.0 * M * std::conj(dP);
    d.szsp_c = dR_zp2 - dZ * P - Z * dP;
    d.szsz_c = dR_zz2 - 2.0 * Z * dZ;

    if (closure == Closure::full) {
        const double dR_nz =
            (-(2.0 * k + G) * R_nz + 2.0 * k * nbar * Z + src * R_n) +
            (-I * g * R_ap + I * g * R_adm +
             2.0 * I * g * (mo.m4(Op::ad, Op::ad, Op::a, Op::m) - mo.m4(Op::ad, Op::a, Op::a, Op::p)) +
             I * g * (N - 1.0) * (mo.m3(Op::a, Op::z, Op::p2) - mo.m3(Op::ad, Op::z, Op::m2)) + etac * R_az +
             eta * R_adz)
                .real();
        // d/dt of the factorized part <a^dag a>_c Z + 2 Re(<a sz>_c A^*) + |A|^2 Z
        const double dfact = d.ada_c * Z + s.ada_c * dZ +
                             2.0 * (d.a_sz_c * std::conj(A) + s.a_sz_c * std::conj(dA)).real() +
                             2.0 * (std::conj(A) * dA).real() * Z + std::norm(A) * dZ;
        d.adasz_c = dR_nz - dfact;
    } else {
        d.adasz_c = 0.0;
    }
    return d;
}

ode::Rhs incoherent_rhs(const SystemParams& p) {
    return [p](double, const ode::State& y, ode::State& dy) {
        dy = rhs_incoherent(IncoherentState::from_vector(y), p).to_vector();
    };
}

ode::Rhs coherent_rhs(const SystemParams& p, Closure closure) {
    return [p, closure](double, const ode::State& y, ode::State& dy) {
        dy = rhs_coherent(CoherentState::from_vector(y), p, closure).to_vector();
    };
}

// ---------------------------------------------------------------- bounds

double bound_violation(const IncoherentState& s) {
    double v = 0.0;
    v = std::max(v, std::abs(s.sz) - 1.0);
    v = std::max(v, -s.n_ph);
    v = std::max(v, std::abs(s.spsm) - 0.25);
    return v;
}

double bound_violation(const CoherentState& s) {
    double v = 0.0;
    v = std::max(v, std::abs(s.sz) - 1.0);
    v = std::max(v, -s.photons());
    v = std::max(v, std::abs(s.spsm_c + std::norm(s.sp)) - 0.25);
    return v;
}

namespace {
template <class State>
void check_bounds_impl(const State& s, double tol, double t, const char* what) {
    const double v = bound_violation(s);
    if (!(v <= tol)) {
        std::ostringstream os;
        os << what << ": physical bound violated by " << v << " at t=" << t
           << " (truncation breakdown; state: sz=" << s.sz << ")";
        throw NumericalError(os.str());
    }
}
}  // namespace

void check_bounds(const IncoherentState& s, double tol, double t) {
    check_bounds_impl(s, tol, t, "incoherent system");
}
void check_bounds(const CoherentState& s, double tol, double t) { check_bounds_impl(s, tol, t, "coherent system"); }

// ---------------------------------------------------------------- steady states

std::string to_string(SteadyPath path) { return path == SteadyPath::integration ? "integration" : "newton"; }

double fastest_rate(const SystemParams& p) {
    const double geff = p.g * std::sqrt(static_cast<double>(std::max<long>(p.n_atoms, 1)));
    return std::max({p.kappa, pump_total(p), geff, 1e-300});
}

double slowest_rate(const SystemParams& p) {
    double r = std::numeric_limits<double>::infinity();
    for (double v : {p.kappa, pump_total(p)})
        if (v > 0.0) r = std::min(r, v);
    return std::isfinite(r) ? r : 1.0;
}

SteadyResult steady_state_ode(const ode::Rhs& rhs, const ode::State& y0, const SteadyOptions& opts) {
    if (!y0.allFinite()) throw ConfigError("steady_state_ode: non-finite initial state");
    if (!(opts.rate_scale > 0.0)) throw ConfigError("steady_state_ode: rate_scale must be > 0");
    if (!(opts.time_cap > 0.0)) throw ConfigError("steady_state_ode: time_cap must be > 0");
    const auto n = y0.size();
    ode::State f(n);
    auto residual = [&](const ode::State& y) {
        rhs(0.0, y, f);
        return inf_norm(f);
    };
    auto criterion = [&](const ode::State& y) { return opts.residual_tol * opts.rate_scale * (inf_norm(y) + 1.0); };

    SteadyResult out;
    out.y = y0;
    out.residual = residual(y0);
    if (out.residual < criterion(y0)) {
        out.path = opts.newton_only ? SteadyPath::newton : SteadyPath::integration;
        return out;
    }

    if (!opts.newton_only) {
        double t = 0.0;
        double chunk = std::min(opts.time_cap, 20.0 / opts.rate_scale);
        while (t < opts.time_cap) {
            const double t1 = std::min(opts.time_cap, t + chunk);
            const auto traj = ode::integrate(rhs, out.y, std::vector<double>{t, t1}, opts.ode);
            out.y = traj.y.back();
            t = t1;
            out.t_reached = t;
            out.residual = residual(out.y);
            if (out.residual < criterion(out.y)) {
                out.path = SteadyPath::integration;
                return out;
            }
            chunk *= 2.0;
        }
        if (opts.integrate_only) {
            std::ostringstream os;
            os << "steady_state_ode: time cap " << opts.time_cap << " reached with residual " << out.residual;
            throw NumericalError(os.str());
        }
    }

    // Damped Newton with a finite-difference Jacobian.
    out.path = SteadyPath::newton;
    ode::State y = out.y, fy(n), f1(n), yt(n);
    rhs(0.0, y, fy);
    double res = inf_norm(fy);
    // Central differences: the right-hand sides are low-order polynomials, so
    // truncation error is negligible, while the larger step keeps cancellation
    // against large source terms (eta, g N) under control for small variables.
    const double cb = std::cbrt(std::numeric_limits<double>::epsilon());
    ode::State f2(n);
    for (int it = 0; it < opts.newton_max_iter; ++it) {
        if (res < criterion(y)) {
            out.y = y;
            out.residual = res;
            out.newton_iterations = it;
            return out;
        }
        const double floor = 1e-3 * (inf_norm(y) + 1.0);
        Eigen::MatrixXd J(n, n);
        for (Eigen::Index j = 0; j < n; ++j) {
            const double h = cb * std::max(std::abs(y[j]), floor);
            yt = y;
            yt[j] += h;
            rhs(0.0, yt, f1);
            yt[j] = y[j] - h;
            rhs(0.0, yt, f2);
            J.col(j) = (f1 - f2) / (2.0 * h);
        }
        const ode::State dx = J.colPivHouseholderQr().solve(-fy);
        if (!dx.allFinite()) break;
        double lambda = 1.0;
        bool improved = false;
        while (lambda > 1e-6) {
            yt = y + lambda * dx;
            rhs(0.0, yt, f1);
            const double r1 = inf_norm(f1);
            if (std::isfinite(r1) && r1 < res) {
                y = yt;
                fy = f1;
                res = r1;
                improved = true;
                break;
            }
            lambda *= 0.5;
        }
        out.newton_iterations = it + 1;
        if (!improved) break;
    }
    out.y = y;
    out.residual = res;
    if (res < criterion(y)) return out;
    std::ostringstream os;
    os << "steady_state_ode: no convergence (final residual " << res << ", required " << criterion(y) << ")";
    throw NumericalError(os.str());
}

namespace {
SteadyOptions with_defaults(SteadyOptions o, const SystemParams& p) {
    if (!(o.rate_scale > 0.0)) o.rate_scale = fastest_rate(p);
    if (!(o.time_cap > 0.0)) o.time_cap = std::min(200.0 / slowest_rate(p), 2.0e4 / fastest_rate(p));
    return o;
}
}  // namespace

IncoherentSteady steady_incoherent(const SystemParams& params, const SteadyOptions& opts,
                                   const IncoherentState* guess) {
    const auto p = validated(params);
    const auto o = with_defaults(opts, p);
    IncoherentState y0;
    if (guess) {
        y0 = *guess;
    } else {
        // Above threshold the free-atom point is an unstable fixed point that
        // Newton happily converges to; start from the stable closed-form root.
        try {
            y0 = analytic_maser_steady(p);
        } catch (const std::exception&) {
            const double G = pump_total(p);
            y0 = IncoherentState{};
            y0.sz = G > 0.0 ? (p.w - p.gamma_a) / G : -1.0;
            y0.n_ph = p.nbar();
        }
    }
    IncoherentSteady out;
    out.info = steady_state_ode(incoherent_rhs(p), y0.to_vector(), o);
    out.state = IncoherentState::from_vector(out.info.y);
    check_bounds(out.state, 1e-3, out.info.t_reached);
    return out;
}

CoherentSteady steady_coherent(const SystemParams& params, Closure closure, const SteadyOptions& opts,
                               const CoherentState* guess) {
    const auto p = validated(params);
    const auto o = with_defaults(opts, p);
    CoherentState y0;
    if (guess) {
        y0 = *guess;
    } else {
        y0.sz = -1.0;
        y0.ada_c = p.nbar();
    }
    CoherentSteady out;
    out.info = steady_state_ode(coherent_rhs(p, closure), y0.to_vector(), o);
    out.state = CoherentState::from_vector(out.info.y);
    if (closure == Closure::reduced) out.state.adasz_c = 0.0;
    check_bounds(out.state, 1e-3, out.info.t_reached);
    return out;
}

namespace {
// Jacobian of rhs_incoherent in the packed order (sz, Re a_sp, Im a_sp, n, Re spsm, Im spsm).
Eigen::MatrixXd incoherent_jacobian(const IncoherentState& s, const SystemParams& p) {
    const double G = pump_total(p);
    const double N = static_cast<double>(p.n_atoms);
    const double delta = p.omega_m - p.omega_a;
    const double kp = p.kappa + 0.5 * G;
    const double g = p.g;
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(6, 6);
    J(0, 0) = -G;
    J(0, 2) = 4.0 * g;
    J(1, 1) = -kp;
    J(1, 2) = delta;
    J(1, 5) = g * (N - 1.0);
    J(2, 0) = -g * (0.5 + s.n_ph);
    J(2, 1) = -delta;
    J(2, 2) = -kp;
    J(2, 3) = -g * s.sz;
    J(2, 4) = -g * (N - 1.0);
    J(3, 2) = -2.0 * g * N;
    J(3, 3) = -2.0 * p.kappa;
    J(4, 0) = -2.0 * g * s.a_sp.imag();
    J(4, 2) = -2.0 * g * s.sz;
    J(4, 4) = -G;
    J(5, 5) = -G;
    return J;
}
}  // namespace

IncoherentState analytic_maser_steady(const SystemParams& params) {
    const auto p = validated(params);
    if (p.driven()) throw ConfigError("eta: analytic_maser_steady needs an undriven system");
    const double G = pump_total(p);
    if (!(G > 0.0)) throw ConfigError("gamma_a/w: the inversion needs gamma_a + w > 0");
    if (!(p.kappa > 0.0)) throw ConfigError("kappa: must be > 0");
    const double N = static_cast<double>(p.n_atoms);
    const double nbar = p.nbar();
    const double s0 = (p.w - p.gamma_a) / G;
    const double kp = p.kappa + 0.5 * G;
    const double delta = p.omega_m - p.omega_a;

    IncoherentState s;
    if (p.g == 0.0) {
        s.sz = s0;
        s.n_ph = nbar;
        return s;
    }
    // Stationarity gives Im<a s+> = Gamma d / (4 g) with d = sz - s0, hence
    //   n = nbar - k d,  k = N Gamma / (4 kappa),   <s1+ s2-> = -sz d / 2,
    // and the <a s+> equation closes to A d^2 - B d - C = 0. Solving for the
    // offset d (rather than sz) avoids the cancellation between the
    // spontaneous and collective terms when sz sits close to s0.
    const double c = G * (kp * kp + delta * delta) / (4.0 * p.g * p.g * kp);
    const double k = N * G / (4.0 * p.kappa);
    const double A = k + 0.5 * (N - 1.0);
    const double B = 0.5 + nbar - A * s0 + c;
    const double C = 0.5 * (1.0 + s0) + nbar * s0;
    const double disc = B * B + 4.0 * A * C;
    if (!(disc >= 0.0)) throw NumericalError("analytic_maser_steady: complex roots (outside model validity)");
    const double q = 0.5 * (B + std::copysign(std::sqrt(disc), B));
    double roots[2] = {q / A, q != 0.0 ? -C / q : 0.0};
    // Prefer the root continuously connected to d = 0 at g -> 0 (smallest offset).
    if (std::abs(roots[1]) < std::abs(roots[0])) std::swap(roots[0], roots[1]);

    // Above threshold both roots can be physical; the non-lasing one is then
    // unstable, so candidates are ranked by linear stability first.
    const double tol = 1e-9;
    bool found = false;
    double best_growth = std::numeric_limits<double>::infinity();
    for (double d : roots) {
        const double sz = s0 + d;
        if (!(sz >= -1.0 - tol && sz <= 1.0 + tol)) continue;
        const double n = nbar - k * d;
        if (n < -tol * std::max(1.0, nbar)) continue;
        IncoherentState cand;
        cand.sz = sz;
        cand.n_ph = n;
        cand.spsm = -0.5 * sz * d;
        const double im = G * d / (4.0 * p.g);
        cand.a_sp = cplx(im * delta / kp, im);
        const Eigen::MatrixXd J = incoherent_jacobian(cand, p);
        const double growth = Eigen::EigenSolver<Eigen::MatrixXd>(J, false).eigenvalues().real().maxCoeff();
        const double scale = J.cwiseAbs().maxCoeff();
        const double excess = std::max(growth - 1e-9 * scale, 0.0);
        if (!found || excess < best_growth) {
            s = cand;
            best_growth = excess;
            found = true;
        }
    }
    if (found) return s;
    std::ostringstream os;
    os << "analytic_maser_steady: no physical root (inversion candidates " << s0 + roots[0] << ", " << s0 + roots[1] << ")";
    throw NumericalError(os.str());
}

double estimated_photons(const SystemParams& p, double sz) {
    if (!(p.kappa > 0.0)) throw ConfigError("kappa: must be > 0");
    return p.nbar() - static_cast<double>(p.n_atoms) * p.gamma_a * (1.0 + sz) / (4.0 * p.kappa);
}

}  // namespace cavens::cumulant
