#include "cavens/spectra.hpp"

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

namespace cavens::spectra {

namespace {

constexpr cplx I{0.0, 1.0};

double spectrum_value(const CVector& x, int index) { return x[index].real() / kPi; }

}  // namespace

std::vector<double> parallel_map(const std::vector<double>& grid, const std::function<double(double)>& f,
                                 int workers) {
    std::vector<double> out(grid.size());
    const std::size_t n = grid.size();
    workers = std::max(1, std::min<int>(workers, static_cast<int>(std::max<std::size_t>(n, 1))));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) out[i] = f(grid[i]);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n && !failed; i = next++) {
                try {
                    out[i] = f(grid[i]);
                } catch (...) {
                    if (!failed.exchange(true)) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
    return out;
}

// ---------------------------------------------------------------- QRT system

CMatrix qrt_matrix(const SystemParams& p, const cumulant::CoherentState& st) {
    const auto det = cumulant::frame_detunings(p);
    const double G = p.gamma_a + p.w;
    const double N = static_cast<double>(p.n_atoms);
    const double g = p.g;
    const cplx A = st.a, Ad = std::conj(st.a), P = st.sp, M_ = std::conj(st.sp);
    const double Z = st.sz;

    CMatrix M = CMatrix::Zero(5, 5);
    M(kA, kA) = -cplx(p.kappa, det.delta_m);
    M(kA, kSminus) = -I * g * N;
    M(kAdag, kAdag) = -cplx(p.kappa, -det.delta_m);
    M(kAdag, kSplus) = I * g * N;
    M(kSminus, kSminus) = -cplx(0.5 * G, det.delta_a);
    M(kSminus, kA) = I * g * Z;
    M(kSminus, kSz) = I * g * A;
    M(kSplus, kSplus) = -cplx(0.5 * G, -det.delta_a);
    M(kSplus, kAdag) = -I * g * Z;
    M(kSplus, kSz) = -I * g * Ad;
    M(kSz, kSz) = -G;
    M(kSz, kA) = -2.0 * I * g * P;
    M(kSz, kSplus) = -2.0 * I * g * A;
    M(kSz, kAdag) = 2.0 * I * g * M_;
    M(kSz, kSminus) = 2.0 * I * g * Ad;
    return M;
}

QrtSystem build_qrt_system(const SystemParams& p, const cumulant::CoherentState& st, FixedOp fixed) {
    QrtSystem sys;
    sys.M = qrt_matrix(p, st);
    sys.labels = {"a", "a_dag", "s_minus", "s_plus", "s_z"};
    sys.x0 = CVector::Zero(5);
    const double N = static_cast<double>(p.n_atoms);
    if (fixed == FixedOp::a_dagger) {
        sys.x0[kA] = st.ada_c;
        sys.x0[kAdag] = st.adad_c;
        sys.x0[kSminus] = std::conj(st.a_sp_c);
        sys.x0[kSplus] = std::conj(st.a_sm_c);
        sys.x0[kSz] = std::conj(st.a_sz_c);
    } else {
        const cplx P = st.sp;
        const double Z = st.sz;
        const double f = (N - 1.0) / N;
        sys.x0[kA] = st.a_sp_c;
        sys.x0[kAdag] = std::conj(st.a_sm_c);
        sys.x0[kSminus] = (0.5 * (1.0 + Z) - std::norm(P)) / N + f * st.spsm_c;
        sys.x0[kSplus] = -P * P / N + f * std::conj(st.smsm_c);
        sys.x0[kSz] = -P * (1.0 + Z) / N + f * st.szsp_c;
    }

    Eigen::ComplexEigenSolver<CMatrix> es(sys.M, false);
    sys.max_real_eigenvalue = es.eigenvalues().real().maxCoeff();
    const double scale = sys.M.cwiseAbs().maxCoeff();
    sys.stable = sys.max_real_eigenvalue <= 1e-10 * scale;
    if (!sys.stable) {
        std::ostringstream os;
        os << "build_qrt_system: linearized steady state is unstable (max Re eigenvalue "
           << sys.max_real_eigenvalue << ")";
        throw NumericalError(os.str());
    }
    return sys;
}

CVector laplace_correlation(const CMatrix& M, const CVector& x0, cplx s, double max_condition) {
    const CMatrix A = s * CMatrix::Identity(M.rows(), M.cols()) - M;
    Eigen::JacobiSVD<CMatrix> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double cond = sv[sv.size() - 1] > 0.0 ? sv[0] / sv[sv.size() - 1] : std::numeric_limits<double>::infinity();
    if (!(cond <= max_condition)) {
        std::ostringstream os;
        os << "laplace_correlation: near-singular system at s=" << s << " (condition " << cond << ")";
        throw NumericalError(os.str());
    }
    return svd.solve(x0);
}

CVector laplace_correlation(const QrtSystem& sys, cplx s, double max_condition) {
    return laplace_correlation(sys.M, sys.x0, s, max_condition);
}

// ---------------------------------------------------------------- spectra

SpectrumCurve thermal_output_spectrum(const SystemParams& params, const cumulant::IncoherentState& steady,
                                      const ThermalOutputConfig& config, const std::vector<double>& omega_grid,
                                      int workers) {
    const auto p = validated(params);
    if (p.driven()) throw ConfigError("eta: the thermal output spectrum is defined for an undriven cavity");
    const double nbar = p.nbar();
    const double b0 = config.b0 < 0.0 ? nbar / (2.0 * kPi) : config.b0;
    const auto st = cumulant::CoherentState::from_incoherent(steady);
    const auto sys = build_qrt_system(p, st, FixedOp::a_dagger);
    CVector commutator = CVector::Zero(5);
    commutator[kA] = -1.0;  // <[a^dag, a]>

    SpectrumCurve c;
    c.omega = omega_grid;
    const auto cav = parallel_map(
        omega_grid, [&](double w) { return 2.0 * p.kappa * spectrum_value(laplace_correlation(sys, -I * w), kA); },
        workers);
    const auto inter = parallel_map(
        omega_grid,
        [&](double w) {
            return 2.0 * p.kappa * nbar * spectrum_value(laplace_correlation(sys.M, commutator, -I * w), kA);
        },
        workers);

    double norm = 1.0;
    if (config.normalize) {
        norm = b0 + (steady.n_ph - nbar) / (2.0 * kPi);
        if (!(norm > 0.0)) {
            c.note = "normalization constant not positive; spectrum left unnormalized";
            norm = 1.0;
        }
    }
    c.normalization = norm;
    auto& ch_bg = c.channels["reservoir_background"];
    auto& ch_cav = c.channels["cavity"];
    auto& ch_int = c.channels["interference"];
    c.total.resize(omega_grid.size());
    for (std::size_t i = 0; i < omega_grid.size(); ++i) {
        ch_bg.push_back(b0 / norm);
        ch_cav.push_back(cav[i] / norm);
        ch_int.push_back(inter[i] / norm);
        c.total[i] = ch_bg.back() + ch_cav.back() + ch_int.back();
    }
    return c;
}

DrivenSpectra incoherent_driven_spectra(const SystemParams& params, const cumulant::CoherentState& steady,
                                        const std::vector<double>& omega_grid, int workers) {
    const auto p = validated(params);
    const auto mode_sys = build_qrt_system(p, steady, FixedOp::a_dagger);
    const auto fl_sys = build_qrt_system(p, steady, FixedOp::sigma_plus);
    DrivenSpectra out;
    out.mode.omega = out.fluorescence.omega = omega_grid;
    out.mode.total = parallel_map(
        omega_grid, [&](double w) { return spectrum_value(laplace_correlation(mode_sys, -I * w), kA); }, workers);
    out.fluorescence.total = parallel_map(
        omega_grid, [&](double w) { return spectrum_value(laplace_correlation(fl_sys, -I * w), kSminus); },
        workers);
    return out;
}

cplx maser_laplace_closed_form(const SystemParams& p, const cumulant::IncoherentState& st, cplx s) {
    const auto det = cumulant::frame_detunings(p);
    const double G = p.gamma_a + p.w;
    const double N = static_cast<double>(p.n_atoms);
    const cplx atom = 0.5 * G + I * det.delta_a + s;
    const cplx cav = p.kappa + I * det.delta_m + s;
    const cplx num = st.n_ph * atom - I * p.g * N * std::conj(st.a_sp);
    const cplx den = cav * atom - p.g * p.g * N * st.sz;
    return num / den;
}

cplx maser_laplace_generic(const SystemParams& p, const cumulant::IncoherentState& st, cplx s) {
    const auto cs = cumulant::CoherentState::from_incoherent(st);
    const CMatrix M5 = qrt_matrix(p, cs);
    CMatrix M(2, 2);
    M << M5(kA, kA), M5(kA, kSminus), M5(kSminus, kA), M5(kSminus, kSminus);
    CVector x0(2);
    x0 << st.n_ph, std::conj(st.a_sp);
    return laplace_correlation(M, x0, s, std::numeric_limits<double>::infinity())[0];
}

std::function<double(double)> maser_spectrum_function(const SystemParams& params) {
    const auto p = validated(params);
    const auto st = cumulant::analytic_maser_steady(p);
    return [p, st](double w) { return maser_laplace_closed_form(p, st, -I * w).real() / kPi; };
}

SpectrumCurve maser_spectrum(const SystemParams& params, const std::vector<double>& omega_grid, int workers) {
    SpectrumCurve c;
    c.omega = omega_grid;
    c.total = parallel_map(omega_grid, maser_spectrum_function(params), workers);
    return c;
}

// ---------------------------------------------------------------- widths

namespace {

double interpolate_crossing(double w0, double s0, double w1, double s1, double level) {
    if (s1 == s0) return 0.5 * (w0 + w1);
    return w0 + (level - s0) / (s1 - s0) * (w1 - w0);
}

double refine_crossing(const std::function<double(double)>& f, double lo, double hi, double level, double guess,
                       double rel_tol) {
    const double flo = f(lo) - level, fhi = f(hi) - level;
    if (!(flo * fhi < 0.0)) return guess;
    const double tol = rel_tol * std::max(std::abs(hi - lo), 1e-300);
    auto r = boost::math::tools::bisect([&](double x) { return f(x) - level; }, lo, hi,
                                        [tol](double a, double b) { return std::abs(b - a) <= tol; });
    return 0.5 * (r.first + r.second);
}

}  // namespace

FwhmResult fwhm(const std::vector<double>& w, const std::vector<double>& s, const FwhmOptions& opts) {
    const std::size_t n = s.size();
    if (n < 3 || w.size() != n) throw ConfigError("fwhm: need at least three samples on a matching grid");
    const std::size_t imax = static_cast<std::size_t>(std::max_element(s.begin(), s.end()) - s.begin());

    FwhmResult r;
    r.background = opts.background ? *opts.background : std::min(s.front(), s.back());
    r.peak = s[imax];
    r.center = w[imax];
    if (opts.exact && imax > 0 && imax + 1 < n) {
        const auto& f = opts.exact;
        auto best = boost::math::tools::brent_find_minima([&](double x) { return -f(x); }, w[imax - 1], w[imax + 1],
                                                          std::numeric_limits<double>::digits / 2);
        if (-best.second > r.peak) {
            r.center = best.first;
            r.peak = -best.second;
        }
    }
    if (!(r.peak > r.background)) throw NumericalError("fwhm: no maximum above the background");
    const double half = r.background + 0.5 * (r.peak - r.background);

    // Crossings adjacent to the main peak.
    std::size_t left = imax, right = imax;
    while (left > 0 && s[left - 1] >= half) --left;
    while (right + 1 < n && s[right + 1] >= half) ++right;
    if (left == 0 || right + 1 == n)
        throw NumericalError("fwhm: half-maximum crossing outside the grid (widen the frequency window)");
    // Any further lobe above half maximum?
    std::size_t outer_left = left, outer_right = right;
    for (std::size_t i = 0; i + 1 < left; ++i)
        if (s[i] >= half) {
            outer_left = std::min(outer_left, i);
            r.multimodal = true;
        }
    for (std::size_t i = n - 1; i > right + 1; --i)
        if (s[i] >= half) {
            outer_right = std::max(outer_right, i);
            r.multimodal = true;
        }
    if (r.multimodal) {
        if (!opts.allow_multimodal) throw NumericalError("fwhm: multimodal curve (several lobes above half maximum)");
        if (outer_left == 0 || outer_right + 1 == n)
            throw NumericalError("fwhm: outer half-maximum crossing outside the grid");
        left = outer_left;
        right = outer_right;
    }
    // Crossing intervals [left-1, left] and [right, right+1].
    double wl = interpolate_crossing(w[left - 1], s[left - 1], w[left], s[left], half);
    double wr = interpolate_crossing(w[right], s[right], w[right + 1], s[right + 1], half);
    if (opts.exact) {
        wl = refine_crossing(opts.exact, w[left - 1], w[left], half, wl, opts.rel_tol);
        wr = refine_crossing(opts.exact, w[right], w[right + 1], half, wr, opts.rel_tol);
    }
    r.fwhm = wr - wl;
    r.hwhm = 0.5 * r.fwhm;
    return r;
}

FwhmResult fwhm(const SpectrumCurve& curve, const FwhmOptions& opts) { return fwhm(curve.omega, curve.total, opts); }

LinewidthResult adaptive_linewidth(const std::function<double(double)>& S, double center, double half_span,
                                   bool allow_multimodal, double rel_change, int points) {
    if (!(half_span > 0.0)) throw ConfigError("adaptive_linewidth: half span must be > 0");
    points = std::max(points | 1, 11);
    LinewidthResult out;
    double previous = -1.0;
    for (int iter = 0; iter < 80; ++iter) {
        std::vector<double> grid(static_cast<std::size_t>(points)), vals(grid.size());
        for (int i = 0; i < points; ++i) {
            grid[static_cast<std::size_t>(i)] = center + half_span * (2.0 * i / (points - 1) - 1.0);
            vals[static_cast<std::size_t>(i)] = S(grid[static_cast<std::size_t>(i)]);
        }
        FwhmOptions fo;
        fo.background = 0.0;
        fo.allow_multimodal = allow_multimodal;
        fo.exact = S;
        FwhmResult r;
        try {
            r = fwhm(grid, vals, fo);
        } catch (const NumericalError&) {
            half_span *= 4.0;
            out.refinements = iter + 1;
            if (half_span > 1e15) throw;
            continue;
        }
        out.width = r;
        out.span = half_span;
        out.refinements = iter + 1;
        const bool well_sampled = r.fwhm > half_span / 40.0;
        if (previous > 0.0 && well_sampled && std::abs(r.fwhm - previous) <= rel_change * r.fwhm) return out;
        previous = r.fwhm;
        if (!well_sampled) {
            center = r.center;
            half_span = 4.0 * r.fwhm;
        } else {
            // Resample on a shifted grid to confirm the estimate.
            center = r.center;
            half_span *= 1.25;
        }
    }
    throw NumericalError("adaptive_linewidth: no converged width estimate");
}

LinewidthResult maser_linewidth(const SystemParams& params) {
    const auto p = validated(params);
    const auto st = cumulant::analytic_maser_steady(p);
    const auto S = [p, st](double w) { return maser_laplace_closed_form(p, st, -I * w).real() / kPi; };
    // Slowest pole of the 2x2 system gives the initial center and width guess.
    const auto det = cumulant::frame_detunings(p);
    const double G = p.gamma_a + p.w;
    const double N = static_cast<double>(p.n_atoms);
    CMatrix M(2, 2);
    M << -cplx(p.kappa, det.delta_m), -I * p.g * N, I * p.g * st.sz, -cplx(0.5 * G, det.delta_a);
    Eigen::ComplexEigenSolver<CMatrix> es(M, false);
    const auto ev = es.eigenvalues();
    const cplx slow = ev[0].real() > ev[1].real() ? ev[0] : ev[1];
    const double center = -slow.imag();
    const double width = std::max(std::abs(slow.real()), 1e-12);
    return adaptive_linewidth(S, center, 20.0 * width, true);
}

}  // namespace cavens::spectra
