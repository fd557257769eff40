#pragma once

// Frequency-domain observables from the quantum regression theorem.
//
// Two-time correlations <X(0) O(tau)>_c of the operators
//     O in {a, a^dag, s^-, s^+, s^z}      (s = per-atom average, (1/N) sum_j sigma_j)
// against a fixed operator X evolve in tau with the linearized one-time
// equations, frozen at the steady state. Their Laplace transforms come from
// one complex linear solve (sI - M) x = x0 per frequency; a spectrum is
// S(omega) = (1/pi) Re x(s = -i omega). Frequencies are relative to the frame
// of the cumulant engine (omega_l if set, otherwise omega_m).

#include <Eigen/Dense>

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cavens/cumulant.hpp"
#include "cavens/params.hpp"

namespace cavens::spectra {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

enum class FixedOp { a_dagger, sigma_plus };

/// Indices into the correlation vector.
enum Index : int { kA = 0, kAdag = 1, kSminus = 2, kSplus = 3, kSz = 4 };

struct QrtSystem {
    CMatrix M;       // d/dtau x = M x
    CVector x0;      // equal-time connected correlations
    std::vector<std::string> labels;
    double max_real_eigenvalue = 0.0;
    bool stable = true;
};

/// Matrix of the linearized tau-evolution (independent of the fixed operator).
CMatrix qrt_matrix(const SystemParams& p, const cumulant::CoherentState& steady);

/// Builds M and x0; throws NumericalError if M has an eigenvalue with
/// positive real part beyond round-off.
QrtSystem build_qrt_system(const SystemParams& p, const cumulant::CoherentState& steady, FixedOp fixed);

/// Solves (s I - M) x = x0. Throws NumericalError when the condition number
/// exceeds `max_condition`.
CVector laplace_correlation(const QrtSystem& sys, cplx s, double max_condition = 1e12);
CVector laplace_correlation(const CMatrix& M, const CVector& x0, cplx s, double max_condition = 1e12);

struct SpectrumCurve {
    std::vector<double> omega;
    std::vector<double> total;
    std::map<std::string, std::vector<double>> channels;  // sum to `total` when present
    double normalization = 1.0;  // total = (sum of channels) / normalization
    std::string note;
};

struct ThermalOutputConfig {
    // Flat reservoir spectral density. Negative selects the default nbar/(2 pi),
    // for which the empty cavity spectrum is identically 1 after normalization.
    double b0 = -1.0;
    bool normalize = true;
};

/// Output spectrum of an undriven cavity in a thermal reservoir: reservoir
/// background, cavity emission 2 kappa <a^dag(0) a(tau)>, and the interference
/// term 2 kappa nbar <[a^dag(0), a(tau)]>, normalized by
///     b0 + (<a^dag a>_ss - nbar)/(2 pi).
SpectrumCurve thermal_output_spectrum(const SystemParams& p, const cumulant::IncoherentState& steady,
                                      const ThermalOutputConfig& config, const std::vector<double>& omega_grid,
                                      int workers = 1);

struct DrivenSpectra {
    SpectrumCurve mode;          // connected <a^dag(0) a(tau)>
    SpectrumCurve fluorescence;  // connected <s^+(0) s^-(tau)>
};

DrivenSpectra incoherent_driven_spectra(const SystemParams& p, const cumulant::CoherentState& steady,
                                        const std::vector<double>& omega_grid, int workers = 1);

/// Closed form of the 2x2 cavity/polarization Laplace solution,
///   x(s) = [n (Gamma/2 + i delta_a + s) - i g N <a^dag s^->] /
///          [(kappa + i delta_m + s)(Gamma/2 + i delta_a + s) - g^2 N sz].
cplx maser_laplace_closed_form(const SystemParams& p, const cumulant::IncoherentState& steady, cplx s);

/// Same quantity from the generic QRT solve restricted to {a, s^-}.
cplx maser_laplace_generic(const SystemParams& p, const cumulant::IncoherentState& steady, cplx s);

/// Spectrum of the incoherently pumped ensemble from the analytic steady state.
SpectrumCurve maser_spectrum(const SystemParams& p, const std::vector<double>& omega_grid, int workers = 1);

/// S(omega) of the maser as a callable (for adaptive refinement).
std::function<double(double)> maser_spectrum_function(const SystemParams& p);

struct FwhmOptions {
    std::optional<double> background;  // default: min(first, last sample)
    bool allow_multimodal = false;     // accept several lobes; report outermost crossings
    std::function<double(double)> exact;  // refine crossings/peak by bisection when set
    double rel_tol = 1e-6;
};

struct FwhmResult {
    double fwhm = 0.0;
    double hwhm = 0.0;
    double center = 0.0;
    double peak = 0.0;
    double background = 0.0;
    bool multimodal = false;
};

/// Background-subtracted full width at half maximum. Throws NumericalError
/// when a crossing lies outside the grid (widen the grid) or, unless allowed,
/// when the curve exceeds the half level in more than one lobe.
FwhmResult fwhm(const std::vector<double>& omega, const std::vector<double>& s, const FwhmOptions& opts = {});
FwhmResult fwhm(const SpectrumCurve& curve, const FwhmOptions& opts = {});

struct LinewidthResult {
    FwhmResult width;
    int refinements = 0;
    double span = 0.0;  // final half-span of the grid
};

/// Adaptive linewidth of a spectrum given as a function: the grid around the
/// global maximum is widened until both crossings are inside and narrowed
/// until the estimate changes by less than `rel_change` between refinements.
LinewidthResult adaptive_linewidth(const std::function<double(double)>& S, double center_guess,
                                   double initial_half_span, bool allow_multimodal = true,
                                   double rel_change = 5e-3, int points = 801);

/// Maser linewidth at the given parameters (FWHM and HWHM).
LinewidthResult maser_linewidth(const SystemParams& p);

/// Evaluates f over the grid, optionally on a worker pool; results are placed
/// by index so the output is independent of the worker count.
std::vector<double> parallel_map(const std::vector<double>& grid, const std::function<double(double)>& f,
                                 int workers);

}  // namespace cavens::spectra
