#pragma once

// Physical parameters of the atom ensemble / microwave cavity system.
//
// Unit convention used throughout the library: every rate and every
// frequency is an ANGULAR quantity in rad/s (kappa, gamma_a, g, w, eta,
// omega_*). A transition quoted as "6.83 GHz" therefore enters as
// omega = 2*pi*6.83e9. Temperatures are in kelvin. Parameter sets whose
// rates are given in arbitrary units (kappa = 1, g = 3, ...) are used
// verbatim; only ratios matter for the dimensionless observables, while
// omega_m still sets the thermal occupation.

#include <complex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cavens {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kHbar = 1.054571817e-34;      // J s
inline constexpr double kBoltzmann = 1.380649e-23;    // J / K

// 2*pi*6.83 GHz, the 87Rb clock transition used by every parameter set here.
inline constexpr double kRbHyperfineOmega = 2.0 * kPi * 6.83e9;

/// Thrown for inconsistent or out-of-range user input.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Thrown when a solver fails to deliver a result within its contract.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Detunings {
    double delta_m = 0.0;  // omega_m - omega_l
    double delta_a = 0.0;  // omega_a - omega_l
};

struct SystemParams {
    long n_atoms = 1;
    double g = 0.0;
    double kappa = 0.0;
    double gamma_a = 0.0;
    double omega_a = kRbHyperfineOmega;
    double omega_m = kRbHyperfineOmega;
    std::optional<double> omega_l;  // absent: no coherent drive frame
    cplx eta{0.0, 0.0};
    double w = 0.0;
    double temperature = 0.0;

    // Attached by validate() when omega_l is present.
    std::optional<Detunings> detunings;

    bool driven() const { return eta != cplx(0.0, 0.0); }
    bool pumped() const { return w != 0.0; }

    /// Thermal photon number of the cavity mode.
    double nbar() const;

    /// Detunings relative to omega_l. Throws ConfigError without a drive frame.
    Detunings detuning() const;

    /// Sets omega_l such that omega_m - omega_l = delta_m (omega_m, omega_a fixed).
    void set_cavity_detuning(double delta_m);
};

struct ValidationIssue {
    std::string field;
    std::string message;
};

struct ValidationResult {
    SystemParams params;                  // normalized copy
    std::vector<ValidationIssue> issues;  // empty when valid

    bool ok() const { return issues.empty(); }
    std::string summary() const;
};

/// Bose-Einstein occupation exp(-x)/(1-exp(-x)) with x = hbar*omega/(k_B*T).
/// Exactly 0 for T = 0. Throws ConfigError on non-finite, non-positive omega
/// or negative temperature.
double thermal_occupation(double omega, double temperature);

/// Collective coupling g*sqrt(N).
double effective_coupling(double g, long n_atoms);

/// Checks every parameter invariant, reporting each violation separately,
/// and attaches the detunings when a drive frequency is present.
ValidationResult validate(const SystemParams& params);

/// validate() that throws ConfigError listing all issues.
SystemParams validated(const SystemParams& params);

}  // namespace cavens
