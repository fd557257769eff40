#include "cavens/params.hpp"

#include <cmath>
#include <sstream>

namespace cavens {

double thermal_occupation(double omega, double temperature) {
    if (!std::isfinite(omega) || omega <= 0.0)
        throw ConfigError("thermal_occupation: omega must be finite and > 0");
    if (!std::isfinite(temperature) || temperature < 0.0)
        throw ConfigError("thermal_occupation: temperature must be finite and >= 0");
    if (temperature == 0.0) return 0.0;
    const double x = kHbar * omega / (kBoltzmann * temperature);
    // exp(-x)/(1-exp(-x)) = 1/expm1(x), accurate in both limits
    return 1.0 / std::expm1(x);
}

double effective_coupling(double g, long n_atoms) {
    if (!std::isfinite(g) || g < 0.0) throw ConfigError("effective_coupling: g must be >= 0");
    if (n_atoms < 1) throw ConfigError("effective_coupling: n_atoms must be >= 1");
    return g * std::sqrt(static_cast<double>(n_atoms));
}

double SystemParams::nbar() const { return thermal_occupation(omega_m, temperature); }

Detunings SystemParams::detuning() const {
    if (!omega_l) throw ConfigError("omega_l: detunings need a drive frequency");
    return {omega_m - *omega_l, omega_a - *omega_l};
}

void SystemParams::set_cavity_detuning(double delta_m) {
    omega_l = omega_m - delta_m;
    detunings = detuning();
}

std::string ValidationResult::summary() const {
    std::ostringstream os;
    for (const auto& issue : issues) os << issue.field << ": " << issue.message << "\n";
    return os.str();
}

ValidationResult validate(const SystemParams& p) {
    ValidationResult r{p, {}};
    auto fail = [&](std::string field, std::string msg) {
        r.issues.push_back({std::move(field), std::move(msg)});
    };
    auto rate = [&](const char* name, double v) {
        if (!std::isfinite(v)) fail(name, "must be finite");
        else if (v < 0.0) fail(name, "must be >= 0");
    };

    if (p.n_atoms < 1) fail("n_atoms", "must be >= 1");
    rate("g", p.g);
    rate("kappa", p.kappa);
    rate("gamma_a", p.gamma_a);
    rate("w", p.w);
    rate("temperature", p.temperature);
    if (!std::isfinite(p.omega_a) || p.omega_a <= 0.0) fail("omega_a", "must be finite and > 0");
    if (!std::isfinite(p.omega_m) || p.omega_m <= 0.0) fail("omega_m", "must be finite and > 0");
    if (p.omega_l && !std::isfinite(*p.omega_l)) fail("omega_l", "must be finite");
    if (!std::isfinite(p.eta.real()) || !std::isfinite(p.eta.imag())) fail("eta", "must be finite");
    if (p.driven() && p.pumped())
        fail("eta/w", "mutually exclusive drives: coherent eta and incoherent w cannot both be nonzero");
    if (p.driven() && !p.omega_l) fail("omega_l", "required when eta != 0");

    r.params.detunings.reset();
    if (p.omega_l && std::isfinite(*p.omega_l)) r.params.detunings = r.params.detuning();
    return r;
}

SystemParams validated(const SystemParams& params) {
    auto r = validate(params);
    if (!r.ok()) throw ConfigError("invalid parameters:\n" + r.summary());
    return r.params;
}

}  // namespace cavens
