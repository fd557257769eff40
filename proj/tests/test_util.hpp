#pragma once

#include <cmath>

#include "cavens/params.hpp"

namespace testutil {

// Temperature at which the mode at omega holds `nbar` thermal photons.
inline double temperature_for(double nbar, double omega = cavens::kRbHyperfineOmega) {
    return cavens::kHbar * omega / (cavens::kBoltzmann * std::log1p(1.0 / nbar));
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace testutil
