#pragma once

// INI run configurations.
//
//   [scenario]  type, name
//   [system]    n_atoms g kappa gamma_a omega_a omega_m omega_l delta_m
//               eta eta_im w temperature
//   [scan]      <variable> = "min max points [linear|log]"   (one line per axis)
//   [engine]    type (cumulant|exact_tensor|exact_dicke) closure (full|reduced)
//               fock_cutoff dimension_cap rel_tol abs_tol workers
//   [spectrum]  omega_min omega_max points b0 normalize
//   [dynamics]  t_end points validity_fraction
//   [output]    dir name
//
// Unknown sections or keys are errors. A .json metadata sidecar written by a
// previous run is accepted in place of the INI file (its config_text is
// replayed). Sweeps list configuration files under [sweep] configs, relative
// to the sweep file.

#include <optional>
#include <string>
#include <vector>

#include "cavens/scenarios.hpp"

namespace cavens::config {

/// Parses INI text. `kind` overrides (or supplies) [scenario] type.
/// Throws ConfigError.
scenarios::ScenarioSpec parse(const std::string& text,
                              std::optional<scenarios::ScenarioKind> kind = std::nullopt);

/// Reads an INI file or a .json sidecar.
scenarios::ScenarioSpec load(const std::string& path,
                             std::optional<scenarios::ScenarioKind> kind = std::nullopt);

/// Reads a sweep file and every configuration it lists.
std::vector<scenarios::ScenarioSpec> load_sweep(const std::string& path);

/// Parses "min max points [linear|log]".
scenarios::ScanAxis parse_axis(const std::string& variable, const std::string& text);

}  // namespace cavens::config
