#pragma once

// Named experiment runners and the parallel sweep engine.
//
// A scenario evaluates one "block" of output rows per point of the cartesian
// grid spanned by its scan axes (a steady state is one row, a spectrum or a
// trajectory is many rows). Grid points are distributed over a worker pool
// and merged by grid index, so tables do not depend on the worker count.
// Numerical failures are isolated per point (status column); only
// configuration errors abort a run.

#include <json.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cavens/cumulant.hpp"
#include "cavens/dicke.hpp"
#include "cavens/params.hpp"

namespace cavens::scenarios {

enum class ScenarioKind {
    transmission_scan,
    driven_field_scan,
    thermal_spectrum,
    pumped_emission_spectrum,
    cooling,
    superradiance,
    driven_incoherent_spectrum,
    maser_map,
};

enum class Engine { exact_tensor, exact_dicke, cumulant };

std::string to_string(ScenarioKind kind);
std::string to_string(Engine engine);
ScenarioKind parse_scenario(const std::string& name);  // throws ConfigError
Engine parse_engine(const std::string& name);          // throws ConfigError
const std::vector<ScenarioKind>& all_scenarios();
std::string describe(ScenarioKind kind);

/// Parameters that can be scanned.
bool is_scan_variable(const std::string& name);
const std::vector<std::string>& scan_variables();

/// Sets a scan variable on a parameter set. `delta_m` moves omega_l
/// (omega_m, omega_a fixed), so the atomic detuning co-varies.
void set_variable(SystemParams& p, const std::string& name, double value);

struct ScanAxis {
    std::string variable;
    double min = 0.0;
    double max = 0.0;
    int points = 1;
    bool log = false;

    std::vector<double> values() const;  // throws ConfigError on invalid axes
};

struct SpectrumSettings {
    double omega_min = -5e4;   // rad/s relative to the frame frequency
    double omega_max = 5e4;
    int points = 1001;
    double b0 = -1.0;          // reservoir level; negative selects the default
    bool normalize = true;

    std::vector<double> grid() const;
};

struct DynamicsSettings {
    double t_end = 0.0;        // 0: automatic from the parameters
    int points = 2001;
    double validity_fraction = 0.1;  // cooling: t kappa nbar < fraction * N
};

struct ScenarioSpec {
    ScenarioKind kind = ScenarioKind::transmission_scan;
    SystemParams params;
    std::vector<ScanAxis> axes;
    Engine engine = Engine::cumulant;
    cumulant::Closure closure = cumulant::Closure::full;
    int fock_cutoff = 0;             // exact engines; <= 0 selects automatically
    long dimension_cap = 4096;
    double rel_tol = 1e-8;
    double abs_tol = 1e-10;
    int workers = 1;
    SpectrumSettings spectrum;
    DynamicsSettings dynamics;
    std::string name;                // output basename; defaults to the scenario name
    std::string output_dir = ".";
    std::string config_text;         // verbatim configuration, for provenance

    /// Throws ConfigError listing every problem (parameters at every grid
    /// point, engine/scenario compatibility, dimension caps).
    void check() const;
    std::string basename() const { return name.empty() ? to_string(kind) : name; }
};

/// Numeric table with one trailing text column `status`.
struct Table {
    std::vector<std::string> columns;      // numeric columns
    std::vector<std::vector<double>> rows;
    std::vector<std::string> status;       // one per row

    std::size_t size() const { return rows.size(); }
    bool empty() const { return rows.empty(); }
    int column_index(const std::string& name) const;  // throws std::out_of_range
    std::vector<double> column(const std::string& name) const;
};

struct ScenarioResult {
    ScenarioSpec spec;
    Table table;
    Table summary;               // per-scenario derived quantities (may be empty)
    nlohmann::json metadata;
    std::size_t points_total = 0;
    std::size_t points_failed = 0;
    double wall_seconds = 0.0;

    bool all_failed() const { return points_total > 0 && points_failed == points_total; }
};

/// Cartesian product of the scan axes, last axis fastest.
std::vector<std::vector<double>> grid_points(const std::vector<ScanAxis>& axes);

ScenarioResult run(const ScenarioSpec& spec);
std::vector<ScenarioResult> sweep(const std::vector<ScenarioSpec>& specs);

/// Metadata document (parameters, axes, engine, tolerances, provenance hash).
nlohmann::json metadata_for(const ScenarioSpec& spec);

/// Hex SHA-1 of the configuration text (or of the serialized spec when the
/// text is empty).
std::string provenance_hash(const ScenarioSpec& spec);

/// Writes <dir>/<basename>.csv (+ _summary.csv) and the .json sidecar.
/// Returns the paths written.
std::vector<std::string> write_result(const ScenarioResult& result);

// ---- building blocks shared with the tests and the CLI

/// Locations of local extrema of y(x) (parabolic refinement), sorted by x.
std::vector<double> local_maxima(const std::vector<double>& x, const std::vector<double>& y);
std::vector<double> local_minima(const std::vector<double>& x, const std::vector<double>& y);

struct BurstMetrics {
    double peak_time = 0.0;
    double peak_photons = 0.0;
    double width = 0.0;  // full width at half of the peak above the initial value
};
BurstMetrics burst_metrics(const std::vector<double>& t, const std::vector<double>& photons);

/// Default integration horizon for the superradiant decay of an inverted ensemble.
double superradiance_horizon(const SystemParams& p);

}  // namespace cavens::scenarios
