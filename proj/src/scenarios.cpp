#include "cavens/scenarios.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

#include <boost/math/tools/roots.hpp>

#include "cavens/spectra.hpp"
#include "cavens/table_io.hpp"

#ifndef CAVENS_VERSION
#define CAVENS_VERSION "unknown"
#endif

namespace cavens::scenarios {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct KindInfo {
    ScenarioKind kind;
    const char* name;
    const char* description;
};

const KindInfo kKinds[] = {
    {ScenarioKind::transmission_scan, "transmission_scan",
     "steady-state photon number and field of the driven cavity vs drive detuning"},
    {ScenarioKind::driven_field_scan, "driven_field_scan",
     "steady-state real/imaginary cavity field of the driven cavity vs drive detuning"},
    {ScenarioKind::thermal_spectrum, "thermal_spectrum",
     "normalized output spectrum of the undriven cavity in a thermal reservoir"},
    {ScenarioKind::pumped_emission_spectrum, "pumped_emission_spectrum",
     "output spectrum with an incoherently pumped ensemble (w > 0)"},
    {ScenarioKind::cooling, "cooling", "steady photon number of the mode cooled by a lossy ensemble"},
    {ScenarioKind::superradiance, "superradiance", "photon burst from an initially fully inverted ensemble"},
    {ScenarioKind::driven_incoherent_spectrum, "driven_incoherent_spectrum",
     "incoherent mode and fluorescence spectra of the coherently driven system"},
    {ScenarioKind::maser_map, "maser_map", "analytic steady state and linewidth of the pumped ensemble"},
};

const KindInfo& info(ScenarioKind k) {
    for (const auto& i : kKinds)
        if (i.kind == k) return i;
    throw std::logic_error("unknown scenario kind");
}

bool needs_drive(ScenarioKind k) {
    return k == ScenarioKind::transmission_scan || k == ScenarioKind::driven_field_scan ||
           k == ScenarioKind::driven_incoherent_spectrum;
}

bool is_spectrum(ScenarioKind k) {
    return k == ScenarioKind::thermal_spectrum || k == ScenarioKind::pumped_emission_spectrum ||
           k == ScenarioKind::driven_incoherent_spectrum;
}

bool is_exact(Engine e) { return e != Engine::cumulant; }

// ---------------------------------------------------------------- worker pool

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& f) {
    workers = std::max(1, std::min<int>(workers, static_cast<int>(std::max<std::size_t>(n, 1))));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) f(i);
        });
    for (auto& t : pool) t.join();
}

// ---------------------------------------------------------------- per-point evaluation

// Rows produced by one grid point (scenario columns only).
struct Block {
    std::vector<std::vector<double>> rows;
    std::vector<std::string> status;
    std::vector<std::vector<double>> summary;  // summary rows (scenario summary columns)
};

std::vector<std::string> scenario_columns(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::transmission_scan:
        case ScenarioKind::driven_field_scan:
            return {"delta_m", "delta_a", "photons", "re_a", "im_a", "sz", "adasz_c"};
        case ScenarioKind::thermal_spectrum:
        case ScenarioKind::pumped_emission_spectrum:
            return {"omega", "S", "reservoir_background", "cavity", "interference", "photons_ss", "sz_ss"};
        case ScenarioKind::cooling:
            return {"photons", "sz", "im_a_sp", "spsm", "nbar", "est_photons", "est_rel_dev",
                    "settle_time", "lost_atoms", "valid"};
        case ScenarioKind::superradiance:
            return {"t", "photons", "sz", "re_a_sp", "im_a_sp", "spsm"};
        case ScenarioKind::driven_incoherent_spectrum:
            return {"omega", "S_mode", "S_fluorescence", "photons_ss", "sz_ss"};
        case ScenarioKind::maser_map:
            return {"sz", "photons", "im_a_sp", "spsm", "nbar", "fwhm", "hwhm", "center", "multimodal"};
    }
    return {};
}

// Per-point summary columns (empty when the scenario summarizes across points).
std::vector<std::string> point_summary_columns(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::thermal_spectrum:
            return {"dip_low", "dip_high", "separation", "two_g_sqrt_n", "ratio"};
        case ScenarioKind::pumped_emission_spectrum:
            return {"peak_low", "peak_high", "separation", "two_g_sqrt_n", "ratio"};
        case ScenarioKind::driven_incoherent_spectrum:
            return {"S_mode_center", "S_fluorescence_center", "side_peak_low", "side_peak_high"};
        case ScenarioKind::superradiance:
            return {"nbar", "peak_time", "peak_photons", "burst_width", "peak_over_nbar"};
        default:
            return {};
    }
}

ode::Options ode_options(const ScenarioSpec& spec) {
    ode::Options o;
    o.rel_tol = spec.rel_tol;
    o.abs_tol = spec.abs_tol;
    return o;
}

cumulant::SteadyOptions steady_options(const ScenarioSpec& spec) {
    cumulant::SteadyOptions o;
    o.ode = ode_options(spec);
    return o;
}

dicke::HilbertConfig hilbert_config(const ScenarioSpec& spec, const SystemParams& p) {
    dicke::HilbertConfig c;
    c.basis_mode = spec.engine == Engine::exact_dicke ? dicke::BasisMode::dicke_symmetric
                                                       : dicke::BasisMode::tensor_product;
    c.n_atoms = static_cast<int>(p.n_atoms);
    c.fock_cutoff = spec.fock_cutoff;
    c.dimension_cap = spec.dimension_cap;
    return c.resolved(p);
}

// Two most prominent extrema -> (low, high, separation).
std::vector<double> pair_of(std::vector<double> xs, const std::function<double(double)>& weight) {
    if (xs.size() < 2) return {kNaN, kNaN, kNaN};
    std::sort(xs.begin(), xs.end(), [&](double a, double b) { return weight(a) > weight(b); });
    const double lo = std::min(xs[0], xs[1]), hi = std::max(xs[0], xs[1]);
    return {lo, hi, hi - lo};
}

double interp(const std::vector<double>& x, const std::vector<double>& y, double at) {
    const auto it = std::lower_bound(x.begin(), x.end(), at);
    if (it == x.begin()) return y.front();
    if (it == x.end()) return y.back();
    const std::size_t i = static_cast<std::size_t>(it - x.begin());
    const double t = (at - x[i - 1]) / (x[i] - x[i - 1]);
    return y[i - 1] + t * (y[i] - y[i - 1]);
}

Block eval_transmission(const ScenarioSpec& spec, const SystemParams& p, bool first) {
    Block b;
    const auto det = cumulant::frame_detunings(p);
    if (is_exact(spec.engine)) {
        dicke::SteadyStateOptions so;
        if (!first) so.svd_check_limit = 0;  // the channel structure does not change along the grid
        const auto pt = dicke::exact_steady_point(p, hilbert_config(spec, p), so);
        b.rows.push_back({det.delta_m, det.delta_a, pt.photons, pt.re_a, pt.im_a, pt.sz, kNaN});
        b.status.push_back(pt.status);
    } else {
        const auto st = cumulant::steady_coherent(p, spec.closure, steady_options(spec));
        const auto& s = st.state;
        b.rows.push_back({det.delta_m, det.delta_a, s.photons(), s.a.real(), s.a.imag(), s.sz, s.adasz_c});
        b.status.push_back("ok:" + cumulant::to_string(st.info.path));
    }
    return b;
}

Block eval_thermal_spectrum(const ScenarioSpec& spec, const SystemParams& p) {
    Block b;
    const auto st = cumulant::analytic_maser_steady(p);
    spectra::ThermalOutputConfig cfg;
    cfg.b0 = spec.spectrum.b0;
    cfg.normalize = spec.spectrum.normalize;
    const auto grid = spec.spectrum.grid();
    const auto c = spectra::thermal_output_spectrum(p, st, cfg, grid, 1);
    const auto& bg = c.channels.at("reservoir_background");
    const auto& cav = c.channels.at("cavity");
    const auto& in = c.channels.at("interference");
    const std::string status = c.note.empty() ? "ok" : "ok:" + c.note;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        b.rows.push_back({grid[i], c.total[i], bg[i], cav[i], in[i], st.n_ph, st.sz});
        b.status.push_back(status);
    }
    const double two_g = 2.0 * effective_coupling(p.g, p.n_atoms);
    std::vector<double> ext;
    std::function<double(double)> weight;
    if (spec.kind == ScenarioKind::thermal_spectrum) {
        ext = local_minima(grid, c.total);
        weight = [&](double x) { return -interp(grid, c.total, x); };
    } else {
        ext = local_maxima(grid, c.total);
        weight = [&](double x) { return interp(grid, c.total, x); };
    }
    auto pr = pair_of(ext, weight);
    b.summary.push_back({pr[0], pr[1], pr[2], two_g, pr[2] / two_g});
    return b;
}

Block eval_cooling(const ScenarioSpec& spec, const SystemParams& p) {
    Block b;
    const auto st = cumulant::steady_incoherent(p, steady_options(spec));
    const auto& s = st.state;
    const double nbar = p.nbar();
    const double est = cumulant::estimated_photons(p, s.sz);

    // Settling time of the photon number after contact (ensemble in the
    // ground state, mode thermal): first time after which |n - n_ss| stays
    // within 1% of |nbar - n_ss|.
    double settle = 0.0;
    const double gap = std::abs(nbar - s.n_ph);
    if (gap > 0.0) {
        const double horizon = spec.dynamics.t_end > 0.0
                                   ? spec.dynamics.t_end
                                   : 50.0 / std::min(2.0 * p.kappa, std::max(p.gamma_a + p.w, 1e-300));
        cumulant::IncoherentState y0;
        y0.sz = -1.0;
        y0.n_ph = nbar;
        const auto tr = ode::integrate(cumulant::incoherent_rhs(p), y0.to_vector(), 0.0, horizon,
                                       std::max(spec.dynamics.points, 11), ode_options(spec));
        settle = horizon;
        for (std::size_t i = tr.t.size(); i-- > 0;) {
            const double n = cumulant::IncoherentState::from_vector(tr.y[i]).n_ph;
            if (std::abs(n - s.n_ph) > 0.01 * gap) break;
            settle = tr.t[i];
        }
    }
    const double lost = settle * p.kappa * nbar;
    const double valid = lost < spec.dynamics.validity_fraction * static_cast<double>(p.n_atoms) ? 1.0 : 0.0;
    const double rel = s.n_ph != 0.0 ? (est - s.n_ph) / s.n_ph : kNaN;
    b.rows.push_back({s.n_ph, s.sz, s.a_sp.imag(), s.spsm.real(), nbar, est, rel, settle, lost, valid});
    b.status.push_back("ok:" + cumulant::to_string(st.info.path));
    return b;
}

Block eval_superradiance(const ScenarioSpec& spec, const SystemParams& p) {
    Block b;
    const double horizon = spec.dynamics.t_end > 0.0 ? spec.dynamics.t_end : superradiance_horizon(p);
    cumulant::IncoherentState y0;
    y0.sz = 1.0;
    y0.n_ph = p.nbar();
    const auto tr = ode::integrate(cumulant::incoherent_rhs(p), y0.to_vector(), 0.0, horizon,
                                   std::max(spec.dynamics.points, 11), ode_options(spec));
    std::vector<double> n;
    double worst = 0.0;
    for (std::size_t i = 0; i < tr.t.size(); ++i) {
        const auto s = cumulant::IncoherentState::from_vector(tr.y[i]);
        worst = std::max(worst, cumulant::bound_violation(s));
        n.push_back(s.n_ph);
        b.rows.push_back({tr.t[i], s.n_ph, s.sz, s.a_sp.real(), s.a_sp.imag(), s.spsm.real()});
    }
    const std::string status = worst > 1e-3 ? "warn:bounds" : "ok";
    b.status.assign(b.rows.size(), status);
    const auto m = burst_metrics(tr.t, n);
    const double nbar = p.nbar();
    b.summary.push_back({nbar, m.peak_time, m.peak_photons, m.width, nbar > 0.0 ? m.peak_photons / nbar : kNaN});
    return b;
}

Block eval_driven_incoherent(const ScenarioSpec& spec, const SystemParams& p) {
    Block b;
    const auto st = cumulant::steady_coherent(p, spec.closure, steady_options(spec));
    const auto grid = spec.spectrum.grid();
    const auto sp = spectra::incoherent_driven_spectra(p, st.state, grid, 1);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        b.rows.push_back({grid[i], sp.mode.total[i], sp.fluorescence.total[i], st.state.photons(), st.state.sz});
        b.status.push_back("ok:" + cumulant::to_string(st.info.path));
    }
    const auto at_center = [&](const std::vector<double>& y) { return interp(grid, y, 0.0); };
    auto peaks = local_maxima(grid, sp.mode.total);
    peaks.erase(std::remove_if(peaks.begin(), peaks.end(),
                               [&](double x) { return std::abs(x) < 1e-3 * (grid.back() - grid.front()); }),
                peaks.end());
    const auto pr = pair_of(peaks, [&](double x) { return interp(grid, sp.mode.total, x); });
    b.summary.push_back({at_center(sp.mode.total), at_center(sp.fluorescence.total), pr[0], pr[1]});
    return b;
}

Block eval_maser(const ScenarioSpec&, const SystemParams& p) {
    Block b;
    const auto st = cumulant::analytic_maser_steady(p);
    const auto lw = spectra::maser_linewidth(p);
    b.rows.push_back({st.sz, st.n_ph, st.a_sp.imag(), st.spsm.real(), p.nbar(), lw.width.fwhm, lw.width.hwhm,
                      lw.width.center, lw.width.multimodal ? 1.0 : 0.0});
    b.status.push_back("ok");
    return b;
}

Block evaluate(const ScenarioSpec& spec, const SystemParams& p, bool first) {
    switch (spec.kind) {
        case ScenarioKind::transmission_scan:
        case ScenarioKind::driven_field_scan:
            return eval_transmission(spec, p, first);
        case ScenarioKind::thermal_spectrum:
        case ScenarioKind::pumped_emission_spectrum:
            return eval_thermal_spectrum(spec, p);
        case ScenarioKind::cooling:
            return eval_cooling(spec, p);
        case ScenarioKind::superradiance:
            return eval_superradiance(spec, p);
        case ScenarioKind::driven_incoherent_spectrum:
            return eval_driven_incoherent(spec, p);
        case ScenarioKind::maser_map:
            return eval_maser(spec, p);
    }
    throw std::logic_error("unhandled scenario");
}

std::string one_line(std::string s) {
    std::replace(s.begin(), s.end(), '\n', ' ');
    std::replace(s.begin(), s.end(), '\r', ' ');
    while (!s.empty() && s.back() == ' ') s.pop_back();
    return s;
}

SystemParams params_at(const ScenarioSpec& spec, const std::vector<double>& point) {
    SystemParams p = spec.params;
    for (std::size_t a = 0; a < spec.axes.size(); ++a) set_variable(p, spec.axes[a].variable, point[a]);
    return validated(p);
}

// ---------------------------------------------------------------- cross-point summaries

// Groups rows of the (single-row-per-point) table by all axis values except
// `along`, and calls f(group key values, indices sorted along the axis).
void for_each_line(const ScenarioSpec& spec, const std::vector<std::vector<double>>& points, std::size_t along,
                   const std::function<void(const std::vector<double>&, const std::vector<std::size_t>&)>& f) {
    std::map<std::vector<double>, std::vector<std::size_t>> groups;
    std::vector<std::vector<double>> order;
    for (std::size_t i = 0; i < points.size(); ++i) {
        std::vector<double> key;
        for (std::size_t a = 0; a < spec.axes.size(); ++a)
            if (a != along) key.push_back(points[i][a]);
        auto [it, inserted] = groups.try_emplace(key);
        if (inserted) order.push_back(key);
        it->second.push_back(i);
    }
    for (const auto& key : order) {
        auto idx = groups[key];
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return points[a][along] < points[b][along]; });
        f(key, idx);
    }
}

std::optional<std::size_t> axis_index(const ScenarioSpec& spec, const std::string& var) {
    for (std::size_t a = 0; a < spec.axes.size(); ++a)
        if (spec.axes[a].variable == var) return a;
    return std::nullopt;
}

std::vector<std::string> other_axis_names(const ScenarioSpec& spec, std::size_t along) {
    std::vector<std::string> names;
    for (std::size_t a = 0; a < spec.axes.size(); ++a)
        if (a != along) names.push_back(spec.axes[a].variable);
    return names;
}

Table transmission_summary(const ScenarioSpec& spec, const std::vector<std::vector<double>>& points,
                           const Table& t) {
    Table s;
    const auto along = axis_index(spec, "delta_m");
    if (!along) return s;
    s.columns = other_axis_names(spec, *along);
    for (const char* c : {"peak_low", "peak_high", "separation", "two_g_sqrt_n", "ratio"}) s.columns.push_back(c);
    const int col_n = t.column_index("photons");
    for_each_line(spec, points, *along, [&](const std::vector<double>& key, const std::vector<std::size_t>& idx) {
        std::vector<double> x, y;
        bool ok = true;
        for (auto i : idx) {
            x.push_back(points[i][*along]);
            y.push_back(t.rows[i][static_cast<std::size_t>(col_n)]);
            ok = ok && std::isfinite(y.back());
        }
        const auto p = params_at(spec, points[idx.front()]);
        const double two_g = 2.0 * effective_coupling(p.g, p.n_atoms);
        auto pr = pair_of(local_maxima(x, y), [&](double v) { return interp(x, y, v); });
        auto row = key;
        row.insert(row.end(), {pr[0], pr[1], pr[2], two_g, pr[2] / two_g});
        s.rows.push_back(row);
        s.status.push_back(ok ? "ok" : "partial");
    });
    return s;
}

Table cooling_summary(const ScenarioSpec& spec, const std::vector<std::vector<double>>& points, const Table& t) {
    Table s;
    const auto along = axis_index(spec, "gamma_a");
    if (!along) return s;
    s.columns = other_axis_names(spec, *along);
    for (const char* c : {"gamma_a_opt", "photons_min", "nbar", "interior", "max_est_rel_dev"})
        s.columns.push_back(c);
    const int cn = t.column_index("photons"), cr = t.column_index("est_rel_dev"), cb = t.column_index("nbar");
    for_each_line(spec, points, *along, [&](const std::vector<double>& key, const std::vector<std::size_t>& idx) {
        std::size_t best = idx.front();
        double dev = 0.0;
        for (auto i : idx) {
            const double n = t.rows[i][static_cast<std::size_t>(cn)];
            if (n < t.rows[best][static_cast<std::size_t>(cn)]) best = i;
            dev = std::max(dev, std::abs(t.rows[i][static_cast<std::size_t>(cr)]));
        }
        const bool interior = best != idx.front() && best != idx.back();
        auto row = key;
        row.insert(row.end(), {points[best][*along], t.rows[best][static_cast<std::size_t>(cn)],
                               t.rows[best][static_cast<std::size_t>(cb)], interior ? 1.0 : 0.0, dev});
        s.rows.push_back(row);
        s.status.push_back("ok");
    });
    return s;
}

Table maser_summary(const ScenarioSpec& spec, const std::vector<std::vector<double>>& points, const Table& t) {
    Table s;
    const auto along = axis_index(spec, "w");
    if (!along) return s;
    s.columns = other_axis_names(spec, *along);
    for (const char* c : {"w_threshold", "photon_ratio", "fwhm_min", "w_at_fwhm_min"}) s.columns.push_back(c);
    const int cz = t.column_index("sz"), cn = t.column_index("photons"), cf = t.column_index("fwhm");
    for_each_line(spec, points, *along, [&](const std::vector<double>& key, const std::vector<std::size_t>& idx) {
        double wt = kNaN, nmin = kNaN, nmax = kNaN, fmin = kNaN, wf = kNaN;
        for (std::size_t j = 0; j < idx.size(); ++j) {
            const auto& r = t.rows[idx[j]];
            const double n = r[static_cast<std::size_t>(cn)], f = r[static_cast<std::size_t>(cf)];
            if (std::isfinite(n)) {
                nmin = std::isfinite(nmin) ? std::min(nmin, n) : n;
                nmax = std::isfinite(nmax) ? std::max(nmax, n) : n;
            }
            if (std::isfinite(f) && !(f >= fmin)) {
                fmin = f;
                wf = points[idx[j]][*along];
            }
            if (j > 0 && !std::isfinite(wt)) {
                const double z0 = t.rows[idx[j - 1]][static_cast<std::size_t>(cz)], z1 = r[static_cast<std::size_t>(cz)];
                if (std::isfinite(z0) && std::isfinite(z1) && z0 < 0.0 && z1 >= 0.0) {
                    // Refine the bracketed zero of the analytic inversion.
                    const double w0 = points[idx[j - 1]][*along], w1 = points[idx[j]][*along];
                    SystemParams base = params_at(spec, points[idx[j]]);
                    const auto sz_at = [&](double w) {
                        SystemParams q = base;
                        q.w = w;
                        return cumulant::analytic_maser_steady(q).sz;
                    };
                    try {
                        const auto r = boost::math::tools::bisect(sz_at, w0, w1,
                                                                  boost::math::tools::eps_tolerance<double>(40));
                        wt = 0.5 * (r.first + r.second);
                    } catch (const std::exception&) {
                        wt = w0 + (0.0 - z0) / (z1 - z0) * (w1 - w0);
                    }
                }
            }
        }
        auto row = key;
        row.insert(row.end(), {wt, nmax / nmin, fmin, wf});
        s.rows.push_back(row);
        s.status.push_back("ok");
    });
    return s;
}

nlohmann::json params_json(const SystemParams& p) {
    nlohmann::json j;
    j["n_atoms"] = p.n_atoms;
    j["g"] = p.g;
    j["kappa"] = p.kappa;
    j["gamma_a"] = p.gamma_a;
    j["omega_a"] = p.omega_a;
    j["omega_m"] = p.omega_m;
    j["omega_l"] = p.omega_l ? nlohmann::json(*p.omega_l) : nlohmann::json(nullptr);
    j["eta"] = {p.eta.real(), p.eta.imag()};
    j["w"] = p.w;
    j["temperature"] = p.temperature;
    return j;
}

nlohmann::json metadata_for_body(const ScenarioSpec& spec) {
    nlohmann::json m;
    m["scenario"] = to_string(spec.kind);
    m["engine"] = to_string(spec.engine);
    m["closure"] = spec.closure == cumulant::Closure::full ? "full" : "reduced";
    m["params"] = params_json(spec.params);
    nlohmann::json axes = nlohmann::json::array();
    for (const auto& a : spec.axes)
        axes.push_back({{"variable", a.variable}, {"min", a.min}, {"max", a.max}, {"points", a.points},
                        {"log", a.log}});
    m["axes"] = axes;
    m["spectrum"] = {{"omega_min", spec.spectrum.omega_min}, {"omega_max", spec.spectrum.omega_max},
                     {"points", spec.spectrum.points}, {"b0", spec.spectrum.b0},
                     {"normalize", spec.spectrum.normalize}};
    m["dynamics"] = {{"t_end", spec.dynamics.t_end}, {"points", spec.dynamics.points},
                     {"validity_fraction", spec.dynamics.validity_fraction}};
    m["tolerances"] = {{"rel_tol", spec.rel_tol}, {"abs_tol", spec.abs_tol}};
    m["fock_cutoff"] = spec.fock_cutoff;
    m["dimension_cap"] = spec.dimension_cap;
    m["workers"] = spec.workers;
    m["name"] = spec.basename();
    return m;
}

}  // namespace

// ---------------------------------------------------------------- names

std::string to_string(ScenarioKind kind) { return info(kind).name; }

std::string describe(ScenarioKind kind) { return info(kind).description; }

const std::vector<ScenarioKind>& all_scenarios() {
    static const std::vector<ScenarioKind> v = [] {
        std::vector<ScenarioKind> out;
        for (const auto& i : kKinds) out.push_back(i.kind);
        return out;
    }();
    return v;
}

ScenarioKind parse_scenario(const std::string& name) {
    for (const auto& i : kKinds)
        if (name == i.name) return i.kind;
    throw ConfigError("unknown scenario '" + name + "' (see list-scenarios)");
}

std::string to_string(Engine e) {
    switch (e) {
        case Engine::exact_tensor: return "exact_tensor";
        case Engine::exact_dicke: return "exact_dicke";
        case Engine::cumulant: return "cumulant";
    }
    return "?";
}

Engine parse_engine(const std::string& name) {
    if (name == "exact_tensor") return Engine::exact_tensor;
    if (name == "exact_dicke") return Engine::exact_dicke;
    if (name == "cumulant") return Engine::cumulant;
    throw ConfigError("unknown engine '" + name + "' (exact_tensor|exact_dicke|cumulant)");
}

const std::vector<std::string>& scan_variables() {
    static const std::vector<std::string> v = {"n_atoms", "g",       "kappa", "gamma_a", "omega_a",    "omega_m",
                                               "omega_l", "delta_m", "eta",   "eta_im",  "w", "temperature"};
    return v;
}

bool is_scan_variable(const std::string& name) {
    const auto& v = scan_variables();
    return std::find(v.begin(), v.end(), name) != v.end();
}

void set_variable(SystemParams& p, const std::string& name, double value) {
    if (name == "n_atoms") {
        const double r = std::round(value);
        if (!(r >= 1.0 && r < 9.0e15)) throw ConfigError("n_atoms: scan value out of range");
        p.n_atoms = static_cast<long>(r);
    } else if (name == "g") {
        p.g = value;
    } else if (name == "kappa") {
        p.kappa = value;
    } else if (name == "gamma_a") {
        p.gamma_a = value;
    } else if (name == "omega_a") {
        p.omega_a = value;
    } else if (name == "omega_m") {
        p.omega_m = value;
    } else if (name == "omega_l") {
        p.omega_l = value;
    } else if (name == "delta_m") {
        p.set_cavity_detuning(value);
    } else if (name == "eta") {
        p.eta = cplx(value, p.eta.imag());
    } else if (name == "eta_im") {
        p.eta = cplx(p.eta.real(), value);
    } else if (name == "w") {
        p.w = value;
    } else if (name == "temperature") {
        p.temperature = value;
    } else {
        throw ConfigError("unknown scan variable '" + name + "'");
    }
}

std::vector<double> ScanAxis::values() const {
    if (!is_scan_variable(variable)) throw ConfigError("scan: unknown variable '" + variable + "'");
    if (points < 1) throw ConfigError("scan." + variable + ": points must be >= 1");
    if (!std::isfinite(min) || !std::isfinite(max)) throw ConfigError("scan." + variable + ": bounds must be finite");
    if (log && !(min > 0.0 && max > 0.0)) throw ConfigError("scan." + variable + ": log axis needs positive bounds");
    std::vector<double> v(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) {
        const double t = points == 1 ? 0.0 : static_cast<double>(i) / (points - 1);
        v[static_cast<std::size_t>(i)] =
            log ? std::exp(std::log(min) + t * (std::log(max) - std::log(min))) : min + t * (max - min);
    }
    if (points > 1) {
        v.front() = min;
        v.back() = max;
    }
    if (variable == "n_atoms")  // report the atom number actually simulated
        for (auto& x : v) x = std::round(x);
    return v;
}

std::vector<double> SpectrumSettings::grid() const {
    if (points < 3) throw ConfigError("spectrum.points must be >= 3");
    if (!(omega_max > omega_min)) throw ConfigError("spectrum: omega_max must exceed omega_min");
    std::vector<double> g(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i)
        g[static_cast<std::size_t>(i)] = omega_min + (omega_max - omega_min) * i / (points - 1);
    return g;
}

int Table::column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return static_cast<int>(i);
    throw std::out_of_range("table has no column '" + name + "'");
}

std::vector<double> Table::column(const std::string& name) const {
    const auto c = static_cast<std::size_t>(column_index(name));
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[c]);
    return out;
}

std::vector<std::vector<double>> grid_points(const std::vector<ScanAxis>& axes) {
    std::vector<std::vector<double>> values;
    for (const auto& a : axes) values.push_back(a.values());
    std::vector<std::vector<double>> out{{}};
    for (const auto& vals : values) {
        std::vector<std::vector<double>> next;
        next.reserve(out.size() * vals.size());
        for (const auto& prefix : out)
            for (double v : vals) {
                auto p = prefix;
                p.push_back(v);
                next.push_back(std::move(p));
            }
        out = std::move(next);
    }
    return out;
}

void ScenarioSpec::check() const {
    std::vector<std::string> problems;
    std::set<std::string> seen;
    for (const auto& a : axes) {
        if (!seen.insert(a.variable).second) problems.push_back("scan: variable '" + a.variable + "' repeated");
        try {
            a.values();
        } catch (const ConfigError& e) {
            problems.push_back(e.what());
        }
    }
    if (workers < 1) problems.push_back("workers: must be >= 1");
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) problems.push_back("tolerances: rel_tol and abs_tol must be > 0");
    if (is_exact(engine) && kind != ScenarioKind::transmission_scan && kind != ScenarioKind::driven_field_scan)
        problems.push_back("engine: exact engines only serve transmission_scan and driven_field_scan");
    if (is_spectrum(kind)) {
        try {
            spectrum.grid();
        } catch (const ConfigError& e) {
            problems.push_back(e.what());
        }
    }
    if ((kind == ScenarioKind::superradiance || kind == ScenarioKind::cooling) && dynamics.points < 11)
        problems.push_back("dynamics.points: must be >= 11");

    if (problems.empty()) {
        const auto points = grid_points(axes);
        for (std::size_t i = 0; i < points.size() && problems.size() < 20; ++i) {
            SystemParams p = params;
            std::string where;
            try {
                for (std::size_t a = 0; a < axes.size(); ++a) {
                    set_variable(p, axes[a].variable, points[i][a]);
                    where += (a ? ", " : " at ") + axes[a].variable + "=" + io::format_number(points[i][a]);
                }
                const auto r = validate(p);
                if (!r.ok()) {
                    problems.push_back("parameters" + where + ": " + r.summary());
                    continue;
                }
                p = r.params;
            } catch (const ConfigError& e) {
                problems.push_back(std::string(e.what()) + where);
                continue;
            }
            if (needs_drive(kind) && !p.driven())
                problems.push_back(to_string(kind) + " needs a coherent drive (eta != 0)" + where);
            if (!needs_drive(kind) && p.driven())
                problems.push_back(to_string(kind) + " requires eta = 0" + where);
            if (kind == ScenarioKind::pumped_emission_spectrum && !(p.w > 0.0))
                problems.push_back("pumped_emission_spectrum requires w > 0" + where);
            if (kind == ScenarioKind::cooling && p.pumped())
                problems.push_back("cooling requires w = 0" + where);
            if (is_exact(engine)) {
                try {
                    hilbert_config(*this, p).check();
                } catch (const ConfigError& e) {
                    problems.push_back(std::string(e.what()) + where);
                }
            }
        }
    }
    if (!problems.empty()) {
        std::ostringstream os;
        os << "invalid scenario '" << basename() << "':";
        for (const auto& pr : problems) os << "\n  " << one_line(pr);
        throw ConfigError(os.str());
    }
}

// ---------------------------------------------------------------- extrema and bursts

namespace {

std::vector<double> extrema(const std::vector<double>& x, const std::vector<double>& y, double sign) {
    if (x.size() != y.size()) throw std::invalid_argument("extrema: size mismatch");
    std::vector<double> out;
    for (std::size_t i = 1; i + 1 < y.size(); ++i) {
        const double a = sign * y[i - 1], b = sign * y[i], c = sign * y[i + 1];
        if (!(std::isfinite(a) && std::isfinite(b) && std::isfinite(c))) continue;
        if (!(b > a && b >= c)) continue;
        // Parabola through the three samples (non-uniform spacing allowed).
        const double x0 = x[i - 1], x1 = x[i], x2 = x[i + 1];
        const double d1 = (b - a) / (x1 - x0), d2 = (c - b) / (x2 - x1);
        const double curv = (d2 - d1) / (x2 - x0);
        double xm = x1;
        if (curv < 0.0) {
            xm = 0.5 * (x0 + x1) - d1 / (2.0 * curv);
            xm = std::clamp(xm, x0, x2);
        }
        out.push_back(xm);
    }
    return out;
}

}  // namespace

std::vector<double> local_maxima(const std::vector<double>& x, const std::vector<double>& y) {
    return extrema(x, y, 1.0);
}

std::vector<double> local_minima(const std::vector<double>& x, const std::vector<double>& y) {
    return extrema(x, y, -1.0);
}

BurstMetrics burst_metrics(const std::vector<double>& t, const std::vector<double>& photons) {
    if (t.size() != photons.size() || t.empty()) throw std::invalid_argument("burst_metrics: bad input");
    BurstMetrics m;
    std::size_t k = 0;
    for (std::size_t i = 1; i < photons.size(); ++i)
        if (photons[i] > photons[k]) k = i;
    m.peak_time = t[k];
    m.peak_photons = photons[k];
    if (k > 0 && k + 1 < photons.size()) {
        // Parabolic refinement of the sampled maximum.
        const double a = photons[k - 1], b = photons[k], c = photons[k + 1];
        const double h = t[k + 1] - t[k];
        const double den = a - 2.0 * b + c;
        if (den < 0.0 && std::abs(t[k] - t[k - 1] - h) < 1e-9 * h) {
            const double off = 0.5 * (a - c) / den;
            m.peak_time = t[k] + off * h;
            m.peak_photons = b - 0.25 * (a - c) * off;
        }
    }
    const double base = photons.front();
    const double half = base + 0.5 * (m.peak_photons - base);
    double left = t.front(), right = t.back();
    for (std::size_t i = k; i > 0; --i)
        if (photons[i - 1] < half) {
            left = t[i - 1] + (half - photons[i - 1]) / (photons[i] - photons[i - 1]) * (t[i] - t[i - 1]);
            break;
        }
    for (std::size_t i = k; i + 1 < photons.size(); ++i)
        if (photons[i + 1] < half) {
            right = t[i] + (photons[i] - half) / (photons[i] - photons[i + 1]) * (t[i + 1] - t[i]);
            break;
        }
    m.width = right - left;
    return m;
}

double superradiance_horizon(const SystemParams& p) {
    // Collective emission rate of the inverted ensemble in the bad-cavity
    // limit is N g^2 / kappa; the burst is over within a few tens of its
    // inverse times the log of the initial delay. Cap by the individual decay.
    const double n = static_cast<double>(p.n_atoms);
    const double kap = std::max(p.kappa, 1e-300);
    const double collective = 4.0 * p.g * p.g * n / (kap + 0.5 * (p.gamma_a + p.w)) ;
    const double rate = std::max(collective, p.gamma_a + p.w);
    if (!(rate > 0.0)) throw ConfigError("superradiance: no emission channel (g = gamma_a = 0); set dynamics.t_end");
    return std::min(30.0 * (1.0 + std::log1p(n)) / rate, 1e3 / std::max(1e-300, std::min(kap, rate)));
}

// ---------------------------------------------------------------- run / sweep

std::string provenance_hash(const ScenarioSpec& spec) {
    if (!spec.config_text.empty()) return io::sha1_hex(spec.config_text);
    auto meta = metadata_for_body(spec);
    return io::sha1_hex(meta.dump());
}

nlohmann::json metadata_for(const ScenarioSpec& spec) {
    auto m = metadata_for_body(spec);
    m["code_version"] = CAVENS_VERSION;
    m["provenance_hash"] = provenance_hash(spec);
    m["config_text"] = spec.config_text;
    return m;
}

ScenarioResult run(const ScenarioSpec& spec) {
    spec.check();
    const auto t_start = std::chrono::steady_clock::now();
    const auto points = grid_points(spec.axes);
    std::vector<Block> blocks(points.size());
    std::vector<std::string> failures(points.size());

    parallel_for(points.size(), spec.workers, [&](std::size_t i) {
        try {
            const SystemParams p = params_at(spec, points[i]);
            blocks[i] = evaluate(spec, p, i == 0);
        } catch (const std::exception& e) {
            failures[i] = one_line(e.what());
        }
    });

    ScenarioResult res;
    res.spec = spec;
    res.points_total = points.size();

    // Axis columns first, then the scenario's own (skipping duplicates).
    const auto own = scenario_columns(spec.kind);
    std::vector<std::size_t> own_keep;
    for (const auto& a : spec.axes) res.table.columns.push_back(a.variable);
    for (std::size_t c = 0; c < own.size(); ++c)
        if (std::find(res.table.columns.begin(), res.table.columns.end(), own[c]) == res.table.columns.end()) {
            res.table.columns.push_back(own[c]);
            own_keep.push_back(c);
        }
    const auto psum = point_summary_columns(spec.kind);
    if (!psum.empty()) {
        for (const auto& a : spec.axes) res.summary.columns.push_back(a.variable);
        for (const auto& c : psum) res.summary.columns.push_back(c);
    }

    // Rows per point for failed points: spectra and trajectories fail as a
    // single NaN row.
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& b = blocks[i];
        const bool failed = !failures[i].empty() || b.rows.empty();
        if (failed) {
            ++res.points_failed;
            std::vector<double> row(points[i]);
            row.resize(res.table.columns.size(), kNaN);
            res.table.rows.push_back(std::move(row));
            res.table.status.push_back("error: " + (failures[i].empty() ? std::string("no output") : failures[i]));
            if (!psum.empty()) {
                std::vector<double> srow(points[i]);
                srow.resize(res.summary.columns.size(), kNaN);
                res.summary.rows.push_back(std::move(srow));
                res.summary.status.push_back("error");
            }
            continue;
        }
        for (std::size_t r = 0; r < b.rows.size(); ++r) {
            std::vector<double> row(points[i]);
            for (auto c : own_keep) row.push_back(b.rows[r][c]);
            res.table.rows.push_back(std::move(row));
            res.table.status.push_back(b.status[r]);
        }
        for (const auto& sr : b.summary) {
            std::vector<double> row(points[i]);
            row.insert(row.end(), sr.begin(), sr.end());
            res.summary.rows.push_back(std::move(row));
            res.summary.status.push_back("ok");
        }
    }

    if (psum.empty()) {
        switch (spec.kind) {
            case ScenarioKind::transmission_scan:
            case ScenarioKind::driven_field_scan:
                res.summary = transmission_summary(spec, points, res.table);
                break;
            case ScenarioKind::cooling:
                res.summary = cooling_summary(spec, points, res.table);
                break;
            case ScenarioKind::maser_map:
                res.summary = maser_summary(spec, points, res.table);
                break;
            default:
                break;
        }
    }

    res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    res.metadata = metadata_for(spec);
    res.metadata["columns"] = res.table.columns;
    res.metadata["summary_columns"] = res.summary.columns;
    res.metadata["points_total"] = res.points_total;
    res.metadata["points_failed"] = res.points_failed;
    res.metadata["wall_seconds"] = res.wall_seconds;
    return res;
}

std::vector<ScenarioResult> sweep(const std::vector<ScenarioSpec>& specs) {
    // Validate everything before running anything.
    std::set<std::string> names;
    for (const auto& s : specs) {
        s.check();
        const auto key = s.output_dir + "/" + s.basename();
        if (!names.insert(key).second) throw ConfigError("sweep: duplicate output '" + key + "'");
    }
    std::vector<ScenarioResult> out;
    out.reserve(specs.size());
    for (const auto& s : specs) out.push_back(run(s));
    return out;
}

}  // namespace cavens::scenarios
