#include "cavens/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>

#include "cavens/table_io.hpp"

namespace cavens::config {

namespace pt = boost::property_tree;
using scenarios::ScenarioSpec;

namespace {

std::string trim(std::string s) {
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front())
        s = s.substr(1, s.size() - 2);
    return s;
}

double to_double(const std::string& where, const std::string& text) {
    const std::string s = trim(text);
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size())
        throw ConfigError(where + ": expected a number, got '" + s + "'");
    return v;
}

long to_long(const std::string& where, const std::string& text) {
    const double v = to_double(where, text);
    if (v != std::floor(v) || std::abs(v) > 9.0e15) throw ConfigError(where + ": expected an integer");
    return static_cast<long>(v);
}

bool to_bool(const std::string& where, const std::string& text) {
    std::string s = trim(text);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == "true" || s == "yes" || s == "1" || s == "on") return true;
    if (s == "false" || s == "no" || s == "0" || s == "off") return false;
    throw ConfigError(where + ": expected true/false, got '" + s + "'");
}

std::vector<std::string> split_ws(const std::string& text) {
    std::string s = text;
    std::replace(s.begin(), s.end(), ',', ' ');
    std::istringstream is(s);
    std::vector<std::string> out;
    for (std::string tok; is >> tok;) out.push_back(tok);
    return out;
}

pt::ptree read_ini(const std::string& text) {
    pt::ptree tree;
    std::istringstream is(text);
    try {
        pt::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("config: " + std::string(e.message()) + " (line " + std::to_string(e.line()) + ")");
    }
    return tree;
}

using Handler = std::function<void(ScenarioSpec&, const std::string& where, const std::string& value)>;

const std::map<std::string, std::map<std::string, Handler>>& handlers() {
    static const std::map<std::string, std::map<std::string, Handler>> h = {
        {"scenario",
         {{"type", [](ScenarioSpec& s, auto&, auto& v) { s.kind = scenarios::parse_scenario(trim(v)); }},
          {"name", [](ScenarioSpec& s, auto&, auto& v) { s.name = trim(v); }}}},
        {"system",
         {{"n_atoms", [](ScenarioSpec& s, auto& w, auto& v) { s.params.n_atoms = to_long(w, v); }},
          {"g", [](ScenarioSpec& s, auto& w, auto& v) { s.params.g = to_double(w, v); }},
          {"kappa", [](ScenarioSpec& s, auto& w, auto& v) { s.params.kappa = to_double(w, v); }},
          {"gamma_a", [](ScenarioSpec& s, auto& w, auto& v) { s.params.gamma_a = to_double(w, v); }},
          {"omega_a", [](ScenarioSpec& s, auto& w, auto& v) { s.params.omega_a = to_double(w, v); }},
          {"omega_m", [](ScenarioSpec& s, auto& w, auto& v) { s.params.omega_m = to_double(w, v); }},
          {"omega_l", [](ScenarioSpec& s, auto& w, auto& v) { s.params.omega_l = to_double(w, v); }},
          // delta_m is applied after all other keys (it needs omega_m).
          {"delta_m", [](ScenarioSpec&, auto& w, auto& v) { to_double(w, v); }},
          {"eta", [](ScenarioSpec& s, auto& w, auto& v) { s.params.eta.real(to_double(w, v)); }},
          {"eta_im", [](ScenarioSpec& s, auto& w, auto& v) { s.params.eta.imag(to_double(w, v)); }},
          {"w", [](ScenarioSpec& s, auto& w, auto& v) { s.params.w = to_double(w, v); }},
          {"temperature", [](ScenarioSpec& s, auto& w, auto& v) { s.params.temperature = to_double(w, v); }}}},
        {"engine",
         {{"type", [](ScenarioSpec& s, auto&, auto& v) { s.engine = scenarios::parse_engine(trim(v)); }},
          {"closure",
           [](ScenarioSpec& s, auto& w, auto& v) {
               const auto c = trim(v);
               if (c == "full") s.closure = cumulant::Closure::full;
               else if (c == "reduced") s.closure = cumulant::Closure::reduced;
               else throw ConfigError(w + ": expected full|reduced, got '" + c + "'");
           }},
          {"fock_cutoff", [](ScenarioSpec& s, auto& w, auto& v) { s.fock_cutoff = static_cast<int>(to_long(w, v)); }},
          {"dimension_cap", [](ScenarioSpec& s, auto& w, auto& v) { s.dimension_cap = to_long(w, v); }},
          {"rel_tol", [](ScenarioSpec& s, auto& w, auto& v) { s.rel_tol = to_double(w, v); }},
          {"abs_tol", [](ScenarioSpec& s, auto& w, auto& v) { s.abs_tol = to_double(w, v); }},
          {"workers", [](ScenarioSpec& s, auto& w, auto& v) { s.workers = static_cast<int>(to_long(w, v)); }}}},
        {"spectrum",
         {{"omega_min", [](ScenarioSpec& s, auto& w, auto& v) { s.spectrum.omega_min = to_double(w, v); }},
          {"omega_max", [](ScenarioSpec& s, auto& w, auto& v) { s.spectrum.omega_max = to_double(w, v); }},
          {"points", [](ScenarioSpec& s, auto& w, auto& v) { s.spectrum.points = static_cast<int>(to_long(w, v)); }},
          {"b0", [](ScenarioSpec& s, auto& w, auto& v) { s.spectrum.b0 = to_double(w, v); }},
          {"normalize", [](ScenarioSpec& s, auto& w, auto& v) { s.spectrum.normalize = to_bool(w, v); }}}},
        {"dynamics",
         {{"t_end", [](ScenarioSpec& s, auto& w, auto& v) { s.dynamics.t_end = to_double(w, v); }},
          {"points", [](ScenarioSpec& s, auto& w, auto& v) { s.dynamics.points = static_cast<int>(to_long(w, v)); }},
          {"validity_fraction",
           [](ScenarioSpec& s, auto& w, auto& v) { s.dynamics.validity_fraction = to_double(w, v); }}}},
        {"output",
         {{"dir", [](ScenarioSpec& s, auto&, auto& v) { s.output_dir = trim(v); }},
          {"name", [](ScenarioSpec& s, auto&, auto& v) { s.name = trim(v); }}}},
    };
    return h;
}

}  // namespace

scenarios::ScanAxis parse_axis(const std::string& variable, const std::string& text) {
    const std::string where = "scan." + variable;
    if (!scenarios::is_scan_variable(variable)) throw ConfigError(where + ": unknown scan variable");
    const auto tok = split_ws(trim(text));
    if (tok.size() < 3 || tok.size() > 4)
        throw ConfigError(where + ": expected \"min max points [linear|log]\", got '" + trim(text) + "'");
    scenarios::ScanAxis a;
    a.variable = variable;
    a.min = to_double(where + ".min", tok[0]);
    a.max = to_double(where + ".max", tok[1]);
    a.points = static_cast<int>(to_long(where + ".points", tok[2]));
    if (tok.size() == 4) {
        if (tok[3] == "log") a.log = true;
        else if (tok[3] != "linear") throw ConfigError(where + ": spacing must be linear or log");
    }
    a.values();  // validates
    return a;
}

ScenarioSpec parse(const std::string& text, std::optional<scenarios::ScenarioKind> kind) {
    const auto tree = read_ini(text);
    ScenarioSpec spec;
    spec.config_text = text;
    std::vector<std::string> problems;
    bool have_kind = false;
    std::optional<std::string> delta_m;

    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty()) {
            problems.push_back("config: key '" + section + "' outside a section");
            continue;
        }
        if (section == "scan") {
            for (const auto& [key, val] : body) {
                try {
                    spec.axes.push_back(parse_axis(key, val.data()));
                } catch (const ConfigError& e) {
                    problems.push_back(e.what());
                }
            }
            continue;
        }
        const auto sec = handlers().find(section);
        if (sec == handlers().end()) {
            problems.push_back("config: unknown section [" + section + "]");
            continue;
        }
        for (const auto& [key, val] : body) {
            const std::string where = section + "." + key;
            const auto h = sec->second.find(key);
            if (h == sec->second.end()) {
                problems.push_back(where + ": unknown key");
                continue;
            }
            try {
                h->second(spec, where, val.data());
                if (where == "scenario.type") have_kind = true;
                if (where == "system.delta_m") delta_m = val.data();
            } catch (const ConfigError& e) {
                problems.push_back(e.what());
            }
        }
    }
    if (delta_m) {
        if (spec.params.omega_l && tree.get_child("system").count("omega_l"))
            problems.push_back("system: give omega_l or delta_m, not both");
        else
            spec.params.set_cavity_detuning(to_double("system.delta_m", *delta_m));
    }
    if (kind) {
        if (have_kind && spec.kind != *kind)
            problems.push_back("scenario.type '" + scenarios::to_string(spec.kind) +
                               "' conflicts with the requested scenario '" + scenarios::to_string(*kind) + "'");
        spec.kind = *kind;
    } else if (!have_kind) {
        problems.push_back("scenario.type: missing (or pass the scenario on the command line)");
    }
    if (!problems.empty()) {
        std::string msg = "configuration errors:";
        for (const auto& p : problems) msg += "\n  " + p;
        throw ConfigError(msg);
    }
    return spec;
}

ScenarioSpec load(const std::string& path, std::optional<scenarios::ScenarioKind> kind) {
    const std::string text = io::read_text_file(path);
    if (std::filesystem::path(path).extension() == ".json") {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(path + ": " + e.what());
        }
        if (!j.contains("config_text") || !j["config_text"].is_string() || j["config_text"].get<std::string>().empty())
            throw ConfigError(path + ": sidecar has no config_text to replay");
        return parse(j["config_text"].get<std::string>(), kind);
    }
    return parse(text, kind);
}

std::vector<ScenarioSpec> load_sweep(const std::string& path) {
    const auto tree = read_ini(io::read_text_file(path));
    std::vector<std::string> files;
    std::optional<std::string> out_dir;
    for (const auto& [section, body] : tree) {
        if (section != "sweep") throw ConfigError("sweep: unknown section [" + section + "]");
        for (const auto& [key, val] : body) {
            if (key == "configs") {
                for (auto& f : split_ws(trim(val.data()))) files.push_back(f);
            } else if (key == "output_dir") {
                out_dir = trim(val.data());
            } else {
                throw ConfigError("sweep." + key + ": unknown key");
            }
        }
    }
    if (files.empty()) throw ConfigError("sweep: [sweep] configs lists no files");
    const auto base = std::filesystem::path(path).parent_path();
    std::vector<ScenarioSpec> specs;
    std::vector<std::string> problems;
    for (const auto& f : files) {
        const auto p = std::filesystem::path(f).is_absolute() ? std::filesystem::path(f) : base / f;
        try {
            auto s = load(p.string());
            if (out_dir) s.output_dir = *out_dir;
            specs.push_back(std::move(s));
        } catch (const ConfigError& e) {
            problems.push_back(p.string() + ": " + e.what());
        }
    }
    if (!problems.empty()) {
        std::string msg = "sweep configuration errors:";
        for (const auto& pr : problems) msg += "\n  " + pr;
        throw ConfigError(msg);
    }
    return specs;
}

}  // namespace cavens::config
