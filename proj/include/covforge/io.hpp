#pragma once

// JSON specs and reports, CSV grids. Needs nlohmann/json.

#include "covforge/continuity.hpp"
#include "covforge/displacement.hpp"
#include "covforge/electrodynamics.hpp"
#include "covforge/grid.hpp"
#include "covforge/kinematics.hpp"
#include "covforge/kinetics.hpp"
#include "covforge/plasma.hpp"
#include "covforge/scalar_function.hpp"

#if __has_include(<nlohmann/json.hpp>)
#include <nlohmann/json.hpp>
#else
#include <json.hpp>
#endif

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace covforge::io {

using json = nlohmann::json;

// Bad or missing configuration entry; `key` is its dotted path and `code`
// names the failed check (a library error code, or ConfigError for schema).
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, const std::string& what, std::string code = "ConfigError")
        : std::runtime_error(key + ": " + what), key_(std::move(key)), code_(std::move(code))
    {
    }
    const std::string& key() const { return key_; }
    const std::string& code() const { return code_; }

private:
    std::string key_;
    std::string code_;
};

inline std::string join_key(const std::string& base, const std::string& key)
{
    return base.empty() ? key : base + "." + key;
}

inline std::string join_key(const std::string& base, std::size_t index)
{
    return base + "[" + std::to_string(index) + "]";
}

// 17 significant digits: round-trips every double.
inline std::string format_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline const json& require(const json& j, const std::string& key, const std::string& path)
{
    if (!j.is_object()) throw ConfigError(path, "expected an object");
    const auto it = j.find(key);
    if (it == j.end()) throw ConfigError(join_key(path, key), "missing required key");
    return *it;
}

inline double number(const json& v, const std::string& path)
{
    if (!v.is_number()) throw ConfigError(path, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(path, "must be finite");
    return d;
}

inline double number_or(const json& j, const std::string& key, double fallback, const std::string& path)
{
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    return number(j.at(key), join_key(path, key));
}

inline long long integer(const json& v, const std::string& path)
{
    if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
    return v.get<long long>();
}

inline long long integer_or(const json& j, const std::string& key, long long fallback, const std::string& path)
{
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    return integer(j.at(key), join_key(path, key));
}

inline std::string string_or(const json& j, const std::string& key, const std::string& fallback,
                             const std::string& path)
{
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    if (!j.at(key).is_string()) throw ConfigError(join_key(path, key), "expected a string");
    return j.at(key).get<std::string>();
}

inline Vec3 vec3(const json& v, const std::string& path)
{
    if (!v.is_array() || v.size() != 3) throw ConfigError(path, "expected an array of 3 numbers");
    return {number(v[0], join_key(path, 0)), number(v[1], join_key(path, 1)), number(v[2], join_key(path, 2))};
}

inline Mat3 mat3(const json& v, const std::string& path)
{
    if (!v.is_array() || v.size() != 3) throw ConfigError(path, "expected a 3x3 array");
    Mat3 m{};
    for (std::size_t i = 0; i < 3; ++i) m[i] = vec3(v[i], join_key(path, i));
    return m;
}

inline json to_json(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }

// ---- displacement and transform specs

inline TemporalFactor temporal_from_json(const json& j, const std::string& path)
{
    if (j.is_null()) return TemporalFactor::constant();
    const std::string kind = string_or(j, "kind", "const", path);
    const double w = number_or(j, "omega", 0.0, path);
    const double phi = number_or(j, "phase", 0.0, path);
    if (kind == "const" || kind == "constant") return TemporalFactor::constant();
    if (kind == "t" || kind == "linear") return TemporalFactor::linear();
    if (kind == "t2" || kind == "quadratic") return TemporalFactor::quadratic();
    if (kind == "cos" || kind == "cosine") return TemporalFactor::cosine(w, phi);
    if (kind == "sin" || kind == "sine") return TemporalFactor::sine(w, phi);
    throw ConfigError(join_key(path, "kind"), "unknown time factor '" + kind + "'");
}

inline json to_json(const TemporalFactor& t)
{
    static const char* names[] = {"const", "linear", "quadratic", "cos", "sin"};
    json j{{"kind", names[static_cast<int>(t.kind)]}};
    if (t.kind == TemporalFactor::Kind::cosine || t.kind == TemporalFactor::Kind::sine) {
        j["omega"] = t.omega;
        j["phase"] = t.phase;
    }
    return j;
}

inline std::array<int, 3> powers_from_json(const json& j, const std::string& path)
{
    std::array<int, 3> p{};
    const char* keys[] = {"px", "py", "pz"};
    for (int a = 0; a < 3; ++a) {
        const long long v = integer_or(j, keys[a], 0, path);
        if (v < 0 || v > 8) throw ConfigError(join_key(path, keys[a]), "exponent must lie in [0, 8]");
        p[a] = static_cast<int>(v);
    }
    return p;
}

// Components are 1-based in files.
inline int component_from_json(const json& j, const std::string& path)
{
    const long long c = integer(require(j, "component", path), join_key(path, "component"));
    if (c < 1 || c > 3) throw ConfigError(join_key(path, "component"), "must be 1, 2 or 3");
    return static_cast<int>(c - 1);
}

inline DisplacementSpec displacement_from_json(const json& j, const std::string& path)
{
    const json& terms = j.is_object() ? require(j, "terms", path) : j;
    const std::string tpath = j.is_object() ? join_key(path, "terms") : path;
    if (!terms.is_array()) throw ConfigError(tpath, "expected an array of terms");
    DisplacementSpec s;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        const std::string p = join_key(tpath, i);
        const json& t = terms[i];
        s.add(component_from_json(t, p), number(require(t, "coeff", p), join_key(p, "coeff")),
              powers_from_json(t, p), temporal_from_json(t.value("time", json()), join_key(p, "time")));
    }
    return s;
}

inline json to_json(const DisplacementSpec& s)
{
    json terms = json::array();
    for (const auto& t : s.terms)
        terms.push_back({{"component", t.component + 1},
                         {"coeff", t.coeff},
                         {"px", t.powers[0]},
                         {"py", t.powers[1]},
                         {"pz", t.powers[2]},
                         {"time", to_json(t.time)}});
    return terms;
}

inline ScalarFunction scalar_function_from_json(const json& j, const std::string& path)
{
    const json& terms = j.is_object() ? require(j, "terms", path) : j;
    const std::string tpath = j.is_object() ? join_key(path, "terms") : path;
    if (!terms.is_array() || terms.empty()) throw ConfigError(tpath, "expected a non-empty array of terms");
    ScalarFunction f;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        const std::string p = join_key(tpath, i);
        const json& t = terms[i];
        ScalarTerm term;
        const std::string kind = string_or(t, "kind", "power", p);
        if (kind == "power")
            term.kind = ScalarTerm::Kind::power;
        else if (kind == "exp")
            term.kind = ScalarTerm::Kind::exp;
        else if (kind == "sin")
            term.kind = ScalarTerm::Kind::sin;
        else if (kind == "cos")
            term.kind = ScalarTerm::Kind::cos;
        else
            throw ConfigError(join_key(p, "kind"), "unknown term kind '" + kind + "'");
        term.coeff = number(require(t, "coeff", p), join_key(p, "coeff"));
        const long long power = integer_or(t, "power", 0, p);
        if (power < 0 || power > 8) throw ConfigError(join_key(p, "power"), "must lie in [0, 8]");
        term.power = static_cast<int>(power);
        term.rate = number_or(t, "rate", 0.0, p);
        term.phase = number_or(t, "phase", 0.0, p);
        f.terms.push_back(term);
    }
    return f;
}

inline json to_json(const ScalarFunction& f)
{
    static const char* names[] = {"power", "exp", "sin", "cos"};
    json terms = json::array();
    for (const auto& t : f.terms)
        terms.push_back({{"kind", names[static_cast<int>(t.kind)]},
                         {"coeff", t.coeff},
                         {"power", t.power},
                         {"rate", t.rate},
                         {"phase", t.phase}});
    return terms;
}

inline SpatialMap spatial_map_from_json(const json& j, const std::string& path)
{
    SpatialMap m;
    if (j.contains("z_profile")) m.fz = scalar_function_from_json(j.at("z_profile"), join_key(path, "z_profile"));
    if (j.contains("extra")) {
        const json& extra = j.at("extra");
        const std::string ep = join_key(path, "extra");
        if (!extra.is_array()) throw ConfigError(ep, "expected an array of terms");
        for (std::size_t i = 0; i < extra.size(); ++i) {
            const std::string p = join_key(ep, i);
            m.extra.push_back({component_from_json(extra[i], p),
                               number(require(extra[i], "coeff", p), join_key(p, "coeff")),
                               powers_from_json(extra[i], p)});
        }
    }
    return m;
}

// {"type": "euler", "terms": [...]}, {"type": "spatial", "z_profile": ..., "extra": [...]},
// or a bare array of displacement terms.
inline GeneralTransform transform_from_json(const json& j, const std::string& path)
{
    GeneralTransform t;
    if (j.is_array()) {
        t = displacement_from_json(j, path);
    } else {
        const std::string type = string_or(j, "type", "euler", path);
        if (type == "euler")
            t = j.contains("terms") ? displacement_from_json(j, path) : DisplacementSpec{};
        else if (type == "spatial")
            t = spatial_map_from_json(j, path);
        else
            throw ConfigError(join_key(path, "type"), "expected 'euler' or 'spatial'");
    }
    try {
        validate(t);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path, e.what());
    }
    return t;
}

inline json to_json(const GeneralTransform& t)
{
    if (const auto* s = std::get_if<DisplacementSpec>(&t)) return {{"type", "euler"}, {"terms", to_json(*s)}};
    const auto& m = std::get<SpatialMap>(t);
    json extra = json::array();
    for (const auto& e : m.extra)
        extra.push_back({{"component", e.component + 1},
                         {"coeff", e.coeff},
                         {"px", e.powers[0]},
                         {"py", e.powers[1]},
                         {"pz", e.powers[2]}});
    return {{"type", "spatial"}, {"z_profile", to_json(m.fz)}, {"extra", extra}};
}

// ---- grids

inline Axis axis_from_json(const json& j, const std::string& name, const std::string& path)
{
    Axis a;
    a.name = name;
    a.min = number(require(j, "min", path), join_key(path, "min"));
    a.max = number_or(j, "max", a.min, path);
    const long long n = integer(require(j, "count", path), join_key(path, "count"));
    if (n < 0) throw ConfigError(join_key(path, "count"), "must be non-negative");
    a.count = static_cast<std::size_t>(n);
    return a;
}

inline json to_json(const Axis& a) { return {{"min", a.min}, {"max", a.max}, {"count", a.count}}; }

// Named axes in the given order; absent axes become slices at 0. Counts
// are not validated here so that callers can report DomainTooSmall.
inline GridSpec grid_from_json(const json& j, const std::vector<std::string>& names, const std::string& path)
{
    if (!j.is_object()) throw ConfigError(path, "expected an object of axes");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (std::find(names.begin(), names.end(), it.key()) == names.end())
            throw ConfigError(join_key(path, it.key()), "unknown axis");
    GridSpec g;
    for (const auto& n : names)
        g.axes.push_back(j.contains(n) ? axis_from_json(j.at(n), n, join_key(path, n)) : Axis{n, 0.0, 0.0, 1});
    return g;
}

inline json to_json(const GridSpec& g)
{
    json j = json::object();
    for (const auto& a : g.axes) j[a.name] = to_json(a);
    return j;
}

inline GridSpec refine(GridSpec g, int times)
{
    for (int i = 0; i < times; ++i) g = g.refined();
    return g;
}

inline json to_json(const ResidualReport& r)
{
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    json eqs = json::array();
    for (const auto& e : r.equations) {
        json q{{"name", e.name}, {"max_norm", e.coarse.max_norm}, {"l2_norm", e.coarse.l2_norm}, {"order_estimate", opt(e.order)}};
        if (e.fine) {
            q["fine_max_norm"] = e.fine->max_norm;
            q["fine_l2_norm"] = e.fine->l2_norm;
        }
        eqs.push_back(q);
    }
    json j{{"max_norm", r.max_norm},
           {"l2_norm", r.l2_norm},
           {"coarse_max_norm", r.coarse_max_norm},
           {"order_estimate", opt(r.order_estimate)},
           {"grid", to_json(r.grid)},
           {"nodes", r.nodes},
           {"excluded_nodes", r.excluded_nodes},
           {"equations", eqs}};
    if (r.refined_grid) j["refined_grid"] = to_json(*r.refined_grid);
    return j;
}

// ---- plasma scenario

inline SlabConfig slab_config_from_json(const json& j, const std::string& path)
{
    if (!j.is_object()) throw ConfigError(path, "expected an object");
    SlabConfig cfg;
    cfg.density = number_or(j, "n", cfg.density, path);
    cfg.half_width = number_or(j, "a", cfg.half_width, path);
    cfg.charge = number_or(j, "e", cfg.charge, path);
    cfg.mass = number_or(j, "m", cfg.mass, path);
    cfg.c = number_or(j, "c", cfg.c, path);
    cfg.temperature = number_or(j, "temperature", cfg.temperature, path);
    cfg.d0 = number_or(j, "d0", 0.01 * cfg.half_width, path);
    cfg.v0 = number_or(j, "v0", cfg.v0, path);
    const long long steps = integer_or(j, "steps", 0, path);
    if (steps < 0) throw ConfigError(join_key(path, "steps"), "must be non-negative");
    cfg.steps = static_cast<std::size_t>(steps);
    cfg.t_end = number_or(j, "t_end", 0.0, path);
    if (cfg.t_end < 0.0) throw ConfigError(join_key(path, "t_end"), "must be non-negative");
    cfg.periods = number_or(j, "periods", cfg.periods, path);
    const long long spp = integer_or(j, "steps_per_period", 1000, path);
    if (spp < 1) throw ConfigError(join_key(path, "steps_per_period"), "must be positive");
    cfg.steps_per_period = static_cast<std::size_t>(spp);
    auto positive = [&](double v, const char* key) {
        if (!(v > 0.0)) throw ConfigError(join_key(path, key), "must be positive");
    };
    positive(cfg.density, "n");
    positive(cfg.half_width, "a");
    positive(cfg.mass, "m");
    positive(cfg.c, "c");
    positive(cfg.periods, "periods");
    if (cfg.charge == 0.0) throw ConfigError(join_key(path, "e"), "must be non-zero");
    if (j.contains("external") && !j.at("external").is_null()) {
        const json& ext = j.at("external");
        const std::string ep = join_key(path, "external");
        const std::string kind = string_or(ext, "kind", "constant", ep);
        const double e0 = number_or(ext, "E0", 0.0, ep);
        if (kind == "none")
            cfg.external = ExternalDrive::none();
        else if (kind == "constant")
            cfg.external = ExternalDrive::constant(e0);
        else if (kind == "cos" || kind == "cosine")
            cfg.external = ExternalDrive::cosine(e0, number(require(ext, "omega", ep), join_key(ep, "omega")),
                                                 number_or(ext, "phase", 0.0, ep));
        else
            throw ConfigError(join_key(ep, "kind"), "expected 'none', 'constant' or 'cosine'");
    }
    return cfg;
}

inline PlaneWave plane_wave_from_json(const json& j, double c, const std::string& path)
{
    const Vec3 amp = vec3(require(j, "amplitude", path), join_key(path, "amplitude"));
    const Vec3 k = vec3(require(j, "k", path), join_key(path, "k"));
    if (!(norm(k) > 0.0)) throw ConfigError(join_key(path, "k"), "wave vector must be non-zero");
    if (std::abs(dot(amp, k)) > 1e-12 * norm(amp) * norm(k))
        throw ConfigError(join_key(path, "amplitude"), "amplitude must be transverse to k");
    return PlaneWave::vacuum(amp, k, c, number_or(j, "phase", 0.0, path));
}

// ---- files

inline json read_json(const std::string& file)
{
    std::ifstream in(file);
    if (!in) throw ConfigError("config", "cannot open '" + file + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config", std::string("invalid JSON: ") + e.what());
    }
}

inline void write_json(const std::string& file, const json& j)
{
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot write '" + file + "'");
    out << j.dump(2) << '\n';
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t column(const std::string& name) const
    {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw std::out_of_range("CSV has no column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    }
    bool has(const std::string& name) const
    {
        return std::find(header.begin(), header.end(), name) != header.end();
    }
};

inline void write_csv(std::ostream& out, const CsvTable& t)
{
    for (std::size_t i = 0; i < t.header.size(); ++i) out << (i ? "," : "") << t.header[i];
    out << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_double(row[i]);
        out << '\n';
    }
}

inline void write_csv(const std::string& file, const CsvTable& t)
{
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot write '" + file + "'");
    write_csv(out, t);
}

inline CsvTable read_csv(const std::string& file)
{
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open '" + file + "'");
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("'" + file + "' is empty");
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) t.header.push_back(cell);
    }
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(cell, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == 0) throw std::runtime_error(file + ":" + std::to_string(lineno) + ": bad number '" + cell + "'");
            row.push_back(v);
        }
        if (row.size() != t.header.size())
            throw std::runtime_error(file + ":" + std::to_string(lineno) + ": expected "
                                     + std::to_string(t.header.size()) + " values");
        t.rows.push_back(std::move(row));
    }
    return t;
}

// Values on a tensor-product grid rebuilt from coordinate columns, evaluated
// by multilinear interpolation. A coordinate with one distinct value is a slice.
class SampledField {
public:
    SampledField(const CsvTable& t, const std::vector<std::string>& coords)
    {
        for (const auto& c : coords) coord_cols_.push_back(t.column(c));
        for (std::size_t i = 0; i < t.header.size(); ++i)
            if (std::find(coord_cols_.begin(), coord_cols_.end(), i) == coord_cols_.end()) {
                value_cols_.push_back(i);
                names_.push_back(t.header[i]);
            }
        nodes_.resize(coords.size());
        for (std::size_t a = 0; a < coords.size(); ++a) {
            auto& n = nodes_[a];
            for (const auto& row : t.rows) n.push_back(row[coord_cols_[a]]);
            std::sort(n.begin(), n.end());
            n.erase(std::unique(n.begin(), n.end()), n.end());
        }
        std::size_t total = 1;
        for (const auto& n : nodes_) total *= n.size();
        if (total != t.rows.size())
            throw std::runtime_error("CSV rows do not form a full tensor-product grid");
        values_.assign(total * value_cols_.size(), std::numeric_limits<double>::quiet_NaN());
        std::vector<char> seen(total, 0);
        for (const auto& row : t.rows) {
            std::size_t flat = 0;
            for (std::size_t a = 0; a < nodes_.size(); ++a) {
                const auto& n = nodes_[a];
                const auto idx = static_cast<std::size_t>(
                    std::lower_bound(n.begin(), n.end(), row[coord_cols_[a]]) - n.begin());
                flat = flat * n.size() + idx;
            }
            if (seen[flat]) throw std::runtime_error("CSV repeats a grid node");
            seen[flat] = 1;
            for (std::size_t v = 0; v < value_cols_.size(); ++v)
                values_[flat * value_cols_.size() + v] = row[value_cols_[v]];
        }
    }

    const std::vector<std::string>& value_names() const { return names_; }
    std::size_t value_index(const std::string& name) const
    {
        const auto it = std::find(names_.begin(), names_.end(), name);
        if (it == names_.end()) throw std::out_of_range("sampled field has no value '" + name + "'");
        return static_cast<std::size_t>(it - names_.begin());
    }

    // Axes of the stored grid, assuming uniform spacing per axis.
    GridSpec grid(const std::vector<std::string>& names) const
    {
        GridSpec g;
        for (std::size_t a = 0; a < nodes_.size(); ++a) {
            const auto& n = nodes_[a];
            g.axes.push_back({names[a], n.front(), n.back(), n.size()});
        }
        return g;
    }

    std::vector<double> operator()(std::span<const double> x) const
    {
        if (x.size() != nodes_.size()) throw std::invalid_argument("sampled field: wrong coordinate count");
        std::vector<std::size_t> lo(nodes_.size());
        std::vector<double> frac(nodes_.size(), 0.0);
        for (std::size_t a = 0; a < nodes_.size(); ++a) {
            const auto& n = nodes_[a];
            if (n.size() == 1) {
                lo[a] = 0;
                continue;
            }
            const double tol = 1e-12 * (n.back() - n.front());
            if (x[a] < n.front() - tol || x[a] > n.back() + tol)
                throw std::out_of_range("sampled field: coordinate " + format_number(x[a]) + " outside the grid");
            auto it = std::upper_bound(n.begin(), n.end(), x[a]);
            std::size_t i = it == n.begin() ? 0 : static_cast<std::size_t>(it - n.begin()) - 1;
            i = std::min(i, n.size() - 2);
            lo[a] = i;
            frac[a] = std::clamp((x[a] - n[i]) / (n[i + 1] - n[i]), 0.0, 1.0);
        }
        const std::size_t nv = value_cols_.size();
        std::vector<double> out(nv, 0.0);
        const std::size_t corners = std::size_t{1} << nodes_.size();
        for (std::size_t corner = 0; corner < corners; ++corner) {
            double w = 1.0;
            std::size_t flat = 0;
            bool skip = false;
            for (std::size_t a = 0; a < nodes_.size(); ++a) {
                const bool up = (corner >> a) & 1;
                const std::size_t size = nodes_[a].size();
                if (up && (size == 1 || frac[a] == 0.0)) {
                    skip = true;
                    break;
                }
                if (!up && frac[a] == 1.0) {
                    skip = true;
                    break;
                }
                w *= up ? frac[a] : 1.0 - frac[a];
                flat = flat * size + lo[a] + (up ? 1 : 0);
            }
            if (skip) continue;
            for (std::size_t v = 0; v < nv; ++v) out[v] += w * values_[flat * nv + v];
        }
        return out;
    }

private:
    std::vector<std::size_t> coord_cols_;
    std::vector<std::size_t> value_cols_;
    std::vector<std::string> names_;
    std::vector<std::vector<double>> nodes_;
    std::vector<double> values_;
};

inline const std::vector<std::string>& spacetime_columns()
{
    static const std::vector<std::string> cols{"t", "x", "y", "z"};
    return cols;
}

inline const std::vector<std::string>& current_columns()
{
    static const std::vector<std::string> cols{"t", "x", "y", "z", "crho", "jx", "jy", "jz"};
    return cols;
}

inline const std::vector<std::string>& em_columns()
{
    static const std::vector<std::string> cols{"t",  "x",  "y",  "z",  "Ex", "Ey", "Ez", "Bx",
                                               "By", "Bz", "Dx", "Dy", "Dz", "Hx", "Hy", "Hz"};
    return cols;
}

// Grid nodes in row-major order (first axis slowest).
template <class Fn>
void for_each_node(const GridSpec& g, Fn&& fn)
{
    std::vector<std::size_t> idx(g.dims(), 0);
    std::vector<double> x(g.dims());
    const std::size_t total = g.node_count();
    for (std::size_t n = 0; n < total; ++n) {
        std::size_t rem = n;
        for (std::size_t a = g.dims(); a-- > 0;) {
            idx[a] = rem % g.axes[a].count;
            rem /= g.axes[a].count;
        }
        for (std::size_t a = 0; a < g.dims(); ++a) x[a] = g.axes[a].coord(idx[a]);
        fn(std::span<const double>(x));
    }
}

inline CsvTable sample_current(const FourCurrentField& j, const GridSpec& g, double c = 1.0)
{
    CsvTable t{current_columns(), {}};
    t.rows.reserve(g.node_count());
    for_each_node(g, [&](std::span<const double> x) {
        const Vec4 v = j(SpaceTimePoint::at(x[0], {x[1], x[2], x[3]}, c));
        t.rows.push_back({x[0], x[1], x[2], x[3], v[0], v[1], v[2], v[3]});
    });
    return t;
}

inline CsvTable sample_em(const EMFieldState& s, const GridSpec& g, double c = 1.0)
{
    CsvTable t{em_columns(), {}};
    t.rows.reserve(g.node_count());
    for_each_node(g, [&](std::span<const double> x) {
        const EMFields f = s(SpaceTimePoint::at(x[0], {x[1], x[2], x[3]}, c));
        std::vector<double> row{x[0], x[1], x[2], x[3]};
        for (const Vec3* v : {&f.E, &f.B, &f.D, &f.H}) row.insert(row.end(), v->begin(), v->end());
        t.rows.push_back(std::move(row));
    });
    return t;
}

// Four-current read back from a t,x,y,z,crho,jx,jy,jz table.
inline FourCurrentField sampled_current(const CsvTable& t, double c = 1.0)
{
    auto field = std::make_shared<SampledField>(t, spacetime_columns());
    const std::array<std::size_t, 4> idx{field->value_index("crho"), field->value_index("jx"),
                                         field->value_index("jy"), field->value_index("jz")};
    return {[field, idx, c](const SpaceTimePoint& X) {
                const std::array<double, 4> x{X.time(c), X.x[0], X.x[1], X.x[2]};
                const auto v = (*field)(x);
                return Vec4{v[idx[0]], v[idx[1]], v[idx[2]], v[idx[3]]};
            },
            FourCurrentField::Kind::grid_sampled};
}

// Field state read back from an em_columns() table; missing D, H default to E, B.
inline EMFieldState sampled_em(const CsvTable& t, double c = 1.0)
{
    auto field = std::make_shared<SampledField>(t, spacetime_columns());
    auto pick = [&](const std::string& name, const std::string& fallback) {
        return t.has(name) ? field->value_index(name) : field->value_index(fallback);
    };
    std::array<std::size_t, 12> idx{};
    const char* axes = "xyz";
    for (std::size_t a = 0; a < 3; ++a) {
        const std::string s(1, axes[a]);
        idx[a] = field->value_index("E" + s);
        idx[3 + a] = field->value_index("B" + s);
        idx[6 + a] = pick("D" + s, "E" + s);
        idx[9 + a] = pick("H" + s, "B" + s);
    }
    return {[field, idx, c](const SpaceTimePoint& X) {
        const std::array<double, 4> x{X.time(c), X.x[0], X.x[1], X.x[2]};
        const auto v = (*field)(x);
        EMFields f;
        for (std::size_t a = 0; a < 3; ++a) {
            f.E[a] = v[idx[a]];
            f.B[a] = v[idx[3 + a]];
            f.D[a] = v[idx[6 + a]];
            f.H[a] = v[idx[9 + a]];
        }
        return f;
    }};
}

} // namespace covforge::io
