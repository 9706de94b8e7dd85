// covforge <command> --config <path> [--out <dir>] [--grid-refine <k>]

#include "covforge/covforge.hpp"
#include "covforge/io.hpp"

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace covforge;
using namespace covforge::io;

namespace {

const std::vector<std::string> kCommands{"kinematics", "synthesize-current", "boltzmann", "medium", "graded-slab",
                                         "complete",   "plasma-slab",        "verify"};

struct Context {
    json cfg;
    fs::path config_dir;
    fs::path out;
    int refine = 0;

    std::string path(const std::string& p) const
    {
        const fs::path q(p);
        return (q.is_absolute() ? q : config_dir / q).string();
    }
    std::string output(const std::string& name) const { return (out / name).string(); }
};

struct Tolerance {
    double order = 1.9;
    double floor = 1e-10;
};

Tolerance tolerance_from(const json& cfg)
{
    Tolerance t;
    if (!cfg.contains("tolerance")) return t;
    const json& j = cfg.at("tolerance");
    t.order = number_or(j, "order", t.order, "tolerance");
    t.floor = number_or(j, "floor", t.floor, "tolerance");
    if (!(t.order > 0.0)) throw ConfigError("tolerance.order", "must be positive");
    if (!(t.floor > 0.0)) throw ConfigError("tolerance.floor", "must be positive");
    return t;
}

double tolerance_value(const json& cfg, const std::string& key, double fallback)
{
    if (!cfg.contains("tolerance")) return fallback;
    const double v = number_or(cfg.at("tolerance"), key, fallback, "tolerance");
    if (!(v > 0.0)) throw ConfigError("tolerance." + key, "must be positive");
    return v;
}

double speed_of_light(const json& cfg)
{
    const double c = number_or(cfg, "c", 1.0, "");
    if (!(c > 0.0)) throw ConfigError("c", "must be positive");
    return c;
}

// Grid counts of 0 or 2 are DomainTooSmall; active axes need max > min.
void check_grid(const GridSpec& g, const std::string& key)
{
    bool any = false;
    for (const auto& a : g.axes) {
        const std::string k = key + "." + a.name;
        if (a.count == 0 || a.count == 2)
            throw ConfigError(k + ".count", "has " + std::to_string(a.count) + " nodes; need >= 3 or 1 for a slice",
                              "DomainTooSmall");
        if (a.active()) {
            any = true;
            if (!(a.max > a.min)) throw ConfigError(k + ".max", "must exceed min");
        }
    }
    if (!any) throw ConfigError(key, "no axis has at least 3 nodes", "DomainTooSmall");
}

GridSpec grid_at(const Context& ctx, const std::string& key, const std::vector<std::string>& names)
{
    GridSpec g = grid_from_json(require(ctx.cfg, key, ""), names, key);
    check_grid(g, key);
    return refine(g, ctx.refine);
}

// Corners and center of the (t, x, y, z) box.
std::vector<SpaceTimePoint> probe_points(const GridSpec& g, double c)
{
    std::vector<SpaceTimePoint> pts;
    for (int corner = 0; corner < 16; ++corner) {
        std::array<double, 4> x{};
        for (int a = 0; a < 4; ++a) x[a] = (corner >> a) & 1 ? g.axes[a].max : g.axes[a].min;
        pts.push_back(SpaceTimePoint::at(x[0], {x[1], x[2], x[3]}, c));
    }
    std::array<double, 4> m{};
    for (int a = 0; a < 4; ++a) m[a] = 0.5 * (g.axes[a].min + g.axes[a].max);
    pts.push_back(SpaceTimePoint::at(m[0], {m[1], m[2], m[3]}, c));
    return pts;
}

void preflight_transform(const GeneralTransform& t, const GridSpec& g, double c)
{
    KinematicsOptions opts;
    opts.c = c;
    for (const auto& X : probe_points(g, c)) {
        try {
            point_jacobian(t, X, opts);
        } catch (const SingularJacobian& e) {
            std::ostringstream os;
            os.precision(17);
            os << e.what() << " at (t, x, y, z) = (" << X.time(c) << ", " << X.x[0] << ", " << X.x[1] << ", "
               << X.x[2] << ")";
            throw ConfigError("transform", os.str(), "SingularJacobian");
        }
    }
}

// ---- kinematics

struct KinematicsRun {
    GeneralTransform transform;
    GridSpec grid;
    double c = 1.0;
    double tol = 1e-10;
};

KinematicsRun parse_kinematics(const Context& ctx)
{
    KinematicsRun r;
    r.c = speed_of_light(ctx.cfg);
    r.transform = transform_from_json(require(ctx.cfg, "transform", ""), "transform");
    r.grid = grid_at(ctx, "grid", spacetime_columns());
    r.tol = tolerance_value(ctx.cfg, "expansion", 1e-10);
    preflight_transform(r.transform, r.grid, r.c);
    return r;
}

int run_kinematics(const Context& ctx)
{
    const KinematicsRun r = parse_kinematics(ctx);
    KinematicsOptions opts;
    opts.c = r.c;
    CsvTable t{{"t", "x", "y", "z", "sqrt_minus_g", "u_dot_x", "u_dot_y", "u_dot_z"}, {}};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) t.header.push_back("lambda_" + std::to_string(i) + std::to_string(j));
    const auto* spec = std::get_if<DisplacementSpec>(&r.transform);
    double det_err = 0.0, cof_err = 0.0;
    for_each_node(r.grid, [&](std::span<const double> x) {
        const auto X = SpaceTimePoint::at(x[0], {x[1], x[2], x[3]}, r.c);
        const PointJacobian p = point_jacobian(r.transform, X, opts);
        std::vector<double> row{x[0], x[1], x[2], x[3], p.sqrt_minus_g, p.u_dot[0], p.u_dot[1], p.u_dot[2]};
        for (const auto& line : p.lambda) row.insert(row.end(), line.begin(), line.end());
        t.rows.push_back(std::move(row));
        if (spec) {
            const double d = det(p.s);
            det_err = std::max(det_err, std::abs(det_via_expansion(*spec, X, opts).sqrt_minus_g - d) / std::abs(d));
            const Mat3 cof = d * p.s_inv;
            cof_err = std::max(cof_err, max_abs(cofactor_via_expansion(*spec, X, opts) - cof) / std::max(max_abs(cof), 1.0));
        }
    });
    write_csv(ctx.output("kinematics.csv"), t);
    const bool ok = det_err <= r.tol && cof_err <= r.tol;
    write_json(ctx.output("summary.json"), {{"command", "kinematics"},
                                            {"nodes", t.rows.size()},
                                            {"det_expansion_error", det_err},
                                            {"cofactor_expansion_error", cof_err},
                                            {"tolerance", r.tol},
                                            {"passed", ok}});
    return ok ? 0 : 1;
}

// ---- synthesize-current

struct CurrentRun {
    FourCurrentField seed;
    bool sampled = false;
    GeneralTransform transform;
    GridSpec grid;
    double c = 1.0;
    Tolerance tol;
};

FourCurrentField analytic_seed(const json& s, double c)
{
    const std::string kind = string_or(s, "kind", "", "seed");
    const double rho0 = number_or(s, "rho0", 1.0, "seed");
    auto v3 = [&](const char* key, Vec3 fallback) {
        return s.contains(key) ? vec3(s.at(key), std::string("seed.") + key) : fallback;
    };
    if (kind == "plane_wave")
        return seeds::plane_wave_current(rho0, v3("k", {1.0, 0.5, -0.7}), number_or(s, "omega", 1.3, "seed"), c);
    if (kind == "translating_blob")
        return seeds::translating_blob(rho0, v3("r0", {0.1, -0.2, 0.0}), v3("v", {0.3, 0.2, -0.1}),
                                       number_or(s, "width", 0.8, "seed"), c);
    if (kind == "static_charge_curl_current")
        return seeds::static_charge_curl_current(rho0, number_or(s, "amplitude", 0.5, "seed"),
                                                 number_or(s, "omega", 1.1, "seed"), c);
    if (kind == "rotating_distribution")
        return seeds::rotating_distribution(rho0, v3("center", {0.4, 0.0, 0.1}), number_or(s, "width", 0.7, "seed"),
                                            number_or(s, "omega", 0.9, "seed"), c);
    if (kind == "oscillating_polarization")
        return seeds::oscillating_polarization(number_or(s, "p0", 0.5, "seed"), number_or(s, "width", 0.9, "seed"),
                                               number_or(s, "omega", 1.7, "seed"), c);
    throw ConfigError("seed.kind", "unknown seed '" + kind + "'");
}

CurrentRun parse_current(const Context& ctx)
{
    CurrentRun r;
    r.c = speed_of_light(ctx.cfg);
    r.tol = tolerance_from(ctx.cfg);
    r.transform = transform_from_json(require(ctx.cfg, "transform", ""), "transform");
    const json& s = require(ctx.cfg, "seed", "");
    std::optional<GridSpec> csv_grid;
    if (s.contains("csv")) {
        if (!s.at("csv").is_string()) throw ConfigError("seed.csv", "expected a path");
        try {
            const CsvTable t = read_csv(ctx.path(s.at("csv").get<std::string>()));
            r.seed = sampled_current(t, r.c);
            csv_grid = SampledField(t, spacetime_columns()).grid(spacetime_columns());
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            throw ConfigError("seed.csv", e.what());
        }
        r.sampled = true;
    } else {
        r.seed = analytic_seed(s, r.c);
    }
    if (ctx.cfg.contains("grid"))
        r.grid = grid_at(ctx, "grid", spacetime_columns());
    else if (csv_grid)
        r.grid = refine(*csv_grid, ctx.refine);
    else
        throw ConfigError("grid", "missing required key");
    preflight_transform(r.transform, r.grid, r.c);
    return r;
}

int run_current(const Context& ctx)
{
    const CurrentRun r = parse_current(ctx);
    KinematicsOptions opts;
    opts.c = r.c;
    const FourCurrentField out = is_identity(r.transform) ? r.seed : transform_current(r.seed, r.transform, opts);
    write_csv(ctx.output("current.csv"), sample_current(out, r.grid, r.c));
    // grid-sampled input has no continuum limit to converge to
    const ResidualOptions ropts{!r.sampled};
    const ResidualReport rep = continuity_residual(out, r.grid, r.c, ropts);
    const bool ok = r.sampled || rep.converged(r.tol.order, r.tol.floor);
    json j = to_json(rep);
    j["command"] = "synthesize-current";
    j["gated"] = !r.sampled;
    j["passed"] = ok;
    write_json(ctx.output("residual.json"), j);
    return ok ? 0 : 1;
}

// ---- boltzmann

struct BoltzmannRun {
    DistributionFn seed;
    ForceField force;
    DisplacementSpec u;
    GridSpec grid;
    double c = 1.0;
    Tolerance tol;
    double moment_tol = 1e-8;
};

BoltzmannRun parse_boltzmann(const Context& ctx)
{
    BoltzmannRun r;
    r.c = speed_of_light(ctx.cfg);
    r.tol = tolerance_from(ctx.cfg);
    r.moment_tol = tolerance_value(ctx.cfg, "moment", 1e-8);
    const json& s = require(ctx.cfg, "seed", "");
    const double n = number_or(s, "density", 1.0, "seed");
    const double T = number_or(s, "temperature", 1.0, "seed");
    const double m = number_or(s, "mass", 1.0, "seed");
    const double q = number_or(s, "charge", 1.0, "seed");
    const long long nodes = integer_or(s, "nodes", 32, "seed");
    if (!(T > 0.0)) throw ConfigError("seed.temperature", "must be positive");
    if (!(m > 0.0)) throw ConfigError("seed.mass", "must be positive");
    if (nodes < 2) throw ConfigError("seed.nodes", "must be at least 2");
    const double amp = number_or(s, "amplitude", 0.0, "seed");
    const Vec3 k = s.contains("k") ? vec3(s.at("k"), "seed.k") : Vec3{1.0, 0.0, 0.0};
    r.seed = amp != 0.0 ? perturbed_maxwellian(n, T, m, q, amp, k, static_cast<std::size_t>(nodes))
                        : maxwellian(n, T, m, q, {}, static_cast<std::size_t>(nodes));
    std::vector<UniformForceTerm> terms;
    if (ctx.cfg.contains("force")) {
        const json& f = ctx.cfg.at("force");
        if (!f.is_array()) throw ConfigError("force", "expected an array of uniform force terms");
        for (std::size_t i = 0; i < f.size(); ++i) {
            const std::string p = join_key("force", i);
            UniformForceTerm term;
            term.component = component_from_json(f[i], p);
            term.amplitude = number(require(f[i], "amplitude", p), join_key(p, "amplitude"));
            const std::string kind = string_or(f[i], "kind", "constant", p);
            if (kind == "constant")
                term.kind = UniformForceTerm::Kind::constant;
            else if (kind == "cos" || kind == "cosine")
                term.kind = UniformForceTerm::Kind::cosine;
            else if (kind == "sin" || kind == "sine")
                term.kind = UniformForceTerm::Kind::sine;
            else
                throw ConfigError(join_key(p, "kind"), "expected constant, cos or sin");
            term.omega = number_or(f[i], "omega", 0.0, p);
            term.phase = number_or(f[i], "phase", 0.0, p);
            if (term.kind != UniformForceTerm::Kind::constant && !(term.omega != 0.0))
                throw ConfigError(join_key(p, "omega"), "must be non-zero for a harmonic force");
            terms.push_back(term);
        }
    }
    r.force = ForceField::uniform(terms);
    r.u = *uniform_force_displacement(r.force, m);
    r.grid = grid_at(ctx, "grid", {"t", "x", "y", "z", "px", "py", "pz"});
    return r;
}

int run_boltzmann(const Context& ctx)
{
    const BoltzmannRun r = parse_boltzmann(ctx);
    DistributionTransformOptions dopts;
    dopts.kinematics.c = r.c;
    const DistributionFn f = transform_distribution(r.seed, r.u, dopts);
    const ResidualReport rep = boltzmann_residual_nonrel(f, r.force, r.grid);

    // (x, px) snapshot at the first time and the grid's y, z, py, pz minima
    const auto& ax = r.grid.axes;
    CsvTable snap{{"t", "x", "px", "f"}, {}};
    for (std::size_t i = 0; i < ax[1].count; ++i)
        for (std::size_t k = 0; k < ax[4].count; ++k) {
            const double x = ax[1].coord(i), px = ax[4].coord(k);
            snap.rows.push_back({ax[0].min, x, px, f({x, ax[2].min, ax[3].min}, {px, ax[5].min, ax[6].min}, ax[0].min)});
        }
    write_csv(ctx.output("distribution.csv"), snap);

    // moments of f against the transformed seed moment
    const MomentOptions mopts{r.c};
    KinematicsOptions kopts;
    kopts.c = r.c;
    const FourCurrentField moved = transform_current(current_field(r.seed, mopts), GeneralTransform{r.u}, kopts);
    json table = json::array();
    double worst = 0.0;
    for (std::size_t it = 0; it < ax[0].count; it += std::max<std::size_t>(1, ax[0].count / 4))
        for (std::size_t ix = 0; ix < ax[1].count; ix += std::max<std::size_t>(1, ax[1].count / 4)) {
            const auto X = SpaceTimePoint::at(ax[0].coord(it), {ax[1].coord(ix), ax[2].min, ax[3].min}, r.c);
            const Vec4 direct = current_moment(f, X, mopts), expected = moved(X);
            const double rel = max_abs(direct - expected) / std::max(max_abs(expected), 1e-300);
            worst = std::max(worst, rel);
            table.push_back({{"t", X.time(r.c)},
                             {"x", X.x[0]},
                             {"crho", direct[0]},
                             {"jx", direct[1]},
                             {"jy", direct[2]},
                             {"jz", direct[3]},
                             {"relative_difference", rel}});
        }
    write_json(ctx.output("moments.json"), {{"moments", table}, {"max_relative_difference", worst}});

    const bool ok = rep.converged(r.tol.order, r.tol.floor) && worst <= r.moment_tol;
    json j = to_json(rep);
    j["command"] = "boltzmann";
    j["displacement"] = to_json(r.u);
    j["moment_consistency"] = worst;
    j["passed"] = ok;
    write_json(ctx.output("residual.json"), j);
    return ok ? 0 : 1;
}

// ---- medium

struct MediumRun {
    Mat3 eps = identity<double, 3>();
    Mat3 mu = identity<double, 3>();
    GeneralTransform transform;
    GridSpec grid;
};

MediumRun parse_medium(const Context& ctx)
{
    MediumRun r;
    if (ctx.cfg.contains("material")) {
        const json& m = ctx.cfg.at("material");
        if (m.contains("eps")) r.eps = mat3(m.at("eps"), "material.eps");
        if (m.contains("mu")) r.mu = mat3(m.at("mu"), "material.mu");
    }
    try {
        check_material(MaterialTensors::uniform(r.eps, r.mu), {Vec3{}});
    } catch (const std::invalid_argument& e) {
        throw ConfigError("material", e.what());
    }
    r.transform = transform_from_json(require(ctx.cfg, "transform", ""), "transform");
    if (!detail::time_independent(r.transform))
        throw ConfigError("transform", "a medium needs a time-independent map");
    r.grid = grid_at(ctx, "grid", {"x", "y", "z"});
    GridSpec st{{{"t", 0.0, 0.0, 1}, r.grid.axes[0], r.grid.axes[1], r.grid.axes[2]}};
    preflight_transform(r.transform, st, 1.0);
    return r;
}

int run_medium(const Context& ctx)
{
    const MediumRun r = parse_medium(ctx);
    const MaterialTensors mat = transform_material_local(MaterialTensors::uniform(r.eps, r.mu), r.transform);
    CsvTable t{{"x", "y", "z"}, {}};
    const char* comps[] = {"xx", "xy", "xz", "yy", "yz", "zz"};
    const int ij[6][2] = {{0, 0}, {0, 1}, {0, 2}, {1, 1}, {1, 2}, {2, 2}};
    for (const char* w : {"eps_", "mu_"})
        for (const char* c : comps) t.header.push_back(std::string(w) + c);
    std::vector<Vec3> pts;
    for_each_node(r.grid, [&](std::span<const double> x) {
        const Vec3 p{x[0], x[1], x[2]};
        pts.push_back(p);
        const Mat3 e = mat.eps(p), m = mat.mu(p);
        std::vector<double> row{x[0], x[1], x[2]};
        for (const auto& k : ij) row.push_back(e[k[0]][k[1]]);
        for (const auto& k : ij) row.push_back(m[k[0]][k[1]]);
        t.rows.push_back(std::move(row));
    });
    write_csv(ctx.output("medium.csv"), t);
    bool ok = true;
    std::string why;
    try {
        check_material(mat, pts);
    } catch (const std::invalid_argument& e) {
        ok = false;
        why = e.what();
    }
    json j{{"command", "medium"}, {"nodes", pts.size()}, {"symmetric_positive_definite", ok}, {"passed", ok}};
    if (!ok) j["failure"] = why;
    write_json(ctx.output("summary.json"), j);
    return ok ? 0 : 1;
}

// ---- graded-slab

struct SlabRun {
    GradedSlabSpec slab;
    Axis z;
    PlaneWave wave;
    GridSpec grid;
    double c = 1.0;
    Tolerance tol;
};

SlabRun parse_graded_slab(const Context& ctx)
{
    SlabRun r;
    r.c = speed_of_light(ctx.cfg);
    r.tol = tolerance_from(ctx.cfg);
    r.slab.f = scalar_function_from_json(require(ctx.cfg, "profile", ""), "profile");
    r.z = axis_from_json(require(ctx.cfg, "z", ""), "z", "z");
    check_grid(GridSpec{{r.z}}, "z");
    r.z = refine(GridSpec{{r.z}}, ctx.refine).axes[0];
    r.slab.z_min = r.z.min;
    r.slab.z_max = r.z.max;
    try {
        r.slab.validate(std::max<std::size_t>(1001, r.z.count));
    } catch (const NonMonotoneMap& e) {
        throw ConfigError("profile", e.what(), "NonMonotoneMap");
    }
    r.wave = ctx.cfg.contains("wave") ? plane_wave_from_json(ctx.cfg.at("wave"), r.c, "wave")
                                      : PlaneWave::vacuum({1.0, 0.0, 0.0}, {0.0, 0.0, 1.0}, r.c);
    if (ctx.cfg.contains("grid")) {
        r.grid = grid_at(ctx, "grid", spacetime_columns());
    } else {
        // 1-D extrusion: t and x active with the z count, y a slice
        const std::size_t n = r.z.count;
        r.grid = spacetime_grid({"t", 0.0, 1.0, n}, {"x", -0.5, 0.5, n}, {"y", 0.0, 0.0, 1}, r.z);
    }
    return r;
}

int run_graded_slab(const Context& ctx)
{
    const SlabRun r = parse_graded_slab(ctx);
    KinematicsOptions opts;
    opts.c = r.c;
    const GradedSlabSolution sol = graded_slab_solution(r.slab, vacuum_field({r.wave}, r.c), opts);
    CsvTable medium{{"z", "eps_xx", "eps_yy", "eps_zz", "mu_xx", "mu_yy", "mu_zz"}, {}};
    for (std::size_t i = 0; i < r.z.count; ++i) {
        const double z = r.z.coord(i);
        const Mat3 e = sol.material.eps({0.0, 0.0, z}), m = sol.material.mu({0.0, 0.0, z});
        medium.rows.push_back({z, e[0][0], e[1][1], e[2][2], m[0][0], m[1][1], m[2][2]});
    }
    write_csv(ctx.output("medium.csv"), medium);
    GridSpec snapshot = r.grid;
    snapshot.axes[0].count = 1;
    snapshot.axes[0].max = snapshot.axes[0].min;
    snapshot.axes[1] = {"x", r.grid.axes[1].min, r.grid.axes[1].min, 1};
    write_csv(ctx.output("fields.csv"), sample_em(sol.fields, snapshot, r.c));
    const ResidualReport rep = maxwell_residual(sol.fields, sol.material, std::nullopt, r.grid, r.c);
    const bool ok = rep.converged(r.tol.order, r.tol.floor);
    json j = to_json(rep);
    j["command"] = "graded-slab";
    j["passed"] = ok;
    write_json(ctx.output("residual.json"), j);
    return ok ? 0 : 1;
}

// ---- complete

const char* kEb[] = {"Ex", "Ey", "Ez", "Bx", "By", "Bz"};
const char* kJ[] = {"crho", "jx", "jy", "jz"};

struct CompleteRun {
    HalfSolution half;
    CompletionOptions opts;
    double bianchi_tol = 1e-8;
    double sourced_tol = 1e-8;
};

CompleteRun parse_complete(const Context& ctx)
{
    CompleteRun r;
    r.half.c = speed_of_light(ctx.cfg);
    r.half.k0 = number_or(ctx.cfg, "k0", 0.0, "");
    if (r.half.k0 < 0.0) throw ConfigError("k0", "must be non-negative");
    const long long pad = integer_or(ctx.cfg, "pad", 4, "");
    if (pad < 1) throw ConfigError("pad", "must be at least 1");
    r.opts.pad = static_cast<std::size_t>(pad);
    r.bianchi_tol = tolerance_value(ctx.cfg, "bianchi", 1e-8);
    r.sourced_tol = tolerance_value(ctx.cfg, "sourced", 1e-8);
    const json& in = require(ctx.cfg, "input", "");
    std::optional<Axis> csv_domain;
    if (in.contains("csv")) {
        if (!in.at("csv").is_string()) throw ConfigError("input.csv", "expected a path");
        std::shared_ptr<SampledField> f;
        CsvTable t;
        try {
            t = read_csv(ctx.path(in.at("csv").get<std::string>()));
            f = std::make_shared<SampledField>(t, std::vector<std::string>{"x"});
        } catch (const std::exception& e) {
            throw ConfigError("input.csv", e.what());
        }
        csv_domain = f->grid({"x"}).axes[0];
        auto slot = [&](const std::string& name) -> std::optional<std::size_t> {
            if (!t.has(name)) return std::nullopt;
            return f->value_index(name);
        };
        std::array<std::optional<std::size_t>, 12> eb{};
        std::array<std::optional<std::size_t>, 8> jj{};
        for (std::size_t a = 0; a < 6; ++a) {
            eb[2 * a] = slot(kEb[a]);
            eb[2 * a + 1] = slot(std::string(kEb[a]) + "_im");
        }
        for (std::size_t a = 0; a < 4; ++a) {
            jj[2 * a] = slot(kJ[a]);
            jj[2 * a + 1] = slot(std::string(kJ[a]) + "_im");
        }
        const double lo = csv_domain->min, hi = csv_domain->max, tol = 1e-12 * (hi - lo);
        // zero outside the sampled range
        auto values = [f, lo, hi, tol](double x) {
            if (x < lo - tol || x > hi + tol) return std::vector<double>(f->value_names().size(), 0.0);
            const std::array<double, 1> p{x};
            return (*f)(p);
        };
        auto get = [](const std::vector<double>& v, const std::optional<std::size_t>& i) { return i ? v[*i] : 0.0; };
        r.half.field = {[values, eb, get](double x) {
            const auto v = values(x);
            CVec3 E, B;
            for (std::size_t a = 0; a < 3; ++a) {
                E[a] = Complex(get(v, eb[2 * a]), get(v, eb[2 * a + 1]));
                B[a] = Complex(get(v, eb[6 + 2 * a]), get(v, eb[6 + 2 * a + 1]));
            }
            return tensor_from_eb(E, B);
        }};
        r.half.current = {[values, jj, get](double x) {
            const auto v = values(x);
            CVec4 j;
            for (std::size_t a = 0; a < 4; ++a) j[a] = Complex(get(v, jj[2 * a]), get(v, jj[2 * a + 1]));
            return j;
        }};
    } else {
        const std::string kind = string_or(in, "kind", "", "input");
        if (kind != "static_bx_sin") throw ConfigError("input.kind", "expected 'static_bx_sin' or a csv input");
        const double amp = number_or(in, "amplitude", 1.0, "input");
        const double rate = number_or(in, "rate", 1.0, "input");
        r.half.field = {[amp, rate](double x) {
            return tensor_from_eb({}, CVec3{Complex(amp * std::sin(rate * x)), Complex{}, Complex{}});
        }};
        r.half.current = {[](double) { return CVec4{}; }};
    }
    if (ctx.cfg.contains("domain")) {
        r.half.domain = axis_from_json(ctx.cfg.at("domain"), "x", "domain");
    } else if (csv_domain) {
        r.half.domain = *csv_domain;
    } else {
        throw ConfigError("domain", "missing required key");
    }
    check_grid(GridSpec{{r.half.domain}}, "domain");
    r.half.domain = refine(GridSpec{{r.half.domain}}, ctx.refine).axes[0];
    if (r.half.k0 * r.half.domain.spacing() >= 1.0)
        throw ConfigError("k0", "k0 h >= 1 puts the lattice operator at resonance", "ResonantFrequency");
    return r;
}

CsvTable harmonic_table(const HarmonicTensorField& F, const HarmonicCurrent& j, const Axis& dom)
{
    CsvTable t{{"x"}, {}};
    for (const char* n : kEb) {
        t.header.push_back(n);
        t.header.push_back(std::string(n) + "_im");
    }
    for (const char* n : kJ) {
        t.header.push_back(n);
        t.header.push_back(std::string(n) + "_im");
    }
    for (std::size_t i = 0; i < dom.count; ++i) {
        const double x = dom.coord(i);
        const HarmonicEB eb = eb_from_tensor(F(x));
        const CVec4 cur = j(x);
        std::vector<double> row{x};
        for (const CVec3* v : {&eb.E, &eb.B})
            for (const auto& c : *v) {
                row.push_back(c.real());
                row.push_back(c.imag());
            }
        for (const auto& c : cur) {
            row.push_back(c.real());
            row.push_back(c.imag());
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

int run_complete(const Context& ctx)
{
    const CompleteRun r = parse_complete(ctx);
    const CompletedSolution done = complete(r.half, r.opts);
    const CompletedSolution again = complete(as_half_solution(done, r.half), r.opts);
    double idem = 0.0;
    for (std::size_t i = 0; i < r.half.domain.count; ++i) {
        const double x = r.half.domain.coord(i);
        const CMat4 a = done.field(x), b = again.field(x);
        for (std::size_t p = 0; p < 4; ++p)
            for (std::size_t q = 0; q < 4; ++q) idem = std::max(idem, std::abs(a[p][q] - b[p][q]));
    }
    write_csv(ctx.output("completed.csv"), harmonic_table(done.field, r.half.current, r.half.domain));
    const auto& rep = done.report;
    const bool ok = rep.output_bianchi <= r.bianchi_tol
                    && std::abs(rep.output_sourced - rep.input_sourced) <= r.sourced_tol;
    write_json(ctx.output("report.json"), {{"command", "complete"},
                                           {"k0", r.half.k0},
                                           {"domain", to_json(r.half.domain)},
                                           {"source_max", rep.source_max},
                                           {"source_divergence", rep.source_divergence},
                                           {"gauge_residual", rep.gauge_residual},
                                           {"input_sourced_residual", rep.input_sourced},
                                           {"output_sourced_residual", rep.output_sourced},
                                           {"input_bianchi_residual", rep.input_bianchi},
                                           {"output_bianchi_residual", rep.output_bianchi},
                                           {"idempotence", idem},
                                           {"passed", ok}});
    return ok ? 0 : 1;
}

// ---- plasma-slab

struct PlasmaRun {
    SlabConfig cfg;
    std::optional<GridSpec> grid;
    double omega_tol = 1e-6;
    double energy_tol = 1e-8;
    Tolerance tol;
};

PlasmaRun parse_plasma(const Context& ctx)
{
    PlasmaRun r;
    r.cfg = slab_config_from_json(ctx.cfg, "");
    r.tol = tolerance_from(ctx.cfg);
    r.omega_tol = tolerance_value(ctx.cfg, "omega", 1e-6);
    r.energy_tol = tolerance_value(ctx.cfg, "energy", 1e-8);
    if (ctx.cfg.contains("grid")) {
        GridSpec g = grid_from_json(ctx.cfg.at("grid"), {"t", "x"}, "grid");
        check_grid(g, "grid");
        g = refine(g, ctx.refine);
        r.grid = spacetime_grid(g.axes[0], g.axes[1], {"y", 0.0, 0.0, 1}, {"z", 0.0, 0.0, 1});
    }
    if (!(r.cfg.temperature > 0.0)) throw ConfigError("temperature", "must be positive", "NormalizationFailure");
    if (std::abs(r.cfg.d0) > 0.5 * r.cfg.half_width)
        throw ConfigError("d0", "|d0| exceeds a/2", "AmplitudeTooLarge");
    return r;
}

int run_plasma(const Context& ctx)
{
    const PlasmaRun r = parse_plasma(ctx);
    const EquilibriumSetup eq = equilibrium_setup(r.cfg);
    const SlabTrajectory tr = slab_dynamics(r.cfg);
    CsvTable traj{{"t", "d", "d_dot"}, {}};
    for (std::size_t i = 0; i < tr.t.size(); ++i) traj.rows.push_back({tr.t[i], tr.d[i], tr.d_dot[i]});
    write_csv(ctx.output("trajectory.csv"), traj);

    bool ok = true;
    json s{{"command", "plasma-slab"},
           {"omega_p", tr.omega_p},
           {"period", tr.period},
           {"step", tr.step},
           {"neutrality", eq.neutrality},
           {"offset", tr.offset},
           {"fit_error", tr.fit_error}};
    if (tr.measured_omega) {
        const double ratio = *tr.measured_omega / tr.omega_p;
        s["measured_omega"] = *tr.measured_omega;
        s["measured_omega/omega_p"] = ratio;
        ok = ok && std::abs(ratio - 1.0) <= r.omega_tol;
    } else {
        s["measured_omega"] = nullptr;
    }
    if (tr.energy_drift) {
        s["energy_drift"] = *tr.energy_drift;
        ok = ok && *tr.energy_drift <= r.energy_tol;
    } else {
        s["energy_drift"] = nullptr;
    }
    if (tr.fit) {
        s["displacement"] = to_json(*tr.fit);
        const double a = r.cfg.half_width;
        const GridSpec grid = r.grid ? *r.grid
                                     : refine(spacetime_grid({"t", 0.0, tr.period, 33}, {"x", -2.0 * a, 2.0 * a, 33},
                                                             {"y", 0.0, 0.0, 1}, {"z", 0.0, 0.0, 1}),
                                              ctx.refine);
        AssemblyOptions aopts;
        aopts.lattice = grid.axes[1];
        const AssembledSolution sol = assemble_solution(eq, *tr.fit, aopts);
        write_csv(ctx.output("fields.csv"), sample_em(sol.field, grid, r.cfg.c));
        write_csv(ctx.output("current.csv"), sample_current(sol.total_current, grid, r.cfg.c));
        const ResidualReport rep = assembled_residual(sol, eq, *tr.fit, grid);
        json rj = to_json(rep);
        rj["completion_applied"] = sol.corrected;
        s["residual"] = rj;
        ok = ok && rep.converged(r.tol.order, r.tol.floor);
    }
    s["passed"] = ok;
    write_json(ctx.output("summary.json"), s);
    return ok ? 0 : 1;
}

// ---- verify

int run_verify(const Context& ctx)
{
    const std::string kind = string_or(ctx.cfg, "kind", "", "");
    const double c = speed_of_light(ctx.cfg);
    const double tol = tolerance_value(ctx.cfg, "max_norm", 1e-6);
    if (!ctx.cfg.contains("csv") || !ctx.cfg.at("csv").is_string()) throw ConfigError("csv", "expected a path");
    CsvTable t;
    try {
        t = read_csv(ctx.path(ctx.cfg.at("csv").get<std::string>()));
    } catch (const std::exception& e) {
        throw ConfigError("csv", e.what());
    }
    std::optional<GridSpec> grid;
    try {
        grid = SampledField(t, spacetime_columns()).grid(spacetime_columns());
        check_grid(*grid, "csv");
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError("csv", e.what());
    }
    const ResidualOptions single{false};
    ResidualReport rep;
    if (kind == "continuity") {
        rep = continuity_residual(sampled_current(t, c), *grid, c, single);
    } else if (kind == "maxwell") {
        std::optional<FourCurrentField> src;
        if (ctx.cfg.contains("current_csv")) {
            try {
                src = sampled_current(read_csv(ctx.path(ctx.cfg.at("current_csv").get<std::string>())), c);
            } catch (const std::exception& e) {
                throw ConfigError("current_csv", e.what());
            }
        }
        rep = maxwell_residual(sampled_em(t, c), src, *grid, c, single);
    } else {
        throw ConfigError("kind", "expected 'continuity' or 'maxwell'");
    }
    const bool ok = rep.max_norm <= tol;
    json j = to_json(rep);
    j["command"] = "verify";
    j["tolerance"] = tol;
    j["passed"] = ok;
    write_json(ctx.output("residual.json"), j);
    return ok ? 0 : 1;
}

int dispatch(const std::string& cmd, const Context& ctx)
{
    if (cmd == "kinematics") return run_kinematics(ctx);
    if (cmd == "synthesize-current") return run_current(ctx);
    if (cmd == "boltzmann") return run_boltzmann(ctx);
    if (cmd == "medium") return run_medium(ctx);
    if (cmd == "graded-slab") return run_graded_slab(ctx);
    if (cmd == "complete") return run_complete(ctx);
    if (cmd == "plasma-slab") return run_plasma(ctx);
    return run_verify(ctx);
}

void parse_only(const std::string& cmd, const Context& ctx)
{
    if (cmd == "kinematics") parse_kinematics(ctx);
    else if (cmd == "synthesize-current") parse_current(ctx);
    else if (cmd == "boltzmann") parse_boltzmann(ctx);
    else if (cmd == "medium") parse_medium(ctx);
    else if (cmd == "graded-slab") parse_graded_slab(ctx);
    else if (cmd == "complete") parse_complete(ctx);
    else if (cmd == "plasma-slab") parse_plasma(ctx);
    else if (cmd == "verify") {
        if (!ctx.cfg.contains("csv")) throw ConfigError("csv", "missing required key");
        const std::string kind = string_or(ctx.cfg, "kind", "", "");
        if (kind != "continuity" && kind != "maxwell") throw ConfigError("kind", "expected 'continuity' or 'maxwell'");
    }
}

// Schema and admissibility pre-flight; never fails, diagnostics are the output.
json validate_config(const std::string& file, int refine_times)
{
    json diags = json::array();
    auto add = [&](const std::string& code, const std::string& key, const std::string& msg) {
        diags.push_back({{"code", code}, {"key", key}, {"message", msg}});
    };
    Context ctx;
    ctx.refine = refine_times;
    try {
        ctx.cfg = read_json(file);
    } catch (const ConfigError& e) {
        add(e.code(), e.key(), e.what());
        return diags;
    }
    ctx.config_dir = fs::path(file).parent_path();
    const std::string cmd = string_or(ctx.cfg, "command", "", "");
    if (std::find(kCommands.begin(), kCommands.end(), cmd) == kCommands.end()) {
        add("ConfigError", "command", "expected one of the tool's commands, got '" + cmd + "'");
        return diags;
    }
    try {
        parse_only(cmd, ctx);
    } catch (const ConfigError& e) {
        add(e.code(), e.key(), e.what());
    } catch (const Error& e) {
        add(e.code(), "", e.what());
    } catch (const json::exception& e) {
        add("ConfigError", "", e.what());
    } catch (const std::exception& e) {
        add("ConfigError", "", e.what());
    }
    return diags;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Coordinate-transformation synthesis and residual verification"};
    app.require_subcommand(1);
    std::string config, out = ".";
    int refine_times = 0;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config, "JSON configuration file")->required();
        sub->add_option("--out", out, "output directory");
        sub->add_option("--grid-refine", refine_times, "halve every grid spacing k times")->check(CLI::NonNegativeNumber);
    };
    for (const auto& c : kCommands) add_common(app.add_subcommand(c, "run " + c));
    add_common(app.add_subcommand("validate", "check a configuration without running it"));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    const std::string cmd = app.get_subcommands().front()->get_name();

    if (cmd == "validate") {
        const json diags = validate_config(config, refine_times);
        std::cout << diags.dump(2) << '\n';
        if (app.get_subcommands().front()->count("--out")) {
            fs::create_directories(out);
            write_json((fs::path(out) / "diagnostics.json").string(), diags);
        }
        return 0;
    }

    Context ctx;
    ctx.refine = refine_times;
    ctx.out = out;
    ctx.config_dir = fs::path(config).parent_path();
    try {
        ctx.cfg = read_json(config);
        if (ctx.cfg.contains("command") && ctx.cfg.at("command") != cmd)
            throw ConfigError("command", "config is for '" + ctx.cfg.at("command").dump() + "'");
        fs::create_directories(ctx.out);
        const int rc = dispatch(cmd, ctx);
        std::cout << cmd << ": " << (rc == 0 ? "passed" : "check failed") << '\n';
        return rc;
    } catch (const ConfigError& e) {
        std::cerr << "config error (" << e.code() << ") at '" << e.key() << "': " << e.what() << '\n';
        return 2;
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        std::cerr << "check failed: " << e.what() << '\n';
        write_json(ctx.output("error.json"), {{"command", cmd}, {"code", e.code()}, {"message", e.what()}, {"passed", false}});
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
