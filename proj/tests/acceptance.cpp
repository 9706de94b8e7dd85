// Acceptance run: one pass/fail line per criterion, non-zero exit if any fails.

#include "covforge/covforge.hpp"
#include "support.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

using namespace covforge;
using covforge::testing::from_eigen;
using covforge::testing::random_point;
using covforge::testing::random_spec;
using covforge::testing::to_eigen;

namespace {

constexpr double pi = std::numbers::pi;

struct Outcome {
    bool passed = false;
    std::string detail;
};

struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// ---- 1: determinant and cofactor expansions against Eigen

Outcome determinant_expansion()
{
    std::mt19937_64 rng(1001);
    double det_err = 0.0, cof_err = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const auto spec = random_spec(rng, 3, 0.2, 5);
        const auto X = SpaceTimePoint::at(std::uniform_real_distribution<double>(-1.0, 1.0)(rng), random_point(rng, 1.0));
        const auto jet = eval_displacement(spec, X);
        const auto S = to_eigen<3>(identity<double, 3>() - jet.grad);
        const double det_ref = S.determinant();
        const Mat3 cof_ref = from_eigen<3>(Eigen::Matrix3d(det_ref * S.inverse()));
        det_err = std::max(det_err, std::abs(det_via_expansion(jet).sqrt_minus_g - det_ref) / std::abs(det_ref));
        cof_err = std::max(cof_err, max_abs(cofactor_via_expansion(jet) - cof_ref) / max_abs(cof_ref));
    }
    return {det_err <= 1e-10 && cof_err <= 1e-10,
            fmt("1000 specs: max rel det error %.2e, max rel cofactor error %.2e (tol 1e-10)", det_err, cof_err)};
}

// ---- 2: continuity synthesis on 17^4 / 33^4

bool admissible(const DisplacementSpec& u, const GridSpec& g)
{
    for (int corner = 0; corner < 16; ++corner) {
        std::array<double, 4> x{};
        for (int a = 0; a < 4; ++a) x[a] = (corner >> a) & 1 ? g.axes[a].max : g.axes[a].min;
        const auto jet = eval_displacement(u, SpaceTimePoint::at(x[0], {x[1], x[2], x[3]}));
        if (det(identity<double, 3>() - jet.grad) < 0.5) return false;
    }
    return true;
}

Outcome continuity_synthesis()
{
    std::mt19937_64 rng(2002);
    const GridSpec grid = spacetime_grid({"t", 0.0, 0.5, 17}, {"x", -0.5, 0.5, 17}, {"y", -0.5, 0.5, 17},
                                         {"z", -0.5, 0.5, 17});
    const auto seeds_list = seeds::standard_currents();
    double worst_order = 1e300, worst_fine = 0.0;
    int cases = 0, converged = 0;
    for (int trial = 0; trial < 50; ++trial) {
        DisplacementSpec u;
        do u = random_spec(rng, 2, 0.1, 3);
        while (!admissible(u, grid));
        for (const auto& seed : seeds_list) {
            const ResidualReport rep = continuity_residual(transform_current(seed.field, u), grid);
            ++cases;
            if (rep.converged(1.9, 1e-10)) ++converged;
            if (rep.order_estimate) worst_order = std::min(worst_order, *rep.order_estimate);
            worst_fine = std::max(worst_fine, rep.max_norm);
        }
    }
    return {converged == cases, fmt("%d/%d cases converge; min order %.3f (need 1.9), max fine residual %.2e",
                                    converged, cases, worst_order, worst_fine)};
}

// ---- 3: graded-slab media on 65^3 / 129^3 extruded grids

Outcome transformation_optics()
{
    const std::vector<std::pair<const char*, ScalarFunction>> profiles{
        {"2z", ScalarFunction::linear(2.0)},
        {"e^z", ScalarFunction::exponential()},
        {"z+0.1sin z", ScalarFunction::linear(1.0).add({ScalarTerm::Kind::sin, 0.1, 0, 1.0})}};
    const EMFieldState seed = vacuum_field({PlaneWave::vacuum({1.0, 0.0, 0.0}, {0.0, 0.0, 3.0})});
    const GridSpec grid = spacetime_grid({"t", 0.0, 1.0, 65}, {"x", -0.5, 0.5, 65}, {"y", 0.0, 0.0, 1},
                                         {"z", 0.0, 1.0, 65});
    bool ok = true;
    std::string detail;
    for (const auto& [name, f] : profiles) {
        const auto sol = graded_slab_solution({f, 0.0, 1.0}, seed);
        const ResidualReport rep = maxwell_residual(sol.fields, sol.material, std::nullopt, grid);
        double worst = 1e300;
        for (const auto& e : rep.equations)
            if (e.order) worst = std::min(worst, *e.order);
        const bool good = rep.converged(1.9, 1e-10);
        ok = ok && good;
        detail += fmt("%s order %.3f (min per-equation %.3f); ", name, rep.order_estimate.value_or(-1.0), worst);
    }
    // exact diag(2, 2, 0.5) for f = 2z
    const auto twice = graded_slab_solution({ScalarFunction::linear(2.0), 0.0, 1.0}, seed);
    bool exact = true;
    for (std::size_t i = 0; i < 129; ++i) {
        const Vec3 r{0.0, 0.0, i / 128.0};
        const Mat3 expect{{{2.0, 0.0, 0.0}, {0.0, 2.0, 0.0}, {0.0, 0.0, 0.5}}};
        exact = exact && twice.material.eps(r) == expect && twice.material.mu(r) == expect;
    }
    ok = ok && exact;
    detail += exact ? "f=2z eps = mu = diag(2,2,0.5) exactly" : "f=2z medium NOT exactly diag(2,2,0.5)";
    return {ok, detail};
}

// ---- 4: Boltzmann transformation against characteristics

// Momentum and position offsets of a particle starting at rest under a uniform force, RK4.
std::pair<Vec3, Vec3> kick(const ForceField& F, double mass, double t)
{
    const int n = 4000;
    const double h = t / n;
    Vec3 p{}, r{};
    for (int i = 0; i < n; ++i) {
        const double s = i * h;
        const Vec3 f0 = F({}, s), fh = F({}, s + 0.5 * h), f1 = F({}, s + h);
        const Vec3 k1 = (1.0 / mass) * p;
        const Vec3 k2 = (1.0 / mass) * (p + (0.5 * h) * f0);
        const Vec3 k3 = (1.0 / mass) * (p + (0.5 * h) * fh);
        const Vec3 k4 = (1.0 / mass) * (p + h * fh);
        r = r + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        p = p + (h / 6.0) * (f0 + 4.0 * fh + f1);
    }
    return {p, r};
}

Outcome boltzmann_transformation()
{
    const double m = 1.2;
    const DistributionFn f0 = maxwellian(1.0, 0.4, m, -1.0, {0.1, 0.0, -0.05});
    const std::vector<std::pair<const char*, ForceField>> forces{
        {"constant", ForceField::uniform({{0, 0.5}, {2, -0.2}})},
        {"sinusoidal", ForceField::uniform({{0, 0.7, UniformForceTerm::Kind::cosine, 1.7, 0.3},
                                            {1, 0.4, UniformForceTerm::Kind::sine, 2.3, 0.0}})}};
    std::mt19937_64 rng(4004);
    std::uniform_real_distribution<double> box(-1.0, 1.0);
    double worst_point = 0.0, worst_order = 1e300, control_ratio = 1e300;
    bool ok = true;
    const GridSpec grid = phase_space_grid({"t", 0, 1, 17}, {"x", -1, 1, 17}, {"y", 0.2, 0.2, 1}, {"z", 0, 0, 1},
                                           {"px", -1, 1, 17}, {"py", -1, 1, 17}, {"pz", 0.1, 0.1, 1});
    for (const auto& [name, F] : forces) {
        const auto u = uniform_force_displacement(F, m);
        if (!u) return {false, fmt("%s force has no closed-form displacement", name)};
        const DistributionFn f = transform_distribution(f0, *u);
        for (int i = 0; i < 200; ++i) {
            const double t = 0.05 + 0.01 * i;
            const auto [dp, dr] = kick(F, m, t);
            const Vec3 r{1.5 * box(rng), 1.5 * box(rng), 1.5 * box(rng)}, p{box(rng), box(rng), box(rng)};
            const Vec3 p0 = p - dp;
            const Vec3 r0 = r - dr - (t / m) * p0;
            const double oracle = f0(r0, p0, 0.0);
            worst_point = std::max(worst_point, std::abs(f(r, p, t) - oracle) / std::max(1.0, oracle));
        }
        const ResidualReport good = boltzmann_residual_nonrel(f, F, grid);
        ok = ok && good.converged(1.9, 1e-10);
        worst_order = std::min(worst_order, good.order_estimate.value_or(0.0));
        const ResidualReport bad = boltzmann_residual_nonrel(f0, F, grid);
        const double ratio = bad.equations[0].fine->max_norm / bad.equations[0].coarse.max_norm;
        control_ratio = std::min(control_ratio, ratio);
        ok = ok && ratio >= 0.9;
    }
    ok = ok && worst_point <= 1e-8;
    return {ok, fmt("pointwise vs characteristics %.2e (tol 1e-8); residual order %.3f (need 1.9); "
                    "negative control fine/coarse %.3f (must not decrease)",
                    worst_point, worst_order, control_ratio)};
}

// ---- 5: moment consistency

Outcome moment_consistency()
{
    const double m = 1.1;
    const DistributionFn f0 = perturbed_maxwellian(1.3, 0.5, m, -1.0, 0.25, {0.9, -0.3, 0.2});
    const FourCurrentField j0 = current_field(f0, {1.0, false});
    std::vector<DisplacementSpec> specs;
    specs.push_back(*uniform_force_displacement(ForceField::uniform({{0, 0.5}, {1, -0.3}}), m));
    specs.push_back(*uniform_force_displacement(
        ForceField::uniform({{0, 0.6, UniformForceTerm::Kind::cosine, 1.3, 0.2}, {2, 0.3, UniformForceTerm::Kind::sine, 0.8, 0.0}}),
        m));
    DisplacementSpec mixed;
    mixed.add(0, 0.2, {0, 0, 0}, TemporalFactor::sine(1.4)).add(1, 0.1, {0, 0, 0}, TemporalFactor::quadratic());
    specs.push_back(mixed);
    std::mt19937_64 rng(5005);
    double worst = 0.0;
    for (const auto& u : specs) {
        const DistributionFn f = transform_distribution(f0, u);
        const FourCurrentField jt = transform_current(j0, u);
        for (int i = 0; i < 20; ++i) {
            const auto X = SpaceTimePoint::at(0.1 * i, random_point(rng, 1.0));
            const Vec4 a = current_moment(f, X, {1.0, false}), b = jt(X);
            worst = std::max(worst, max_abs(a - b) / max_abs(b));
        }
    }
    return {worst <= 1e-8, fmt("3 uniform-u cases x 20 points: max rel difference %.2e (tol 1e-8)", worst)};
}

// ---- 6: completion of the artificial 1-D input

Outcome completion()
{
    HalfSolution h;
    h.domain = {"x", 0.0, 2.0 * pi, 401};
    h.k0 = 0.0;
    h.field = {[](double x) { return tensor_from_eb({std::sin(x), 0.0, 0.0}, {std::sin(x), 0.0, 0.0}); }};
    h.current = {[](double x) { return CVec4{std::cos(x) / (4.0 * pi), 0.0, 0.0, 0.0}; }};
    const CompletedSolution once = complete(h);
    const CompletedSolution twice = complete(as_half_solution(once, h));
    double idem = 0.0;
    for (std::size_t n = 0; n < h.domain.count; ++n) {
        const CMat4 a = once.field(h.domain.coord(n)), b = twice.field(h.domain.coord(n));
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j) idem = std::max(idem, std::abs(a[i][j] - b[i][j]));
    }
    const auto& r = once.report;
    const double sourced_shift = std::abs(r.output_sourced - r.input_sourced);
    const bool ok = r.input_bianchi > 1e-2 && r.output_bianchi < 1e-8 && sourced_shift <= 1e-8 && idem <= 1e-8;
    return {ok, fmt("Bianchi %.2e -> %.2e (tol 1e-8); sourced residual change %.2e (tol 1e-8); idempotence %.2e",
                    r.input_bianchi, r.output_bianchi, sourced_shift, idem)};
}

// ---- 7: plasma slab

Outcome plasma_slab()
{
    bool ok = true;
    std::string detail;
    for (double n : {1e-2, 1.0, 1e2}) {
        SlabConfig cfg;
        cfg.density = n;
        const SlabTrajectory tr = slab_dynamics(cfg);
        const double wp = std::sqrt(4.0 * pi * n * cfg.charge * cfg.charge / cfg.mass);
        const double rel = tr.measured_omega ? std::abs(*tr.measured_omega - wp) / wp : 1.0;
        const double drift = tr.energy_drift.value_or(1.0);
        std::optional<double> order;
        bool conv = false;
        if (tr.fit) {
            const EquilibriumSetup eq = equilibrium_setup(cfg);
            const AssembledSolution sol = assemble_solution(eq, *tr.fit);
            const GridSpec grid = spacetime_grid({"t", 0.0, tr.period, 33}, {"x", -2.0, 2.0, 33}, {"y", 0.0, 0.0, 1},
                                                 {"z", 0.0, 0.0, 1});
            const ResidualReport rep = assembled_residual(sol, eq, *tr.fit, grid);
            order = rep.order_estimate;
            conv = rep.converged(1.9, 1e-10);
        }
        ok = ok && rel <= 1e-6 && drift < 1e-8 && conv;
        detail += fmt("n=%g: |w/wp-1| %.1e, drift %.1e, order %.3f; ", n, rel, drift, order.value_or(-1.0));
    }
    return {ok, detail};
}

// ---- 8: trivial transforms reproduce inputs bitwise

Outcome trivial_identities()
{
    std::mt19937_64 rng(8008);
    int checks = 0, failures = 0;
    auto expect = [&](bool same) {
        ++checks;
        if (!same) ++failures;
    };
    const DisplacementSpec none;
    const SpatialMap id = SpatialMap::identity();
    for (int i = 0; i < 25; ++i) {
        const auto X = SpaceTimePoint::at(0.13 * i, random_point(rng, 2.0));
        const PointJacobian pj = point_jacobian(GeneralTransform{none}, X);
        expect(pj.lambda == identity<double, 4>() && pj.sqrt_minus_g == 1.0);
        for (const auto& seed : seeds::standard_currents()) {
            const Vec4 ref = seed.field(X);
            expect(transform_current(seed.field, none)(X) == ref);
            expect(transform_current(seed.field, id)(X) == ref);
            const ChargeCurrentFn seed3 = [&](const Vec3& r, double t) {
                const Vec4 v = seed.field(SpaceTimePoint::at(t, r));
                return ChargeCurrent3{v[0], {v[1], v[2], v[3]}};
            };
            const auto cc = three_d_transform(seed3, none, X);
            expect(cc.rho == ref[0] && cc.j == Vec3{ref[1], ref[2], ref[3]});
        }
        const auto pol = polarization_from_displacement(1.0, none, X);
        expect(pol.P == Vec3{} && pol.M == Vec3{});
    }

    const DistributionFn f0 = perturbed_maxwellian(1.0, 0.5, 1.0, -1.0, 0.2, {1.0, 0.0, 0.0});
    const DistributionFn f = transform_distribution(f0, none);
    for (int i = 0; i < 50; ++i) {
        const Vec3 r = random_point(rng, 2.0), p = random_point(rng, 2.0);
        expect(f(r, p, 0.1 * i) == f0(r, p, 0.1 * i));
    }
    const auto u_free = uniform_force_displacement(ForceField::none(), 1.0);
    expect(u_free && u_free->terms.empty());

    const EMFieldState seed =
        vacuum_field({PlaneWave::vacuum({0, 1, 0}, {0.3, 0, 0.9}), PlaneWave::vacuum({1, 0, 0}, {0, 0, -2})});
    const FourCurrentField src = seeds::plane_wave_current(1.0, {1, 0.5, -0.7}, 1.3);
    const Mat3 eps{{{2.0, 0.3, 0.0}, {0.3, 1.5, 0.1}, {0.0, 0.1, 1.2}}};
    const Mat3 mu{{{1.1, 0.0, 0.2}, {0.0, 1.0, 0.0}, {0.2, 0.0, 1.3}}};
    const MaterialTensors medium = transform_material_local(MaterialTensors::uniform(eps, mu), id);
    const auto slab = graded_slab_solution({ScalarFunction::identity(), -2.0, 2.0}, seed);
    for (const GeneralTransform& t : {GeneralTransform{id}, GeneralTransform{none}}) {
        const auto out = transform_em_fields(seed, src, t);
        for (int i = 0; i < 25; ++i) {
            const auto X = SpaceTimePoint::at(0.37 * i, random_point(rng, 2.0));
            const EMFields a = seed(X), b = out.fields(X);
            expect(a.E == b.E && a.B == b.B && a.D == b.D && a.H == b.H);
            expect(src(X) == out.sources(X));
        }
    }
    for (int i = 0; i < 25; ++i) {
        const auto X = SpaceTimePoint::at(0.21 * i, random_point(rng, 2.0));
        expect(medium.eps(X.x) == eps && medium.mu(X.x) == mu);
        const EMFields a = seed(X), b = slab.fields(X);
        expect(a.E == b.E && a.B == b.B && a.D == b.D && a.H == b.H);
        expect(slab.material.eps(X.x) == identity<double, 3>() && slab.material.mu(X.x) == identity<double, 3>());
    }

    // plasma assembly with u = 0 returns the seed
    const EMFieldState wave = vacuum_field({PlaneWave::vacuum({0.0, 0.0, 1e-3}, {1.5, 0.0, 0.0})});
    const EquilibriumSetup eq = equilibrium_setup(SlabConfig{}, wave);
    const AssembledSolution sol = assemble_solution(eq, none);
    expect(!sol.corrected);
    for (double x : {-1.5, -0.5, 0.25, 1.0}) {
        const auto X = SpaceTimePoint::at(0.2, {x, 0.0, 0.0});
        const EMFields a = sol.field(X), b = wave(X);
        expect(a.E == b.E && a.B == b.B);
    }
    return {failures == 0, fmt("%d/%d bitwise identity checks hold across current, 3-D, polarization, distribution, "
                               "field, medium, graded-slab and assembly paths",
                               checks - failures, checks)};
}

} // namespace

int main()
{
    const std::vector<Criterion> criteria{
        {1, "determinant-expansion equivalence", 5.0, determinant_expansion},
        {2, "continuity synthesis", 120.0, continuity_synthesis},
        {3, "transformation-optics soundness", 120.0, transformation_optics},
        {4, "Boltzmann transformation", 60.0, boltzmann_transformation},
        {5, "moment consistency", 60.0, moment_consistency},
        {6, "1-D completion", 30.0, completion},
        {7, "plasma slab", 120.0, plasma_slab},
        {8, "trivial-transform identities", 10.0, trivial_identities},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs <= c.budget_s;
        const bool pass = o.passed && in_time;
        if (!pass) ++failed;
        std::printf("[%s] criterion %d (%s): %s | %.2f s of %.0f s budget%s\n", pass ? "PASS" : "FAIL", c.id, c.name,
                    o.detail.c_str(), secs, c.budget_s, in_time ? "" : " (over budget)");
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
