#pragma once

#include "covforge/continuity.hpp"
#include "covforge/errors.hpp"
#include "covforge/grid.hpp"
#include "covforge/kinematics.hpp"
#include "covforge/quadrature.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace covforge {

// Momentum integration box: center +- half_width with `nodes` Gauss-Legendre
// nodes per axis.
struct MomentumBox {
    Vec3 center{};
    Vec3 half_width{1.0, 1.0, 1.0};
    std::size_t nodes = 32;
};

// f(r, t) restricted to momentum space.
using MomentumProfile = std::function<double(const Vec3& p)>;

// Collisionless one-species distribution f(r, p, t) >= 0.
struct DistributionFn {
    std::function<MomentumProfile(const Vec3& r, double t)> profile;
    std::function<MomentumBox(const Vec3& r, double t)> box;
    double mass = 1.0;
    double charge = 1.0;

    double operator()(const Vec3& r, const Vec3& p, double t) const { return profile(r, t)(p); }
};

// Nonrelativistic packing P = (m c, p).
struct FourMomentum {
    double p0 = 0.0;
    Vec3 p{};

    static FourMomentum nonrelativistic(double mass, const Vec3& p, double c = 1.0) { return {mass * c, p}; }
    Vec4 packed() const { return {p0, p[0], p[1], p[2]}; }
};

// F^i = -(1/m) Gamma^i_{jl} P^j P^l
inline Vec4 inertial_force(const KinematicsBundle& k, const FourMomentum& P, double mass)
{
    const Vec4 v = P.packed();
    Vec4 F{};
    for (std::size_t i = 1; i < 4; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < 4; ++j)
            for (std::size_t l = 0; l < 4; ++l) s += k.christoffel(i, j, l) * v[j] * v[l];
        F[i] = -s / mass;
    }
    return F;
}

// Thermal distribution n (2 pi m T)^{-3/2} exp(-|p - p_d|^2 / 2 m T), boxed at
// +-8 thermal widths.
inline DistributionFn maxwellian(double density, double temperature, double mass, double charge,
                                 Vec3 drift_momentum = {}, std::size_t nodes = 32)
{
    if (!(temperature > 0.0) || !(mass > 0.0)) throw std::invalid_argument("maxwellian needs T > 0 and m > 0");
    const double var = mass * temperature;
    const double norm = density / std::pow(2.0 * std::numbers::pi * var, 1.5);
    const double width = 8.0 * std::sqrt(var);
    DistributionFn f;
    f.mass = mass;
    f.charge = charge;
    f.profile = [=](const Vec3&, double) {
        return MomentumProfile([=](const Vec3& p) {
            const Vec3 d = p - drift_momentum;
            return norm * std::exp(-dot(d, d) / (2.0 * var));
        });
    };
    f.box = [=](const Vec3&, double) { return MomentumBox{drift_momentum, {width, width, width}, nodes}; };
    return f;
}

// Free-streaming solution n (1 + A cos(k.(r - p t / m))) M(p) of the force-free equation.
inline DistributionFn perturbed_maxwellian(double density, double temperature, double mass, double charge,
                                           double amplitude, Vec3 k, std::size_t nodes = 32)
{
    DistributionFn base = maxwellian(density, temperature, mass, charge, {}, nodes);
    DistributionFn f = base;
    f.profile = [base, amplitude, k, mass](const Vec3& r, double t) {
        const MomentumProfile m = base.profile(r, t);
        return MomentumProfile([=](const Vec3& p) {
            return (1.0 + amplitude * std::cos(dot(k, r - (t / mass) * p))) * m(p);
        });
    };
    return f;
}

struct DistributionTransformOptions {
    KinematicsOptions kinematics;
    // Multiply by (sqrt(-g))^2 to give the physical density; without it the
    // result is the bare pullback f0(r - u, S p - m u_dot, t).
    bool phase_volume_factor = true;
};

// f(r, p, t) = (sqrt(-g))^2 f0(r - u, S p - m u_dot, t).
inline DistributionFn transform_distribution(const DistributionFn& f0, const DisplacementSpec& spec,
                                             const DistributionTransformOptions& opts = {})
{
    const double c = opts.kinematics.c;
    DistributionFn f = f0;
    f.profile = [f0, spec, opts, c](const Vec3& r, double t) {
        const auto jet = eval_displacement(spec, SpaceTimePoint::at(t, r, c), c, JetOrder::first);
        const Mat3 S = identity<double, 3>() - jet.grad;
        const double det_s = det(S);
        detail::require_admissible(det_s, opts.kinematics, "det(I - grad u)");
        const double factor = opts.phase_volume_factor ? det_s * det_s : 1.0;
        const Vec3 shift = f0.mass * jet.u_dot;
        const MomentumProfile inner = f0.profile(r - jet.u, t);
        return MomentumProfile([=](const Vec3& p) { return factor * inner(S * p - shift); });
    };
    f.box = [f0, spec, opts, c](const Vec3& r, double t) {
        const auto jet = eval_displacement(spec, SpaceTimePoint::at(t, r, c), c, JetOrder::first);
        const Mat3 S = identity<double, 3>() - jet.grad;
        detail::require_admissible(det(S), opts.kinematics, "det(I - grad u)");
        const Mat3 S_inv = inverse(S);
        const MomentumBox b0 = f0.box(r - jet.u, t);
        // p = S^-1 (q + m u_dot) for q over the seed box corners
        Vec3 lo{1e300, 1e300, 1e300}, hi{-1e300, -1e300, -1e300};
        for (int corner = 0; corner < 8; ++corner) {
            Vec3 q = b0.center;
            for (int a = 0; a < 3; ++a) q[a] += ((corner >> a) & 1 ? 1.0 : -1.0) * b0.half_width[a];
            const Vec3 p = S_inv * (q + f0.mass * jet.u_dot);
            for (int a = 0; a < 3; ++a) {
                lo[a] = std::min(lo[a], p[a]);
                hi[a] = std::max(hi[a], p[a]);
            }
        }
        MomentumBox b;
        b.center = 0.5 * (lo + hi);
        b.half_width = 0.5 * (hi - lo);
        b.nodes = b0.nodes;
        return b;
    };
    return f;
}

struct MomentOptions {
    double c = 1.0;
    // Repeat the integral with doubled nodes and compare.
    bool check_resolution = true;
    double rel_tolerance = 1e-9;
    double abs_tolerance = 1e-300;
};

namespace detail {

inline Vec4 momentum_moments(const MomentumProfile& f, const MomentumBox& box, std::size_t nodes, double mass,
                             double charge, double c)
{
    std::array<QuadratureRule, 3> rules;
    for (int a = 0; a < 3; ++a)
        rules[a] = gauss_legendre(nodes, box.center[a] - box.half_width[a], box.center[a] + box.half_width[a]);
    double m0 = 0.0;
    Vec3 m1{};
    for (std::size_t i = 0; i < nodes; ++i)
        for (std::size_t k = 0; k < nodes; ++k) {
            const double wik = rules[0].weights[i] * rules[1].weights[k];
            for (std::size_t l = 0; l < nodes; ++l) {
                const Vec3 p{rules[0].nodes[i], rules[1].nodes[k], rules[2].nodes[l]};
                const double w = wik * rules[2].weights[l] * f(p);
                m0 += w;
                m1 = m1 + w * p;
            }
        }
    return {charge * c * m0, charge / mass * m1[0], charge / mass * m1[1], charge / mass * m1[2]};
}

} // namespace detail

// j^i = (e/m) int d^3p P^i f with P^0 = m c, tensor-product Gauss-Legendre.
inline Vec4 current_moment(const DistributionFn& f, const SpaceTimePoint& X, const MomentOptions& opts = {})
{
    const double t = X.time(opts.c);
    const MomentumProfile prof = f.profile(X.x, t);
    const MomentumBox box = f.box(X.x, t);
    const Vec4 j = detail::momentum_moments(prof, box, box.nodes, f.mass, f.charge, opts.c);
    if (opts.check_resolution) {
        const Vec4 j2 = detail::momentum_moments(prof, box, 2 * box.nodes, f.mass, f.charge, opts.c);
        const double scale = std::max(max_abs(j2), opts.abs_tolerance);
        const double diff = max_abs(j - j2);
        if (diff > opts.rel_tolerance * scale)
            throw QuadratureUnderResolved("doubling momentum nodes changed the current by "
                                          + format_number(diff / scale) + " (relative)");
        return j2;
    }
    return j;
}

// Current field of a distribution, evaluated pointwise by quadrature.
inline FourCurrentField current_field(const DistributionFn& f, const MomentOptions& opts = {})
{
    return {[f, opts](const SpaceTimePoint& X) { return current_moment(f, X, opts); }};
}

struct UniformForceTerm {
    enum class Kind { constant, cosine, sine };

    int component = 0;
    double amplitude = 0.0;
    Kind kind = Kind::constant;
    double omega = 0.0;
    double phase = 0.0;

    double eval(double t) const
    {
        switch (kind) {
        case Kind::constant: return amplitude;
        case Kind::cosine: return amplitude * std::cos(omega * t + phase);
        case Kind::sine: return amplitude * std::sin(omega * t + phase);
        }
        return 0.0;
    }
};

// External force F(r, t). Spatially uniform fields built by `uniform` keep
// their terms; a static potential V with F = -grad V enables the energy check.
struct ForceField {
    std::function<Vec3(const Vec3& r, double t)> eval;
    std::vector<UniformForceTerm> uniform_terms;
    bool is_uniform = false;
    std::function<double(const Vec3& r)> potential;

    static ForceField uniform(std::vector<UniformForceTerm> terms)
    {
        ForceField F;
        F.is_uniform = true;
        F.uniform_terms = terms;
        F.eval = [terms](const Vec3&, double t) {
            Vec3 f{};
            for (const auto& term : terms) f[term.component] += term.eval(t);
            return f;
        };
        return F;
    }

    static ForceField none() { return uniform({}); }

    Vec3 operator()(const Vec3& r, double t) const { return eval ? eval(r, t) : Vec3{}; }
};

// d_t f + (p/m).grad f + F.grad_p f on a (t, x, y, z, px, py, pz) grid.
inline ResidualReport boltzmann_residual_nonrel(const DistributionFn& f, const ForceField& F, const GridSpec& grid,
                                                const ResidualOptions& ropts = {})
{
    if (grid.dims() != 7) throw std::invalid_argument("boltzmann_residual_nonrel needs a (t, r, p) grid of 7 axes");
    auto field = [&f](std::span<const double> x, std::span<double> out) {
        out[0] = f({x[1], x[2], x[3]}, {x[4], x[5], x[6]}, x[0]);
    };
    const double m = f.mass;
    auto residual = [&F, m](const NodeStencil& s, std::span<double> out) {
        const Vec3 r{s.coord(1), s.coord(2), s.coord(3)};
        const Vec3 p{s.coord(4), s.coord(5), s.coord(6)};
        const Vec3 force = F(r, s.coord(0));
        double v = s.d(0, 0);
        for (int a = 0; a < 3; ++a) v += (p[a] / m) * s.d(1 + a, 0) + force[a] * s.d(4 + a, 0);
        out[0] = v;
    };
    return residual_report(grid, {"boltzmann"}, 1, field, residual, ropts);
}

inline GridSpec phase_space_grid(Axis t, Axis x, Axis y, Axis z, Axis px, Axis py, Axis pz)
{
    const char* names[] = {"t", "x", "y", "z", "px", "py", "pz"};
    GridSpec g{{t, x, y, z, px, py, pz}};
    for (std::size_t a = 0; a < 7; ++a) g.axes[a].name = names[a];
    return g;
}

struct SeedState {
    Vec3 r0{};
    Vec3 v0{};
};

struct IntegrationOptions {
    double mass = 1.0;
    double t_end = 1.0;
    std::size_t steps = 1000;
    // Relative energy drift allowed when the force has a potential.
    double energy_tolerance = 1e-6;
};

struct TrajectorySample {
    double t = 0.0;
    Vec3 r{};
    Vec3 v{};
    Vec3 u{}; // r(t) - r0(t), r0 the force-free path
};

struct DisplacementFit {
    std::optional<DisplacementSpec> spec; // exact fit for spatially uniform forces
    std::vector<std::vector<TrajectorySample>> trajectories;
    double fit_max_deviation = 0.0;       // |u_spec - u_rk4| over all samples
};

// Closed-form displacement of a particle at rest relative to its free path
// when a uniform force switches on at t = 0: u(0) = u_dot(0) = 0.
inline std::optional<DisplacementSpec> uniform_force_displacement(const ForceField& F, double mass)
{
    if (!F.eval) return DisplacementSpec{};
    if (!F.is_uniform) return std::nullopt;
    DisplacementSpec s;
    for (const auto& term : F.uniform_terms) {
        const double a = term.amplitude / mass;
        const int c = term.component;
        switch (term.kind) {
        case UniformForceTerm::Kind::constant:
            s.add(c, 0.5 * a, {0, 0, 0}, TemporalFactor::quadratic());
            break;
        case UniformForceTerm::Kind::cosine: {
            const double w = term.omega, phi = term.phase;
            if (w == 0.0) {
                s.add(c, 0.5 * a * std::cos(phi), {0, 0, 0}, TemporalFactor::quadratic());
                break;
            }
            s.add(c, -a / (w * w), {0, 0, 0}, TemporalFactor::cosine(w, phi));
            s.add(c, a * std::cos(phi) / (w * w));
            s.add(c, -a * std::sin(phi) / w, {0, 0, 0}, TemporalFactor::linear());
            break;
        }
        case UniformForceTerm::Kind::sine: {
            const double w = term.omega, phi = term.phase;
            if (w == 0.0) {
                s.add(c, 0.5 * a * std::sin(phi), {0, 0, 0}, TemporalFactor::quadratic());
                break;
            }
            s.add(c, -a / (w * w), {0, 0, 0}, TemporalFactor::sine(w, phi));
            s.add(c, a * std::sin(phi) / (w * w));
            s.add(c, a * std::cos(phi) / w, {0, 0, 0}, TemporalFactor::linear());
            break;
        }
        }
    }
    return s;
}

// Integrates m r'' = F from each seed with classical RK4 and records the
// displacement from the force-free path. Uniform forces also get the exact spec.
inline DisplacementFit displacement_from_force(const ForceField& F, const std::vector<SeedState>& seeds,
                                               const IntegrationOptions& opts)
{
    if (opts.steps == 0 || !(opts.t_end > 0.0) || !(opts.mass > 0.0))
        throw std::invalid_argument("integration needs steps > 0, t_end > 0 and mass > 0");
    const double m = opts.mass;
    const double dt = opts.t_end / static_cast<double>(opts.steps);
    DisplacementFit fit;
    fit.spec = uniform_force_displacement(F, m);

    for (const auto& seed : seeds) {
        std::vector<TrajectorySample> path;
        path.reserve(opts.steps + 1);
        // integrate the offset u from the free path r0 + v0 t, with w = u_dot
        auto free_path = [&](double t) { return seed.r0 + t * seed.v0; };
        auto accel = [&](const Vec3& u, double t) { return (1.0 / m) * F(free_path(t) + u, t); };
        auto energy = [&](const Vec3& x, const Vec3& vel) { return 0.5 * m * dot(vel, vel) + F.potential(x); };
        const double e0 = F.potential ? energy(seed.r0, seed.v0) : 0.0;
        Vec3 u{}, w{};
        for (std::size_t n = 0; n <= opts.steps; ++n) {
            const double t = static_cast<double>(n) * dt;
            path.push_back({t, free_path(t) + u, seed.v0 + w, u});
            if (n == opts.steps) break;
            const Vec3 k1u = w, k1w = accel(u, t);
            const Vec3 k2u = w + (0.5 * dt) * k1w, k2w = accel(u + (0.5 * dt) * k1u, t + 0.5 * dt);
            const Vec3 k3u = w + (0.5 * dt) * k2w, k3w = accel(u + (0.5 * dt) * k2u, t + 0.5 * dt);
            const Vec3 k4u = w + dt * k3w, k4w = accel(u + dt * k3u, t + dt);
            u = u + (dt / 6.0) * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
            w = w + (dt / 6.0) * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
        }
        const Vec3 r = path.back().r, v = path.back().v;
        if (F.potential) {
            const double e1 = energy(r, v);
            const double scale = std::max(std::abs(e0), 1e-300);
            if (std::abs(e1 - e0) > opts.energy_tolerance * scale)
                throw StepSizeTooLarge("RK4 energy drift " + format_number(std::abs(e1 - e0) / scale)
                                       + " exceeds tolerance " + format_number(opts.energy_tolerance));
        }
        if (fit.spec) {
            for (const auto& s : path) {
                const auto u = eval_displacement(*fit.spec, SpaceTimePoint::at(s.t, s.r), 1.0, JetOrder::first).u;
                fit.fit_max_deviation = std::max(fit.fit_max_deviation, max_abs(u - s.u));
            }
        }
        fit.trajectories.push_back(std::move(path));
    }
    return fit;
}

} // namespace covforge
