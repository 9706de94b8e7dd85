#pragma once

#include "covforge/errors.hpp"
#include "covforge/grid.hpp"
#include "covforge/kinematics.hpp"
#include "covforge/levi_civita.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace covforge {

// Evaluable four-current (c rho, j_x, j_y, j_z).
struct FourCurrentField {
    enum class Kind { analytic, grid_sampled, particle_deposited };

    std::function<Vec4(const SpaceTimePoint&)> eval;
    Kind kind = Kind::analytic;

    Vec4 operator()(const SpaceTimePoint& X) const { return eval(X); }
};

// j1(X) = sqrt(-g) Lambda~ j0(W(X)).
inline FourCurrentField transform_current(const FourCurrentField& j0, const GeneralTransform& transform,
                                          const KinematicsOptions& opts = {})
{
    return {[j0, transform, opts](const SpaceTimePoint& X) {
                const PointJacobian p = point_jacobian(transform, X, opts);
                const Vec4 src = j0(p.image);
                return p.sqrt_minus_g * (p.lambda_inv * src);
            },
            j0.kind};
}

namespace detail {

inline void require_spacetime(const GridSpec& grid, const char* what)
{
    if (grid.dims() != 4) throw std::invalid_argument(std::string(what) + " needs a (t, x, y, z) grid");
}

} // namespace detail

// Central-difference divergence d_i j^i with d_0 = (1/c) d/dt. Grid axes are
// (t, x, y, z) in physical time.
inline ResidualReport continuity_residual(const FourCurrentField& j, const GridSpec& grid, double c = 1.0,
                                          const ResidualOptions& ropts = {})
{
    detail::require_spacetime(grid, "continuity_residual");
    auto field = [&j, c](std::span<const double> x, std::span<double> out) {
        const Vec4 v = j(SpaceTimePoint::at(x[0], {x[1], x[2], x[3]}, c));
        for (int k = 0; k < 4; ++k) out[k] = v[k];
    };
    auto residual = [c](const NodeStencil& s, std::span<double> out) {
        out[0] = s.d(0, 0) / c + s.d(1, 1) + s.d(2, 2) + s.d(3, 3);
    };
    return residual_report(grid, {"continuity"}, 4, field, residual, ropts);
}

// Path r_a(t); the velocity falls back to fourth-order differences.
struct Trajectory {
    std::function<Vec3(double)> position;
    std::function<Vec3(double)> velocity;

    Vec3 velocity_at(double t) const
    {
        if (velocity) return velocity(t);
        const double h = 1e-4 * std::max(1.0, std::abs(t));
        const Vec3 a = position(t + 2 * h), b = position(t + h), d = position(t - h), e = position(t - 2 * h);
        return (1.0 / (12.0 * h)) * ((8.0 * b - 8.0 * d) - (a - e));
    }
};

struct ParticleEnsemble {
    double charge = 1.0;
    std::vector<Trajectory> trajectories;
    std::optional<double> kernel_width; // defaults to twice the grid spacing
};

// Normalized Gaussian of width h in three dimensions.
inline double gaussian_kernel(const Vec3& r, double h)
{
    constexpr double two_pi = 2.0 * std::numbers::pi;
    const double norm = 1.0 / std::pow(two_pi * h * h, 1.5);
    return norm * std::exp(-dot(r, r) / (2.0 * h * h));
}

// Kernel width resolved against the spatial axes (1..3) of a (t, x, y, z) grid.
inline double resolve_kernel_width(const ParticleEnsemble& ens, const GridSpec& grid)
{
    detail::require_spacetime(grid, "deposit_particle_current");
    double spacing = std::numeric_limits<double>::infinity();
    double extent = std::numeric_limits<double>::infinity();
    for (std::size_t a = 1; a < 4; ++a)
        if (grid.axes[a].active()) {
            spacing = std::min(spacing, grid.axes[a].spacing());
            extent = std::min(extent, grid.axes[a].max - grid.axes[a].min);
        }
    if (!std::isfinite(spacing)) throw DomainTooSmall("deposition grid has no active spatial axis");
    const double h = ens.kernel_width.value_or(2.0 * spacing);
    if (!(h > 0.0)) throw std::invalid_argument("kernel width must be positive");
    if (h > extent / 4.0)
        throw KernelTooWide("kernel width " + format_number(h) + " exceeds a quarter of the domain extent "
                            + format_number(extent));
    return h;
}

// Smoothed point-particle current: sum_a e K_h(r - r_a(t)) (c, v_a).
inline FourCurrentField deposit_particle_current(const ParticleEnsemble& ens, const GridSpec& grid, double c = 1.0)
{
    const double h = resolve_kernel_width(ens, grid);
    return {[ens, h, c](const SpaceTimePoint& X) {
                const double t = X.time(c);
                Vec4 j{};
                for (const auto& tr : ens.trajectories) {
                    const double w = ens.charge * gaussian_kernel(X.x - tr.position(t), h);
                    if (w == 0.0) continue;
                    const Vec3 v = tr.velocity_at(t);
                    j[0] += w * c;
                    for (int a = 0; a < 3; ++a) j[a + 1] += w * v[a];
                }
                return j;
            },
            FourCurrentField::Kind::particle_deposited};
}

// Trapezoid integral of one current component over the spatial box of a
// (t, x, y, z) grid at time t. Component 0 is divided by c to give charge.
inline double integrate_component(const FourCurrentField& j, const GridSpec& grid, double t, int component,
                                  double c = 1.0)
{
    detail::require_spacetime(grid, "integrate_component");
    const Axis& ax = grid.axes[1];
    const Axis& ay = grid.axes[2];
    const Axis& az = grid.axes[3];
    auto weight = [](const Axis& a, std::size_t i) {
        if (!a.active()) return 1.0;
        return (i == 0 || i + 1 == a.count) ? 0.5 * a.spacing() : a.spacing();
    };
    double sum = 0.0;
    for (std::size_t i = 0; i < ax.count; ++i)
        for (std::size_t k = 0; k < ay.count; ++k)
            for (std::size_t l = 0; l < az.count; ++l) {
                const Vec4 v = j(SpaceTimePoint::at(t, {ax.coord(i), ay.coord(k), az.coord(l)}, c));
                sum += weight(ax, i) * weight(ay, k) * weight(az, l) * v[component];
            }
    return component == 0 ? sum / c : sum;
}

struct ChargeCurrent3 {
    double rho = 0.0;
    Vec3 j{};
};

using ChargeCurrentFn = std::function<ChargeCurrent3(const Vec3& r, double t)>;

// rho = sqrt(-g) rho0(r - u, t), j = sqrt(-g) S^-1 [u_dot rho0 + j0](r - u, t).
inline ChargeCurrent3 three_d_transform(const ChargeCurrentFn& seed, const DisplacementSpec& spec,
                                        const SpaceTimePoint& X, const KinematicsOptions& opts = {})
{
    const auto jet = eval_displacement(spec, X, opts.c, JetOrder::first);
    Mat3 S = identity<double, 3>() - jet.grad;
    const double det_s = det(S);
    detail::require_admissible(det_s, opts, "det(I - grad u)");
    const Mat3 S_inv = inverse(S);
    const double t = X.time(opts.c);
    const ChargeCurrent3 s0 = seed(X.x - jet.u, t);
    ChargeCurrent3 out;
    out.rho = det_s * s0.rho;
    out.j = det_s * (S_inv * (s0.rho * jet.u_dot + s0.j));
    return out;
}

struct PolarizationPair {
    Vec3 P{};
    Vec3 M{};
};

// P = rho0 a (the determinant-expansion vector), M from u, u_dot and grad u.
inline PolarizationPair polarization_from_displacement(double rho0, const DisplacementSpec& spec,
                                                       const SpaceTimePoint& X, const KinematicsOptions& opts = {})
{
    const auto jet = eval_displacement(spec, X, opts.c);
    const auto exp = det_via_expansion(jet);
    PolarizationPair out;
    out.P = rho0 * exp.aux.a_vec;
    const Vec3 uxv = cross(jet.u, jet.u_dot);
    for (int a = 0; a < 3; ++a) {
        // e_{nu sigma lambda} u_dot_nu u_sigma d_a u_lambda = (u_dot x u) . (d_a u)
        const Vec3 da_u{jet.grad[0][a], jet.grad[1][a], jet.grad[2][a]};
        const double second = dot(cross(jet.u_dot, jet.u), da_u);
        out.M[a] = rho0 * (0.5 * uxv[a] + second / 3.0);
    }
    return out;
}

// Checks rho = rho0 - div P and j = dP/dt + curl M against three_d_transform
// on a (t, x, y, z) grid, for constant rho0 and zero seed current.
inline ResidualReport verify_polarization_identity(double rho0, const DisplacementSpec& spec, const GridSpec& grid,
                                                   const KinematicsOptions& opts = {},
                                                   const ResidualOptions& ropts = {})
{
    detail::require_spacetime(grid, "verify_polarization_identity");
    const ChargeCurrentFn seed = [rho0](const Vec3&, double) { return ChargeCurrent3{rho0, {}}; };
    auto field = [&](std::span<const double> x, std::span<double> out) {
        const SpaceTimePoint X = SpaceTimePoint::at(x[0], {x[1], x[2], x[3]}, opts.c);
        const auto pm = polarization_from_displacement(rho0, spec, X, opts);
        const auto cc = three_d_transform(seed, spec, X, opts);
        for (int a = 0; a < 3; ++a) {
            out[a] = pm.P[a];
            out[3 + a] = pm.M[a];
            out[7 + a] = cc.j[a];
        }
        out[6] = cc.rho;
    };
    auto residual = [rho0](const NodeStencil& s, std::span<double> out) {
        const double divP = s.d(1, 0) + s.d(2, 1) + s.d(3, 2);
        out[0] = s.value(6) - (rho0 - divP);
        // curl M with M at components 3..5 and spatial axes 1..3
        const Vec3 curlM{s.d(2, 5) - s.d(3, 4), s.d(3, 3) - s.d(1, 5), s.d(1, 4) - s.d(2, 3)};
        for (int a = 0; a < 3; ++a) out[1 + a] = s.value(7 + a) - (s.d(0, a) + curlM[a]);
    };
    return residual_report(grid, {"charge", "current_x", "current_y", "current_z"}, 10, field, residual, ropts);
}

} // namespace covforge
