#pragma once

#include "covforge/continuity.hpp"
#include "covforge/errors.hpp"
#include "covforge/grid.hpp"
#include "covforge/kinematics.hpp"
#include "covforge/levi_civita.hpp"
#include "covforge/linalg.hpp"
#include "covforge/scalar_function.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace covforge {

// Three-vector fields at one event.
struct EMFields {
    Vec3 E{};
    Vec3 B{};
    Vec3 D{};
    Vec3 H{};
};

struct EMFieldState {
    std::function<EMFields(const SpaceTimePoint&)> eval;

    EMFields operator()(const SpaceTimePoint& X) const { return eval(X); }
};

// F with lower indices, H with upper indices.
struct MinkowskiPair {
    Mat4 F{};
    Mat4 H{};
};

// Layout: F_{0a} = E_a, F_{ab} = -e_{abc} B_c, H^{a0} = D_a, H^{ab} = -e_{abc} H_c.
inline MinkowskiPair pack_minkowski(const EMFields& f)
{
    MinkowskiPair p;
    for (int a = 0; a < 3; ++a) {
        p.F[0][a + 1] = f.E[a];
        p.F[a + 1][0] = -f.E[a];
        p.H[a + 1][0] = f.D[a];
        p.H[0][a + 1] = -f.D[a];
    }
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
            if (a == b) continue;
            const int c = 3 - a - b;
            const double sign = levi_civita3(a, b, c);
            p.F[a + 1][b + 1] = -sign * f.B[c];
            p.H[a + 1][b + 1] = -sign * f.H[c];
        }
    return p;
}

inline EMFields unpack_minkowski(const MinkowskiPair& p)
{
    EMFields f;
    for (int a = 0; a < 3; ++a) {
        f.E[a] = p.F[0][a + 1];
        f.D[a] = p.H[a + 1][0];
    }
    f.B = {-p.F[2][3], -p.F[3][1], -p.F[1][2]};
    f.H = {-p.H[2][3], -p.H[3][1], -p.H[1][2]};
    return f;
}

// Local linear medium D = eps E, B = mu H.
struct MaterialTensors {
    std::function<Mat3(const Vec3&)> eps;
    std::function<Mat3(const Vec3&)> mu;

    static MaterialTensors uniform(const Mat3& e, const Mat3& m)
    {
        return {[e](const Vec3&) { return e; }, [m](const Vec3&) { return m; }};
    }
    static MaterialTensors vacuum() { return uniform(identity<double, 3>(), identity<double, 3>()); }
};

namespace detail {

inline bool symmetric_positive_definite(const Mat3& m, double tol = 1e-12)
{
    const double scale = std::max(max_abs(m), 1e-300);
    for (int a = 0; a < 3; ++a)
        for (int b = a + 1; b < 3; ++b)
            if (std::abs(m[a][b] - m[b][a]) > tol * scale) return false;
    const double m1 = m[0][0];
    const double m2 = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    return m1 > 0.0 && m2 > 0.0 && det(m) > 0.0;
}

} // namespace detail

// Throws std::invalid_argument naming the first sample where eps or mu is
// not symmetric positive-definite.
inline void check_material(const MaterialTensors& mat, const std::vector<Vec3>& samples)
{
    for (const auto& r : samples) {
        for (const auto* which : {"eps", "mu"}) {
            const Mat3 m = which[0] == 'e' ? mat.eps(r) : mat.mu(r);
            if (!detail::symmetric_positive_definite(m)) {
                std::ostringstream os;
                os << which << " is not symmetric positive-definite at (" << r[0] << ", " << r[1] << ", " << r[2]
                   << ")";
                throw std::invalid_argument(os.str());
            }
        }
    }
}

// Rank-4 constitutive tensor eps^{ijlm}, flat index ((i*4 + j)*4 + l)*4 + m.
using Rank4 = std::array<double, 256>;

constexpr std::size_t rank4_index(std::size_t i, std::size_t j, std::size_t l, std::size_t m)
{
    return ((i * 4 + j) * 4 + l) * 4 + m;
}

// eps^{0ab0} = eps_ab / 2 plus its antisymmetric partners, and
// eps^{abcd} = (1/2) e_{abn} (mu^-1)_{ns} e_{scd}.
inline Rank4 constitutive_tensor(const Mat3& eps, const Mat3& mu)
{
    Rank4 t{};
    for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t b = 0; b < 3; ++b) {
            const double v = 0.5 * eps[a][b];
            t[rank4_index(0, a + 1, b + 1, 0)] = v;
            t[rank4_index(a + 1, 0, 0, b + 1)] = v;
            t[rank4_index(a + 1, 0, b + 1, 0)] = -v;
            t[rank4_index(0, a + 1, 0, b + 1)] = -v;
        }
    const Mat3 mu_inv = inverse(mu);
    for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t b = 0; b < 3; ++b)
            for (std::size_t l = 0; l < 3; ++l)
                for (std::size_t m = 0; m < 3; ++m) {
                    double acc = 0.0;
                    for (std::size_t n = 0; n < 3; ++n)
                        for (std::size_t s = 0; s < 3; ++s)
                            acc += levi_civita3(a, b, n) * mu_inv[n][s] * levi_civita3(s, l, m);
                    t[rank4_index(a + 1, b + 1, l + 1, m + 1)] = 0.5 * acc;
                }
    return t;
}

// H^{ij} = eps^{ijlm} F_lm
inline Mat4 apply_constitutive(const Rank4& t, const Mat4& F)
{
    Mat4 H{};
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) {
            double acc = 0.0;
            for (std::size_t l = 0; l < 4; ++l)
                for (std::size_t m = 0; m < 4; ++m) acc += t[rank4_index(i, j, l, m)] * F[l][m];
            H[i][j] = acc;
        }
    return H;
}

struct MaterialPoint {
    Mat3 eps{};
    Mat3 mu{};
};

// Inverse of constitutive_tensor for media without magnetoelectric coupling.
inline MaterialPoint material_from_constitutive(const Rank4& t)
{
    MaterialPoint p;
    Mat3 mu_inv{};
    for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t b = 0; b < 3; ++b) {
            p.eps[a][b] = 2.0 * t[rank4_index(0, a + 1, b + 1, 0)];
            double acc = 0.0;
            for (std::size_t c = 0; c < 3; ++c)
                for (std::size_t d = 0; d < 3; ++d)
                    for (std::size_t l = 0; l < 3; ++l)
                        for (std::size_t m = 0; m < 3; ++m)
                            acc += levi_civita3(a, c, d) * t[rank4_index(c + 1, d + 1, l + 1, m + 1)]
                                * levi_civita3(l, m, b);
            mu_inv[a][b] = 0.5 * acc;
        }
    p.mu = inverse(mu_inv);
    return p;
}

// sqrt(-g) L~ L~ L~ L~ eps, one index at a time.
inline Rank4 transform_constitutive(const Rank4& t, const PointJacobian& p)
{
    const Mat4& L = p.lambda_inv;
    Rank4 a = t, b{};
    for (int slot = 0; slot < 4; ++slot) {
        b.fill(0.0);
        for (std::size_t idx = 0; idx < 256; ++idx) {
            if (a[idx] == 0.0) continue;
            std::array<std::size_t, 4> k{idx >> 6, (idx >> 4) & 3, (idx >> 2) & 3, idx & 3};
            const std::size_t src = k[slot];
            for (std::size_t n = 0; n < 4; ++n) {
                if (L[n][src] == 0.0) continue;
                k[slot] = n;
                b[rank4_index(k[0], k[1], k[2], k[3])] += L[n][src] * a[idx];
            }
        }
        std::swap(a, b);
    }
    for (auto& v : a) v *= p.sqrt_minus_g;
    return a;
}

namespace detail {

inline bool time_independent(const GeneralTransform& t)
{
    const auto* spec = std::get_if<DisplacementSpec>(&t);
    if (!spec) return true;
    for (const auto& term : spec->terms)
        if (term.time.kind != TemporalFactor::Kind::constant) return false;
    return true;
}

// ||M|| M^-1 A M^-T
inline Mat3 congruence(const PointJacobian& p, const Mat3& a)
{
    return p.sqrt_minus_g * (p.s_inv * a * transpose(p.s_inv));
}

} // namespace detail

// New medium for a time-independent map: eps -> ||M|| M^-1 eps(W) M^-T, same for mu.
inline MaterialTensors transform_material_local(const MaterialTensors& mat, const GeneralTransform& transform,
                                                const KinematicsOptions& opts = {})
{
    if (!detail::time_independent(transform))
        throw std::invalid_argument("material transform needs a time-independent map");
    auto make = [transform, opts](std::function<Mat3(const Vec3&)> src) {
        return [src = std::move(src), transform, opts](const Vec3& r) {
            const PointJacobian p = point_jacobian(transform, {0.0, r}, opts);
            return detail::congruence(p, src(p.image.x));
        };
    };
    return {make(mat.eps), make(mat.mu)};
}

// Rank-2 laws: F -> L^T F(W) L, H -> sqrt(-g) L~ H(W) L~^T.
inline EMFields transform_em_point(const EMFields& at_image, const PointJacobian& p)
{
    const MinkowskiPair src = pack_minkowski(at_image);
    MinkowskiPair out;
    out.F = transpose(p.lambda) * src.F * p.lambda;
    out.H = p.sqrt_minus_g * (p.lambda_inv * src.H * transpose(p.lambda_inv));
    return unpack_minkowski(out);
}

// Same result for a spatial map written with three-vectors:
// E -> M^T E, B -> ||M|| M^-1 B, D -> ||M|| M^-1 D, H -> M^T H.
inline EMFields transform_em_point_spatial(const EMFields& at_image, const PointJacobian& p)
{
    const Mat3 mt = transpose(p.s);
    return {mt * at_image.E, p.sqrt_minus_g * (p.s_inv * at_image.B), p.sqrt_minus_g * (p.s_inv * at_image.D),
            mt * at_image.H};
}

struct TransformedElectrodynamics {
    EMFieldState fields;
    FourCurrentField sources;
};

// Fields and external four-current in the new frame. Spatial maps use the
// three-vector laws; Euler transforms use the rank-2 laws.
inline TransformedElectrodynamics transform_em_fields(const EMFieldState& state, const FourCurrentField& sources,
                                                      const GeneralTransform& transform,
                                                      const KinematicsOptions& opts = {})
{
    validate(transform);
    const bool spatial = std::holds_alternative<SpatialMap>(transform);
    EMFieldState out{[state, transform, opts, spatial](const SpaceTimePoint& X) {
        const PointJacobian p = point_jacobian(transform, X, opts);
        const EMFields src = state(p.image);
        return spatial ? transform_em_point_spatial(src, p) : transform_em_point(src, p);
    }};
    return {std::move(out), transform_current(sources, transform, opts)};
}

inline FourCurrentField zero_current()
{
    return {[](const SpaceTimePoint&) { return Vec4{}; }};
}

// E = E0 cos(k.r - w t + phase), B = (c / w) k x E, D = E, H = B.
struct PlaneWave {
    Vec3 amplitude{};
    Vec3 k{};
    double omega = 0.0;
    double phase = 0.0;

    // Vacuum dispersion w = c |k|.
    static PlaneWave vacuum(Vec3 amplitude, Vec3 k, double c = 1.0, double phase = 0.0)
    {
        return {amplitude, k, c * norm(k), phase};
    }
};

inline EMFieldState vacuum_field(std::vector<PlaneWave> waves, double c = 1.0)
{
    for (const auto& w : waves) {
        if (!(w.omega > 0.0) || !(norm(w.k) > 0.0))
            throw std::invalid_argument("plane wave needs omega > 0 and k != 0");
        if (std::abs(dot(w.amplitude, w.k)) > 1e-12 * norm(w.amplitude) * norm(w.k))
            throw std::invalid_argument("plane wave amplitude must be transverse to k");
    }
    return {[waves = std::move(waves), c](const SpaceTimePoint& X) {
        EMFields f;
        const double t = X.time(c);
        for (const auto& w : waves) {
            const double phase = std::cos(dot(w.k, X.x) - w.omega * t + w.phase);
            const Vec3 e = phase * w.amplitude;
            f.E = f.E + e;
            f.B = f.B + (c / w.omega) * cross(w.k, e);
        }
        f.D = f.E;
        f.H = f.B;
        return f;
    }};
}

// Medium z' = f(z) with n(z) = f'(z) > 0 on [z_min, z_max].
struct GradedSlabSpec {
    ScalarFunction f = ScalarFunction::identity();
    double z_min = -1.0;
    double z_max = 1.0;

    SpatialMap spatial_map() const { return SpatialMap::z_profile(f); }

    // Raises NonMonotoneMap at the first of `samples` points where n <= 0.
    void validate(std::size_t samples = 1001) const
    {
        f.validate();
        if (!(z_max > z_min)) throw std::invalid_argument("graded slab needs z_max > z_min");
        for (std::size_t i = 0; i < samples; ++i) {
            const double z = z_min + (z_max - z_min) * static_cast<double>(i) / static_cast<double>(samples - 1);
            const double n = f.d1(z);
            if (!(n > 0.0)) {
                std::ostringstream os;
                os.precision(17);
                os << "f'(z) = " << n << " <= 0 at z = " << z;
                throw NonMonotoneMap(os.str());
            }
        }
    }

    Mat3 eps(double z) const
    {
        const double n = f.d1(z);
        Mat3 m{};
        m[0][0] = m[1][1] = n;
        m[2][2] = 1.0 / n;
        return m;
    }
};

struct GradedSlabSolution {
    MaterialTensors material;
    EMFieldState fields;
};

// eps = mu = diag(n, n, 1/n) and the vacuum seed carried through z -> f(z).
inline GradedSlabSolution graded_slab_solution(const GradedSlabSpec& slab, const EMFieldState& vacuum_seed,
                                               const KinematicsOptions& opts = {})
{
    slab.validate();
    auto diag = [slab](const Vec3& r) { return slab.eps(r[2]); };
    MaterialTensors mat{diag, diag};
    auto moved = transform_em_fields(vacuum_seed, zero_current(), GeneralTransform{slab.spatial_map()}, opts);
    return {std::move(mat), std::move(moved.fields)};
}

inline const std::vector<std::string>& maxwell_equation_names()
{
    static const std::vector<std::string> names{"gauss_d", "ampere_x", "ampere_y", "ampere_z",
                                                "gauss_b", "faraday_x", "faraday_y", "faraday_z"};
    return names;
}

namespace detail {

// Components: E 0-2, H 3-5, D 6-8, B 9-11, rho 12, j 13-15.
inline void pack_maxwell_sample(const EMFields& f, const Vec3& d, const Vec3& b, const Vec4& j, double c,
                                std::span<double> out)
{
    for (int a = 0; a < 3; ++a) {
        out[a] = f.E[a];
        out[3 + a] = f.H[a];
        out[6 + a] = d[a];
        out[9 + a] = b[a];
        out[13 + a] = j[a + 1];
    }
    out[12] = j[0] / c;
}

//   div D = 4 pi rho, curl H = (4 pi / c) j + (1/c) dD/dt,
//   div B = 0,        curl E = -(1/c) dB/dt.
template <class Field>
ResidualReport maxwell_report(const Field& field, const GridSpec& grid, double c, const ResidualOptions& ropts,
                              const NodeFilter& exclude = {})
{
    constexpr double four_pi = 4.0 * std::numbers::pi;
    auto residual = [c](const NodeStencil& s, std::span<double> out) {
        auto div = [&](int base) { return s.d(1, base) + s.d(2, base + 1) + s.d(3, base + 2); };
        auto curl = [&](int base, int a) {
            const int b = (a + 1) % 3, d = (a + 2) % 3;
            return s.d(1 + b, base + d) - s.d(1 + d, base + b);
        };
        out[0] = div(6) - four_pi * s.value(12);
        for (int a = 0; a < 3; ++a)
            out[1 + a] = curl(3, a) - four_pi / c * s.value(13 + a) - s.d(0, 6 + a) / c;
        out[4] = div(9);
        for (int a = 0; a < 3; ++a) out[5 + a] = curl(0, a) + s.d(0, 9 + a) / c;
    };
    const NodeFilter skip = exclude ? exclude : NodeFilter([](std::span<const double>) { return false; });
    return residual_report(grid, maxwell_equation_names(), 16, field, residual, skip, ropts);
}

} // namespace detail

// All eight Maxwell equations on a (t, x, y, z) grid, with D = eps E and
// B = mu H taken from the medium.
inline ResidualReport maxwell_residual(const EMFieldState& state, const MaterialTensors& mat,
                                       const std::optional<FourCurrentField>& sources, const GridSpec& grid,
                                       double c = 1.0, const ResidualOptions& ropts = {})
{
    detail::require_spacetime(grid, "maxwell_residual");
    auto field = [&](std::span<const double> x, std::span<double> out) {
        const SpaceTimePoint X = SpaceTimePoint::at(x[0], {x[1], x[2], x[3]}, c);
        const EMFields f = state(X);
        detail::pack_maxwell_sample(f, mat.eps(X.x) * f.E, mat.mu(X.x) * f.H, sources ? (*sources)(X) : Vec4{}, c,
                                    out);
    };
    return detail::maxwell_report(field, grid, c, ropts);
}

// Same equations using the D and B carried by the state itself. Nodes for
// which `exclude` returns true are left out of the norms.
inline ResidualReport maxwell_residual(const EMFieldState& state, const std::optional<FourCurrentField>& sources,
                                       const GridSpec& grid, double c = 1.0, const ResidualOptions& ropts = {},
                                       const NodeFilter& exclude = {})
{
    detail::require_spacetime(grid, "maxwell_residual");
    auto field = [&](std::span<const double> x, std::span<double> out) {
        const SpaceTimePoint X = SpaceTimePoint::at(x[0], {x[1], x[2], x[3]}, c);
        const EMFields f = state(X);
        detail::pack_maxwell_sample(f, f.D, f.B, sources ? (*sources)(X) : Vec4{}, c, out);
    };
    return detail::maxwell_report(field, grid, c, ropts, exclude);
}

} // namespace covforge
