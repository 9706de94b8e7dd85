#pragma once

#include "covforge/displacement.hpp"
#include "covforge/errors.hpp"
#include "covforge/levi_civita.hpp"
#include "covforge/linalg.hpp"
#include "covforge/scalar_function.hpp"

#include <array>
#include <cmath>
#include <string>
#include <variant>
#include <vector>

namespace covforge {

struct KinematicsOptions {
    double c = 1.0;
    // Displacements with det(I - grad u) below this are inadmissible.
    double det_tolerance = 1e-8;
};

struct MonomialTerm {
    int component = 0; // 0-based
    double coeff = 0.0;
    std::array<int, 3> powers{0, 0, 0};
};

// Time-independent spatial map r' = W(r) = (x, y, f(z)) + sum of monomials.
struct SpatialMap {
    ScalarFunction fz = ScalarFunction::identity();
    std::vector<MonomialTerm> extra;

    static SpatialMap identity() { return {}; }
    static SpatialMap z_profile(ScalarFunction f) { return {std::move(f), {}}; }

    bool is_identity() const { return fz.is_identity() && extra.empty(); }

    Vec3 operator()(const Vec3& r) const
    {
        Vec3 w{r[0], r[1], fz(r[2])};
        for (const auto& t : extra) {
            const auto px = detail::power_jet(r[0], t.powers[0]);
            const auto py = detail::power_jet(r[1], t.powers[1]);
            const auto pz = detail::power_jet(r[2], t.powers[2]);
            w[t.component] += t.coeff * px[0] * py[0] * pz[0];
        }
        return w;
    }

    // M[a][b] = d_b W_a
    Mat3 jacobian(const Vec3& r) const
    {
        Mat3 m{};
        m[0][0] = 1.0;
        m[1][1] = 1.0;
        m[2][2] = fz.d1(r[2]);
        for (const auto& t : extra) {
            const auto px = detail::power_jet(r[0], t.powers[0]);
            const auto py = detail::power_jet(r[1], t.powers[1]);
            const auto pz = detail::power_jet(r[2], t.powers[2]);
            m[t.component][0] += t.coeff * px[1] * py[0] * pz[0];
            m[t.component][1] += t.coeff * px[0] * py[1] * pz[0];
            m[t.component][2] += t.coeff * px[0] * py[0] * pz[1];
        }
        return m;
    }

    // hess[a][l][s] = d_l d_s W_a
    std::array<Mat3, 3> hessian(const Vec3& r) const
    {
        std::array<Mat3, 3> h{};
        h[2][2][2] = fz.d2(r[2]);
        for (const auto& t : extra) {
            const auto px = detail::power_jet(r[0], t.powers[0]);
            const auto py = detail::power_jet(r[1], t.powers[1]);
            const auto pz = detail::power_jet(r[2], t.powers[2]);
            const Mat3 m{{{px[2] * py[0] * pz[0], px[1] * py[1] * pz[0], px[1] * py[0] * pz[1]},
                          {px[1] * py[1] * pz[0], px[0] * py[2] * pz[0], px[0] * py[1] * pz[1]},
                          {px[1] * py[0] * pz[1], px[0] * py[1] * pz[1], px[0] * py[0] * pz[2]}}};
            for (int l = 0; l < 3; ++l)
                for (int s = 0; s < 3; ++s) h[t.component][l][s] += t.coeff * m[l][s];
        }
        return h;
    }

    void validate() const
    {
        fz.validate();
        for (const auto& t : extra) {
            if (t.component < 0 || t.component > 2)
                throw std::invalid_argument("spatial map term component index must be 0, 1 or 2");
            for (int p : t.powers)
                if (p < 0 || p > 8) throw std::invalid_argument("spatial map exponents must lie in [0, 8]");
        }
    }
};

// Either the Euler form X' = X - U or a time-independent spatial map.
using GeneralTransform = std::variant<DisplacementSpec, SpatialMap>;

// Nonzero Christoffel blocks of an Euler transformation (and of spatial maps,
// which only populate `spatial`). Gamma^0_{jl} vanishes identically.
struct Christoffel {
    Vec3 time_time{};                // Gamma^a_{00}
    Mat3 time_space{};               // [a][b] = Gamma^a_{0b} = Gamma^a_{b0}
    std::array<Mat3, 3> spatial{};   // [a][l][s] = Gamma^a_{ls}

    // Full four-index access Gamma^i_{jl}.
    double operator()(std::size_t i, std::size_t j, std::size_t l) const
    {
        if (i == 0) return 0.0;
        const std::size_t a = i - 1;
        if (j == 0 && l == 0) return time_time[a];
        if (j == 0) return time_space[a][l - 1];
        if (l == 0) return time_space[a][j - 1];
        return spatial[a][j - 1][l - 1];
    }
};

struct KinematicsBundle {
    Mat4 lambda{};      // Lambda^i_j = dX'^i / dX^j, row i, column j
    Mat4 lambda_inv{};  // reciprocal matrix
    double sqrt_minus_g = 1.0;
    Mat4 g_cov{};
    Mat4 g_contra{};
    Christoffel christoffel;
    Mat3 s{};           // S = I - grad u (Euler) or M = grad W (spatial map)
    Mat3 s_inv{};
};

namespace detail {

inline void require_admissible(double det_s, const KinematicsOptions& opts, const char* what)
{
    if (!(det_s >= opts.det_tolerance))
        throw SingularJacobian(std::string(what) + " determinant " + format_number(det_s)
                               + " is below the admissibility threshold " + format_number(opts.det_tolerance));
}

inline Mat3 euler_s(const DisplacementJet& j)
{
    Mat3 s = identity<double, 3>();
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) s[a][b] -= j.grad[a][b];
    return s;
}

} // namespace detail

// Jacobian pair, metrics and Christoffel symbols of the Euler transformation
// from a precomputed displacement jet.
inline KinematicsBundle euler_kinematics(const DisplacementJet& j, const KinematicsOptions& opts = {})
{
    const double c = opts.c;
    KinematicsBundle k;
    k.s = detail::euler_s(j);
    const double det_s = det(k.s);
    detail::require_admissible(det_s, opts, "det(I - grad u)");
    k.s_inv = inverse(k.s);
    k.sqrt_minus_g = det_s;

    k.lambda[0][0] = 1.0;
    k.lambda_inv[0][0] = 1.0;
    for (int a = 0; a < 3; ++a) {
        k.lambda[a + 1][0] = -j.u_dot[a] / c;
        double acc = 0.0;
        for (int b = 0; b < 3; ++b) {
            k.lambda[a + 1][b + 1] = k.s[a][b];
            k.lambda_inv[a + 1][b + 1] = k.s_inv[a][b];
            acc += j.u_dot[b] * k.s_inv[a][b];
        }
        k.lambda_inv[a + 1][0] = acc / c;
    }

    // covariant metric
    k.g_cov[0][0] = 1.0 - dot(j.u_dot, j.u_dot) / (c * c);
    for (int a = 0; a < 3; ++a) {
        double g0a = 0.0;
        for (int b = 0; b < 3; ++b) g0a += j.u_dot[b] * k.s[b][a];
        k.g_cov[0][a + 1] = k.g_cov[a + 1][0] = g0a / c;
        for (int b = 0; b < 3; ++b) {
            double gab = 0.0;
            for (int l = 0; l < 3; ++l) gab += k.s[l][a] * k.s[l][b];
            k.g_cov[a + 1][b + 1] = -gab;
        }
    }

    // contravariant metric
    k.g_contra[0][0] = 1.0;
    for (int a = 0; a < 3; ++a) {
        k.g_contra[0][a + 1] = k.g_contra[a + 1][0] = k.lambda_inv[a + 1][0];
        for (int b = 0; b < 3; ++b) {
            double gab = 0.0;
            for (int s = 0; s < 3; ++s)
                for (int l = 0; l < 3; ++l) {
                    const double inner = (s == l ? 1.0 : 0.0) - j.u_dot[s] * j.u_dot[l] / (c * c);
                    gab += k.s_inv[a][s] * k.s_inv[b][l] * inner;
                }
            k.g_contra[a + 1][b + 1] = -gab;
        }
    }

    // Christoffel blocks: every block carries S^{-1}_{a nu} contracted on the
    // displaced component nu.
    for (int a = 0; a < 3; ++a) {
        double tt = 0.0;
        for (int nu = 0; nu < 3; ++nu) tt += j.u_ddot[nu] * k.s_inv[a][nu];
        k.christoffel.time_time[a] = -tt / (c * c);
        for (int b = 0; b < 3; ++b) {
            double ts = 0.0;
            for (int nu = 0; nu < 3; ++nu) ts += j.grad_dot[nu][b] * k.s_inv[a][nu];
            k.christoffel.time_space[a][b] = -ts / c;
            for (int s = 0; s < 3; ++s) {
                double sp = 0.0;
                for (int nu = 0; nu < 3; ++nu) sp += j.hess[nu][b][s] * k.s_inv[a][nu];
                k.christoffel.spatial[a][b][s] = -sp;
            }
        }
    }
    return k;
}

inline KinematicsBundle euler_kinematics(const DisplacementSpec& spec, const SpaceTimePoint& X,
                                         const KinematicsOptions& opts = {})
{
    return euler_kinematics(eval_displacement(spec, X, opts.c), opts);
}

struct AuxExpansionFields {
    Vec3 a_vec{};
    Mat3 sigma{};
    std::array<Mat3, 3> b_tensor{}; // [nu][a][b] = b_{nu a b}
};

struct DeterminantExpansion {
    double sqrt_minus_g = 1.0; // 1 - d_l a_l
    double div_a = 0.0;        // d_l a_l
    AuxExpansionFields aux;
};

namespace detail {

// sigma_ab = 1/2 e_{a mu nu} e_{b rho lam} (d_mu u_rho)(d_nu u_lam)
inline Mat3 sigma_tensor(const Mat3& grad)
{
    Mat3 sigma{};
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
            double s = 0.0;
            for (int mu = 0; mu < 3; ++mu)
                for (int nu = 0; nu < 3; ++nu) {
                    const int e1 = levi_civita3(a, mu, nu);
                    if (!e1) continue;
                    for (int rho = 0; rho < 3; ++rho)
                        for (int lam = 0; lam < 3; ++lam) {
                            const int e2 = levi_civita3(b, rho, lam);
                            if (e2) s += e1 * e2 * grad[rho][mu] * grad[lam][nu];
                        }
                }
            sigma[a][b] = 0.5 * s;
        }
    return sigma;
}

} // namespace detail

// sqrt(-g) = 1 - d_l a_l with a_l = u_l + 1/2 (u_n d_n u_l - u_l d_n u_n) + 1/3 sigma_{ln} u_n.
// The divergence is taken term by term with the product rule.
inline DeterminantExpansion det_via_expansion(const DisplacementJet& j)
{
    DeterminantExpansion out;
    const Mat3& G = j.grad;
    const Vec3& u = j.u;
    const Mat3 sigma = detail::sigma_tensor(G);
    out.aux.sigma = sigma;

    const double div_u = G[0][0] + G[1][1] + G[2][2];
    for (int l = 0; l < 3; ++l) {
        double conv = 0.0, su = 0.0;
        for (int n = 0; n < 3; ++n) {
            conv += u[n] * G[l][n];
            su += sigma[l][n] * u[n];
        }
        out.aux.a_vec[l] = u[l] + 0.5 * (conv - u[l] * div_u) + su / 3.0;
    }

    // d_l sigma_{ln}, from second derivatives of u
    Vec3 div_sigma{};
    for (int n = 0; n < 3; ++n) {
        double s = 0.0;
        for (int l = 0; l < 3; ++l)
            for (int mu = 0; mu < 3; ++mu)
                for (int nu = 0; nu < 3; ++nu) {
                    const int e1 = levi_civita3(l, mu, nu);
                    if (!e1) continue;
                    for (int rho = 0; rho < 3; ++rho)
                        for (int lam = 0; lam < 3; ++lam) {
                            const int e2 = levi_civita3(n, rho, lam);
                            if (!e2) continue;
                            s += e1 * e2
                               * (j.hess[rho][l][mu] * G[lam][nu] + G[rho][mu] * j.hess[lam][l][nu]);
                        }
                }
        div_sigma[n] = 0.5 * s;
    }

    double div = div_u;
    double half = 0.0, third = 0.0;
    for (int l = 0; l < 3; ++l)
        for (int n = 0; n < 3; ++n) {
            // d_l (u_n d_n u_l) - d_l (u_l d_n u_n)
            half += G[n][l] * G[l][n] + u[n] * j.hess[l][l][n];
            half -= G[l][l] * G[n][n] + u[l] * j.hess[n][l][n];
            // d_l (sigma_{ln} u_n)
            third += sigma[l][n] * G[n][l];
        }
    for (int n = 0; n < 3; ++n) third += div_sigma[n] * u[n];
    div += 0.5 * half + third / 3.0;

    out.div_a = div;
    out.sqrt_minus_g = 1.0 - div;

    // b_{nu a b} = u_nu d_ab - u_a d_nu b - 1/2 u_l e_{l b s} e_{nu a m} d_m u_s
    for (int nu = 0; nu < 3; ++nu)
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) {
                double v = (a == b ? u[nu] : 0.0) - (nu == b ? u[a] : 0.0);
                double e = 0.0;
                for (int l = 0; l < 3; ++l)
                    for (int s = 0; s < 3; ++s) {
                        const int e1 = levi_civita3(l, b, s);
                        if (!e1) continue;
                        for (int m = 0; m < 3; ++m) {
                            const int e2 = levi_civita3(nu, a, m);
                            if (e2) e += u[l] * e1 * e2 * G[s][m];
                        }
                    }
                out.aux.b_tensor[nu][a][b] = v - 0.5 * e;
            }
    return out;
}

inline DeterminantExpansion det_via_expansion(const DisplacementSpec& spec, const SpaceTimePoint& X,
                                              const KinematicsOptions& opts = {})
{
    return det_via_expansion(eval_displacement(spec, X, opts.c));
}

// sqrt(-g) S^{-1}_ab = d_ab - d_nu b_{nu a b}, differentiated term by term.
inline Mat3 cofactor_via_expansion(const DisplacementJet& j)
{
    const Mat3& G = j.grad;
    const Vec3& u = j.u;
    const double div_u = G[0][0] + G[1][1] + G[2][2];
    Mat3 out{};
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
            // d_nu (u_nu d_ab) - d_nu (u_a d_nu b)
            double db = (a == b ? div_u : 0.0) - G[a][b];
            // d_nu of the Levi-Civita term
            double e = 0.0;
            for (int nu = 0; nu < 3; ++nu)
                for (int l = 0; l < 3; ++l)
                    for (int s = 0; s < 3; ++s) {
                        const int e1 = levi_civita3(l, b, s);
                        if (!e1) continue;
                        for (int m = 0; m < 3; ++m) {
                            const int e2 = levi_civita3(nu, a, m);
                            if (!e2) continue;
                            e += e1 * e2 * (G[l][nu] * G[s][m] + u[l] * j.hess[s][nu][m]);
                        }
                    }
            db -= 0.5 * e;
            out[a][b] = (a == b ? 1.0 : 0.0) - db;
        }
    return out;
}

inline Mat3 cofactor_via_expansion(const DisplacementSpec& spec, const SpaceTimePoint& X,
                                   const KinematicsOptions& opts = {})
{
    return cofactor_via_expansion(eval_displacement(spec, X, opts.c));
}

// Bundle for a time-independent spatial map: Lambda^a_b = M_ab, sqrt(-g) = det M.
inline KinematicsBundle general_jacobian(const SpatialMap& map, const SpaceTimePoint& X,
                                         const KinematicsOptions& opts = {})
{
    KinematicsBundle k;
    k.s = map.jacobian(X.x);
    const double det_m = det(k.s);
    detail::require_admissible(det_m, opts, "det(grad W)");
    k.s_inv = inverse(k.s);
    k.sqrt_minus_g = det_m;
    k.lambda[0][0] = k.lambda_inv[0][0] = 1.0;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
            k.lambda[a + 1][b + 1] = k.s[a][b];
            k.lambda_inv[a + 1][b + 1] = k.s_inv[a][b];
        }
    const Mat4 eta = minkowski();
    k.g_cov = transpose(k.lambda) * eta * k.lambda;
    k.g_contra = k.lambda_inv * eta * transpose(k.lambda_inv);

    const auto h = map.hessian(X.x);
    for (int a = 0; a < 3; ++a)
        for (int l = 0; l < 3; ++l)
            for (int s = 0; s < 3; ++s) {
                double v = 0.0;
                for (int nu = 0; nu < 3; ++nu) v += k.s_inv[a][nu] * h[nu][l][s];
                k.christoffel.spatial[a][l][s] = v;
            }
    return k;
}

inline KinematicsBundle general_jacobian(const GeneralTransform& t, const SpaceTimePoint& X,
                                         const KinematicsOptions& opts = {})
{
    if (const auto* spec = std::get_if<DisplacementSpec>(&t)) return euler_kinematics(*spec, X, opts);
    return general_jacobian(std::get<SpatialMap>(t), X, opts);
}

// First-order data needed to transport tensors: image point W(X), the
// Jacobian pair and sqrt(-g). Cheaper than the full bundle.
struct PointJacobian {
    SpaceTimePoint image;
    Mat4 lambda{};
    Mat4 lambda_inv{};
    double sqrt_minus_g = 1.0;
    Mat3 s{};
    Mat3 s_inv{};
    Vec3 u_dot{};
};

inline PointJacobian point_jacobian(const DisplacementSpec& spec, const SpaceTimePoint& X,
                                    const KinematicsOptions& opts = {})
{
    const auto j = eval_displacement(spec, X, opts.c, JetOrder::first);
    PointJacobian p;
    p.image = {X.x0, X.x - j.u};
    p.s = detail::euler_s(j);
    p.sqrt_minus_g = det(p.s);
    detail::require_admissible(p.sqrt_minus_g, opts, "det(I - grad u)");
    p.s_inv = inverse(p.s);
    p.u_dot = j.u_dot;
    p.lambda[0][0] = p.lambda_inv[0][0] = 1.0;
    for (int a = 0; a < 3; ++a) {
        p.lambda[a + 1][0] = -j.u_dot[a] / opts.c;
        double acc = 0.0;
        for (int b = 0; b < 3; ++b) {
            p.lambda[a + 1][b + 1] = p.s[a][b];
            p.lambda_inv[a + 1][b + 1] = p.s_inv[a][b];
            acc += j.u_dot[b] * p.s_inv[a][b];
        }
        p.lambda_inv[a + 1][0] = acc / opts.c;
    }
    return p;
}

inline PointJacobian point_jacobian(const SpatialMap& map, const SpaceTimePoint& X,
                                    const KinematicsOptions& opts = {})
{
    PointJacobian p;
    p.image = {X.x0, map(X.x)};
    p.s = map.jacobian(X.x);
    p.sqrt_minus_g = det(p.s);
    detail::require_admissible(p.sqrt_minus_g, opts, "det(grad W)");
    p.s_inv = inverse(p.s);
    p.lambda[0][0] = p.lambda_inv[0][0] = 1.0;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
            p.lambda[a + 1][b + 1] = p.s[a][b];
            p.lambda_inv[a + 1][b + 1] = p.s_inv[a][b];
        }
    return p;
}

inline PointJacobian point_jacobian(const GeneralTransform& t, const SpaceTimePoint& X,
                                    const KinematicsOptions& opts = {})
{
    if (const auto* spec = std::get_if<DisplacementSpec>(&t)) return point_jacobian(*spec, X, opts);
    return point_jacobian(std::get<SpatialMap>(t), X, opts);
}

inline bool is_identity(const GeneralTransform& t)
{
    if (const auto* spec = std::get_if<DisplacementSpec>(&t)) return spec->empty();
    return std::get<SpatialMap>(t).is_identity();
}

inline void validate(const GeneralTransform& t)
{
    std::visit([](const auto& v) { v.validate(); }, t);
}

} // namespace covforge
