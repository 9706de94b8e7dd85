#pragma once

#include "covforge/linalg.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace covforge {

// Space-time point with x0 = ct in length units.
struct SpaceTimePoint {
    double x0 = 0.0;
    Vec3 x{};

    double time(double c) const { return x0 / c; }
    static SpaceTimePoint at(double t, const Vec3& r, double c = 1.0) { return {c * t, r}; }
};

struct TemporalFactor {
    enum class Kind { constant, linear, quadratic, cosine, sine };

    Kind kind = Kind::constant;
    double omega = 0.0;
    double phase = 0.0;

    static TemporalFactor constant() { return {}; }
    static TemporalFactor linear() { return {Kind::linear}; }
    static TemporalFactor quadratic() { return {Kind::quadratic}; }
    static TemporalFactor cosine(double w, double phi = 0.0) { return {Kind::cosine, w, phi}; }
    static TemporalFactor sine(double w, double phi = 0.0) { return {Kind::sine, w, phi}; }

    // Value and first two time derivatives at physical time t.
    std::array<double, 3> eval(double t) const
    {
        switch (kind) {
        case Kind::constant: return {1.0, 0.0, 0.0};
        case Kind::linear: return {t, 1.0, 0.0};
        case Kind::quadratic: return {t * t, 2.0 * t, 2.0};
        case Kind::cosine: {
            const double c = std::cos(omega * t + phase), s = std::sin(omega * t + phase);
            return {c, -omega * s, -omega * omega * c};
        }
        case Kind::sine: {
            const double c = std::cos(omega * t + phase), s = std::sin(omega * t + phase);
            return {s, omega * c, -omega * omega * s};
        }
        }
        return {0.0, 0.0, 0.0};
    }
};

// One term coeff * x^px y^py z^pz * T(t) of displacement component `component`
// (0-based here; the JSON form uses 1..3).
struct DisplacementTerm {
    int component = 0;
    double coeff = 0.0;
    std::array<int, 3> powers{0, 0, 0};
    TemporalFactor time;
};

// Closed-form displacement field u(r, t); the time component U^0 is zero.
struct DisplacementSpec {
    std::vector<DisplacementTerm> terms;

    DisplacementSpec& add(int component, double coeff, std::array<int, 3> powers = {0, 0, 0},
                          TemporalFactor time = {})
    {
        terms.push_back({component, coeff, powers, time});
        return *this;
    }

    bool empty() const { return terms.empty(); }

    // A field with no spatial dependence.
    bool spatially_uniform() const
    {
        for (const auto& t : terms)
            if (t.powers != std::array<int, 3>{0, 0, 0}) return false;
        return true;
    }

    void validate() const
    {
        for (const auto& t : terms) {
            if (t.component < 0 || t.component > 2)
                throw std::invalid_argument("displacement term component index must be 0, 1 or 2");
            for (int p : t.powers)
                if (p < 0 || p > 8) throw std::invalid_argument("displacement exponents must lie in [0, 8]");
            if (!std::isfinite(t.coeff) || !std::isfinite(t.time.omega) || !std::isfinite(t.time.phase))
                throw std::invalid_argument("displacement term has a non-finite parameter");
        }
    }
};

// u and every derivative the kinematics needs, all with respect to physical
// time t (u_dot = du/dt) and Cartesian space.
struct DisplacementJet {
    Vec3 u{};
    Mat3 grad{};                // grad[a][b] = d_b u_a
    Vec3 u_dot{};
    Vec3 u_ddot{};
    Mat3 grad_dot{};            // grad_dot[a][b] = d_b du_a/dt
    std::array<Mat3, 3> hess{}; // hess[a][l][s] = d_l d_s u_a
};

enum class JetOrder { first, full };

namespace detail {

// x^p and its first two derivatives
inline std::array<double, 3> power_jet(double x, int p)
{
    if (p == 0) return {1.0, 0.0, 0.0};
    double xm2 = 1.0;
    for (int i = 0; i < p - 2; ++i) xm2 *= x;
    if (p == 1) return {x, 1.0, 0.0};
    const double xm1 = xm2 * x;
    return {xm1 * x, p * xm1, p * (p - 1) * xm2};
}

} // namespace detail

// Exact analytic evaluation of the term sum. With JetOrder::first only u,
// grad and u_dot are filled.
inline DisplacementJet eval_displacement(const DisplacementSpec& spec, const SpaceTimePoint& X, double c = 1.0,
                                         JetOrder order = JetOrder::full)
{
    DisplacementJet j;
    const double t = X.time(c);
    for (const auto& term : spec.terms) {
        const auto px = detail::power_jet(X.x[0], term.powers[0]);
        const auto py = detail::power_jet(X.x[1], term.powers[1]);
        const auto pz = detail::power_jet(X.x[2], term.powers[2]);
        const auto tf = term.time.eval(t);
        const int a = term.component;
        const double m = px[0] * py[0] * pz[0];
        const Vec3 g{px[1] * py[0] * pz[0], px[0] * py[1] * pz[0], px[0] * py[0] * pz[1]};

        j.u[a] += term.coeff * m * tf[0];
        j.u_dot[a] += term.coeff * m * tf[1];
        for (int b = 0; b < 3; ++b) j.grad[a][b] += term.coeff * g[b] * tf[0];
        if (order == JetOrder::first) continue;

        j.u_ddot[a] += term.coeff * m * tf[2];
        for (int b = 0; b < 3; ++b) j.grad_dot[a][b] += term.coeff * g[b] * tf[1];
        const Mat3 h{{{px[2] * py[0] * pz[0], px[1] * py[1] * pz[0], px[1] * py[0] * pz[1]},
                      {px[1] * py[1] * pz[0], px[0] * py[2] * pz[0], px[0] * py[1] * pz[1]},
                      {px[1] * py[0] * pz[1], px[0] * py[1] * pz[1], px[0] * py[0] * pz[2]}}};
        for (int l = 0; l < 3; ++l)
            for (int s = 0; s < 3; ++s) j.hess[a][l][s] += term.coeff * h[l][s] * tf[0];
    }
    return j;
}

using DisplacementFn = std::function<Vec3(const Vec3& r, double t)>;

// Fourth-order central differences for externally supplied displacement
// fields that have no closed form. `h` is used for both space and time.
inline DisplacementJet numeric_displacement_jet(const DisplacementFn& u, const SpaceTimePoint& X, double h,
                                                double c = 1.0)
{
    const double t = X.time(c);
    auto at = [&](const Vec3& dr, double dt) { return u(X.x + dr, t + dt); };
    auto shift = [](int axis, double s) {
        Vec3 d{};
        if (axis < 3) d[axis] = s;
        return d;
    };
    // axis 3 is time
    auto sample = [&](int axis, double s) { return axis < 3 ? at(shift(axis, s), 0.0) : at(Vec3{}, s); };
    auto first = [&](int axis) {
        const Vec3 f2 = sample(axis, 2 * h), f1 = sample(axis, h), m1 = sample(axis, -h), m2 = sample(axis, -2 * h);
        Vec3 r{};
        for (int a = 0; a < 3; ++a) r[a] = (-f2[a] + 8 * f1[a] - 8 * m1[a] + m2[a]) / (12 * h);
        return r;
    };
    const Vec3 f0 = at(Vec3{}, 0.0);
    auto second = [&](int axis) {
        const Vec3 f2 = sample(axis, 2 * h), f1 = sample(axis, h), m1 = sample(axis, -h), m2 = sample(axis, -2 * h);
        Vec3 r{};
        for (int a = 0; a < 3; ++a) r[a] = (-f2[a] + 16 * f1[a] - 30 * f0[a] + 16 * m1[a] - m2[a]) / (12 * h * h);
        return r;
    };
    static constexpr std::array<double, 4> w{1.0, -8.0, 8.0, -1.0};
    static constexpr std::array<double, 4> off{-2.0, -1.0, 1.0, 2.0};
    auto mixed = [&](int ax1, int ax2) {
        Vec3 r{};
        for (int i = 0; i < 4; ++i)
            for (int k = 0; k < 4; ++k) {
                Vec3 dr{};
                double dt = 0.0;
                (ax1 < 3 ? dr[ax1] : dt) += off[i] * h;
                (ax2 < 3 ? dr[ax2] : dt) += off[k] * h;
                const Vec3 f = at(dr, dt);
                for (int a = 0; a < 3; ++a) r[a] += w[i] * w[k] * f[a];
            }
        for (int a = 0; a < 3; ++a) r[a] /= 144.0 * h * h;
        return r;
    };

    DisplacementJet j;
    j.u = f0;
    for (int b = 0; b < 3; ++b) {
        const Vec3 d = first(b);
        for (int a = 0; a < 3; ++a) j.grad[a][b] = d[a];
    }
    j.u_dot = first(3);
    j.u_ddot = second(3);
    for (int b = 0; b < 3; ++b) {
        const Vec3 d = mixed(b, 3);
        for (int a = 0; a < 3; ++a) j.grad_dot[a][b] = d[a];
    }
    for (int l = 0; l < 3; ++l)
        for (int s = l; s < 3; ++s) {
            const Vec3 d = (l == s) ? second(l) : mixed(l, s);
            for (int a = 0; a < 3; ++a) j.hess[a][l][s] = j.hess[a][s][l] = d[a];
        }
    return j;
}

} // namespace covforge
