#pragma once

#include "covforge/continuity.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace covforge::seeds {

// Closed-form four-currents with d_i j^i = 0 identically.

// rho = rho0 cos(k.r - w t), j = (w / |k|^2) k rho.
inline FourCurrentField plane_wave_current(double rho0, Vec3 k, double omega, double c = 1.0)
{
    const double k2 = dot(k, k);
    return {[=](const SpaceTimePoint& X) {
        const double rho = rho0 * std::cos(dot(k, X.x) - omega * X.time(c));
        const Vec3 j = (omega * rho / k2) * k;
        return Vec4{c * rho, j[0], j[1], j[2]};
    }};
}

// Gaussian blob rho0 exp(-|r - r0 - v t|^2 / w^2) moving rigidly, j = v rho.
inline FourCurrentField translating_blob(double rho0, Vec3 r0, Vec3 v, double width, double c = 1.0)
{
    return {[=](const SpaceTimePoint& X) {
        const Vec3 d = X.x - r0 - X.time(c) * v;
        const double rho = rho0 * std::exp(-dot(d, d) / (width * width));
        return Vec4{c * rho, v[0] * rho, v[1] * rho, v[2] * rho};
    }};
}

// Static rho = rho0 cos x cos y plus j = curl A with
// A = (sin(y + z) cos w t, sin(z + x), sin(x + y) sin w t).
inline FourCurrentField static_charge_curl_current(double rho0, double amp, double omega, double c = 1.0)
{
    return {[=](const SpaceTimePoint& X) {
        const double t = X.time(c);
        const double x = X.x[0], y = X.x[1], z = X.x[2];
        const double ct = std::cos(omega * t), st = std::sin(omega * t);
        // A_x = sin(y+z) ct, A_y = sin(z+x), A_z = sin(x+y) st
        const double dAz_dy = std::cos(x + y) * st, dAy_dz = std::cos(z + x);
        const double dAx_dz = std::cos(y + z) * ct, dAz_dx = std::cos(x + y) * st;
        const double dAy_dx = std::cos(z + x), dAx_dy = std::cos(y + z) * ct;
        const double rho = rho0 * std::cos(x) * std::cos(y);
        return Vec4{c * rho, amp * (dAz_dy - dAy_dz), amp * (dAx_dz - dAz_dx), amp * (dAy_dx - dAx_dy)};
    }};
}

// Off-axis Gaussian rotating rigidly about z with angular rate w, j = rho (w z^ x r).
inline FourCurrentField rotating_distribution(double rho0, Vec3 center, double width, double omega, double c = 1.0)
{
    return {[=](const SpaceTimePoint& X) {
        const double t = X.time(c);
        const double cw = std::cos(omega * t), sw = std::sin(omega * t);
        // body-frame coordinates: rotate r back by -w t
        const Vec3 b{cw * X.x[0] + sw * X.x[1], -sw * X.x[0] + cw * X.x[1], X.x[2]};
        const Vec3 d = b - center;
        const double rho = rho0 * std::exp(-dot(d, d) / (width * width));
        return Vec4{c * rho, -omega * X.x[1] * rho, omega * X.x[0] * rho, 0.0};
    }};
}

// Oscillating polarization P = p0 x^ exp(-|r|^2/w^2) sin(w t):
// rho = -div P, j = dP/dt.
inline FourCurrentField oscillating_polarization(double p0, double width, double omega, double c = 1.0)
{
    return {[=](const SpaceTimePoint& X) {
        const double t = X.time(c);
        const double g = std::exp(-dot(X.x, X.x) / (width * width));
        const double rho = p0 * (2.0 * X.x[0] / (width * width)) * g * std::sin(omega * t);
        return Vec4{c * rho, p0 * g * omega * std::cos(omega * t), 0.0, 0.0};
    }};
}

struct NamedSeed {
    std::string name;
    FourCurrentField field;
};

// The five seeds used by the synthesis checks, with moderate parameters.
inline std::vector<NamedSeed> standard_currents(double c = 1.0)
{
    return {
        {"plane_wave", plane_wave_current(1.0, {1.0, 0.5, -0.7}, 1.3, c)},
        {"translating_blob", translating_blob(1.0, {0.1, -0.2, 0.0}, {0.3, 0.2, -0.1}, 0.8, c)},
        {"static_charge_curl_current", static_charge_curl_current(1.0, 0.5, 1.1, c)},
        {"rotating_distribution", rotating_distribution(1.0, {0.4, 0.0, 0.1}, 0.7, 0.9, c)},
        {"oscillating_polarization", oscillating_polarization(0.5, 0.9, 1.7, c)},
    };
}

} // namespace covforge::seeds
