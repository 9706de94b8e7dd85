#pragma once

#include <array>
#include <cmath>
#include <cstddef>

// Fixed-size vectors and matrices for 3-space and space-time. Index 0 of a
// four-vector is the time component x0 = ct.

namespace covforge {

template <class T, std::size_t N>
using VecN = std::array<T, N>;

template <class T, std::size_t N>
using MatN = std::array<std::array<T, N>, N>;

using Vec3 = VecN<double, 3>;
using Vec4 = VecN<double, 4>;
using Mat3 = MatN<double, 3>;
using Mat4 = MatN<double, 4>;

template <class T, std::size_t N>
constexpr MatN<T, N> identity()
{
    MatN<T, N> m{};
    for (std::size_t i = 0; i < N; ++i) m[i][i] = T(1);
    return m;
}

template <class T, std::size_t N>
constexpr MatN<T, N> transpose(const MatN<T, N>& a)
{
    MatN<T, N> r{};
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) r[i][j] = a[j][i];
    return r;
}

template <class T, std::size_t N>
constexpr MatN<T, N> operator*(const MatN<T, N>& a, const MatN<T, N>& b)
{
    MatN<T, N> r{};
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t k = 0; k < N; ++k) {
            const T aik = a[i][k];
            for (std::size_t j = 0; j < N; ++j) r[i][j] += aik * b[k][j];
        }
    return r;
}

template <class T, std::size_t N>
constexpr VecN<T, N> operator*(const MatN<T, N>& a, const VecN<T, N>& v)
{
    VecN<T, N> r{};
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) r[i] += a[i][j] * v[j];
    return r;
}

template <class T, std::size_t N>
constexpr VecN<T, N> operator+(VecN<T, N> a, const VecN<T, N>& b)
{
    for (std::size_t i = 0; i < N; ++i) a[i] += b[i];
    return a;
}

template <class T, std::size_t N>
constexpr VecN<T, N> operator-(VecN<T, N> a, const VecN<T, N>& b)
{
    for (std::size_t i = 0; i < N; ++i) a[i] -= b[i];
    return a;
}

template <class T, std::size_t N>
constexpr VecN<T, N> operator*(double s, VecN<T, N> a)
{
    for (auto& x : a) x *= s;
    return a;
}

template <class T, std::size_t N>
constexpr MatN<T, N> operator+(MatN<T, N> a, const MatN<T, N>& b)
{
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) a[i][j] += b[i][j];
    return a;
}

template <class T, std::size_t N>
constexpr MatN<T, N> operator-(MatN<T, N> a, const MatN<T, N>& b)
{
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) a[i][j] -= b[i][j];
    return a;
}

template <class T, std::size_t N>
constexpr MatN<T, N> operator*(double s, MatN<T, N> a)
{
    for (auto& row : a)
        for (auto& x : row) x *= s;
    return a;
}

inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

inline Vec3 cross(const Vec3& a, const Vec3& b)
{
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

template <class T, std::size_t N>
double max_abs(const MatN<T, N>& a)
{
    double m = 0.0;
    for (const auto& row : a)
        for (const auto& x : row) m = std::max(m, static_cast<double>(std::abs(x)));
    return m;
}

template <class T, std::size_t N>
double max_abs(const VecN<T, N>& a)
{
    double m = 0.0;
    for (const auto& x : a) m = std::max(m, static_cast<double>(std::abs(x)));
    return m;
}

template <class T>
constexpr T det(const MatN<T, 3>& m)
{
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
         - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
         + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

// Adjugate (transposed cofactor matrix): adj(m) * m = det(m) * I.
template <class T>
constexpr MatN<T, 3> adjugate(const MatN<T, 3>& m)
{
    MatN<T, 3> r{};
    r[0][0] = m[1][1] * m[2][2] - m[1][2] * m[2][1];
    r[0][1] = m[0][2] * m[2][1] - m[0][1] * m[2][2];
    r[0][2] = m[0][1] * m[1][2] - m[0][2] * m[1][1];
    r[1][0] = m[1][2] * m[2][0] - m[1][0] * m[2][2];
    r[1][1] = m[0][0] * m[2][2] - m[0][2] * m[2][0];
    r[1][2] = m[0][2] * m[1][0] - m[0][0] * m[1][2];
    r[2][0] = m[1][0] * m[2][1] - m[1][1] * m[2][0];
    r[2][1] = m[0][1] * m[2][0] - m[0][0] * m[2][1];
    r[2][2] = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    return r;
}

// Caller is responsible for checking det(m) != 0.
template <class T>
constexpr MatN<T, 3> inverse(const MatN<T, 3>& m)
{
    const T d = det(m);
    auto r = adjugate(m);
    for (auto& row : r)
        for (auto& x : row) x /= d;
    return r;
}

// Minkowski metric, signature (+,-,-,-).
inline constexpr Mat4 minkowski()
{
    Mat4 eta{};
    eta[0][0] = 1.0;
    eta[1][1] = eta[2][2] = eta[3][3] = -1.0;
    return eta;
}

inline constexpr double metric_sign(std::size_t i) { return i == 0 ? 1.0 : -1.0; }

} // namespace covforge
