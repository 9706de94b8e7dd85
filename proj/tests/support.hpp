#pragma once

#include "covforge/displacement.hpp"
#include "covforge/linalg.hpp"

#include <Eigen/Dense>

#include <random>

namespace covforge::testing {

// Random displacement with total spatial degree <= max_degree.
inline DisplacementSpec random_spec(std::mt19937_64& rng, int max_degree, double max_coeff, int n_terms,
                                    bool time_dependent = true)
{
    std::uniform_int_distribution<int> comp(0, 2), pow(0, max_degree), kind(0, time_dependent ? 4 : 0);
    std::uniform_real_distribution<double> coeff(-max_coeff, max_coeff), omega(0.5, 2.0), phase(0.0, 3.0);
    DisplacementSpec s;
    for (int i = 0; i < n_terms; ++i) {
        std::array<int, 3> p{};
        int budget = max_degree;
        for (int a = 0; a < 3; ++a) {
            p[a] = std::min(pow(rng), budget);
            budget -= p[a];
        }
        TemporalFactor tf;
        switch (kind(rng)) {
        case 1: tf = TemporalFactor::linear(); break;
        case 2: tf = TemporalFactor::quadratic(); break;
        case 3: tf = TemporalFactor::cosine(omega(rng), phase(rng)); break;
        case 4: tf = TemporalFactor::sine(omega(rng), phase(rng)); break;
        default: break;
        }
        s.add(comp(rng), coeff(rng), p, tf);
    }
    return s;
}

inline Vec3 random_point(std::mt19937_64& rng, double radius)
{
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    Vec3 r;
    do {
        r = {d(rng), d(rng), d(rng)};
    } while (norm(r) > 1.0);
    return radius * r;
}

template <std::size_t N>
Eigen::Matrix<double, N, N> to_eigen(const MatN<double, N>& m)
{
    Eigen::Matrix<double, N, N> e;
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) e(i, j) = m[i][j];
    return e;
}

template <std::size_t N>
MatN<double, N> from_eigen(const Eigen::Matrix<double, N, N>& e)
{
    MatN<double, N> m{};
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) m[i][j] = e(i, j);
    return m;
}

template <std::size_t N>
double max_diff(const MatN<double, N>& a, const MatN<double, N>& b)
{
    return max_abs(a - b);
}

template <std::size_t N>
double max_diff(const VecN<double, N>& a, const VecN<double, N>& b)
{
    return max_abs(a - b);
}

} // namespace covforge::testing
