#pragma once

#include <array>
#include <cstddef>

namespace covforge {

// Sign of the permutation (i, j, k) of (0, 1, 2); zero for repeated indices.
constexpr int levi_civita3(std::size_t i, std::size_t j, std::size_t k)
{
    if (i == j || j == k || i == k) return 0;
    // even permutations of (0,1,2)
    if ((i == 0 && j == 1) || (i == 1 && j == 2) || (i == 2 && j == 0)) return 1;
    return -1;
}

namespace detail {

constexpr int permutation_sign4(std::size_t i, std::size_t j, std::size_t k, std::size_t l)
{
    std::array<std::size_t, 4> p{i, j, k, l};
    for (std::size_t a = 0; a < 4; ++a)
        for (std::size_t b = a + 1; b < 4; ++b)
            if (p[a] == p[b]) return 0;
    int sign = 1;
    for (std::size_t a = 0; a < 4; ++a)
        for (std::size_t b = a + 1; b < 4; ++b)
            if (p[a] > p[b]) sign = -sign;
    return sign;
}

} // namespace detail

// Completely antisymmetric unit tensor with e^{0123} = +1. Lowering all four
// indices with the (+,-,-,-) metric flips the sign, so e_{0123} = -1.
constexpr int levi_civita4_upper(std::size_t i, std::size_t j, std::size_t k, std::size_t l)
{
    return detail::permutation_sign4(i, j, k, l);
}

constexpr int levi_civita4_lower(std::size_t i, std::size_t j, std::size_t k, std::size_t l)
{
    return -detail::permutation_sign4(i, j, k, l);
}

} // namespace covforge
