#pragma once

#include "covforge/errors.hpp"
#include "covforge/grid.hpp"
#include "covforge/levi_civita.hpp"
#include "covforge/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <numbers>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace covforge {

using Complex = std::complex<double>;
using CVec4 = VecN<Complex, 4>;
using CMat4 = MatN<Complex, 4>;

// Amplitude f(x) of a field f(x) e^{-i w t} that varies along x only.
struct HarmonicTensorField {
    std::function<CMat4(double)> eval; // F^{ij}, upper indices

    CMat4 operator()(double x) const { return eval(x); }
};

struct HarmonicCurrent {
    std::function<CVec4(double)> eval; // j^i, j^0 = c rho

    CVec4 operator()(double x) const { return eval(x); }
};

// Antisymmetric tensor satisfying d_j F^{ij} = -(4 pi / c) j^i on the lattice
// x_n = domain.min + n h, with d_0 = -i k0 and d_1 the central difference.
struct HalfSolution {
    HarmonicTensorField field;
    HarmonicCurrent current;
    Axis domain;
    double k0 = 0.0; // w / c
    double c = 1.0;
};

using CVec3 = VecN<Complex, 3>;

// Upper-index tensor from field amplitudes: F^{0a} = -E_a, F^{ab} = -e_{abc} B_c.
inline CMat4 tensor_from_eb(const CVec3& E, const CVec3& B)
{
    CMat4 F{};
    for (std::size_t a = 0; a < 3; ++a) {
        F[0][a + 1] = -E[a];
        F[a + 1][0] = E[a];
    }
    for (std::size_t a = 0; a < 3; ++a) {
        const std::size_t b = (a + 1) % 3, c = (a + 2) % 3;
        F[b + 1][c + 1] = -B[a];
        F[c + 1][b + 1] = B[a];
    }
    return F;
}

struct HarmonicEB {
    CVec3 E{};
    CVec3 B{};
};

inline HarmonicEB eb_from_tensor(const CMat4& F)
{
    HarmonicEB f;
    for (std::size_t a = 0; a < 3; ++a) {
        const std::size_t b = (a + 1) % 3, c = (a + 2) % 3;
        f.E[a] = -F[0][a + 1];
        f.B[a] = -F[b + 1][c + 1];
    }
    return f;
}

// F*_{ij} = (1/2) e_{ijmn} F^{mn}, lower indices from upper.
template <class T>
MatN<T, 4> dual(const MatN<T, 4>& upper)
{
    MatN<T, 4> out{};
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) {
            if (i == j) continue;
            T acc{};
            for (std::size_t m = 0; m < 4; ++m)
                for (std::size_t n = 0; n < 4; ++n) {
                    const int e = levi_civita4_lower(i, j, m, n);
                    if (e != 0) acc += static_cast<double>(e) * upper[m][n];
                }
            out[i][j] = 0.5 * acc;
        }
    return out;
}

// Index raising and lowering with diag(+1, -1, -1, -1); the same map both ways.
template <class T>
MatN<T, 4> raise_lower(const MatN<T, 4>& m)
{
    MatN<T, 4> out = m;
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) out[i][j] *= metric_sign(i) * metric_sign(j);
    return out;
}

template <class T>
bool is_antisymmetric(const MatN<T, 4>& m, double rel_tol = 0.0)
{
    double scale = 0.0;
    for (const auto& row : m)
        for (const auto& v : row) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = i; j < 4; ++j)
            if (std::abs(m[i][j] + m[j][i]) > rel_tol * scale) return false;
    return true;
}

namespace detail {

inline std::size_t complex_slot(std::size_t i, std::size_t j) { return 2 * (4 * i + j); }

inline GridSpec line_grid(const Axis& domain)
{
    Axis a = domain;
    if (a.name.empty()) a.name = "x";
    return GridSpec{{a}};
}

inline void store_tensor(const CMat4& F, std::span<double> out)
{
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) {
            out[complex_slot(i, j)] = F[i][j].real();
            out[complex_slot(i, j) + 1] = F[i][j].imag();
        }
}

inline Complex value(const NodeStencil& s, std::size_t slot) { return {s.value(slot), s.value(slot + 1)}; }

// d_j of a sampled complex component: d_0 = -i k0, d_1 = central difference.
inline Complex lower_derivative(const NodeStencil& s, std::size_t j, std::size_t slot, double k0)
{
    if (j == 0) return Complex(0.0, -k0) * value(s, slot);
    if (j == 1) return {s.d(0, slot), s.d(0, slot + 1)};
    return {};
}

} // namespace detail

inline const std::vector<std::string>& sourced_equation_names()
{
    static const std::vector<std::string> names{"sourced_0", "sourced_1", "sourced_2", "sourced_3"};
    return names;
}

inline const std::vector<std::string>& bianchi_equation_names()
{
    static const std::vector<std::string> names{"bianchi_0", "bianchi_1", "bianchi_2", "bianchi_3"};
    return names;
}

// |d_j F^{ij} + (4 pi / c) j^i| on the interior nodes of the line.
inline ResidualReport sourced_residual(const HarmonicTensorField& F, const HarmonicCurrent& j, const Axis& domain,
                                       double k0, double c = 1.0, const ResidualOptions& ropts = {})
{
    auto field = [&](std::span<const double> x, std::span<double> out) {
        detail::store_tensor(F(x[0]), out);
        const CVec4 cur = j(x[0]);
        for (std::size_t i = 0; i < 4; ++i) {
            out[32 + 2 * i] = cur[i].real();
            out[33 + 2 * i] = cur[i].imag();
        }
    };
    constexpr double four_pi = 4.0 * std::numbers::pi;
    auto residual = [k0, c](const NodeStencil& s, std::span<double> out) {
        for (std::size_t i = 0; i < 4; ++i) {
            Complex acc = four_pi / c * detail::value(s, 32 + 2 * i);
            for (std::size_t jj = 0; jj < 2; ++jj) acc += detail::lower_derivative(s, jj, detail::complex_slot(i, jj), k0);
            out[i] = std::abs(acc);
        }
    };
    return residual_report(detail::line_grid(domain), sourced_equation_names(), 40, field, residual, ropts);
}

// |e_{ijkl} d^j F^{kl}| on the interior nodes of the line.
inline ResidualReport bianchi_residual(const HarmonicTensorField& F, const Axis& domain, double k0,
                                       const ResidualOptions& ropts = {})
{
    auto field = [&](std::span<const double> x, std::span<double> out) { detail::store_tensor(F(x[0]), out); };
    auto residual = [k0](const NodeStencil& s, std::span<double> out) {
        for (std::size_t i = 0; i < 4; ++i) {
            Complex acc{};
            for (std::size_t jj = 0; jj < 2; ++jj)
                for (std::size_t k = 0; k < 4; ++k)
                    for (std::size_t l = 0; l < 4; ++l) {
                        const int e = levi_civita4_lower(i, jj, k, l);
                        if (e == 0) continue;
                        acc += static_cast<double>(e) * metric_sign(jj)
                            * detail::lower_derivative(s, jj, detail::complex_slot(k, l), k0);
                    }
            out[i] = std::abs(acc);
        }
    };
    return residual_report(detail::line_grid(domain), bianchi_equation_names(), 32, field, residual, ropts);
}

struct CompletionOptions {
    std::size_t pad = 4;             // lattice nodes beyond each end where the source is kept
    double antisymmetry_tolerance = 1e-12;
    double divergence_tolerance = 1e-9;
};

struct CompletionReport {
    double source_max = 0.0;         // max |s_i| over the source support
    double source_divergence = 0.0;  // max |d^i s_i| over the support interior, relative
    double gauge_residual = 0.0;     // max |d^j A_j| on the domain before the gauge fix
    double input_sourced = 0.0;
    double output_sourced = 0.0;
    double input_bianchi = 0.0;
    double output_bianchi = 0.0;
};

namespace detail {

// Lattice Green's function of (D1 D1 + k0^2) with outgoing waves; D1 D1 only
// couples nodes of equal parity, so odd offsets vanish.
class LatticeGreen {
public:
    LatticeGreen(double h, double k0) : h_(h), k0_(k0)
    {
        if (k0 < 0.0) throw std::invalid_argument("k0 must be non-negative");
        if (k0 > 0.0) {
            const double cos_theta = 1.0 - 2.0 * h * h * k0 * k0;
            if (!(cos_theta > -1.0 + 1e-12)) {
                std::ostringstream os;
                os << "k0 h = " << k0 * h << " reaches the lattice cutoff 1";
                throw ResonantFrequency(os.str());
            }
            theta_ = std::acos(cos_theta);
            amp_ = Complex(0.0, -2.0 * h * h / std::sin(theta_));
        }
    }

    Complex operator()(std::int64_t n) const
    {
        if (n % 2 != 0) return {};
        const double m = static_cast<double>(std::abs(n / 2));
        if (k0_ == 0.0) return {2.0 * h_ * h_ * m, 0.0};
        return amp_ * std::exp(Complex(0.0, theta_ * m));
    }

private:
    double h_;
    double k0_;
    double theta_ = 0.0;
    Complex amp_{};
};

struct CorrectionData {
    Axis domain;
    double h = 0.0;
    double k0 = 0.0;
    std::int64_t lo = 0;  // source support [lo, hi]
    std::int64_t hi = 0;
    std::vector<CVec4> source;
    LatticeGreen green{1.0, 0.0};
    std::int64_t cache_lo = 0;
    std::vector<CVec4> potential; // raw A on [cache_lo, cache_lo + size)

    CVec4 raw_potential(std::int64_t n) const
    {
        if (n >= cache_lo && n < cache_lo + static_cast<std::int64_t>(potential.size()))
            return potential[static_cast<std::size_t>(n - cache_lo)];
        CVec4 a{};
        for (std::int64_t m = lo; m <= hi; ++m) {
            const Complex g = green(n - m);
            if (g == Complex{}) continue;
            const CVec4& s = source[static_cast<std::size_t>(m - lo)];
            for (std::size_t i = 0; i < 4; ++i) a[i] += g * s[i];
        }
        return a;
    }

    Complex gauge(std::int64_t n) const
    {
        const CVec4 a = raw_potential(n);
        const CVec4 ap = raw_potential(n + 1), am = raw_potential(n - 1);
        return Complex(0.0, -k0) * a[0] - (ap[1] - am[1]) / (2.0 * h);
    }

    // Lorenz-gauge potential: A_0 += Gamma / (i k0) for k0 > 0.
    CVec4 gauged_potential(std::int64_t n) const
    {
        CVec4 a = raw_potential(n);
        if (k0 > 0.0) a[0] += gauge(n) / Complex(0.0, k0);
        return a;
    }

    // e^{ijpq} d_p A_q
    CMat4 correction(std::int64_t n) const
    {
        const CVec4 a = gauged_potential(n);
        const CVec4 ap = gauged_potential(n + 1), am = gauged_potential(n - 1);
        std::array<CVec4, 2> dA{};
        for (std::size_t q = 0; q < 4; ++q) {
            dA[0][q] = Complex(0.0, -k0) * a[q];
            dA[1][q] = (ap[q] - am[q]) / (2.0 * h);
        }
        CMat4 out{};
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j)
                for (std::size_t p = 0; p < 2; ++p)
                    for (std::size_t q = 0; q < 4; ++q) {
                        const int e = levi_civita4_upper(i, j, p, q);
                        if (e != 0) out[i][j] += static_cast<double>(e) * dA[p][q];
                    }
        return out;
    }
};

inline std::int64_t lattice_index(const Axis& domain, double h, double x)
{
    const double r = (x - domain.min) / h;
    const double n = std::round(r);
    if (std::abs(r - n) > 1e-8) {
        std::ostringstream os;
        os.precision(17);
        os << "x = " << x << " is not a node of the completion lattice";
        throw std::invalid_argument(os.str());
    }
    return static_cast<std::int64_t>(n);
}

} // namespace detail

// Correction potential A_q on the lattice, in Lorenz gauge.
struct CorrectionPotential {
    std::shared_ptr<const detail::CorrectionData> data;

    CVec4 operator()(double x) const
    {
        return data->gauged_potential(detail::lattice_index(data->domain, data->h, x));
    }
};

struct CompletedSolution {
    HarmonicTensorField field; // defined on lattice nodes only
    CorrectionPotential potential;
    CompletionReport report;
};

// F = F~ + e^{ijpq} d_p A_q with -box A_i = d^j F*_ij solved by the lattice
// Green's function; d^j A_j = 0 is imposed afterwards.
inline CompletedSolution complete(const HalfSolution& half, const CompletionOptions& opts = {})
{
    const Axis& dom = half.domain;
    if (dom.count < 3) throw DomainTooSmall("completion lattice needs at least 3 nodes");
    const double h = dom.spacing();
    auto data = std::make_shared<detail::CorrectionData>();
    data->domain = dom;
    data->h = h;
    data->k0 = half.k0;
    const auto pad = static_cast<std::int64_t>(opts.pad);
    data->lo = -pad;
    data->hi = static_cast<std::int64_t>(dom.count) - 1 + pad;

    // F~ on [lo - 1, hi + 1], with the antisymmetry precondition
    const std::int64_t f_lo = data->lo - 1;
    std::vector<CMat4> duals;
    for (std::int64_t n = f_lo; n <= data->hi + 1; ++n) {
        const double x = dom.min + static_cast<double>(n) * h;
        const CMat4 F = half.field(x);
        for (const auto& row : F)
            for (const auto& v : row)
                if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
                    throw NotDivergenceFree("input field is not finite at x = " + format_number(x));
        if (!is_antisymmetric(F, opts.antisymmetry_tolerance))
            throw NotDivergenceFree("input tensor is not antisymmetric at x = " + format_number(x));
        duals.push_back(dual(F));
    }
    auto dual_at = [&](std::int64_t n) -> const CMat4& { return duals[static_cast<std::size_t>(n - f_lo)]; };

    // s_i = d^j F*_ij
    const Complex d0(0.0, -half.k0);
    for (std::int64_t n = data->lo; n <= data->hi; ++n) {
        CVec4 s{};
        for (std::size_t i = 0; i < 4; ++i)
            s[i] = d0 * dual_at(n)[i][0] - (dual_at(n + 1)[i][1] - dual_at(n - 1)[i][1]) / (2.0 * h);
        data->source.push_back(s);
    }

    CompletionReport rep;
    for (const auto& s : data->source)
        for (const auto& v : s) rep.source_max = std::max(rep.source_max, std::abs(v));
    // d^i s_i = 0 by antisymmetry; checked away from the support ends.
    // A zero source needs no Green's function, so no resonance check either.
    if (rep.source_max > 0.0) {
        data->green = detail::LatticeGreen(h, half.k0);
        const double scale = rep.source_max * (half.k0 + 1.0 / h);
        for (std::int64_t n = data->lo + 1; n < data->hi; ++n) {
            const auto& s = data->source;
            const auto k = static_cast<std::size_t>(n - data->lo);
            const Complex div = d0 * s[k][0] - (s[k + 1][1] - s[k - 1][1]) / (2.0 * h);
            rep.source_divergence = std::max(rep.source_divergence, std::abs(div) / scale);
        }
        if (!(rep.source_divergence <= opts.divergence_tolerance))
            throw NotDivergenceFree("d^i s_i relative size " + format_number(rep.source_divergence));
    }

    data->cache_lo = data->lo - 4;
    const std::int64_t cache_hi = data->hi + 4;
    data->potential.reserve(static_cast<std::size_t>(cache_hi - data->cache_lo + 1));
    for (std::int64_t n = data->cache_lo; n <= cache_hi; ++n) {
        CVec4 a{};
        if (rep.source_max > 0.0) {
            for (std::int64_t m = data->lo; m <= data->hi; ++m) {
                const Complex g = data->green(n - m);
                if (g == Complex{}) continue;
                for (std::size_t i = 0; i < 4; ++i) a[i] += g * data->source[static_cast<std::size_t>(m - data->lo)][i];
            }
        }
        data->potential.push_back(a);
    }
    for (std::size_t n = 0; n < dom.count; ++n)
        rep.gauge_residual = std::max(rep.gauge_residual, std::abs(data->gauge(static_cast<std::int64_t>(n))));

    std::shared_ptr<const detail::CorrectionData> frozen = data;
    HarmonicTensorField out{[frozen, input = half.field](double x) {
        const std::int64_t n = detail::lattice_index(frozen->domain, frozen->h, x);
        return input(x) + frozen->correction(n);
    }};

    const ResidualOptions single{false};
    rep.input_sourced = sourced_residual(half.field, half.current, dom, half.k0, half.c, single).max_norm;
    rep.output_sourced = sourced_residual(out, half.current, dom, half.k0, half.c, single).max_norm;
    rep.input_bianchi = bianchi_residual(half.field, dom, half.k0, single).max_norm;
    rep.output_bianchi = bianchi_residual(out, dom, half.k0, single).max_norm;
    return {std::move(out), CorrectionPotential{frozen}, rep};
}

// Re-packs a completed result as a half solution with the same source.
inline HalfSolution as_half_solution(const CompletedSolution& done, const HalfSolution& like)
{
    HalfSolution h = like;
    h.field = done.field;
    return h;
}

} // namespace covforge
