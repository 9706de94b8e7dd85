#pragma once

#include "covforge/completion.hpp"
#include "covforge/continuity.hpp"
#include "covforge/displacement.hpp"
#include "covforge/electrodynamics.hpp"
#include "covforge/errors.hpp"
#include "covforge/grid.hpp"
#include "covforge/kinetics.hpp"
#include "covforge/linalg.hpp"
#include "covforge/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace covforge {

// Uniform field E_x(t) acting on the electrons from outside.
struct ExternalDrive {
    enum class Kind { none, constant, cosine };

    Kind kind = Kind::none;
    double amplitude = 0.0;
    double omega = 0.0;
    double phase = 0.0;

    static ExternalDrive none() { return {}; }
    static ExternalDrive constant(double e0) { return {Kind::constant, e0}; }
    static ExternalDrive cosine(double e0, double w, double phi = 0.0) { return {Kind::cosine, e0, w, phi}; }

    double eval(double t) const
    {
        switch (kind) {
        case Kind::constant: return amplitude;
        case Kind::cosine: return amplitude * std::cos(omega * t + phase);
        default: return 0.0;
        }
    }
};

// Ion slab |x| <= a of density n with an electron slab of charge e (signed)
// on top of it, neutral at rest.
struct SlabConfig {
    double density = 1.0;
    double half_width = 1.0;
    double charge = -1.0;
    double mass = 1.0;
    double c = 1.0;
    double temperature = 1e-3;
    double d0 = 0.01;
    double v0 = 0.0;
    ExternalDrive external;
    // Zero picks periods * period and steps_per_period steps per period.
    std::size_t steps = 0;
    double t_end = 0.0;
    double periods = 10.0;
    std::size_t steps_per_period = 1000;
    std::size_t momentum_nodes = 32;

    void validate() const
    {
        auto positive = [](double v, const char* name) {
            if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string(name) + " must be positive");
        };
        positive(density, "density");
        positive(half_width, "half_width");
        positive(mass, "mass");
        positive(c, "c");
        if (!(charge != 0.0) || !std::isfinite(charge)) throw std::invalid_argument("charge must be non-zero");
        if (!std::isfinite(d0) || !std::isfinite(v0)) throw std::invalid_argument("d0 and v0 must be finite");
    }
};

inline double plasma_frequency(const SlabConfig& cfg)
{
    return std::sqrt(4.0 * std::numbers::pi * cfg.density * cfg.charge * cfg.charge / cfg.mass);
}

// Ion charge rho = -e n on |x| <= a and its field E_x = -4 pi e n x inside,
// -4 pi e n a sgn(x) outside.
struct IonBackground {
    double density = 1.0;
    double half_width = 1.0;
    double charge = -1.0;
    double c = 1.0;

    bool inside(double x) const { return std::abs(x) <= half_width; }
    double rho(double x) const { return inside(x) ? -charge * density : 0.0; }
    double field(double x) const
    {
        const double s = inside(x) ? x : std::copysign(half_width, x);
        return -4.0 * std::numbers::pi * charge * density * s;
    }

    FourCurrentField current() const
    {
        return {[ions = *this](const SpaceTimePoint& X) { return Vec4{ions.c * ions.rho(X.x[0]), 0.0, 0.0, 0.0}; }};
    }

    EMFieldState state() const
    {
        return {[ions = *this](const SpaceTimePoint& X) {
            EMFields f;
            f.E[0] = ions.field(X.x[0]);
            f.D = f.E;
            return f;
        }};
    }
};

inline IonBackground ion_background(const SlabConfig& cfg)
{
    return {cfg.density, cfg.half_width, cfg.charge, cfg.c};
}

namespace detail {

inline EMFieldState sum_states(std::vector<EMFieldState> parts)
{
    return {[parts = std::move(parts)](const SpaceTimePoint& X) {
        EMFields out;
        for (const auto& p : parts) {
            const EMFields f = p(X);
            out.E = out.E + f.E;
            out.B = out.B + f.B;
            out.D = out.D + f.D;
            out.H = out.H + f.H;
        }
        return out;
    }};
}

inline EMFieldState uniform_e(double ex)
{
    return {[ex](const SpaceTimePoint&) {
        EMFields f;
        f.E[0] = ex;
        f.D = f.E;
        return f;
    }};
}

inline EMFieldState negated(EMFieldState s)
{
    return {[s = std::move(s)](const SpaceTimePoint& X) {
        EMFields f = s(X);
        f.E = -1.0 * f.E;
        f.B = -1.0 * f.B;
        f.D = -1.0 * f.D;
        f.H = -1.0 * f.H;
        return f;
    }};
}

} // namespace detail

struct EquilibriumSetup {
    SlabConfig config;
    IonBackground ions;
    DistributionFn distribution;     // electrons at rest, zero outside the slab
    FourCurrentField electron_current; // minus the ion current
    EMFieldState vacuum_seed;        // user vacuum field plus a constant external drive
    EMFieldState field;              // vacuum_seed minus the ion field
    double density_scale = 1.0;      // quadrature normalization applied to the Maxwellian
    double neutrality = 0.0;         // |int (rho_e + rho_ion) dx| / (2 a |e| n)
};

inline constexpr double neutrality_tolerance = 1e-10;

// Maxwellian electrons normalized so that their charge moment cancels the ions.
inline EquilibriumSetup equilibrium_setup(const SlabConfig& cfg, const std::optional<EMFieldState>& seed = {})
{
    cfg.validate();
    if (!(cfg.temperature > 0.0) || !std::isfinite(cfg.temperature))
        throw NormalizationFailure("temperature must be positive for a quadrature-normalized Maxwellian");
    EquilibriumSetup s;
    s.config = cfg;
    s.ions = ion_background(cfg);

    auto slab_maxwellian = [&](double density) {
        DistributionFn base = maxwellian(density, cfg.temperature, cfg.mass, cfg.charge, {}, cfg.momentum_nodes);
        DistributionFn f = base;
        const double a = cfg.half_width;
        f.profile = [base, a](const Vec3& r, double t) {
            if (std::abs(r[0]) > a) return MomentumProfile([](const Vec3&) { return 0.0; });
            return base.profile(r, t);
        };
        return f;
    };
    const MomentOptions mopts{cfg.c};
    auto center_rho = [&](const DistributionFn& f) {
        try {
            return current_moment(f, SpaceTimePoint::at(0.0, {}, cfg.c), mopts)[0] / cfg.c;
        } catch (const QuadratureUnderResolved& e) {
            throw NormalizationFailure(std::string("momentum quadrature failed: ") + e.what());
        }
    };

    const double target = cfg.charge * cfg.density;
    const double raw = center_rho(slab_maxwellian(cfg.density));
    if (!std::isfinite(raw) || raw == 0.0) throw NormalizationFailure("Maxwellian charge moment vanished");
    s.density_scale = target / raw;
    s.distribution = slab_maxwellian(cfg.density * s.density_scale);
    const double rho_e = center_rho(s.distribution);
    // both densities are uniform on the same support
    s.neutrality = std::abs(rho_e + s.ions.rho(0.0)) / std::abs(target);
    if (!(s.neutrality <= neutrality_tolerance))
        throw NormalizationFailure("charge neutrality off by " + format_number(s.neutrality) + " (relative)");

    const FourCurrentField ion_j = s.ions.current();
    s.electron_current = {[ion_j](const SpaceTimePoint& X) { return -1.0 * ion_j(X); }};

    std::vector<EMFieldState> vac;
    if (seed) vac.push_back(*seed);
    if (cfg.external.kind == ExternalDrive::Kind::constant) vac.push_back(detail::uniform_e(cfg.external.amplitude));
    s.vacuum_seed = detail::sum_states(vac);
    s.field = detail::sum_states({s.vacuum_seed, detail::negated(s.ions.state())});
    return s;
}

struct SlabTrajectory {
    std::vector<double> t;
    std::vector<double> d;
    std::vector<double> d_dot;
    double omega_p = 0.0;
    double period = 0.0;
    double step = 0.0;
    double offset = 0.0;                 // static equilibrium under a constant drive
    std::optional<double> measured_omega; // from upward crossings of d - offset
    std::optional<double> energy_drift;  // max relative change; undriven or constant drive only
    std::optional<DisplacementSpec> fit; // closed-form solution; none at resonance
    double fit_error = 0.0;              // max |d - fit| over the samples
};

namespace detail {

inline double hermite(double y0, double y1, double m0, double m1, double h, double s)
{
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * m0 + (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * h * m1;
}

// Root of the cubic Hermite interpolant on [0, 1] given a sign change.
inline double hermite_root(double y0, double y1, double m0, double m1, double h)
{
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (hermite(y0, y1, m0, m1, h, mid) < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace detail

// Uniform electron displacement d(t): m d'' = -m w_p^2 d + e E_ext(t), by RK4.
inline SlabTrajectory slab_dynamics(const SlabConfig& cfg)
{
    cfg.validate();
    SlabTrajectory tr;
    const double wp = plasma_frequency(cfg);
    const double wp2 = wp * wp;
    tr.omega_p = wp;
    tr.period = 2.0 * std::numbers::pi / wp;
    const double t_end = cfg.t_end > 0.0 ? cfg.t_end : cfg.periods * tr.period;
    std::size_t steps = cfg.steps;
    if (steps == 0) {
        if (cfg.steps_per_period == 0) throw std::invalid_argument("steps_per_period must be positive");
        steps = static_cast<std::size_t>(std::ceil(t_end / tr.period * static_cast<double>(cfg.steps_per_period)));
    }
    if (!(t_end > 0.0) || steps == 0) throw std::invalid_argument("slab dynamics needs t_end > 0 and steps > 0");
    const double h = t_end / static_cast<double>(steps);
    tr.step = h;
    const double q_m = cfg.charge / cfg.mass;
    const double limit = 0.5 * cfg.half_width;
    auto accel = [&](double t, double d) { return -wp2 * d + q_m * cfg.external.eval(t); };
    auto check = [&](double t, double d) {
        if (std::abs(d) > limit)
            throw AmplitudeTooLarge("|d| = " + format_number(std::abs(d)) + " exceeds a/2 at t = "
                                    + format_number(t));
    };

    double d = cfg.d0, v = cfg.v0;
    check(0.0, d);
    tr.t.reserve(steps + 1);
    tr.d.reserve(steps + 1);
    tr.d_dot.reserve(steps + 1);
    tr.t.push_back(0.0);
    tr.d.push_back(d);
    tr.d_dot.push_back(v);
    for (std::size_t n = 0; n < steps; ++n) {
        const double t = static_cast<double>(n) * h;
        const double k1d = v, k1v = accel(t, d);
        const double k2d = v + 0.5 * h * k1v, k2v = accel(t + 0.5 * h, d + 0.5 * h * k1d);
        const double k3d = v + 0.5 * h * k2v, k3v = accel(t + 0.5 * h, d + 0.5 * h * k2d);
        const double k4d = v + h * k3v, k4v = accel(t + h, d + h * k3d);
        d += h / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
        v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        const double tn = static_cast<double>(n + 1) * h;
        check(tn, d);
        tr.t.push_back(tn);
        tr.d.push_back(d);
        tr.d_dot.push_back(v);
    }

    const bool autonomous = cfg.external.kind != ExternalDrive::Kind::cosine;
    if (autonomous) {
        const double e0 = cfg.external.eval(0.0);
        tr.offset = q_m * e0 / wp2;
        // m d'^2 / 2 + m w_p^2 (d - offset)^2 / 2, conserved up to a constant
        auto energy = [&](std::size_t i) {
            const double x = tr.d[i] - tr.offset;
            return 0.5 * cfg.mass * (tr.d_dot[i] * tr.d_dot[i] + wp2 * x * x);
        };
        const double e_start = energy(0);
        double drift = 0.0;
        for (std::size_t i = 1; i < tr.t.size(); ++i) drift = std::max(drift, std::abs(energy(i) - e_start));
        tr.energy_drift = e_start > 0.0 ? drift / e_start : drift;

        std::vector<double> crossings;
        for (std::size_t i = 0; i + 1 < tr.t.size(); ++i) {
            const double y0 = tr.d[i] - tr.offset, y1 = tr.d[i + 1] - tr.offset;
            if (y0 < 0.0 && y1 >= 0.0)
                crossings.push_back(tr.t[i] + h * detail::hermite_root(y0, y1, tr.d_dot[i], tr.d_dot[i + 1], h));
        }
        if (crossings.size() >= 2)
            tr.measured_omega = 2.0 * std::numbers::pi * static_cast<double>(crossings.size() - 1)
                                / (crossings.back() - crossings.front());
    }

    // particular part plus A cos(w_p t) + B sin(w_p t)
    DisplacementSpec fit;
    double dp0 = 0.0, vp0 = 0.0;
    bool resonant = false;
    if (cfg.external.kind == ExternalDrive::Kind::constant) {
        dp0 = tr.offset;
        if (dp0 != 0.0) fit.add(0, dp0, {0, 0, 0}, TemporalFactor::constant());
    } else if (cfg.external.kind == ExternalDrive::Kind::cosine) {
        const double w = cfg.external.omega;
        const double denom = wp2 - w * w;
        if (std::abs(denom) <= 1e-12 * wp2) {
            resonant = true;
        } else {
            const double amp = q_m * cfg.external.amplitude / denom;
            fit.add(0, amp, {0, 0, 0}, TemporalFactor::cosine(w, cfg.external.phase));
            dp0 = amp * std::cos(cfg.external.phase);
            vp0 = -amp * w * std::sin(cfg.external.phase);
        }
    }
    if (!resonant) {
        const double A = cfg.d0 - dp0, B = (cfg.v0 - vp0) / wp;
        if (A != 0.0) fit.add(0, A, {0, 0, 0}, TemporalFactor::cosine(wp));
        if (B != 0.0) fit.add(0, B, {0, 0, 0}, TemporalFactor::sine(wp));
        for (std::size_t i = 0; i < tr.t.size(); ++i) {
            const double u = eval_displacement(fit, SpaceTimePoint::at(tr.t[i], {}, cfg.c), cfg.c).u[0];
            tr.fit_error = std::max(tr.fit_error, std::abs(u - tr.d[i]));
        }
        tr.fit = std::move(fit);
    }
    return tr;
}

struct AssemblyOptions {
    // Completion lattice along x; count 0 picks [-2a, 2a] with 129 nodes.
    Axis lattice{"x", 0.0, 0.0, 0};
    // Period of the time dependence; zero infers it from the displacement.
    double period = 0.0;
    std::size_t time_samples = 64;
    CompletionOptions completion;
    KinematicsOptions kinematics;
};

struct AssembledSolution {
    EMFieldState field;              // ion field + transformed field + correction
    EMFieldState transformed;        // sqrt(-g) L~ L~ F0(X - U) with the D, H slots as E, B
    FourCurrentField electron_current;
    FourCurrentField ion_current;
    FourCurrentField total_current;
    DistributionFn distribution;
    Axis lattice;
    double omega = 0.0;
    bool corrected = false;          // false when both completion sources vanish
    CompletionReport static_report;
    std::optional<CompletionReport> harmonic_report;
};

namespace detail {

inline void require_uniform(const DisplacementSpec& u)
{
    if (!u.spatially_uniform()) throw std::invalid_argument("slab assembly needs a spatially uniform displacement");
}

inline double common_frequency(const DisplacementSpec& u)
{
    double w = 0.0;
    for (const auto& term : u.terms) {
        const auto k = term.time.kind;
        if (k == TemporalFactor::Kind::linear || k == TemporalFactor::Kind::quadratic)
            throw std::invalid_argument("slab assembly needs a periodic displacement; pass a period");
        if (k == TemporalFactor::Kind::cosine || k == TemporalFactor::Kind::sine) {
            const double wt = std::abs(term.time.omega);
            if (w == 0.0)
                w = wt;
            else if (std::abs(wt - w) > 1e-12 * w)
                throw std::invalid_argument("displacement mixes frequencies; pass a common period");
        }
    }
    return w;
}

} // namespace detail

// Field, current and distribution for an electron slab moved by a uniform u.
// The Bianchi defect of F~ - F0 is removed by the 1-D harmonic completion
// applied to its mean and first temporal harmonic over the period of u.
inline AssembledSolution assemble_solution(const EquilibriumSetup& eq, const DisplacementSpec& u,
                                           const AssemblyOptions& opts = {})
{
    detail::require_uniform(u);
    validate(GeneralTransform{u});
    const double c = eq.config.c;
    KinematicsOptions kopts = opts.kinematics;
    kopts.c = c;
    AssembledSolution sol;
    const auto moved = transform_em_fields(eq.field, eq.electron_current, GeneralTransform{u}, kopts);
    sol.transformed = {[f = moved.fields](const SpaceTimePoint& X) {
        const EMFields g = f(X);
        return EMFields{g.D, g.H, g.D, g.H};
    }};
    sol.electron_current = moved.sources;
    sol.ion_current = eq.ions.current();
    sol.total_current = {[je = sol.electron_current, ji = sol.ion_current](const SpaceTimePoint& X) {
        return je(X) + ji(X);
    }};
    DistributionTransformOptions dopts;
    dopts.kinematics = kopts;
    sol.distribution = transform_distribution(eq.distribution, u, dopts);

    sol.lattice = opts.lattice;
    if (sol.lattice.count == 0)
        sol.lattice = Axis{"x", -2.0 * eq.config.half_width, 2.0 * eq.config.half_width, 129};
    if (opts.period > 0.0)
        sol.omega = 2.0 * std::numbers::pi / opts.period;
    else
        sol.omega = detail::common_frequency(u);
    if (opts.time_samples < 4) throw std::invalid_argument("time_samples must be at least 4");

    const std::size_t M = sol.omega > 0.0 ? opts.time_samples : 1;
    const double T = sol.omega > 0.0 ? 2.0 * std::numbers::pi / sol.omega : 0.0;
    // F0 already satisfies the homogeneous equations; only F~ - F0 is completed
    const EMFieldState change{[moved_f = sol.transformed, f0 = eq.field](const SpaceTimePoint& X) {
        const EMFields a = moved_f(X), b = f0(X);
        return EMFields{a.E - b.E, a.B - b.B, a.D - b.D, a.H - b.H};
    }};
    // temporal mean (k = 0) or first harmonic (k = 1) of F~ - F0 and j at x
    auto project = [&, M, T](int k) {
        const EMFieldState fld = change;
        const FourCurrentField cur = sol.electron_current;
        const double w = sol.omega;
        auto weight = [M, T, w, k](std::size_t s) {
            const double t = static_cast<double>(s) * T / static_cast<double>(M);
            const double norm = (k == 0 ? 1.0 : 2.0) / static_cast<double>(M);
            return k == 0 ? Complex(norm, 0.0) : norm * std::exp(Complex(0.0, w * t));
        };
        HarmonicTensorField F{[fld, M, T, c, weight](double x) {
            CVec3 E{}, B{};
            for (std::size_t s = 0; s < M; ++s) {
                const double t = static_cast<double>(s) * T / static_cast<double>(M);
                const EMFields f = fld(SpaceTimePoint::at(t, {x, 0.0, 0.0}, c));
                const Complex wt = weight(s);
                for (std::size_t a = 0; a < 3; ++a) {
                    E[a] += wt * f.E[a];
                    B[a] += wt * f.B[a];
                }
            }
            return tensor_from_eb(E, B);
        }};
        HarmonicCurrent J{[cur, M, T, c, weight](double x) {
            CVec4 j{};
            for (std::size_t s = 0; s < M; ++s) {
                const double t = static_cast<double>(s) * T / static_cast<double>(M);
                const Vec4 v = cur(SpaceTimePoint::at(t, {x, 0.0, 0.0}, c));
                for (std::size_t i = 0; i < 4; ++i) j[i] += weight(s) * v[i];
            }
            return j;
        }};
        return HalfSolution{F, J, sol.lattice, k == 0 ? 0.0 : sol.omega / c, c};
    };

    const CompletedSolution mean = complete(project(0), opts.completion);
    sol.static_report = mean.report;
    std::optional<CompletedSolution> first;
    if (sol.omega > 0.0) {
        first = complete(project(1), opts.completion);
        sol.harmonic_report = first->report;
    }
    sol.corrected = mean.report.source_max > 0.0 || (first && first->report.source_max > 0.0);

    std::vector<EMFieldState> parts{eq.ions.state(), sol.transformed};
    if (sol.corrected) {
        auto m_data = mean.potential.data;
        std::shared_ptr<const detail::CorrectionData> f_data = first ? first->potential.data : nullptr;
        const double w = sol.omega;
        parts.push_back({[m_data, f_data, w, c](const SpaceTimePoint& X) {
            const std::int64_t n = detail::lattice_index(m_data->domain, m_data->h, X.x[0]);
            CMat4 C = m_data->correction(n);
            if (f_data) {
                const Complex phase = std::exp(Complex(0.0, -w * X.time(c)));
                const CMat4 C1 = f_data->correction(n);
                for (std::size_t i = 0; i < 4; ++i)
                    for (std::size_t j = 0; j < 4; ++j) C[i][j] += phase * C1[i][j];
            }
            const HarmonicEB eb = eb_from_tensor(C);
            EMFields f;
            for (std::size_t a = 0; a < 3; ++a) {
                f.E[a] = eb.E[a].real();
                f.B[a] = eb.B[a].real();
            }
            f.D = f.E;
            f.H = f.B;
            return f;
        }});
    }
    sol.field = detail::sum_states(std::move(parts));
    return sol;
}

// Positions of the ion edges and of the moved electron edges at time t.
inline std::vector<double> slab_edges(const EquilibriumSetup& eq, const DisplacementSpec& u, double t)
{
    const double a = eq.config.half_width;
    const double shift = eval_displacement(u, SpaceTimePoint::at(t, {}, eq.config.c), eq.config.c).u[0];
    return {-a, a, -a + shift, a + shift};
}

// Maxwell residual of the assembled field with its total current. Nodes whose
// stencil reaches across a slab edge are excluded, using the spacing of
// `grid` for both resolutions.
inline ResidualReport assembled_residual(const AssembledSolution& sol, const EquilibriumSetup& eq,
                                         const DisplacementSpec& u, const GridSpec& grid,
                                         const ResidualOptions& ropts = {})
{
    detail::require_spacetime(grid, "assembled_residual");
    const double hx = grid.axes[1].spacing();
    const double ht = grid.axes[0].spacing();
    double vmax = 0.0;
    for (const auto& term : u.terms)
        if (term.component == 0) vmax += std::abs(term.coeff * term.time.omega);
    const double width = 1.5 * hx + 2.0 * vmax * ht;
    NodeFilter near_edge = [eq, u, width](std::span<const double> x) {
        for (double e : slab_edges(eq, u, x[0]))
            if (std::abs(x[1] - e) <= width) return true;
        return false;
    };
    return maxwell_residual(sol.field, sol.total_current, grid, eq.config.c, ropts, near_edge);
}

// Integral of the total charge density over [-L, L] at time t, split at the
// slab edges so each piece is smooth.
inline double total_charge(const AssembledSolution& sol, const EquilibriumSetup& eq, const DisplacementSpec& u,
                           double t, double L, std::size_t nodes = 8)
{
    std::vector<double> cuts{-L, L};
    for (double e : slab_edges(eq, u, t))
        if (e > -L && e < L) cuts.push_back(e);
    std::sort(cuts.begin(), cuts.end());
    const double c = eq.config.c;
    double q = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        if (!(cuts[i + 1] > cuts[i])) continue;
        const QuadratureRule rule = gauss_legendre(nodes, cuts[i], cuts[i + 1]);
        for (std::size_t k = 0; k < rule.nodes.size(); ++k)
            q += rule.weights[k] * sol.total_current(SpaceTimePoint::at(t, {rule.nodes[k], 0.0, 0.0}, c))[0] / c;
    }
    return q;
}

} // namespace covforge
