#include "covforge/plasma.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace covforge;

namespace {

constexpr double pi = std::numbers::pi;

SlabConfig base_config(double n = 1.0)
{
    SlabConfig cfg;
    cfg.density = n;
    cfg.half_width = 1.0;
    cfg.charge = -1.0;
    cfg.mass = 1.0;
    cfg.d0 = 0.01;
    return cfg;
}

DisplacementSpec oscillation(double d0, double w)
{
    DisplacementSpec u;
    u.add(0, d0, {0, 0, 0}, TemporalFactor::cosine(w));
    return u;
}

GridSpec line_grid(double t1, std::size_t nt, double L, std::size_t nx)
{
    return spacetime_grid({"t", 0.0, t1, nt}, {"x", -L, L, nx}, {"y", 0.0, 0.0, 1}, {"z", 0.0, 0.0, 1});
}

} // namespace

TEST(IonBackground, GaussLawAndOddField)
{
    const IonBackground ions = ion_background(base_config(2.0));
    const double h = 1e-4;
    for (double x : {-3.0, -0.7, 0.0, 0.4, 0.99, 1.5}) {
        const double dE = (ions.field(x + h) - ions.field(x - h)) / (2.0 * h);
        EXPECT_NEAR(dE, 4.0 * pi * ions.rho(x), 1e-9) << x;
        EXPECT_DOUBLE_EQ(ions.field(-x), -ions.field(x));
    }
    // continuous at the edges, constant beyond them
    EXPECT_NEAR(ions.field(1.0 + 1e-12), ions.field(1.0 - 1e-12), 1e-10);
    EXPECT_DOUBLE_EQ(ions.field(5.0), ions.field(1.0));
    EXPECT_DOUBLE_EQ(ions.rho(0.3), 2.0);
}

TEST(Equilibrium, NeutralAndCurrentCancelsIons)
{
    const EquilibriumSetup eq = equilibrium_setup(base_config());
    EXPECT_LT(eq.neutrality, 1e-10);
    for (double x : {-0.9, 0.0, 0.5}) {
        const auto X = SpaceTimePoint::at(0.0, {x, 0.2, -0.1});
        const Vec4 j = current_moment(eq.distribution, X);
        EXPECT_NEAR(j[0] + eq.ions.current()(X)[0], 0.0, 1e-10);
        for (int a = 1; a < 4; ++a) EXPECT_NEAR(j[a], 0.0, 1e-12);
    }
    const Vec4 outside = current_moment(eq.distribution, SpaceTimePoint::at(0.0, {1.5, 0.0, 0.0}));
    EXPECT_EQ(outside[0], 0.0);
}

TEST(Equilibrium, FieldIsSeedMinusIons)
{
    const EMFieldState seed = vacuum_field({PlaneWave::vacuum({0.0, 1e-3, 0.0}, {2.0, 0.0, 0.0})});
    const EquilibriumSetup eq = equilibrium_setup(base_config(), seed);
    const auto X = SpaceTimePoint::at(0.3, {0.4, 0.0, 0.0});
    const EMFields f = eq.field(X), s = seed(X);
    EXPECT_DOUBLE_EQ(f.E[0], -eq.ions.field(0.4));
    EXPECT_DOUBLE_EQ(f.E[1], s.E[1]);
    EXPECT_DOUBLE_EQ(f.B[2], s.B[2]);
}

TEST(Equilibrium, Errors)
{
    SlabConfig cold = base_config();
    cold.temperature = 0.0;
    EXPECT_THROW(equilibrium_setup(cold), NormalizationFailure);
    SlabConfig coarse = base_config();
    coarse.momentum_nodes = 2;
    EXPECT_THROW(equilibrium_setup(coarse), NormalizationFailure);
    SlabConfig bad = base_config();
    bad.density = -1.0;
    EXPECT_THROW(equilibrium_setup(bad), std::invalid_argument);
}

TEST(SlabDynamics, PlasmaFrequencyOverThreeDecades)
{
    for (double n : {1e-2, 1.0, 1e2}) {
        const SlabConfig cfg = base_config(n);
        const SlabTrajectory tr = slab_dynamics(cfg);
        const double wp = std::sqrt(4.0 * pi * n);
        EXPECT_DOUBLE_EQ(tr.omega_p, wp);
        ASSERT_TRUE(tr.measured_omega);
        EXPECT_LT(std::abs(*tr.measured_omega - wp) / wp, 1e-6) << n;
        ASSERT_TRUE(tr.energy_drift);
        EXPECT_LT(*tr.energy_drift, 1e-8) << n;
        EXPECT_NEAR(tr.t.back(), 10.0 * 2.0 * pi / wp, 1e-9 / wp);
        ASSERT_TRUE(tr.fit);
        EXPECT_LT(tr.fit_error, 1e-10);
    }
}

TEST(SlabDynamics, RestStaysAtRest)
{
    SlabConfig cfg = base_config();
    cfg.d0 = 0.0;
    const SlabTrajectory tr = slab_dynamics(cfg);
    for (double d : tr.d) EXPECT_EQ(d, 0.0);
    EXPECT_FALSE(tr.measured_omega);
    EXPECT_TRUE(tr.fit->empty());
}

TEST(SlabDynamics, ConstantDriveShiftsEquilibrium)
{
    SlabConfig cfg = base_config();
    cfg.external = ExternalDrive::constant(0.05);
    const SlabTrajectory tr = slab_dynamics(cfg);
    const double wp2 = 4.0 * pi;
    EXPECT_DOUBLE_EQ(tr.offset, cfg.charge * 0.05 / wp2);
    ASSERT_TRUE(tr.measured_omega);
    EXPECT_LT(std::abs(*tr.measured_omega - std::sqrt(wp2)) / std::sqrt(wp2), 1e-6);
    EXPECT_LT(*tr.energy_drift, 1e-8);
    EXPECT_LT(tr.fit_error, 1e-10);
}

TEST(SlabDynamics, CosineDriveMatchesClosedForm)
{
    SlabConfig cfg = base_config();
    cfg.external = ExternalDrive::cosine(0.02, 1.3, 0.4);
    const SlabTrajectory tr = slab_dynamics(cfg);
    EXPECT_FALSE(tr.energy_drift);
    ASSERT_TRUE(tr.fit);
    EXPECT_LT(tr.fit_error, 1e-10);

    cfg.external = ExternalDrive::cosine(1e-4, std::sqrt(4.0 * pi));
    EXPECT_FALSE(slab_dynamics(cfg).fit);
}

TEST(SlabDynamics, AmplitudeTooLarge)
{
    SlabConfig cfg = base_config();
    cfg.d0 = 0.6;
    EXPECT_THROW(slab_dynamics(cfg), AmplitudeTooLarge);
    cfg.d0 = 0.0;
    cfg.external = ExternalDrive::constant(-8.0); // offset e E0 / (m wp^2) = 0.64
    EXPECT_THROW(slab_dynamics(cfg), AmplitudeTooLarge);
}

TEST(Assembly, ZeroDisplacementReturnsSeed)
{
    const EMFieldState seed = vacuum_field({PlaneWave::vacuum({0.0, 0.0, 1e-3}, {1.5, 0.0, 0.0})});
    const EquilibriumSetup eq = equilibrium_setup(base_config(), seed);
    const AssembledSolution sol = assemble_solution(eq, DisplacementSpec{});
    for (double x : {-1.5, -0.5, 0.25, 1.0}) {
        const auto X = SpaceTimePoint::at(0.2, {x, 0.0, 0.0});
        const EMFields f = sol.field(X), s = seed(X);
        for (int a = 0; a < 3; ++a) {
            EXPECT_EQ(f.E[a], s.E[a]);
            EXPECT_EQ(f.B[a], s.B[a]);
        }
        EXPECT_EQ(sol.total_current(X)[0], 0.0);
    }
    EXPECT_FALSE(sol.corrected);
}

TEST(Assembly, SurfaceLayersAndCurrent)
{
    const SlabConfig cfg = base_config();
    const EquilibriumSetup eq = equilibrium_setup(cfg);
    const double wp = plasma_frequency(cfg), d0 = 0.05;
    const DisplacementSpec u = oscillation(d0, wp);
    const AssembledSolution sol = assemble_solution(eq, u);
    EXPECT_FALSE(sol.corrected);
    const double t = 0.3;
    const double d = d0 * std::cos(wp * t), v = -d0 * wp * std::sin(wp * t);
    // electron slab moved to [-a + d, a + d]
    for (double x : {-1.2, -0.99, 0.0, 0.98, 1.03, 1.2}) {
        const auto X = SpaceTimePoint::at(t, {x, 0.0, 0.0});
        const double rho_e = std::abs(x - d) <= 1.0 ? -1.0 : 0.0; // e n
        const Vec4 je = sol.electron_current(X);
        EXPECT_NEAR(je[0], rho_e, 1e-14) << x;
        EXPECT_NEAR(je[1], rho_e * v, 1e-14) << x;
    }
    for (double tt : {0.0, 0.3, 0.77, 1.4})
        EXPECT_NEAR(total_charge(sol, eq, u, tt, 3.0), 0.0, 1e-8) << tt;
}

TEST(Assembly, DistributionMomentCancelsIonsAtStart)
{
    const SlabConfig cfg = base_config();
    const EquilibriumSetup eq = equilibrium_setup(cfg);
    const DisplacementSpec u = oscillation(0.05, plasma_frequency(cfg));
    const AssembledSolution sol = assemble_solution(eq, u);
    for (double x : {-0.9, -0.2, 0.6, 0.94}) {
        const auto X = SpaceTimePoint::at(0.0, {x, 0.0, 0.0});
        const Vec4 j = current_moment(sol.distribution, X);
        EXPECT_NEAR(j[0] + sol.ion_current(X)[0], 0.0, 1e-10) << x;
    }
}

TEST(Assembly, MaxwellResidualConvergesAwayFromEdges)
{
    const SlabConfig cfg = base_config();
    const EquilibriumSetup eq = equilibrium_setup(cfg);
    const double wp = plasma_frequency(cfg);
    const DisplacementSpec u = oscillation(0.05, wp);
    const AssembledSolution sol = assemble_solution(eq, u);
    const ResidualReport rep = assembled_residual(sol, eq, u, line_grid(2.0 * pi / wp, 33, 2.0, 33));
    EXPECT_GT(rep.excluded_nodes, 0u);
    EXPECT_TRUE(rep.converged(1.9, 1e-10)) << rep.max_norm << " " << rep.order_estimate.value_or(-1);
    EXPECT_GT(rep.max_norm, 0.0);
}

TEST(Assembly, DenseSlabAssemblesWithoutCompletion)
{
    const SlabConfig cfg = base_config(1e2);
    const EquilibriumSetup eq = equilibrium_setup(cfg);
    const double wp = plasma_frequency(cfg);
    const DisplacementSpec u = oscillation(0.01, wp);
    const AssembledSolution sol = assemble_solution(eq, u);
    EXPECT_FALSE(sol.corrected);
    const ResidualReport rep = assembled_residual(sol, eq, u, line_grid(2.0 * pi / wp, 33, 2.0, 33));
    EXPECT_TRUE(rep.converged(1.9, 1e-10)) << rep.max_norm << " " << rep.order_estimate.value_or(-1);
}

TEST(Assembly, EdgesBreakConvergenceWithoutMask)
{
    const SlabConfig cfg = base_config();
    const EquilibriumSetup eq = equilibrium_setup(cfg);
    const DisplacementSpec u = oscillation(0.05, plasma_frequency(cfg));
    const AssembledSolution sol = assemble_solution(eq, u);
    const ResidualReport rep = maxwell_residual(sol.field, sol.total_current, line_grid(1.0, 17, 2.0, 33));
    EXPECT_GT(rep.max_norm, 1.0);
}

TEST(Assembly, TransverseSeedIsCompleted)
{
    SlabConfig cfg = base_config();
    const double wp = plasma_frequency(cfg);
    const EMFieldState seed = vacuum_field({PlaneWave::vacuum({0.0, 1e-2, 0.0}, {wp, 0.0, 0.0})});
    const EquilibriumSetup eq = equilibrium_setup(cfg, seed);
    const DisplacementSpec u = oscillation(0.05, wp);
    AssemblyOptions opts;
    opts.lattice = {"x", -2.0, 2.0, 65};
    const AssembledSolution sol = assemble_solution(eq, u, opts);
    EXPECT_TRUE(sol.corrected);
    ASSERT_TRUE(sol.harmonic_report);
    EXPECT_GT(sol.harmonic_report->input_bianchi, 1e-6);
    EXPECT_LT(sol.harmonic_report->output_bianchi, 1e-10);
    EXPECT_LT(sol.static_report.output_bianchi, 1e-10);
    EXPECT_NO_THROW(sol.field(SpaceTimePoint::at(0.1, {0.5, 0.0, 0.0})));
    EXPECT_THROW(sol.field(SpaceTimePoint::at(0.1, {0.51, 0.0, 0.0})), std::invalid_argument);
}

TEST(Assembly, RejectsNonUniformDisplacement)
{
    const EquilibriumSetup eq = equilibrium_setup(base_config());
    DisplacementSpec u;
    u.add(0, 0.01, {1, 0, 0}, TemporalFactor::cosine(1.0));
    EXPECT_THROW(assemble_solution(eq, u), std::invalid_argument);
}
