#include "covforge/kinetics.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace covforge;

namespace {

// Momentum and position offsets (dp, dr) of a particle starting at rest at
// t = 0 under a uniform force, by RK4 with a fine step.
std::pair<Vec3, Vec3> kick(const std::function<Vec3(double)>& force, double mass, double t)
{
    const int n = 4000;
    const double h = t / n;
    Vec3 p{}, r{};
    for (int i = 0; i < n; ++i) {
        const double s = i * h;
        const Vec3 f0 = force(s), fh = force(s + 0.5 * h), f1 = force(s + h);
        // dr/dt = p/m, dp/dt = F(t)
        const Vec3 k1r = (1.0 / mass) * p;
        const Vec3 k2r = (1.0 / mass) * (p + (0.5 * h) * f0);
        const Vec3 k3r = (1.0 / mass) * (p + (0.5 * h) * fh);
        const Vec3 k4r = (1.0 / mass) * (p + h * fh);
        r = r + (h / 6.0) * (k1r + 2.0 * k2r + 2.0 * k3r + k4r);
        p = p + (h / 6.0) * (f0 + 4.0 * fh + f1);
    }
    return {p, r};
}

Vec3 random_vec(std::mt19937_64& rng, double s)
{
    std::uniform_real_distribution<double> d(-s, s);
    return {d(rng), d(rng), d(rng)};
}

} // namespace

TEST(InertialForce, Examples)
{
    const double m = 2.0;
    const auto P = FourMomentum::nonrelativistic(m, {0.3, -0.1, 0.2});
    EXPECT_EQ(max_abs(inertial_force(euler_kinematics(DisplacementSpec{}, SpaceTimePoint{}), P, m)), 0.0);

    const double d = 0.1, w = 2.0, t = 0.4;
    DisplacementSpec osc;
    osc.add(0, d, {0, 0, 0}, TemporalFactor::sine(w));
    const auto k = euler_kinematics(osc, SpaceTimePoint::at(t, {}));
    const auto rest = FourMomentum::nonrelativistic(m, {});
    const double uddot = -d * w * w * std::sin(w * t);
    EXPECT_NEAR(inertial_force(k, rest, m)[1], m * uddot, 1e-15);

    DisplacementSpec shear;
    shear.add(0, 0.3, {0, 1, 0});
    EXPECT_EQ(max_abs(inertial_force(euler_kinematics(shear, SpaceTimePoint::at(0, {0.1, 0.2, 0})), P, m)), 0.0);
}

TEST(TransformDistribution, IdentityIsBitwise)
{
    const auto f0 = perturbed_maxwellian(1.0, 0.5, 1.0, -1.0, 0.2, {1.0, 0.0, 0.0});
    const auto f = transform_distribution(f0, {});
    std::mt19937_64 rng(3);
    for (int i = 0; i < 50; ++i) {
        const Vec3 r = random_vec(rng, 2.0), p = random_vec(rng, 2.0);
        EXPECT_EQ(f(r, p, 0.7), f0(r, p, 0.7));
    }
}

TEST(TransformDistribution, FreeFallShiftsMaxwellian)
{
    const double m = 1.5, F0 = 0.4;
    const auto f0 = maxwellian(2.0, 0.3, m, -1.0);
    DisplacementSpec u;
    u.add(0, F0 / (2.0 * m), {0, 0, 0}, TemporalFactor::quadratic());
    const auto f = transform_distribution(f0, u);
    for (double t : {0.0, 0.5, 1.3}) {
        const Vec3 p{0.2, -0.1, 0.3};
        EXPECT_NEAR(f({0.1, 0.2, 0.3}, p, t), f0({}, p - Vec3{F0 * t, 0, 0}, t), 1e-15);
    }
    DisplacementSpec osc;
    osc.add(0, 0.1, {0, 0, 0}, TemporalFactor::sine(2.0));
    const auto fo = transform_distribution(f0, osc);
    const double t = 0.8;
    EXPECT_NEAR(fo({}, {0.3, 0, 0}, t), f0({}, {0.3 - m * 0.1 * 2.0 * std::cos(2.0 * t), 0, 0}, t), 1e-15);
}

TEST(TransformDistribution, MatchesCharacteristicsOracle)
{
    const double m = 1.2;
    const auto f0 = perturbed_maxwellian(1.0, 0.4, m, -1.0, 0.3, {1.1, 0.4, -0.2});
    const std::vector<ForceField> forces{
        ForceField::uniform({{0, 0.5}, {2, -0.2}}),
        ForceField::uniform({{0, 0.7, UniformForceTerm::Kind::cosine, 1.7, 0.3},
                             {1, 0.4, UniformForceTerm::Kind::sine, 2.3, 0.0}}),
    };
    std::mt19937_64 rng(8);
    for (const auto& F : forces) {
        const auto u = uniform_force_displacement(F, m);
        ASSERT_TRUE(u.has_value());
        const auto f = transform_distribution(f0, *u);
        for (int i = 0; i < 40; ++i) {
            const double t = 0.1 + 0.05 * i;
            const auto [dp, dr] = kick([&](double s) { return F({}, s); }, m, t);
            const Vec3 r = random_vec(rng, 1.5), p = random_vec(rng, 1.0);
            const Vec3 p0 = p - dp;
            const Vec3 r0 = r - dr - (t / m) * p0;
            const double oracle = f0(r0, p0, 0.0);
            EXPECT_NEAR(f(r, p, t), oracle, 1e-8 * std::max(1.0, oracle));
        }
    }
}

TEST(CurrentMoment, GaussianMomentsOracle)
{
    const double n = 1.7, T = 0.6, m = 1.3, e = -1.0, c = 1.0;
    const auto rest = current_moment(maxwellian(n, T, m, e), SpaceTimePoint::at(0.2, {0.1, 0.2, 0.3}));
    EXPECT_NEAR(rest[0], c * e * n, 1e-12);
    for (int a = 1; a < 4; ++a) EXPECT_NEAR(rest[a], 0.0, 1e-14);

    const Vec3 v0{0.3, -0.2, 0.5};
    const auto shifted = current_moment(maxwellian(n, T, m, e, m * v0), SpaceTimePoint{});
    for (int a = 0; a < 3; ++a) EXPECT_NEAR(shifted[a + 1], e * n * v0[a], 1e-12);

    DistributionFn zero = maxwellian(n, T, m, e);
    zero.profile = [](const Vec3&, double) { return MomentumProfile([](const Vec3&) { return 0.0; }); };
    EXPECT_EQ(max_abs(current_moment(zero, SpaceTimePoint{})), 0.0);
}

TEST(CurrentMoment, UnderResolvedQuadratureIsReported)
{
    const auto f = maxwellian(1.0, 0.5, 1.0, 1.0, {}, 4);
    EXPECT_THROW(current_moment(f, SpaceTimePoint{}), QuadratureUnderResolved);
}

TEST(MomentConsistency, TransformedMomentEqualsTransformedCurrent)
{
    const double m = 1.1, e = -1.0;
    const auto f0 = perturbed_maxwellian(1.3, 0.5, m, e, 0.25, {0.9, -0.3, 0.2});
    const auto j0 = current_field(f0, {1.0, false});
    std::mt19937_64 rng(23);
    // uniform u, then non-uniform u with sqrt(-g) != 1
    std::vector<DisplacementSpec> specs;
    DisplacementSpec uni;
    uni.add(0, 0.2, {0, 0, 0}, TemporalFactor::sine(1.4)).add(1, 0.1, {0, 0, 0}, TemporalFactor::quadratic());
    specs.push_back(uni);
    for (int i = 0; i < 3; ++i) specs.push_back(covforge::testing::random_spec(rng, 2, 0.15, 4));
    for (const auto& u : specs) {
        const auto f = transform_distribution(f0, u);
        const auto jt = transform_current(j0, u);
        for (int i = 0; i < 4; ++i) {
            const auto X = SpaceTimePoint::at(0.3 + 0.2 * i, covforge::testing::random_point(rng, 1.0));
            const Vec4 a = current_moment(f, X, {1.0, false});
            const Vec4 b = jt(X);
            EXPECT_LT(max_abs(a - b), 1e-8 * max_abs(b));
        }
    }
}

TEST(MomentConsistency, WrongPhaseVolumeExponentFails)
{
    const auto f0 = maxwellian(1.0, 0.5, 1.0, 1.0);
    DisplacementSpec stretch;
    stretch.add(0, 0.2, {1, 0, 0});
    DistributionTransformOptions bare;
    bare.phase_volume_factor = false;
    const auto X = SpaceTimePoint::at(0.0, {0.5, 0, 0});
    const Vec4 ref = transform_current(current_field(f0, {1.0, false}), stretch)(X);
    const Vec4 with = current_moment(transform_distribution(f0, stretch), X, {1.0, false});
    const Vec4 without = current_moment(transform_distribution(f0, stretch, bare), X, {1.0, false});
    EXPECT_LT(max_abs(with - ref), 1e-10);
    EXPECT_GT(max_abs(without - ref), 0.1);
}

TEST(Normalization, PhaseSpaceIntegralTimeInvariantOnPeriodicBox)
{
    const double L = 2.0 * std::numbers::pi;
    const auto f0 = perturbed_maxwellian(1.0, 0.5, 1.0, 1.0, 0.3, {1.0, 0.0, 0.0}, 24);
    DisplacementSpec u;
    u.add(0, 0.3, {0, 0, 0}, TemporalFactor::sine(1.1)).add(0, 0.05, {0, 0, 0}, TemporalFactor::quadratic());
    const auto f = transform_distribution(f0, u);
    auto total = [&](double t) {
        const int n = 32;
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += current_moment(f, SpaceTimePoint::at(t, {i * L / n, 0.0, 0.0}), {1.0, false})[0];
        return s * L / n;
    };
    const double q0 = total(0.0);
    for (double t : {0.4, 1.2}) EXPECT_NEAR(total(t), q0, 1e-8 * std::abs(q0));
}

TEST(BoltzmannResidual, UniformMaxwellianForceFree)
{
    const auto f = maxwellian(1.0, 0.5, 1.0, 1.0);
    const auto grid = phase_space_grid({"t", 0, 1, 5}, {"x", -1, 1, 5}, {"y", 0, 0, 1}, {"z", 0, 0, 1},
                                       {"px", -1, 1, 5}, {"py", 0, 0, 1}, {"pz", 0, 0, 1});
    EXPECT_EQ(boltzmann_residual_nonrel(f, ForceField::none(), grid).max_norm, 0.0);
}

TEST(BoltzmannResidual, TransformedSolutionConvergesAndNegativeControlDoesNot)
{
    const double m = 1.0;
    const auto f0 = perturbed_maxwellian(1.0, 0.5, m, -1.0, 0.3, {1.0, 0.5, 0.0});
    const auto F = ForceField::uniform({{0, 0.6}, {1, 0.3, UniformForceTerm::Kind::cosine, 1.5, 0.2}});
    const auto f = transform_distribution(f0, *uniform_force_displacement(F, m));
    const auto grid = phase_space_grid({"t", 0, 1, 9}, {"x", -1, 1, 9}, {"y", 0.2, 0.2, 1}, {"z", 0, 0, 1},
                                       {"px", -1, 1, 9}, {"py", -1, 1, 9}, {"pz", 0.1, 0.1, 1});
    const auto good = boltzmann_residual_nonrel(f, F, grid);
    EXPECT_GE(*good.order_estimate, 1.9);

    const auto bad = boltzmann_residual_nonrel(f0, F, grid);
    ASSERT_TRUE(bad.equations[0].fine.has_value());
    EXPECT_GE(bad.equations[0].fine->max_norm, 0.9 * bad.equations[0].coarse.max_norm);
}

TEST(DisplacementFromForce, ClosedFormCases)
{
    IntegrationOptions opts{2.0, 3.0, 3000};
    const std::vector<SeedState> seeds{{{0, 0, 0}, {0, 0, 0}}, {{0.5, -0.2, 0.1}, {0.3, 0.0, -0.1}}};

    const auto none = displacement_from_force(ForceField::none(), seeds, opts);
    ASSERT_TRUE(none.spec.has_value());
    EXPECT_TRUE(none.spec->empty());
    for (const auto& path : none.trajectories)
        for (const auto& s : path) EXPECT_LT(max_abs(s.u), 1e-14);

    const double F0 = 0.8, w = 1.7;
    const auto cst = displacement_from_force(ForceField::uniform({{0, F0}}), seeds, opts);
    for (const auto& path : cst.trajectories)
        for (const auto& s : path) EXPECT_NEAR(s.u[0], F0 * s.t * s.t / (2.0 * opts.mass), 1e-12);
    EXPECT_LT(cst.fit_max_deviation, 1e-12);

    const auto osc = displacement_from_force(ForceField::uniform({{0, F0, UniformForceTerm::Kind::cosine, w}}),
                                             seeds, opts);
    for (const auto& path : osc.trajectories)
        for (const auto& s : path)
            EXPECT_NEAR(s.u[0], F0 * (1.0 - std::cos(w * s.t)) / (opts.mass * w * w), 1e-11);
    EXPECT_LT(osc.fit_max_deviation, 1e-11);

    const auto sn = displacement_from_force(
        ForceField::uniform({{1, F0, UniformForceTerm::Kind::sine, w, 0.4}}), seeds, opts);
    EXPECT_LT(sn.fit_max_deviation, 1e-11);
}

TEST(DisplacementFromForce, NonUniformForceHasNoSpecAndEnergyCheck)
{
    const double k = 4.0;
    ForceField spring;
    spring.eval = [k](const Vec3& r, double) { return -k * r; };
    spring.potential = [k](const Vec3& r) { return 0.5 * k * dot(r, r); };
    const std::vector<SeedState> seeds{{{1.0, 0.0, 0.0}, {0.0, 0.5, 0.0}}};
    const auto fine = displacement_from_force(spring, seeds, {1.0, 10.0, 10000, 1e-8});
    EXPECT_FALSE(fine.spec.has_value());
    EXPECT_THROW(displacement_from_force(spring, seeds, {1.0, 10.0, 20, 1e-8}), StepSizeTooLarge);
}
