#include <gtest/gtest.h>

#include <cmath>

#include "ripple/classical.hpp"

using namespace ripple;

TEST(ResonanceVelocities, Examples) {
    auto v = resonance_velocities(160000.0, pi, 1.0);
    EXPECT_NEAR(v.vx, 400.0, 1e-9);
    EXPECT_NEAR(v.vy, 400.0, 1e-9);
    v = resonance_velocities(1.0, pi, 1.0);
    EXPECT_NEAR(v.vx, 1.0, 1e-15);
    EXPECT_NEAR(v.vy, 1.0, 1e-15);
    v = resonance_velocities(160000.0, pi, 0.5);
    EXPECT_NEAR(pi * v.vy / pi, v.vx / 2.0, 1e-9);
    EXPECT_NEAR(v.vx * v.vx + v.vy * v.vy, 320000.0, 1e-6);
    EXPECT_THROW(resonance_velocities(160000.0, pi, 0.0), PhysicsError);
    EXPECT_THROW(resonance_velocities(-1.0, pi, 1.0), DomainError);
}

namespace {
DrivingField undriven() {
    DrivingField f;
    f.f0 = 0.0;
    return f;
}
}  // namespace

TEST(Advance, FlatBottomBounce) {
    const Geometry geo{pi, 0.0};
    ClassicalState s{0.3, 0.5, 3.0, -2.0, 0.0};
    const auto st = advance_trajectory(s, 0.4, undriven(), geo);  // hits y = 0 at t = 0.25
    EXPECT_EQ(st.bottom, 1);
    EXPECT_EQ(s.vx, 3.0);
    EXPECT_NEAR(s.vy, 2.0, 1e-12);
    EXPECT_NEAR(s.y, 2.0 * 0.15, 1e-9);
    EXPECT_NEAR(s.x, 0.3 + 3.0 * 0.4, 1e-12);
}

TEST(Advance, FlatChannelConservesEnergy) {
    const Geometry geo{pi, 0.0};
    ClassicalState s{0.0, 1.0, 300.0, 283.0, 0.0};
    const double e0 = classical_energy(s, undriven());
    long bounces = 0;
    while (bounces < 1000) {
        const auto st = advance_trajectory(s, 0.05, undriven(), geo);
        bounces += st.bottom + st.top;
    }
    EXPECT_LE(std::abs(classical_energy(s, undriven()) - e0) / e0, 1e-6);
    EXPECT_NEAR(s.vy * s.vy, 283.0 * 283.0, 1e-6 * 283.0 * 283.0);
}

TEST(Advance, RippledTopReflectionMatchesVectorFormula) {
    const Geometry geo{pi, 0.01};
    const double xc = pi / 2.0;
    // start just below the wall at x = pi/2 moving up and right
    const double vx = 0.5, vy = 40.0;
    const double tau = 1e-3;
    ClassicalState s{xc - vx * tau, geo.top(xc) - vy * tau + 1e-12, vx, vy, 0.0};
    advance_trajectory(s, 1.5 * tau, undriven(), geo);
    // oracle: reflect about the unit normal of y - d - a cos x at the hit point
    const double xh = xc;  // collision occurs within ~1e-12 of x = pi/2 (top(x) is flat in y to O(a dx))
    const double nx = geo.a * std::sin(xh), ny = 1.0, nn = std::hypot(nx, ny);
    const double dot = (vx * nx + vy * ny) / nn;
    const double rvx = vx - 2.0 * dot * nx / nn, rvy = vy - 2.0 * dot * ny / nn;
    EXPECT_NEAR(s.vx, rvx, 1e-6);
    EXPECT_NEAR(s.vy, rvy, 1e-6);
    EXPECT_NEAR(std::hypot(s.vx, s.vy), std::hypot(vx, vy), 1e-12);
}

TEST(Advance, SpeedPreservedAtEveryCollision) {
    const Geometry geo{pi, 0.01};
    ClassicalState s{0.1, 1.0, 100.0, 100.0, 0.0};
    const double v0 = std::hypot(s.vx, s.vy);
    for (int i = 0; i < 200; ++i) {
        advance_trajectory(s, 0.01, undriven(), geo);
        EXPECT_NEAR(std::hypot(s.vx, s.vy), v0, 1e-12 * v0);
        EXPECT_GE(s.y, -1e-10);
        EXPECT_LE(s.y, geo.top(s.x) + 1e-10);
    }
}

TEST(Advance, RippledUndrivenEnergyPerThousandBounces) {
    const Geometry geo{pi, 0.01};
    ClassicalState s{0.2, 0.0, 400.0, 400.0, 0.0};
    const double e0 = classical_energy(s, undriven());
    long bounces = 0;
    while (bounces < 1000) {
        const auto st = advance_trajectory(s, 0.05, undriven(), geo);
        bounces += st.bottom + st.top;
    }
    EXPECT_LE(std::abs(classical_energy(s, undriven()) - e0) / e0, 1e-6);
}

TEST(Advance, DrivenFlightMatchesClosedForm) {
    // no walls reached: y(t) follows the integrated force exactly
    const Geometry geo{100.0, 0.0};
    DrivingField f;
    ClassicalState s{0.0, 50.0, 1.0, 0.0, 0.0};
    advance_trajectory(s, 0.3, f, geo);
    const double t = 0.3;
    const double y = 50.0 + f.f0 * ((1.0 - std::cos(f.omega1 * t)) / (f.omega1 * f.omega1) +
                                    (1.0 - std::cos(f.omega2 * t)) / (f.omega2 * f.omega2));
    const double vy = f.f0 * (std::sin(f.omega1 * t) / f.omega1 + std::sin(f.omega2 * t) / f.omega2);
    EXPECT_NEAR(s.y, y, 1e-12);
    EXPECT_NEAR(s.vy, vy, 1e-12);
}

TEST(Advance, RejectsOutsideState) {
    const Geometry geo{pi, 0.01};
    ClassicalState s{0.0, -0.1, 1.0, 1.0, 0.0};
    EXPECT_THROW(advance_trajectory(s, 0.1, undriven(), geo), PhysicsError);
}

TEST(Seeding, CountDeterminismAndZeroOffset) {
    const Geometry geo{pi, 0.01};
    const DrivingField f;
    const auto a = seed_stochastic_layer(160000.0, 1.0, 0.01, 100, 42, geo, f);
    const auto b = seed_stochastic_layer(160000.0, 1.0, 0.01, 100, 42, geo, f);
    ASSERT_EQ(a.states.size(), 100u);
    for (std::size_t i = 0; i < 100; ++i) {
        EXPECT_EQ(a.states[i].x, b.states[i].x);
        EXPECT_EQ(a.states[i].vy, b.states[i].vy);
        EXPECT_NEAR(0.5 * (a.states[i].vx * a.states[i].vx + a.states[i].vy * a.states[i].vy), 160000.0, 1e-9 * 160000.0);
        EXPECT_EQ(a.states[i].t, 0.0);
    }
    const auto c = seed_stochastic_layer(160000.0, 1.0, 0.01, 100, 43, geo, f);
    EXPECT_NE(a.states[0].x, c.states[0].x);

    const auto z = seed_stochastic_layer(160000.0, 1.0, 0.0, 10, 1, geo, f);
    for (const auto& s : z.states) {
        EXPECT_NEAR(classical_energy(s, f), 160000.0, 1e-9);
        EXPECT_EQ(s.vx, 400.0);
    }
    EXPECT_THROW(seed_stochastic_layer(160000.0, 1.0, 0.1, 10, 1, geo, f), DomainError);
    EXPECT_THROW(seed_stochastic_layer(160000.0, 1.0, 0.01, 0, 1, geo, f), DomainError);
}

TEST(EnergyVariance, Examples) {
    const DrivingField f;
    std::vector<ClassicalState> same(3, ClassicalState{0.0, 1.0, 2.0, 3.0, 0.0});
    EXPECT_EQ(classical_energy_variance(same, f), 0.0);
    // kinetic energies E +- delta at y = 0 (potential vanishes)
    const double e = 50.0, dl = 3.0;
    std::vector<ClassicalState> two{{0.0, 0.0, std::sqrt(2.0 * (e + dl)), 0.0, 0.0},
                                    {0.0, 0.0, std::sqrt(2.0 * (e - dl)), 0.0, 0.0}};
    EXPECT_NEAR(classical_energy_variance(two, f), dl * dl, 1e-12);
    EXPECT_THROW(classical_energy_variance(std::vector<ClassicalState>{}, f), DomainError);
}

TEST(EnergyVariance, UndrivenEnsembleConstant) {
    const Geometry geo{pi, 0.01};
    const auto f = undriven();
    auto ens = seed_stochastic_layer(10000.0, 1.0, 0.01, 20, 9, geo, f);
    const auto rec = run_ensemble(ens, f, geo, 40, 10);
    for (double v : rec.var_E) EXPECT_NEAR(v, rec.var_E.front(), 1e-6 * 10000.0 * 10000.0 * 1e-6 + 1e-6 * std::abs(rec.var_E.front()));
}

TEST(FitClassical, Examples) {
    ClassicalRecord r;
    for (int i = 0; i <= 50; ++i) {
        r.t.push_back(0.1 * i);
        r.var_E.push_back(7.0 * 0.1 * i + 2.0);
    }
    auto f = fit_classical_diffusion(r, 0.0, 5.0);
    EXPECT_NEAR(f.D, 7.0, 1e-12);
    for (auto& v : r.var_E) v = 4.0;
    f = fit_classical_diffusion(r, 0.0, 5.0);
    EXPECT_NEAR(f.D, 0.0, 1e-12);
}

TEST(Poincare, FlatUndrivenIsALine) {
    const Geometry geo{pi, 0.0};
    ClassicalState s{0.0, 0.0, 37.0, 41.0, 0.0};
    const auto pts = poincare_section(s, undriven(), geo, 200);
    ASSERT_EQ(pts.size(), 200u);
    for (const auto& p : pts) {
        EXPECT_EQ(p.vx, 37.0);
        EXPECT_GE(p.x, 0.0);
        EXPECT_LT(p.x, 2.0 * pi);
    }
}

TEST(Poincare, ResonanceIslandIsBounded) {
    // near the elliptic point (x = pi on the bottom section) the orbit stays on a small island
    const Geometry geo{pi, 0.01};
    ClassicalState s{pi, 0.0, 400.0, 400.0, 0.0};
    const auto pts = poincare_section(s, undriven(), geo, 400);
    double lo = 1e9, hi = -1e9;
    for (const auto& p : pts) {
        lo = std::min(lo, p.vx);
        hi = std::max(hi, p.vx);
    }
    EXPECT_LT(hi - lo, 0.1 * 400.0);
}
