#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

using namespace toruslab;
using toruslab::testing::liouville;

// Euler-Lagrange equations of L = lambda |v|^2 / 2:
// lambda v' = lambda_x |v|^2 / 2 - (grad lambda . v) v, evaluated by
// central differences of lambda.
static PhaseVelocity euler_lagrange(const MetricSpec& m, const PhasePoint& p) {
    const double h = 1e-6;
    double l = m.lambda(p.x, p.y);
    double lx = (m.lambda(p.x + h, p.y) - m.lambda(p.x - h, p.y)) / (2 * h);
    double ly = (m.lambda(p.x, p.y + h) - m.lambda(p.x, p.y - h)) / (2 * h);
    double v2 = p.vx * p.vx + p.vy * p.vy, gv = lx * p.vx + ly * p.vy;
    return {p.vx, p.vy, (0.5 * lx * v2 - gv * p.vx) / l, (0.5 * ly * v2 - gv * p.vy) / l};
}

TEST(Flow, FlatRhsIsStraight) {
    PhaseVelocity v = geodesic_rhs(MetricSpec::flat(), {0, 0, 1, 0});
    EXPECT_EQ(v.dx, 1.0);
    EXPECT_EQ(v.dy, 0.0);
    EXPECT_EQ(v.dvx, 0.0);
    EXPECT_EQ(v.dvy, 0.0);
}

TEST(Flow, LiouvilleRhsBendsTowardHigherLambda) {
    MetricSpec m = liouville();
    PhaseVelocity v = geodesic_rhs(m, {0.25, 0.0, 0.0, 1.0 / std::sqrt(2.0)});
    EXPECT_NEAR(v.dvx, -0.075 * M_PI, 1e-14);
    EXPECT_NEAR(v.dvy, 0.0, 1e-15);
}

TEST(Flow, RhsMatchesEulerLagrange) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> pos(-1.0, 1.0), ang(0.0, 2 * M_PI);
    MetricSpec conf = load_metric(toruslab::testing::config("conformal.json"));
    for (const MetricSpec* m : {&conf}) {
        for (int i = 0; i < 20; ++i) {
            PhasePoint p = unit_phase_point(*m, {pos(rng), pos(rng)}, ang(rng));
            PhaseVelocity a = geodesic_rhs(*m, p), b = euler_lagrange(*m, p);
            EXPECT_NEAR(a.dvx, b.dvx, 1e-7);
            EXPECT_NEAR(a.dvy, b.dvy, 1e-7);
        }
    }
    MetricSpec liou = liouville();
    for (int i = 0; i < 20; ++i) {
        PhasePoint p = unit_phase_point(liou, {pos(rng), pos(rng)}, ang(rng));
        PhaseVelocity a = geodesic_rhs(liou, p), b = euler_lagrange(liou, p);
        EXPECT_NEAR(a.dvx, b.dvx, 1e-7);
        EXPECT_NEAR(a.dvy, b.dvy, 1e-7);
    }
}

TEST(Flow, FlatEndpointClosedForm) {
    MetricSpec m = MetricSpec::flat();
    Trajectory tr = integrate(m, {0, 0, 0.6, 0.8}, 10.0);
    EXPECT_NEAR(tr.back().x, 6.0, 1e-9);
    EXPECT_NEAR(tr.back().y, 8.0, 1e-9);
    EXPECT_DOUBLE_EQ(tr.t_end(), 10.0);
    EXPECT_FALSE(tr.degraded);
    for (const auto& s : tr.samples) {
        EXPECT_NEAR(s.p.x, 0.6 * s.t, 1e-9);
        EXPECT_NEAR(s.p.y, 0.8 * s.t, 1e-9);
    }
}

TEST(Flow, UnitSpeedPreserved) {
    MetricSpec m = load_metric(toruslab::testing::config("conformal.json"));
    Trajectory tr = integrate(m, unit_phase_point(m, {0.1, 0.3}, 1.1), 200.0);
    for (const auto& s : tr.samples) EXPECT_NEAR(speed_defect(m, s.p), 0.0, 1e-12);
    EXPECT_LT(tr.energy_drift, 1e-7);
}

TEST(Flow, TimeReversal) {
    MetricSpec m = liouville();
    PhasePoint p0 = unit_phase_point(m, {0.1, 0.2}, 0.7);
    const double T = 50.0;
    Trajectory fwd = integrate(m, p0, T);
    Trajectory back = integrate(m, fwd.back().reversed(), T);
    EXPECT_LT(norm(back.back().position() - p0.position()), 1e-6 * T);
}

TEST(Flow, DeckEquivariance) {
    MetricSpec m = liouville();
    PhasePoint p0 = unit_phase_point(m, {0.1, 0.2}, 0.7);
    Trajectory a = integrate(m, p0, 100.0);
    Trajectory b = integrate(m, p0.translated({3.0, -2.0}), 100.0);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_NEAR(b.samples[i].p.x - a.samples[i].p.x, 3.0, 1e-9);
        EXPECT_NEAR(b.samples[i].p.y - a.samples[i].p.y, -2.0, 1e-9);
    }
}

TEST(Flow, FirstIntegralConserved) {
    MetricSpec m = liouville();
    PhasePoint p0 = unit_phase_point(m, {0.13, 0.4}, 1.2);
    Trajectory tr = integrate(m, p0, 500.0);
    ASSERT_TRUE(tr.first_integral_drift.has_value());
    double F0 = first_integral(m, p0), worst = 0.0;
    for (const auto& s : tr.samples) worst = std::max(worst, std::abs(first_integral(m, s.p) - F0));
    EXPECT_LT(worst, 1e-7);
    EXPECT_NEAR(worst, *tr.first_integral_drift, 1e-9);
    EXPECT_THROW(first_integral(MetricSpec::flat(), p0), NotLiouville);
}

TEST(Flow, TwoSidedJoinsAtOrigin) {
    MetricSpec m = liouville();
    PhasePoint p0 = unit_phase_point(m, {0.25, 0.0}, 1.0);
    Trajectory tr = integrate_two_sided(m, p0, 20.0);
    EXPECT_DOUBLE_EQ(tr.t_begin(), -20.0);
    EXPECT_DOUBLE_EQ(tr.t_end(), 20.0);
    const auto& o = tr.samples[tr.origin_index()];
    EXPECT_EQ(o.t, 0.0);
    EXPECT_EQ(o.p.x, p0.x);
    for (std::size_t i = 1; i < tr.size(); ++i) EXPECT_GT(tr.samples[i].t, tr.samples[i - 1].t);
    // Backward half equals the forward flow of the reversed vector.
    Trajectory rev = integrate(m, p0.reversed(), 20.0);
    EXPECT_NEAR(tr.front().x, rev.back().x, 1e-12);
    EXPECT_NEAR(tr.front().y, rev.back().y, 1e-12);
}

TEST(Flow, RejectsBadOptions) {
    IntegratorOptions o;
    o.abs_tol = 0.0;
    EXPECT_THROW(integrate(MetricSpec::flat(), {0, 0, 1, 0}, 1.0, o), UsageError);
}
