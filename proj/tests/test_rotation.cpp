#include <gtest/gtest.h>

#include "support.hpp"

using namespace toruslab;
using toruslab::testing::liouville;

TEST(Rotation, ProjectiveExamples) {
    EXPECT_NEAR(ProjectiveDirection::from_vector({0.6, 0.8}).rho(), 4.0 / 3.0, 1e-15);
    EXPECT_TRUE(ProjectiveDirection::from_vector({0.0, 1.0}).is_infinite());
    EXPECT_NEAR(ProjectiveDirection::from_vector({-0.6, -0.8}).rho(), 4.0 / 3.0, 1e-15);
    EXPECT_TRUE(ProjectiveDirection::from_rho(std::numeric_limits<double>::infinity()).is_infinite());
}

TEST(Rotation, ProjectiveRoundTrip) {
    for (double th = 0.0; th < M_PI; th += 0.0371) {
        if (std::abs(th - M_PI / 2) < 1e-9) continue;
        ProjectiveDirection d = ProjectiveDirection::from_theta(th);
        EXPECT_NEAR(ProjectiveDirection::from_rho(d.rho()).theta(), th, 1e-14);
    }
    EXPECT_NEAR(ProjectiveDirection::from_theta(0.1).distance(ProjectiveDirection::from_theta(M_PI - 0.1)), 0.2, 1e-15);
}

TEST(Rotation, FlatLine) {
    MetricSpec m = MetricSpec::flat();
    Trajectory tr = integrate(m, {0, 0, 0.6, 0.8}, 100.0);
    DirectionEstimate d = asymptotic_direction(tr);
    EXPECT_NEAR(d.direction.x, 0.6, 1e-12);
    EXPECT_NEAR(d.direction.y, 0.8, 1e-12);
    EXPECT_NEAR(rotation_number(d).rho(), 4.0 / 3.0, 1e-9);
    EXPECT_LT(d.cauchy_error, 1e-12);
    EXPECT_LT(d.strip_half_width, 1e-9);
}

TEST(Rotation, LiouvilleVerticalAxis) {
    MetricSpec m = liouville();
    Trajectory tr = integrate(m, unit_phase_point(m, {0.5, 0.0}, M_PI / 2), 200.0);
    DirectionEstimate d = asymptotic_direction(tr);
    EXPECT_NEAR(d.projective.theta(), M_PI / 2, 1e-9);
    EXPECT_GT(std::abs(d.projective.rho()), 1e8);
}

TEST(Rotation, LiouvilleTailStable) {
    MetricSpec m = liouville();
    Trajectory tr = integrate(m, unit_phase_point(m, {0.1, 0.2}, 0.3), 2000.0);
    double a = asymptotic_direction(tr, 0.25).projective.theta();
    double b = asymptotic_direction(tr, 0.125).projective.theta();
    EXPECT_LT(std::abs(a - b), 1e-3);
    // Same estimate from twice the horizon.
    Trajectory tr2 = integrate(m, unit_phase_point(m, {0.1, 0.2}, 0.3), 4000.0);
    EXPECT_LT(std::abs(asymptotic_direction(tr2).projective.theta() - a), 1e-3);
}

TEST(Rotation, AntipodalSymmetry) {
    MetricSpec m = liouville();
    for (double a : {0.3, 1.0, 2.2}) {
        DirectionEstimate p = asymptotic_direction(integrate(m, unit_phase_point(m, {0.1, 0.2}, a), 1000.0));
        DirectionEstimate q = asymptotic_direction(integrate(m, unit_phase_point(m, {0.1, 0.2}, a + M_PI), 1000.0));
        double gap = angle_between(p.direction, -q.direction);
        EXPECT_LE(gap, std::max(2.0 * (p.cauchy_error + q.cauchy_error), 1e-3));
    }
}

TEST(Rotation, StripConfined) {
    MetricSpec m = liouville();
    PhasePoint p0 = unit_phase_point(m, {0.1, 0.2}, 0.9);
    double w1 = asymptotic_direction(integrate_two_sided(m, p0, 500.0)).strip_half_width;
    double w2 = asymptotic_direction(integrate_two_sided(m, p0, 1000.0)).strip_half_width;
    EXPECT_LT(w1, 2.0);
    EXPECT_LE(w2, 1.1 * w1 + 0.05);
}

TEST(Rotation, SymmetricEstimatorBeatsOneSided) {
    MetricSpec m = liouville();
    PhasePoint p0 = unit_phase_point(m, {0.1, 0.2}, 0.9);
    double ref = asymptotic_direction(integrate_two_sided(m, p0, 4000.0)).projective.theta();
    double two = asymptotic_direction(integrate_two_sided(m, p0, 200.0)).projective.theta();
    double one = asymptotic_direction(integrate(m, p0, 200.0)).projective.theta();
    EXPECT_LT(std::abs(two - ref), std::abs(one - ref));
}

TEST(Rotation, NotEscaping) {
    MetricSpec m = MetricSpec::flat();
    Trajectory tr = integrate(m, {0, 0, 1, 0}, 5.0);
    EXPECT_THROW(asymptotic_direction(tr), NotEscaping);
}

TEST(Rotation, FlatFiberMapIsIdentity) {
    MetricSpec m = MetricSpec::flat();
    FiberMapSample s = sample_fiber_map(m, {0.3, 0.7}, 64, 50.0);
    EXPECT_EQ(s.monotonicity_defect, 0.0);
    EXPECT_LT(s.degree_defect, 1e-9);
    for (std::size_t i = 0; i < s.fiber_angles.size(); ++i)
        EXPECT_NEAR(s.lifted_directions[i] - s.lifted_directions[0], s.fiber_angles[i], 1e-9);
}

TEST(Rotation, LiouvilleFiberMapMonotone) {
    MetricSpec m = liouville();
    FiberMapSample s = sample_fiber_map(m, {0.25, 0.0}, 256, 2000.0);
    EXPECT_GE(s.monotonicity_defect, -1e-3);
    EXPECT_LT(s.degree_defect, 1e-2);
}
