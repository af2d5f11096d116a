#include <gtest/gtest.h>

#include "support.hpp"

using namespace toruslab;
using toruslab::testing::liouville;

static Trajectory flat_line(Vec2 base, double angle, double T) {
    MetricSpec m = MetricSpec::flat();
    return integrate_two_sided(m, unit_phase_point(m, base, angle), T);
}

TEST(Foliation, RotationTagParse) {
    RotationTag a = RotationTag::parse("rational:2/4");
    EXPECT_EQ(a.kind(), RotationTag::Kind::Rational);
    EXPECT_EQ(a.axis_class().p, 2);
    EXPECT_EQ(a.axis_class().q, 1);
    EXPECT_EQ(a.to_string(), "rational:1/2");
    EXPECT_EQ(RotationTag::parse("inf").kind(), RotationTag::Kind::Infinity);
    EXPECT_EQ(RotationTag::parse("rational:1/0").kind(), RotationTag::Kind::Infinity);
    EXPECT_EQ(RotationTag::parse("rational:0").axis_class().p, 1);
    EXPECT_EQ(RotationTag::parse("rational:-3/-6").to_string(), "rational:1/2");
    RotationTag g = RotationTag::parse("irrational:0.6180339887");
    EXPECT_FALSE(g.is_rational());
    EXPECT_DOUBLE_EQ(g.value(), 0.6180339887);
    EXPECT_THROW(g.axis_class(), UsageError);
    for (const char* bad : {"0.5", "irrational:abc", "rational:1/x", "rational:0/0", "real:1", "irrational:inf"})
        EXPECT_THROW(RotationTag::parse(bad), UsageError) << bad;
    EXPECT_TRUE(RotationTag::infinity().projective().is_infinite());
}

TEST(Foliation, CrossingLinesMeetOnce) {
    Trajectory a = flat_line({0, 0}, 0.0, 10.0), b = flat_line({0, 0.5}, M_PI / 4, 10.0);
    EXPECT_EQ(count_intersections(a, b), 1);
}

TEST(Foliation, TranslateOfIrrationalLineIsDisjoint) {
    Trajectory a = flat_line({0, 0}, std::atan(std::sqrt(2.0) - 1), 50.0);
    EXPECT_EQ(count_intersections(a, a.translated({1.0, 0.0})), 0);
}

TEST(Foliation, CountsRepeatedCrossings) {
    MetricSpec m = MetricSpec::flat();
    // Zig-zag built from four flat segments against a horizontal line.
    Trajectory z;
    double t = 0.0;
    for (int k = 0; k <= 40; ++k) {
        double x = 0.1 * k, y = (k / 10) % 2 == 0 ? -0.5 + 0.1 * (k % 10) : 0.5 - 0.1 * (k % 10);
        z.samples.push_back({t, {x, y, 1, 0}});
        t += 0.1;
    }
    Trajectory h = flat_line({0, 0.05}, 0.0, 10.0);
    EXPECT_EQ(count_intersections(z, h), 4);
    (void)m;
}

TEST(Foliation, GeodesicsHaveNoSelfCrossings) {
    MetricSpec m = liouville();
    Trajectory tr = integrate_two_sided(m, unit_phase_point(m, {0.1, 0.2}, 0.4), 300.0);
    EXPECT_EQ(count_intersections(tr, tr), 0);
    Trajectory loop;
    double t = 0;
    for (Vec2 v : {Vec2{0, 0}, Vec2{2, 0}, Vec2{2, 1}, Vec2{1, 1}, Vec2{1, -1}}) {
        loop.samples.push_back({t, {v.x, v.y, 0, 0}});
        t += 1;
    }
    EXPECT_EQ(count_intersections(loop, loop), 1);
}

TEST(Foliation, LatticeTranslates) {
    auto t = lattice_translates(3.0);
    EXPECT_EQ(t.size(), 28u);
    for (auto [a, b] : t) EXPECT_LE(std::hypot(a, b), 3.0);
}

TEST(Foliation, TranslateDisjointFlatAndRationalError) {
    MetricSpec m = MetricSpec::flat();
    Trajectory tr = flat_line({0.1, 0.2}, std::atan(std::sqrt(2.0) - 1), 100.0);
    TranslateReport r = check_translate_disjoint(m, tr, RotationTag::irrational(std::sqrt(2.0) - 1), lattice_translates(3));
    EXPECT_TRUE(r.pass);
    for (const auto& c : r.counts) EXPECT_EQ(c.crossings, 0);
    EXPECT_THROW(check_translate_disjoint(m, tr, RotationTag::rational(1, 2), lattice_translates(3)), RationalTag);
}

TEST(Foliation, FlatFanDegenerate) {
    BoundaryFan f = boundary_directions(MetricSpec::flat(), {0.3, 0.1}, RotationTag::rational(1, 1));
    EXPECT_TRUE(f.degenerate);
    EXPECT_LE(f.width, 1e-12);
    EXPECT_NEAR(std::remainder(f.lower - M_PI / 4, M_PI), 0.0, 1e-9);
}

TEST(Foliation, LiouvilleVerticalFanOpen) {
    MetricSpec m = liouville();
    BoundaryFan f = boundary_directions(m, {0.25, 0.0}, RotationTag::infinity());
    EXPECT_FALSE(f.degenerate);
    EXPECT_GT(f.corrected_width, 0.5);
    // Both boundary geodesics are forward asymptotic to lifts of x = 0.5.
    for (double a : {f.lower, f.upper}) {
        Trajectory tr = integrate(m, unit_phase_point(m, f.base, a), 8.0);
        double x = tr.back().x;
        EXPECT_NEAR(std::remainder(x - 0.5, 1.0), 0.0, 0.05) << a;
    }
    // Boundary geodesic is minimal over a window of length 10.
    Trajectory tr = integrate_two_sided(m, unit_phase_point(m, f.base, f.lower), 8.0);
    EXPECT_TRUE(is_minimal_segment(m, tr, -5.0, 5.0, 1e-4).minimal);
}

TEST(Foliation, LiouvilleHorizontalFanDegenerate) {
    BoundaryFan f = boundary_directions(liouville(), {0.25, 0.3}, RotationTag::rational(0, 1));
    EXPECT_TRUE(f.degenerate);
    EXPECT_LE(f.width, 1e-12);
}

TEST(Foliation, FlatChartPasses) {
    MetricSpec m = MetricSpec::flat();
    ChartOptions o;
    o.n_leaves = 16;
    o.irrational_window = 100.0;
    FoliationChart chart = build_foliation(m, RotationTag::irrational(std::sqrt(2.0) - 1), o);
    EXPECT_EQ(chart.holes(), 0);
    VerifyReport rep = verify_chart(m, chart);
    EXPECT_TRUE(rep.all_pass());
    // Leaves are parallel straight lines.
    for (const auto& l : chart.leaves) {
        DirectionEstimate d = asymptotic_direction(l.trajectory);
        EXPECT_NEAR(d.projective.rho(), std::sqrt(2.0) - 1, 1e-9);
        EXPECT_LT(d.strip_half_width, 1e-9);
    }
}

TEST(Foliation, FlatRationalChartIsAxes) {
    MetricSpec m = MetricSpec::flat();
    FoliationChart chart = build_foliation(m, RotationTag::rational(1, 1));
    for (const auto& l : chart.leaves) {
        ASSERT_TRUE(l.ok);
        EXPECT_TRUE(l.fan->degenerate);
    }
    EXPECT_TRUE(verify_chart(m, chart).all_pass());
}

TEST(Foliation, LiouvilleVerticalChartAndFlippedSide) {
    MetricSpec m = liouville();
    FoliationChart chart = build_foliation(m, RotationTag::infinity());
    ASSERT_EQ(chart.holes(), 0);
    VerifyReport rep = verify_chart(m, chart);
    for (const auto& c : rep.checks) EXPECT_TRUE(c.pass) << c.id << " " << c.detail;
    chart.side = ChartSide::Left;
    VerifyReport flipped = verify_chart(m, chart);
    EXPECT_FALSE(flipped.get("d").pass);
}

TEST(Foliation, RejectsBadCharts) {
    ChartOptions o;
    o.n_leaves = 4;
    EXPECT_THROW(build_foliation(MetricSpec::flat(), RotationTag::infinity(), o), UsageError);
    o.n_leaves = 8;
    o.side = ChartSide::None;
    EXPECT_THROW(build_foliation(MetricSpec::flat(), RotationTag::infinity(), o), UsageError);
}
