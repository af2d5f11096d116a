#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

using namespace toruslab;
using toruslab::testing::liouville;

TEST(Metric, FlatIsIdentity) {
    MetricSpec m = MetricSpec::flat();
    ConformalFactor c = m.conformal_factor(0.3, -7.2);
    EXPECT_EQ(c.lambda, 1.0);
    EXPECT_EQ(c.dx, 0.0);
    EXPECT_EQ(c.dy, 0.0);
    Christoffel g = m.christoffel(0.1, 0.2);
    EXPECT_EQ(g.g1_11, 0.0);
    EXPECT_EQ(g.g1_12, 0.0);
    EXPECT_EQ(g.g2_11, 0.0);
    EXPECT_EQ(g.g2_12, 0.0);
}

TEST(Metric, LiouvilleLowerBound) {
    MetricSpec m = liouville();
    EXPECT_NEAR(m.lambda_lower(), 1.7, 1e-15);
    EXPECT_NEAR(m.lambda_upper(), 2.3, 1e-15);
    EXPECT_GE(m.sampled_min_lambda(), m.lambda_lower());
}

TEST(Metric, PositivityViolation) {
    nlohmann::json j = {{"variant", "liouville"},
                        {"f", {{"mean", 1.0}, {"harmonics", {{{"k", 1}, {"cos", 1.2}, {"sin", 0.0}}}}}},
                        {"g", {{"mean", 0.1}}}};
    EXPECT_THROW(build_metric(j), PositivityViolation);
}

TEST(Metric, MalformedSpec) {
    EXPECT_THROW(build_metric(nlohmann::json{{"variant", "hyperbolic"}}), MalformedSpec);
    EXPECT_THROW(build_metric(nlohmann::json::array()), MalformedSpec);
}

TEST(Metric, LiouvilleConformalFactorExamples) {
    MetricSpec m = liouville();
    ConformalFactor a = m.conformal_factor(0.0, 0.37);
    EXPECT_NEAR(a.lambda, 2.3, 1e-15);
    EXPECT_NEAR(a.dx, 0.0, 1e-15);
    EXPECT_EQ(a.dy, 0.0);
    ConformalFactor b = m.conformal_factor(0.25, 0.0);
    EXPECT_NEAR(b.lambda, 2.0, 1e-15);
    EXPECT_NEAR(b.dx, -0.6 * M_PI, 1e-14);
    EXPECT_EQ(b.dy, 0.0);
    Christoffel g = m.christoffel(0.25, 0.0);
    EXPECT_NEAR(g.g1_11, -0.15 * M_PI, 1e-14);
    EXPECT_NEAR(g.g2_11, 0.0, 1e-15);
    EXPECT_NEAR(g.g1_22(), 0.15 * M_PI, 1e-14);
}

// Christoffel symbols of lambda (dx^2 + dy^2) from the coordinate formula
// G^k_ij = 1/2 g^kl (d_i g_lj + d_j g_li - d_l g_ij), with the metric
// derivatives taken by central differences of lambda.
static void check_christoffel_fd(const MetricSpec& m, double x, double y) {
    const double h = 1e-5;
    double l = m.lambda(x, y);
    double lx = (m.lambda(x + h, y) - m.lambda(x - h, y)) / (2 * h);
    double ly = (m.lambda(x, y + h) - m.lambda(x, y - h)) / (2 * h);
    double d[2] = {lx, ly};
    auto gamma = [&](int k, int i, int j) {
        double gij = i == j ? 1.0 : 0.0, gkj = k == j ? 1.0 : 0.0, gki = k == i ? 1.0 : 0.0;
        return 0.5 / l * (d[i] * gkj + d[j] * gki - d[k] * gij);
    };
    Christoffel c = m.christoffel(x, y);
    EXPECT_NEAR(c.g1_11, gamma(0, 0, 0), 1e-6);
    EXPECT_NEAR(c.g1_12, gamma(0, 0, 1), 1e-6);
    EXPECT_NEAR(c.g2_11, gamma(1, 0, 0), 1e-6);
    EXPECT_NEAR(c.g2_12, gamma(1, 0, 1), 1e-6);
    EXPECT_NEAR(c.g1_22(), gamma(0, 1, 1), 1e-6);
    EXPECT_NEAR(c.g2_22(), gamma(1, 1, 1), 1e-6);
}

TEST(Metric, ChristoffelMatchesFiniteDifferences) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> coef(-0.08, 0.08), pos(-2.0, 2.0);
    std::vector<Harmonic2D> terms;
    for (auto [k, l] : std::vector<std::pair<int, int>>{{1, 0}, {0, 1}, {1, 1}, {1, -1}, {2, 1}})
        terms.push_back({k, l, coef(rng), coef(rng)});
    MetricSpec conf = MetricSpec::conformal(TrigPoly2D(0.0, terms));
    MetricSpec liou = liouville();
    MetricSpec flat = MetricSpec::flat();
    for (int i = 0; i < 25; ++i) {
        double x = pos(rng), y = pos(rng);
        check_christoffel_fd(conf, x, y);
        check_christoffel_fd(liou, x, y);
        check_christoffel_fd(flat, x, y);
    }
}

TEST(Metric, JetMatchesFiniteDifferences) {
    MetricSpec m = build_metric(nlohmann::json::parse(R"({"variant":"conformal","u":{"mean":0.0,
        "terms":[{"k":1,"l":0,"cos":0.15,"sin":0.0},{"k":1,"l":1,"cos":0.0,"sin":0.1}]}})"));
    const double h = 1e-4;
    for (double x : {0.1, 0.37, 0.8})
        for (double y : {-0.3, 0.25}) {
            Jet2 j = m.jet(x, y);
            auto lx = [&](double a, double b) { return (m.lambda(a + h, b) - m.lambda(a - h, b)) / (2 * h); };
            auto ly = [&](double a, double b) { return (m.lambda(a, b + h) - m.lambda(a, b - h)) / (2 * h); };
            EXPECT_NEAR(j.dx, lx(x, y), 1e-6);
            EXPECT_NEAR(j.dy, ly(x, y), 1e-6);
            EXPECT_NEAR(j.dxx, (lx(x + h, y) - lx(x - h, y)) / (2 * h), 1e-5);
            EXPECT_NEAR(j.dxy, (ly(x + h, y) - ly(x - h, y)) / (2 * h), 1e-5);
            EXPECT_NEAR(j.dyy, (ly(x, y + h) - ly(x, y - h)) / (2 * h), 1e-5);
        }
}

TEST(Metric, Periodicity) {
    MetricSpec m = load_metric(toruslab::testing::config("conformal.json"));
    for (double x : {0.0, 0.3, 0.71})
        for (double y : {0.0, 0.45}) {
            double l = m.lambda(x, y);
            EXPECT_GT(l, 0.0);
            EXPECT_NEAR(m.lambda(x + 1, y), l, 1e-14);
            EXPECT_NEAR(m.lambda(x, y + 1), l, 1e-14);
            EXPECT_GE(l, m.lambda_lower());
            EXPECT_LE(l, m.lambda_upper());
        }
}

TEST(Metric, ConfigsLoad) {
    EXPECT_TRUE(load_metric(toruslab::testing::config("flat.json")).is_flat());
    MetricSpec l = load_metric(toruslab::testing::config("liouville.json"));
    ASSERT_TRUE(l.is_liouville());
    EXPECT_NEAR(l.lambda(0.5, 0.1), 1.7, 1e-15);
    EXPECT_THROW(load_metric(toruslab::testing::config("absent.json")), UsageError);
}
