#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "thinhom/profile.hpp"
#include "thinhom/regime.hpp"

using namespace thinhom;

namespace {

std::vector<ProfileFunction> catalog_profiles() {
    std::vector<ProfileFunction> out;
    for (const auto& e : profile_catalog()) out.push_back(make_profile(e.name));
    out.push_back(make_profile("fourier", {7.0, 3.0, 1.2}));
    out.push_back(make_profile("cos_cos", {3.0, 0.5}, 2.0, 0.5));
    return out;
}

} // namespace

TEST(Quadrature, GaussIntegratesMonomialsUpToDegree2nMinus1) {
    for (int n = 1; n <= 8; ++n) {
        const Rule1D r = gauss_legendre_unit(n);
        for (int d = 0; d <= 2 * n - 1; ++d)
            EXPECT_NEAR(r.integrate([d](double x) { return std::pow(x, d); }), 1.0 / (d + 1), 1e-14) << n << " " << d;
    }
}

TEST(Quadrature, CompositeRuleIsExactOnEachPanel) {
    // x^9 is integrated exactly by 5 points per panel; breakpoints add panels.
    const std::vector<double> breaks{0.3, 1.7};
    const Rule1D r = composite_gauss(-1.0, 2.0, 5, 3, breaks);
    EXPECT_NEAR(r.integrate([](double x) { return std::pow(x, 9); }), (std::pow(2.0, 10) - 1.0) / 10.0, 1e-11);
    double w = 0.0;
    for (double x : r.weights) w += x;
    EXPECT_NEAR(w, 3.0, 1e-14);
    EXPECT_EQ(r.size(), 5u * 5u);
}

TEST(Profile, BarGExamples) {
    EXPECT_NEAR(bar_g(make_profile("constant", {2.0}), 0.37), 2.0, 1e-14);
    const auto cc = make_profile("cos_cos");
    const double ref = oracle::simpson([&](double t) { return 2.0 + std::cos(0.6 * oracle::pi) * std::cos(2 * oracle::pi * t); }, 0, 1);
    EXPECT_NEAR(ref, 2.0, 1e-12);
    EXPECT_NEAR(bar_g(cc, 0.3), ref, 1e-12);
    EXPECT_NEAR(bar_g(make_profile("stripes_y2"), 0.1), 2.0, 1e-14);
}

TEST(Profile, MeanGExamples) {
    EXPECT_NEAR(mean_g(make_profile("constant", {3.5})), 3.5, 1e-14);
    const auto cc = make_profile("cos_cos");
    EXPECT_NEAR(mean_g(cc), oracle::midpoint2([&](double a, double b) { return cc(a, b); }, 0, 1, 0, 1), 1e-12);
    EXPECT_NEAR(mean_g(cc), 2.0, 1e-12);
    EXPECT_NEAR(mean_g(make_profile("stripes_y2")), 2.0, 1e-14);
    EXPECT_NEAR(mean_g(make_profile("checkerboard")), 2.0, 1e-14);
}

TEST(Profile, HarmonicFactorExamples) {
    EXPECT_NEAR(harmonic_factor([](double) { return 4.0; }, 1.0), 1.0, 1e-12);
    const std::vector<double> jump{0.5};
    EXPECT_NEAR(harmonic_factor([](double t) { return t < 0.5 ? 1.0 : 3.0; }, 1.0, {}, jump), 0.75, 1e-12);
    const auto h = [](double t) { return 2.0 + std::sin(2 * oracle::pi * t); };
    // Analytic: <1/h> = 1/sqrt(3), <h> = 2.
    EXPECT_NEAR(harmonic_factor(h, 1.0), std::sqrt(3.0) / 2.0, 1e-10);
    const double inv = oracle::simpson([&](double t) { return 1.0 / h(t); }, 0, 1);
    EXPECT_NEAR(inv, 1.0 / std::sqrt(3.0), 1e-12);
}

TEST(Profile, MinProfileExamples) {
    EXPECT_DOUBLE_EQ(min_profile(make_profile("constant", {1.5})), 1.5);
    const auto cc = make_profile("cos_cos");
    double grid = 1e9;
    for (int i = 0; i <= 400; ++i)
        for (int j = 0; j <= 400; ++j) grid = std::min(grid, cc(i / 400.0, j / 400.0));
    EXPECT_NEAR(min_profile(cc), 1.0, 1e-12);
    EXPECT_LE(min_profile(cc), grid + 1e-15);
    EXPECT_DOUBLE_EQ(min_profile(make_profile("stripes_y2")), 1.0);
    EXPECT_NEAR(min_profile(cc, 0.25), 2.0, 1e-12);
    EXPECT_NEAR(max_profile(cc, 0.0), 3.0, 1e-12);
}

TEST(Profile, BoundsHoldOnDenseGrid) {
    for (const auto& g : catalog_profiles()) {
        ASSERT_TRUE(g.declared_bounds().has_value()) << g.name();
        const auto d = *g.declared_bounds();
        for (int i = 0; i <= 200; ++i)
            for (int j = 0; j <= 200; ++j) {
                const double v = g(g.period1() * i / 200, g.period2() * j / 200);
                EXPECT_GE(v, d.lower - 1e-12) << g.name();
                EXPECT_LE(v, d.upper + 1e-12) << g.name();
                ASSERT_GT(v, 0.0);
            }
        EXPECT_NO_THROW(validate_profile(g));
    }
}

TEST(Profile, PeriodicityIsExact) {
    for (const auto& g : catalog_profiles())
        for (int k = 0; k < 50; ++k) {
            const double y1 = 0.173 * k - 2.0, y2 = 0.0911 * k - 1.0;
            EXPECT_EQ(g(y1 + g.period1(), y2), g(y1, y2)) << g.name();
            EXPECT_EQ(g(y1, y2 + g.period2()), g(y1, y2)) << g.name();
        }
}

TEST(Profile, MeanBetweenBoundsAndHarmonicAtMostOne) {
    for (const auto& g : catalog_profiles()) {
        const double g0 = min_profile(g), g1 = max_profile(g), m = mean_g(g);
        EXPECT_LE(g0, m + 1e-12) << g.name();
        EXPECT_LE(m, g1 + 1e-12) << g.name();
        EXPECT_LE(weak_factor_y1(g), 1.0 + 1e-12) << g.name();
        EXPECT_LE(weak_factor_y2(g), 1.0 + 1e-12) << g.name();
        if (g.name() == "constant") {
            EXPECT_NEAR(g0, m, 1e-12);
            EXPECT_NEAR(weak_factor_y1(g), 1.0, 1e-12);
        } else {
            EXPECT_LT(g0, m) << g.name();
        }
    }
}

TEST(Profile, DoublingPanelsChangesSmoothAveragesBelow1e10) {
    Quadrature2D coarse, fine;
    fine.axis1.panels = fine.axis2.panels = 64;
    for (const auto& g : catalog_profiles()) {
        if (g.piecewise_constant()) continue;
        EXPECT_LT(std::abs(mean_g(g, coarse) - mean_g(g, fine)), 1e-10) << g.name();
        EXPECT_LT(std::abs(bar_g(g, 0.3, coarse.axis2) - bar_g(g, 0.3, fine.axis2)), 1e-10) << g.name();
    }
}

TEST(Profile, PiecewiseAveragesAreExactWithAlignedPanels) {
    Quadrature1D q{1, 3}; // panels at thirds; the jump at 1/2 is added by the rule
    const auto g = make_profile("stripes_y2", {1.0, 3.0});
    EXPECT_NEAR(bar_g(g, 0.2, q), 2.0, 1e-14);
    const auto t = make_table_profile({{0, 0.3, 0, 1, 2.0}, {0.3, 1, 0, 0.6, 1.0}, {0.3, 1, 0.6, 1, 5.0}});
    const double exact = 0.3 * 2.0 + 0.7 * (0.6 * 1.0 + 0.4 * 5.0);
    EXPECT_NEAR(mean_g(t, {q, q}), exact, 1e-14);
}

TEST(Profile, TableRejectsGapsOverlapsAndBadValues) {
    EXPECT_THROW_KIND(make_table_profile({{0, 0.5, 0, 1, 1.0}}), ErrorKind::InvalidProfile);
    EXPECT_THROW_KIND(make_table_profile({{0, 0.6, 0, 1, 1.0}, {0.4, 1, 0, 1, 1.0}}), ErrorKind::InvalidProfile);
    EXPECT_THROW_KIND(make_table_profile({{0, 1, 0, 1, 0.0}}), ErrorKind::InvalidProfile);
    EXPECT_THROW_KIND(make_table_profile({}), ErrorKind::InvalidProfile);
}

TEST(Profile, CatalogLookupAndParameters) {
    EXPECT_THROW_KIND(make_profile("nope"), ErrorKind::Config);
    EXPECT_THROW_KIND(make_profile("cos_cos", {1.0}), ErrorKind::Config);
    EXPECT_THROW_KIND(make_profile("fourier", {1.0, 2.0, 2.5}), ErrorKind::Config);
    // Non-positive catalog parameters are caught by validation.
    EXPECT_THROW_KIND(validate_profile(make_profile("cos_cos", {1.0, 2.0})), ErrorKind::InvalidProfile);
}

TEST(Profile, FourierIsReproducibleFromItsSeed) {
    const auto a = make_profile("fourier", {5.0, 2.0, 0.8});
    const auto b = make_profile("fourier", {5.0, 2.0, 0.8});
    const auto c = make_profile("fourier", {6.0, 2.0, 0.8});
    bool differs = false;
    for (int k = 0; k < 20; ++k) {
        const double y1 = 0.05 * k, y2 = 0.037 * k;
        EXPECT_EQ(a(y1, y2), b(y1, y2));
        differs = differs || a(y1, y2) != c(y1, y2);
    }
    EXPECT_TRUE(differs);
    EXPECT_NEAR(mean_g(a), 2.0, 1e-12);
}

TEST(Profile, RejectsNonPositivePeriods) {
    EXPECT_THROW_KIND(make_profile("cos_cos", {}, 0.0, 1.0), ErrorKind::InvalidProfile);
}
