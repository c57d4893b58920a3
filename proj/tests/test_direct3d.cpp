#include <cmath>
#include <memory>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "thinhom/direct3d.hpp"
#include "thinhom/homsolver.hpp"

using namespace thinhom;

namespace {

using oracle::pi;

ThinDomainSpec slab(double eps, Field2 f) {
    ThinDomainSpec s;
    s.epsilon = eps;
    s.profile = make_profile("constant", {1.0});
    s.source = std::move(f);
    return s;
}

double cos_cos(double x, double y) { return std::cos(pi * x) * std::cos(pi * y); }

} // namespace

TEST(Direct3D, FlatSlabMesh) {
    const auto s = slab(0.1, [](double, double) { return 1.0; });
    ThinMeshOptions o;
    o.nz = 4;
    const HexMesh3D m = build_thin_mesh(s, o);
    for (double h : m.top) EXPECT_DOUBLE_EQ(h, 0.1);
    EXPECT_EQ(m.nz, 4);
    const double dx = 1.0 / m.n1, dy = 1.0 / m.n2, dz = 0.1 / 4;
    // Trilinear map of a box: Jacobian = volume / 8 everywhere.
    EXPECT_NEAR(min_jacobian(m), dx * dy * dz / 8.0, 1e-15);
}

TEST(Direct3D, AxisCellCountsFollowPeriods) {
    ThinDomainSpec s;
    s.epsilon = 0.1;
    s.alpha = 0.5;
    s.beta = 0.75;
    s.profile = make_profile("cos_cos", {2.0, 1.0});
    s.source = [](double, double) { return 1.0; };
    const HexMesh3D m = build_thin_mesh(s);
    // 1 / 0.1^0.5 = 3.16 periods -> 4; 1 / 0.1^0.75 = 5.62 periods -> 6.
    EXPECT_EQ(m.n1, 8 * 4);
    EXPECT_EQ(m.n2, 8 * 6);
    EXPECT_GT(min_jacobian(m), 0.0);
    for (int i = 0; i <= m.n1; ++i)
        for (int j = 0; j <= m.n2; ++j) EXPECT_NEAR(m.height(i, j), s.thickness(m.x1[i], m.x2[j]), 1e-15);
}

TEST(Direct3D, BudgetIsEnforcedBeforeMeshing) {
    ThinDomainSpec s;
    s.epsilon = 0.05;
    s.alpha = 1.0;
    s.beta = 2.0;
    s.profile = make_profile("cos_cos", {2.0, 1.0});
    s.source = [](double, double) { return 1.0; };
    try {
        build_thin_mesh(s);
        FAIL() << "expected a budget error";
    } catch (const BudgetError& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Budget);
        // 20 periods in x1, 400 in x2, 8 cells each, 6 layers.
        EXPECT_EQ(e.required(), 160LL * 3200 * 6);
        EXPECT_EQ(e.available(), 2000000);
    }
}

TEST(Direct3D, ZeroSourceGivesZero) {
    const auto s = slab(0.2, [](double, double) { return 0.0; });
    const auto m = std::make_shared<const HexMesh3D>(build_thin_mesh(s));
    const auto d = solve_direct(s, m);
    for (double v : d.u) EXPECT_EQ(v, 0.0);
    EXPECT_EQ(d.h1_norm, 0.0);
}

TEST(Direct3D, ConstantsAreReproduced) {
    ThinDomainSpec s;
    s.epsilon = 0.2;
    s.profile = make_profile("cos_cos", {2.0, 1.0});
    s.source = [](double, double) { return 2.5; };
    const auto m = std::make_shared<const HexMesh3D>(build_thin_mesh(s));
    const auto d = solve_direct(s, m);
    for (double v : d.u) EXPECT_NEAR(v, 2.5, 1e-10);
    // For a constant solution the energy bound is an equality.
    EXPECT_NEAR(d.h1_norm, d.source_norm, 1e-9 * d.source_norm);
}

TEST(Direct3D, EnergyBoundHolds) {
    ThinDomainSpec s;
    s.epsilon = 0.2;
    s.profile = make_profile("sin_y2", {2.0, 1.0});
    s.source = [](double x, double y) { return cos_cos(x, y) + x; };
    const auto d = solve_direct(s, std::make_shared<const HexMesh3D>(build_thin_mesh(s)));
    EXPECT_GT(d.h1_norm, 0.0);
    EXPECT_LE(d.h1_norm, d.source_norm);
    EXPECT_LE(d.residual, 1e-10);
}

TEST(Direct3D, FlatSlabMatchesPlanarSolve) {
    const auto s = slab(0.1, cos_cos);
    ThinMeshOptions o;
    o.min_cells = 64;
    o.nz = 2;
    const auto m = std::make_shared<const HexMesh3D>(build_thin_mesh(s, o));
    ASSERT_EQ(m->n1, 64);
    ASSERT_EQ(m->n2, 64);
    const auto d = solve_direct(s, m);
    HomogenizedProblem p;
    p.coefficients.a11 = p.coefficients.a22 = p.coefficients.m = [](double, double) { return 1.0; };
    p.f_bar = cos_cos;
    const auto hom = solve_homogenized(p, 64, 64);
    EXPECT_LT(vertical_average_error(d, 0.1, [&](double a, double b) { return hom.value_at(a, b); }), 1e-3);
    // The solution does not vary across the thickness.
    for (int k = 1; k <= m->nz; ++k) EXPECT_NEAR(d.u[m->node(10, 20, k)], d.u[m->node(10, 20, 0)], 1e-9);
}

TEST(Direct3D, ConstantProfileValidationIsDiscretizationOnly) {
    HomogenizedProblem p;
    p.coefficients.a11 = p.coefficients.a22 = p.coefficients.m = [](double, double) { return 1.0; };
    p.f_bar = cos_cos;
    const auto hom = solve_homogenized(p, 64, 64);
    std::vector<ThinDomainSpec> specs{slab(0.2, cos_cos), slab(0.1, cos_cos)};
    const auto rep = validate(specs, hom);
    ASSERT_EQ(rep.rows.size(), 2u);
    for (const auto& r : rep.rows) {
        EXPECT_LT(r.error, 1e-2);
        EXPECT_GT(r.min_jacobian, 0.0);
        EXPECT_LE(r.h1_norm, r.source_norm);
    }
    EXPECT_TRUE(rep.notes.empty());
}

TEST(Direct3D, ValidationChecksEveryBudgetFirst) {
    HomogenizedProblem p;
    p.coefficients.a11 = p.coefficients.a22 = p.coefficients.m = [](double, double) { return 1.0; };
    p.f_bar = cos_cos;
    const auto hom = solve_homogenized(p, 8, 8);
    auto big = slab(0.05, cos_cos);
    big.alpha = 1.0;
    big.beta = 2.0;
    big.profile = make_profile("cos_cos", {2.0, 1.0});
    EXPECT_THROW(validate({slab(0.2, cos_cos), big}, hom), BudgetError);
}

TEST(Direct3D, InvalidSpecs) {
    auto s = slab(1.5, cos_cos);
    EXPECT_THROW_KIND(build_thin_mesh(s), ErrorKind::Config);
    s = slab(0.1, nullptr);
    EXPECT_THROW_KIND(build_thin_mesh(s), ErrorKind::Config);
    s = slab(0.1, cos_cos);
    s.alpha = s.beta = 0.5;
    EXPECT_THROW_KIND(build_thin_mesh(s), ErrorKind::UnsupportedRegime);
    s = slab(0.1, cos_cos);
    ThinMeshOptions o;
    o.cells_per_period = 2;
    EXPECT_THROW_KIND(build_thin_mesh(s, o), ErrorKind::Config);
}

TEST(Strip, ConstantSourceAndFlatStrip) {
    const auto g = make_profile("sin_y2", {2.0, 1.0});
    const auto one = solve_strip(0.1, 1.0, g, 0.0, 1.0, [](double) { return 1.0; });
    for (double v : one.u) EXPECT_NEAR(v, 1.0, 1e-9);
    // Flat strip: u = cos(pi x2) / (pi^2 + 1) exactly in the limit.
    const auto flat = make_profile("constant", {1.0});
    auto f = [](double x) { return std::cos(pi * x); };
    auto exact = [](double x) { return std::cos(pi * x) / (pi * pi + 1.0); };
    StripOptions o;
    o.cells_per_period = 64;
    o.nz = 2;
    const auto s = solve_strip(0.1, 1.0, flat, 0.0, 1.0, f, o);
    EXPECT_LT(strip_average_error(s, 0.1, exact), 1e-3);
    EXPECT_NEAR(s.vertical_average(0.5, 0.05), 0.0, 1e-4);
    EXPECT_THROW_KIND(s.vertical_average(0.5, 0.5), ErrorKind::Domain);
}

TEST(Strip, InvalidInputs) {
    const auto g = make_profile("constant", {1.0});
    auto f = [](double) { return 1.0; };
    EXPECT_THROW_KIND(solve_strip(0.0, 1.0, g, 0.0, 1.0, f), ErrorKind::Config);
    EXPECT_THROW_KIND(solve_strip(0.1, 1.0, g, 1.0, 1.0, f), ErrorKind::Config);
    StripOptions o;
    o.nz = 1;
    EXPECT_THROW_KIND(solve_strip(0.1, 1.0, g, 0.0, 1.0, f, o), ErrorKind::Config);
    EXPECT_THROW_KIND(solve_strip(0.1, 1.0, make_profile("stripes_y2"), 0.0, 1.0, f), ErrorKind::Config);
}
