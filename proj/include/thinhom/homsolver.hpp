#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "thinhom/assembly.hpp"
#include "thinhom/error.hpp"
#include "thinhom/mesh.hpp"
#include "thinhom/quadrature.hpp"
#include "thinhom/regime.hpp"
#include "thinhom/sparse.hpp"

namespace thinhom {

/// Limit problem on a rectangle:
///   int a11 u_x1 phi_x1 + a22 u_x2 phi_x2 + m u phi = int m fbar phi,
/// natural boundary conditions everywhere.
struct HomogenizedProblem {
    Rectangle omega{};
    EffectiveCoefficients coefficients;
    Field2 f_bar;
};

struct HomSolution {
    std::shared_ptr<const TriMesh2D> mesh;
    FemField u;
    Rectangle omega{};
    int n1 = 0, n2 = 0;
    double energy = 0.0; // u^T A u
    double load = 0.0;   // b^T u; equals the energy at convergence
    int iterations = 0;
    double residual = 0.0;
    double weighted_mean_u = 0.0;    // int m u / int m
    double weighted_mean_fbar = 0.0; // int m fbar / int m

    /// P1 value at (x1, x2), located directly on the structured lattice.
    double value_at(double x1, double x2) const {
        const double s1 = (x1 - omega.x1_lo) / omega.width() * n1;
        const double s2 = (x2 - omega.x2_lo) / omega.height() * n2;
        if (s1 < -1e-9 || s1 > n1 + 1e-9 || s2 < -1e-9 || s2 > n2 + 1e-9)
            fail(ErrorKind::Domain, "evaluation point outside omega");
        const int i = std::clamp(static_cast<int>(std::floor(s1)), 0, n1 - 1);
        const int j = std::clamp(static_cast<int>(std::floor(s2)), 0, n2 - 1);
        const double s = s1 - i, t = s2 - j;
        auto at = [&](int a, int b) { return u.values[a * (n2 + 1) + b]; };
        const double ua = at(i, j), ub = at(i + 1, j), uc = at(i + 1, j + 1), ud = at(i, j + 1);
        // Quads are split along (i,j)-(i+1,j+1).
        if (t <= s) return ua + s * (ub - ua) + t * (uc - ub);
        return ua + t * (ud - ua) + s * (uc - ud);
    }
};

namespace detail {

inline Field2 checked_positive(Field2 f, const char* name) {
    if (!f) fail(ErrorKind::Config, std::string("coefficient ") + name + " is not set");
    return [f, name](double x1, double x2) {
        const double v = f(x1, x2);
        if (!(v > 0.0) || !std::isfinite(v))
            fail(ErrorKind::Domain, std::string("non-positive coefficient ") + name + " sampled at (" +
                                        std::to_string(x1) + ", " + std::to_string(x2) + ")");
        return v;
    };
}

} // namespace detail

/// P1 Galerkin solve on an n1 x n2 structured triangulation of omega.
inline HomSolution solve_homogenized(const HomogenizedProblem& p, int n1, int n2, double tol = 1e-11,
                                     CoefficientRule rule = CoefficientRule::EdgeMidpoints, int max_iter = 200000) {
    if (n1 < 2 || n2 < 2) fail(ErrorKind::Config, "homogenized mesh needs n1, n2 >= 2");
    if (!p.f_bar) fail(ErrorKind::Config, "source f_bar is not set");
    p.omega.validate();
    auto mesh = std::make_shared<const TriMesh2D>(build_rectangle_mesh(p.omega, n1, n2));

    AssemblyTerms terms;
    terms.a_uu = detail::checked_positive(p.coefficients.a11, "a11");
    terms.a_vv = detail::checked_positive(p.coefficients.a22, "a22");
    terms.mass_weight = detail::checked_positive(p.coefficients.m, "m");
    terms.source = p.f_bar;
    terms.rule = rule;
    const AssembledSystem sys = assemble(*mesh, terms);

    CgOptions cg;
    cg.tol = tol;
    cg.max_iter = max_iter;
    const CgResult r = solve_cg(sys.A, sys.b, cg);

    HomSolution out;
    out.mesh = mesh;
    out.omega = p.omega;
    out.n1 = n1;
    out.n2 = n2;
    out.u.mesh = mesh.get();
    out.u.values = sys.dofs.to_nodes(r.x);
    out.iterations = r.iterations;
    out.residual = r.residual;
    const auto Au = sys.A * std::span<const double>(r.x);
    out.energy = detail::dot(r.x, Au);
    out.load = detail::dot(r.x, sys.b);

    // Weighted means from testing with phi = 1 (1^T A u = int m u).
    std::vector<double> ones(sys.dofs.num_dofs, 1.0);
    double mass = 0.0, fint = 0.0;
    {
        AssemblyTerms mt;
        mt.mass_weight = terms.mass_weight;
        mt.source = [](double, double) { return 1.0; };
        mt.rule = rule;
        const AssembledSystem ms = assemble(*mesh, mt);
        for (double v : ms.b) mass += v;
    }
    for (double v : sys.b) fint += v;
    out.weighted_mean_u = detail::dot(ones, Au) / mass;
    out.weighted_mean_fbar = fint / mass;
    return out;
}

/// Errors of one refinement level.
struct ConvergenceRow {
    int n = 0;
    double h = 0.0;
    double l2 = 0.0;
    double h1 = 0.0; // H1 seminorm
};

struct ConvergenceTable {
    std::vector<ConvergenceRow> rows;
    /// Least-squares slopes of log(error) against log(h); empty for a single
    /// level or when every error is below `exact_threshold`.
    std::optional<double> rate_l2, rate_h1;
    bool exact = false;
    static constexpr double exact_threshold = 1e-12;
};

/// L2 and H1-seminorm errors of a P1 field against an exact solution, with a
/// degree-7 collapsed Gauss rule per triangle.
inline std::pair<double, double> p1_errors(const TriMesh2D& mesh, std::span<const double> u, const Field2& exact,
                                           const VectorField2& grad_exact) {
    const TriangleRule q = collapsed_triangle_rule(4);
    double e0 = 0.0, e1 = 0.0;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangles[t];
        const double area = mesh.signed_area(t);
        const auto gu = element_gradient(mesh, t, u);
        for (std::size_t k = 0; k < q.weights.size(); ++k) {
            const auto& l = q.bary[k];
            double x = 0.0, y = 0.0, uh = 0.0;
            for (int a = 0; a < 3; ++a) {
                x += l[a] * mesh.nodes[tri[a]][0];
                y += l[a] * mesh.nodes[tri[a]][1];
                uh += l[a] * u[tri[a]];
            }
            const double d = uh - exact(x, y);
            const auto ge = grad_exact(x, y);
            e0 += area * q.weights[k] * d * d;
            e1 += area * q.weights[k] * ((gu[0] - ge[0]) * (gu[0] - ge[0]) + (gu[1] - ge[1]) * (gu[1] - ge[1]));
        }
    }
    return {std::sqrt(e0), std::sqrt(e1)};
}

namespace detail {

inline double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) sx += x[i], sy += y[i], sxx += x[i] * x[i], sxy += x[i] * y[i];
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

} // namespace detail

/// Solves on n0 x n0, 2n0 x 2n0, ... (`levels` meshes) and tabulates errors.
/// The default CG tolerance sits above the rounding floor of the finest
/// meshes and far below their discretization error.
inline ConvergenceTable convergence_study(const HomogenizedProblem& p, const Field2& exact,
                                          const VectorField2& grad_exact, int levels, int n0 = 16,
                                          double tol = 1e-11) {
    if (levels < 1) fail(ErrorKind::Config, "convergence study needs at least one level");
    if (!exact || !grad_exact) fail(ErrorKind::Config, "convergence study needs the exact solution and its gradient");
    ConvergenceTable table;
    int n = n0;
    for (int l = 0; l < levels; ++l, n *= 2) {
        const HomSolution s = solve_homogenized(p, n, n, tol);
        const auto [e0, e1] = p1_errors(*s.mesh, s.u.values, exact, grad_exact);
        table.rows.push_back({n, std::max(p.omega.width(), p.omega.height()) / n, e0, e1});
    }
    bool all_small = true;
    for (const auto& r : table.rows)
        if (r.l2 >= ConvergenceTable::exact_threshold || r.h1 >= ConvergenceTable::exact_threshold) all_small = false;
    table.exact = all_small;
    if (table.rows.size() >= 2 && !all_small) {
        std::vector<double> lh, l0, l1;
        for (const auto& r : table.rows) {
            lh.push_back(std::log(r.h));
            l0.push_back(std::log(r.l2));
            l1.push_back(std::log(r.h1));
        }
        table.rate_l2 = detail::ls_slope(lh, l0);
        table.rate_h1 = detail::ls_slope(lh, l1);
    }
    return table;
}

} // namespace thinhom
