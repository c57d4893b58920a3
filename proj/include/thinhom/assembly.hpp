#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

#include "thinhom/error.hpp"
#include "thinhom/mesh.hpp"
#include "thinhom/sparse.hpp"

namespace thinhom {

using Field2 = std::function<double(double, double)>;
using VectorField2 = std::function<std::array<double, 2>(double, double)>;

/// Where coefficient fields are sampled on each triangle.
enum class CoefficientRule {
    EdgeMidpoints, // 3-point rule, exact for quadratics
    Centroid,      // one sample per element, exact P1 integrals of the product
};

/// Nodal values on a mesh.
struct FemField {
    const TriMesh2D* mesh = nullptr;
    std::vector<double> values;

    bool consistent() const { return mesh && values.size() == mesh->num_nodes(); }
};

/// Identification of periodic slave nodes with their masters.
struct DofMap {
    std::vector<int> dof_of_node;
    int num_dofs = 0;

    static DofMap build(const TriMesh2D& mesh) {
        const int n = static_cast<int>(mesh.num_nodes());
        std::vector<int> parent(n);
        std::iota(parent.begin(), parent.end(), 0);
        auto root = [&](int v) {
            while (parent[v] != v) v = parent[v];
            return v;
        };
        for (const auto& [m, s] : mesh.periodic_pairs) {
            const double du = mesh.nodes[s][0] - mesh.nodes[m][0];
            const double dv = mesh.nodes[s][1] - mesh.nodes[m][1];
            if (std::abs(du - mesh.period_u) > 1e-12 * std::max(1.0, mesh.period_u) || std::abs(dv) > 1e-12)
                fail(ErrorKind::DegenerateMesh, "periodic pair coordinates do not differ by one period");
            const int rm = root(m), rs = root(s);
            if (rm != rs) parent[std::max(rm, rs)] = std::min(rm, rs);
        }
        DofMap d;
        d.dof_of_node.assign(n, -1);
        std::vector<int> of_root(n, -1);
        for (int v = 0; v < n; ++v) {
            const int r = root(v);
            if (of_root[r] < 0) of_root[r] = d.num_dofs++;
            d.dof_of_node[v] = of_root[r];
        }
        return d;
    }

    std::vector<double> to_nodes(std::span<const double> dofs) const {
        std::vector<double> out(dof_of_node.size());
        for (std::size_t v = 0; v < out.size(); ++v) out[v] = dofs[dof_of_node[v]];
        return out;
    }
};

/// Terms of the bilinear form a(u,v) = int a_uu u_u v_u + a_vv u_v v_v + m u v
/// and load l(v) = int m f v + int s . grad v. Empty fields contribute nothing.
struct AssemblyTerms {
    Field2 a_uu;
    Field2 a_vv;
    Field2 mass_weight;
    Field2 source;
    VectorField2 flux_source;
    CoefficientRule rule = CoefficientRule::EdgeMidpoints;
    /// Optional per-element integral of an extra weight multiplying the
    /// stiffness and flux terms (used for weighted cell problems where the
    /// weight is integrated more accurately than a 3-point rule allows).
    std::span<const double> element_weight_integrals = {};
};

struct AssembledSystem {
    SparseMatrixCSR A;
    std::vector<double> b;
    DofMap dofs;
    std::vector<double> lumped_mass; // per dof, area/3 per element vertex
};

/// Gradients of the three P1 shape functions on triangle t and its area.
inline std::array<std::array<double, 2>, 3> p1_gradients(const TriMesh2D& mesh, std::size_t t, double& area) {
    const auto& [a, b, c] = mesh.triangles[t];
    const Point2 &p = mesh.nodes[a], &q = mesh.nodes[b], &r = mesh.nodes[c];
    const double det = (q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]);
    area = 0.5 * det;
    if (!(area > 0.0)) fail(ErrorKind::DegenerateMesh, "degenerate triangle " + std::to_string(t));
    return {{{(q[1] - r[1]) / det, (r[0] - q[0]) / det},
             {(r[1] - p[1]) / det, (p[0] - r[0]) / det},
             {(p[1] - q[1]) / det, (q[0] - p[0]) / det}}};
}

/// Element matrix and load for one triangle, before periodic folding.
struct ElementContribution {
    std::array<std::array<double, 3>, 3> K{};
    std::array<double, 3> f{};
};

inline ElementContribution element_contribution(const TriMesh2D& mesh, std::size_t t, const AssemblyTerms& terms) {
    double area = 0.0;
    const auto grad = p1_gradients(mesh, t, area);
    const auto& tri = mesh.triangles[t];
    const Point2 &p = mesh.nodes[tri[0]], &q = mesh.nodes[tri[1]], &r = mesh.nodes[tri[2]];

    // Edge-midpoint quadrature points with barycentric coordinates.
    const std::array<Point2, 3> mid{{{0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])},
                                     {0.5 * (q[0] + r[0]), 0.5 * (q[1] + r[1])},
                                     {0.5 * (r[0] + p[0]), 0.5 * (r[1] + p[1])}}};
    const std::array<std::array<double, 3>, 3> bary{{{0.5, 0.5, 0.0}, {0.0, 0.5, 0.5}, {0.5, 0.0, 0.5}}};
    const Point2 cen{(p[0] + q[0] + r[0]) / 3.0, (p[1] + q[1] + r[1]) / 3.0};
    const bool centroid = terms.rule == CoefficientRule::Centroid;

    auto mean_of = [&](const Field2& f) {
        if (!f) return 0.0;
        if (centroid) return f(cen[0], cen[1]);
        return (f(mid[0][0], mid[0][1]) + f(mid[1][0], mid[1][1]) + f(mid[2][0], mid[2][1])) / 3.0;
    };

    ElementContribution e;
    double stiff_scale = area;
    if (!terms.element_weight_integrals.empty()) stiff_scale = terms.element_weight_integrals[t];
    const double auu = terms.a_uu ? mean_of(terms.a_uu) : 0.0;
    const double avv = terms.a_vv ? mean_of(terms.a_vv) : 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            e.K[i][j] = stiff_scale * (auu * grad[i][0] * grad[j][0] + avv * grad[i][1] * grad[j][1]);

    if (terms.mass_weight) {
        if (centroid) {
            const double m = terms.mass_weight(cen[0], cen[1]);
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) e.K[i][j] += m * area * (i == j ? 2.0 : 1.0) / 12.0;
        } else {
            for (int k = 0; k < 3; ++k) {
                const double m = terms.mass_weight(mid[k][0], mid[k][1]);
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j) e.K[i][j] += area / 3.0 * m * bary[k][i] * bary[k][j];
            }
        }
    }
    if (terms.source) {
        // The source is always sampled at edge midpoints; only the weight
        // follows the coefficient rule.
        const double mc = (centroid && terms.mass_weight) ? terms.mass_weight(cen[0], cen[1]) : 1.0;
        for (int k = 0; k < 3; ++k) {
            double m = mc;
            if (!centroid) m = terms.mass_weight ? terms.mass_weight(mid[k][0], mid[k][1]) : 1.0;
            const double fv = terms.source(mid[k][0], mid[k][1]);
            for (int i = 0; i < 3; ++i) e.f[i] += area / 3.0 * m * fv * bary[k][i];
        }
    }
    if (terms.flux_source) {
        std::array<double, 2> s{0.0, 0.0};
        if (centroid) {
            s = terms.flux_source(cen[0], cen[1]);
        } else {
            for (int k = 0; k < 3; ++k) {
                const auto v = terms.flux_source(mid[k][0], mid[k][1]);
                s[0] += v[0] / 3.0;
                s[1] += v[1] / 3.0;
            }
        }
        for (int i = 0; i < 3; ++i) e.f[i] += stiff_scale * (s[0] * grad[i][0] + s[1] * grad[i][1]);
    }
    return e;
}

/// Assembles the folded global system; traversal order is fixed so results
/// are bitwise reproducible.
inline AssembledSystem assemble(const TriMesh2D& mesh, const AssemblyTerms& terms) {
    if (!terms.element_weight_integrals.empty() && terms.element_weight_integrals.size() != mesh.num_triangles())
        fail(ErrorKind::Domain, "element weight integrals must match the triangle count");
    AssembledSystem sys;
    sys.dofs = DofMap::build(mesh);
    const int n = sys.dofs.num_dofs;
    TripletBuilder tb(n);
    sys.b.assign(n, 0.0);
    sys.lumped_mass.assign(n, 0.0);
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const ElementContribution e = element_contribution(mesh, t, terms);
        const auto& tri = mesh.triangles[t];
        const double area = mesh.signed_area(t);
        for (int i = 0; i < 3; ++i) {
            const int I = sys.dofs.dof_of_node[tri[i]];
            sys.b[I] += e.f[i];
            sys.lumped_mass[I] += area / 3.0;
            for (int j = 0; j < 3; ++j) tb.add(I, sys.dofs.dof_of_node[tri[j]], e.K[i][j]);
        }
    }
    sys.A = tb.build();
    return sys;
}

/// Convenience overload with scalar fields only.
inline std::pair<SparseMatrixCSR, std::vector<double>> assemble(const TriMesh2D& mesh, const Field2& a_uu,
                                                                const Field2& a_vv, const Field2& mass_weight,
                                                                const Field2& source,
                                                                CoefficientRule rule = CoefficientRule::EdgeMidpoints) {
    AssemblyTerms t;
    t.a_uu = a_uu;
    t.a_vv = a_vv;
    t.mass_weight = mass_weight;
    t.source = source;
    t.rule = rule;
    auto sys = assemble(mesh, t);
    return {std::move(sys.A), std::move(sys.b)};
}

/// Constant gradient of a P1 field on triangle t.
inline std::array<double, 2> element_gradient(const TriMesh2D& mesh, std::size_t t, std::span<const double> nodal) {
    double area = 0.0;
    const auto g = p1_gradients(mesh, t, area);
    const auto& tri = mesh.triangles[t];
    std::array<double, 2> d{0.0, 0.0};
    for (int i = 0; i < 3; ++i) {
        d[0] += nodal[tri[i]] * g[i][0];
        d[1] += nodal[tri[i]] * g[i][1];
    }
    return d;
}

/// Exact integral of a P1 field.
inline double integrate_p1(const TriMesh2D& mesh, std::span<const double> nodal) {
    double s = 0.0;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangles[t];
        s += mesh.signed_area(t) * (nodal[tri[0]] + nodal[tri[1]] + nodal[tri[2]]) / 3.0;
    }
    return s;
}

/// Barycentric coordinates of (u, v) in triangle t.
inline std::array<double, 3> barycentric(const TriMesh2D& mesh, std::size_t t, double u, double v) {
    const auto& tri = mesh.triangles[t];
    const Point2 &p = mesh.nodes[tri[0]], &q = mesh.nodes[tri[1]], &r = mesh.nodes[tri[2]];
    const double det = (q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]);
    const double l1 = ((u - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (v - p[1])) / det;
    const double l2 = ((q[0] - p[0]) * (v - p[1]) - (u - p[0]) * (q[1] - p[1])) / det;
    return {1.0 - l1 - l2, l1, l2};
}

/// Triangle containing (u, v), or -1. Linear scan; meshes here are small.
inline long locate(const TriMesh2D& mesh, double u, double v, double tol = 1e-12) {
    long best = -1;
    double best_min = -1e300;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto l = barycentric(mesh, t, u, v);
        const double mn = std::min({l[0], l[1], l[2]});
        if (mn > best_min) best_min = mn, best = static_cast<long>(t);
    }
    return best_min >= -tol ? best : -1;
}

/// P1 interpolation of nodal data at (u, v); domain error outside the mesh.
inline double interpolate(const TriMesh2D& mesh, std::span<const double> nodal, double u, double v) {
    const long t = locate(mesh, u, v);
    if (t < 0) fail(ErrorKind::Domain, "point outside the mesh");
    const auto l = barycentric(mesh, static_cast<std::size_t>(t), u, v);
    const auto& tri = mesh.triangles[t];
    return l[0] * nodal[tri[0]] + l[1] * nodal[tri[1]] + l[2] * nodal[tri[2]];
}

} // namespace thinhom
