#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "thinhom/assembly.hpp"
#include "thinhom/error.hpp"
#include "thinhom/homsolver.hpp"
#include "thinhom/mesh.hpp"
#include "thinhom/profile.hpp"
#include "thinhom/regime.hpp"
#include "thinhom/sparse.hpp"

namespace thinhom {

/// Physical problem on R^eps = {x in omega x R : 0 < x3 < eps g(x1/eps^alpha, x2/eps^beta)}:
///   -Laplace u + u = f, natural boundary conditions.
struct ThinDomainSpec {
    double epsilon = 0.1;
    double alpha = 0.5;
    double beta = 0.75;
    ProfileFunction profile = make_profile("constant");
    Rectangle omega{};
    Field2 source;

    void validate() const {
        if (!(epsilon > 0.0 && epsilon < 1.0)) fail(ErrorKind::Config, "epsilon must lie in (0, 1)");
        omega.validate();
        classify(alpha, beta);
        if (!source) fail(ErrorKind::Config, "source is not set");
    }

    double scale1() const { return std::pow(epsilon, alpha); }
    double scale2() const { return std::pow(epsilon, beta); }
    double thickness(double x1, double x2) const { return epsilon * profile(x1 / scale1(), x2 / scale2()); }
};

struct ThinMeshOptions {
    int cells_per_period = 8;
    int nz = 6;
    int min_cells = 0; // lower bound on cells per axis
    long long element_budget = 2000000;
};

/// Tensor hexahedral mesh: node (i, j, k) at (x1_i, x2_j, (k/nz) eps g(...)).
struct HexMesh3D {
    int n1 = 0, n2 = 0, nz = 0;
    std::vector<double> x1, x2;
    std::vector<double> top; // eps g at base node (i, j), index i * (n2 + 1) + j

    long long num_elements() const { return static_cast<long long>(n1) * n2 * nz; }
    std::size_t num_nodes() const { return static_cast<std::size_t>(n1 + 1) * (n2 + 1) * (nz + 1); }
    std::size_t node(int i, int j, int k) const {
        return (static_cast<std::size_t>(i) * (n2 + 1) + j) * (nz + 1) + k;
    }
    double height(int i, int j) const { return top[static_cast<std::size_t>(i) * (n2 + 1) + j]; }
    std::array<double, 3> coord(int i, int j, int k) const {
        return {x1[i], x2[j], height(i, j) * k / nz};
    }
};

namespace detail {

// Cells along one axis: cells_per_period per oscillation period, rounded up.
inline long long axis_cells(double width, double period, int cells_per_period, int min_cells) {
    const double periods = width / period;
    const double r = std::round(periods);
    const long long whole = static_cast<long long>(std::abs(periods - r) <= 1e-9 * std::max(1.0, periods)
                                                       ? r
                                                       : std::ceil(periods));
    return std::max<long long>({1LL * cells_per_period * std::max<long long>(whole, 1), min_cells, 2});
}

// Trilinear shape functions on [-1, 1]^3; local node l = a + 2b + 4c.
struct HexShape {
    std::array<double, 8> N;
    std::array<std::array<double, 3>, 8> dN;
};

inline HexShape hex_shape(double xi, double eta, double zeta) {
    HexShape s;
    for (int l = 0; l < 8; ++l) {
        const double a = (l & 1) ? 1.0 : -1.0, b = (l & 2) ? 1.0 : -1.0, c = (l & 4) ? 1.0 : -1.0;
        const double fa = 0.5 * (1 + a * xi), fb = 0.5 * (1 + b * eta), fc = 0.5 * (1 + c * zeta);
        s.N[l] = fa * fb * fc;
        s.dN[l] = {0.5 * a * fb * fc, 0.5 * b * fa * fc, 0.5 * c * fa * fb};
    }
    return s;
}

struct HexGaussPoint {
    HexShape shape;
    double weight;
};

inline const std::array<HexGaussPoint, 8>& hex_gauss() {
    static const std::array<HexGaussPoint, 8> pts = [] {
        std::array<HexGaussPoint, 8> p{};
        const double g = 1.0 / std::sqrt(3.0);
        for (int q = 0; q < 8; ++q)
            p[q] = {hex_shape((q & 1) ? g : -g, (q & 2) ? g : -g, (q & 4) ? g : -g), 1.0};
        return p;
    }();
    return pts;
}

struct ElementGeometry {
    std::array<std::array<double, 3>, 8> X;
    std::array<std::size_t, 8> nodes;
};

inline ElementGeometry element_geometry(const HexMesh3D& m, int i, int j, int k) {
    ElementGeometry e;
    for (int l = 0; l < 8; ++l) {
        const int a = l & 1, b = (l >> 1) & 1, c = (l >> 2) & 1;
        e.X[l] = m.coord(i + a, j + b, k + c);
        e.nodes[l] = m.node(i + a, j + b, k + c);
    }
    return e;
}

// Jacobian determinant and physical shape gradients at one point.
inline double physical_gradients(const ElementGeometry& e, const HexShape& s,
                                 std::array<std::array<double, 3>, 8>& grad) {
    double J[3][3] = {};
    for (int l = 0; l < 8; ++l)
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) J[r][c] += e.X[l][r] * s.dN[l][c]; // J[r][c] = dx_r / dxi_c
    const double det = J[0][0] * (J[1][1] * J[2][2] - J[1][2] * J[2][1]) -
                       J[0][1] * (J[1][0] * J[2][2] - J[1][2] * J[2][0]) +
                       J[0][2] * (J[1][0] * J[2][1] - J[1][1] * J[2][0]);
    double inv[3][3];
    inv[0][0] = (J[1][1] * J[2][2] - J[1][2] * J[2][1]) / det;
    inv[0][1] = (J[0][2] * J[2][1] - J[0][1] * J[2][2]) / det;
    inv[0][2] = (J[0][1] * J[1][2] - J[0][2] * J[1][1]) / det;
    inv[1][0] = (J[1][2] * J[2][0] - J[1][0] * J[2][2]) / det;
    inv[1][1] = (J[0][0] * J[2][2] - J[0][2] * J[2][0]) / det;
    inv[1][2] = (J[0][2] * J[1][0] - J[0][0] * J[1][2]) / det;
    inv[2][0] = (J[1][0] * J[2][1] - J[1][1] * J[2][0]) / det;
    inv[2][1] = (J[0][1] * J[2][0] - J[0][0] * J[2][1]) / det;
    inv[2][2] = (J[0][0] * J[1][1] - J[0][1] * J[1][0]) / det;
    // grad N = J^{-T} dN
    for (int l = 0; l < 8; ++l)
        for (int r = 0; r < 3; ++r) grad[l][r] = inv[0][r] * s.dN[l][0] + inv[1][r] * s.dN[l][1] + inv[2][r] * s.dN[l][2];
    return det;
}

} // namespace detail

/// Mesh for one epsilon; throws BudgetError when the element count exceeds
/// the budget.
inline HexMesh3D build_thin_mesh(const ThinDomainSpec& spec, const ThinMeshOptions& opt = {}) {
    spec.validate();
    if (opt.cells_per_period < 4) fail(ErrorKind::Config, "cells_per_period must be >= 4");
    if (opt.nz < 1) fail(ErrorKind::Config, "nz must be >= 1");
    const auto& g = spec.profile;
    const long long n1 = detail::axis_cells(spec.omega.width(), spec.scale1() * g.period1(), opt.cells_per_period, opt.min_cells);
    const long long n2 = detail::axis_cells(spec.omega.height(), spec.scale2() * g.period2(), opt.cells_per_period, opt.min_cells);
    const long long required = n1 * n2 * opt.nz;
    if (required > opt.element_budget)
        throw BudgetError("epsilon = " + std::to_string(spec.epsilon) + " needs " + std::to_string(n1) + " x " +
                              std::to_string(n2) + " x " + std::to_string(opt.nz) + " = " + std::to_string(required) +
                              " elements, budget is " + std::to_string(opt.element_budget),
                          required, opt.element_budget);
    HexMesh3D m;
    m.n1 = static_cast<int>(n1);
    m.n2 = static_cast<int>(n2);
    m.nz = opt.nz;
    m.x1.resize(m.n1 + 1);
    m.x2.resize(m.n2 + 1);
    for (int i = 0; i <= m.n1; ++i) m.x1[i] = i == m.n1 ? spec.omega.x1_hi : spec.omega.x1_lo + spec.omega.width() * i / m.n1;
    for (int j = 0; j <= m.n2; ++j) m.x2[j] = j == m.n2 ? spec.omega.x2_hi : spec.omega.x2_lo + spec.omega.height() * j / m.n2;
    m.top.resize(static_cast<std::size_t>(m.n1 + 1) * (m.n2 + 1));
    for (int i = 0; i <= m.n1; ++i)
        for (int j = 0; j <= m.n2; ++j) {
            const double h = spec.thickness(m.x1[i], m.x2[j]);
            if (!(h > 0.0)) fail(ErrorKind::InvalidProfile, "thickness must be positive");
            m.top[static_cast<std::size_t>(i) * (m.n2 + 1) + j] = h;
        }
    return m;
}

/// Smallest Jacobian determinant over the 2x2x2 Gauss points of all elements.
inline double min_jacobian(const HexMesh3D& m) {
    double mn = std::numeric_limits<double>::infinity();
    std::array<std::array<double, 3>, 8> grad;
    for (int i = 0; i < m.n1; ++i)
        for (int j = 0; j < m.n2; ++j)
            for (int k = 0; k < m.nz; ++k) {
                const auto e = detail::element_geometry(m, i, j, k);
                for (const auto& q : detail::hex_gauss()) mn = std::min(mn, detail::physical_gradients(e, q.shape, grad));
            }
    return mn;
}

struct DirectSolution {
    std::shared_ptr<const HexMesh3D> mesh;
    std::vector<double> u; // nodal, HexMesh3D::node order
    int iterations = 0;
    double residual = 0.0;
    double h1_norm = 0.0;     // (u^T A u)^(1/2)
    double source_norm = 0.0; // ||f||_{L2(R^eps)} with the assembly rule

    /// Exact (1/(eps g0)) int_0^{eps g0} of the trilinear field along the
    /// vertical line through the base point with local coordinates (s, t)
    /// in base cell (i, j).
    double vertical_average(int i, int j, double s, double t, double cut) const;
};

inline double DirectSolution::vertical_average(int i, int j, double s, double t, double cut) const {
    const HexMesh3D& m = *mesh;
    const double w00 = (1 - s) * (1 - t), w10 = s * (1 - t), w01 = (1 - s) * t, w11 = s * t;
    const double top = w00 * m.height(i, j) + w10 * m.height(i + 1, j) + w01 * m.height(i, j + 1) + w11 * m.height(i + 1, j + 1);
    if (cut > top * (1.0 + 1e-12)) fail(ErrorKind::Domain, "averaging strip exceeds the mesh height");
    double integral = 0.0;
    double z_prev = 0.0, u_prev = 0.0;
    for (int k = 0; k <= m.nz; ++k) {
        const double z = top * k / m.nz;
        const double uk = w00 * u[m.node(i, j, k)] + w10 * u[m.node(i + 1, j, k)] + w01 * u[m.node(i, j + 1, k)] +
                          w11 * u[m.node(i + 1, j + 1, k)];
        if (k > 0) {
            if (z >= cut) {
                const double uc = u_prev + (uk - u_prev) * (cut - z_prev) / (z - z_prev);
                integral += 0.5 * (u_prev + uc) * (cut - z_prev);
                return integral / cut;
            }
            integral += 0.5 * (u_prev + uk) * (z - z_prev);
        }
        z_prev = z;
        u_prev = uk;
    }
    return integral / cut;
}

namespace detail {

// Sparsity of the 27-point lattice stencil; columns sorted per row.
inline SparseMatrixCSR hex_pattern(const HexMesh3D& m) {
    SparseMatrixCSR A;
    A.n = static_cast<int>(m.num_nodes());
    A.row_ptr.assign(A.n + 1, 0);
    for (int i = 0; i <= m.n1; ++i)
        for (int j = 0; j <= m.n2; ++j)
            for (int k = 0; k <= m.nz; ++k) {
                for (int di = -1; di <= 1; ++di)
                    for (int dj = -1; dj <= 1; ++dj)
                        for (int dk = -1; dk <= 1; ++dk) {
                            const int a = i + di, b = j + dj, c = k + dk;
                            if (a < 0 || a > m.n1 || b < 0 || b > m.n2 || c < 0 || c > m.nz) continue;
                            A.col.push_back(static_cast<int>(m.node(a, b, c)));
                        }
                A.row_ptr[m.node(i, j, k) + 1] = static_cast<int>(A.col.size());
            }
    A.val.assign(A.col.size(), 0.0);
    return A;
}

inline void add_entry(SparseMatrixCSR& A, std::size_t r, std::size_t c, double v) {
    const auto b = A.col.begin() + A.row_ptr[r], e = A.col.begin() + A.row_ptr[r + 1];
    const auto it = std::lower_bound(b, e, static_cast<int>(c));
    A.val[it - A.col.begin()] += v;
}

} // namespace detail

/// Trilinear Galerkin solution with 2x2x2 Gauss quadrature and Jacobi CG.
/// Checks the energy bound ||u||_{H1} <= ||f||_{L2} of the discrete problem.
inline DirectSolution solve_direct(const ThinDomainSpec& spec, std::shared_ptr<const HexMesh3D> mesh,
                                   double tol = 1e-10, int max_iter = 100000) {
    spec.validate();
    const HexMesh3D& m = *mesh;
    SparseMatrixCSR A = detail::hex_pattern(m);
    std::vector<double> b(m.num_nodes(), 0.0);
    double f2 = 0.0;
    std::array<std::array<double, 3>, 8> grad;
    for (int i = 0; i < m.n1; ++i)
        for (int j = 0; j < m.n2; ++j)
            for (int k = 0; k < m.nz; ++k) {
                const auto e = detail::element_geometry(m, i, j, k);
                double K[8][8] = {};
                double fe[8] = {};
                for (const auto& q : detail::hex_gauss()) {
                    const double det = detail::physical_gradients(e, q.shape, grad);
                    if (!(det > 0.0)) fail(ErrorKind::DegenerateMesh, "non-positive hexahedron Jacobian");
                    const double w = q.weight * det;
                    double x = 0.0, y = 0.0;
                    for (int l = 0; l < 8; ++l) x += q.shape.N[l] * e.X[l][0], y += q.shape.N[l] * e.X[l][1];
                    const double f = spec.source(x, y);
                    f2 += w * f * f;
                    for (int a = 0; a < 8; ++a) {
                        fe[a] += w * f * q.shape.N[a];
                        for (int c = 0; c < 8; ++c)
                            K[a][c] += w * (grad[a][0] * grad[c][0] + grad[a][1] * grad[c][1] + grad[a][2] * grad[c][2] +
                                            q.shape.N[a] * q.shape.N[c]);
                    }
                }
                for (int a = 0; a < 8; ++a) {
                    b[e.nodes[a]] += fe[a];
                    for (int c = 0; c < 8; ++c) detail::add_entry(A, e.nodes[a], e.nodes[c], K[a][c]);
                }
            }
    CgOptions cg;
    cg.tol = tol;
    cg.max_iter = max_iter;
    const CgResult r = solve_cg(A, b, cg);
    DirectSolution s;
    s.mesh = std::move(mesh);
    s.u = r.x;
    s.iterations = r.iterations;
    s.residual = r.residual;
    const auto Au = A * std::span<const double>(r.x);
    s.h1_norm = std::sqrt(std::max(0.0, detail::dot(r.x, Au)));
    s.source_norm = std::sqrt(f2);
    if (s.h1_norm > s.source_norm * (1.0 + 1e-8) + 1e-300)
        fail(ErrorKind::NonConvergence, "energy bound ||u||_H1 <= ||f||_L2 violated");
    return s;
}

/// Relative L2(omega) distance between the vertical average over
/// (0, eps g0) of a direct solution and a homogenized solution, by 3x3 Gauss
/// quadrature on every base cell.
inline double vertical_average_error(const DirectSolution& d, double cut, const std::function<double(double, double)>& u_hom) {
    const HexMesh3D& m = *d.mesh;
    const Rule1D g = gauss_legendre_unit(3);
    double num = 0.0, den = 0.0;
    for (int i = 0; i < m.n1; ++i)
        for (int j = 0; j < m.n2; ++j) {
            const double h1 = m.x1[i + 1] - m.x1[i], h2 = m.x2[j + 1] - m.x2[j];
            for (std::size_t a = 0; a < g.size(); ++a)
                for (std::size_t c = 0; c < g.size(); ++c) {
                    const double s = g.nodes[a], t = g.nodes[c];
                    const double w = g.weights[a] * g.weights[c] * h1 * h2;
                    const double V = d.vertical_average(i, j, s, t, cut);
                    const double u = u_hom(m.x1[i] + s * h1, m.x2[j] + t * h2);
                    num += w * (V - u) * (V - u);
                    den += w * u * u;
                }
        }
    if (!(den > 0.0)) fail(ErrorKind::Domain, "homogenized solution has zero norm");
    return std::sqrt(num / den);
}

struct ValidationRow {
    double epsilon = 0.0;
    double error = 0.0; // relative L2(omega) error of the vertical average
    int n1 = 0, n2 = 0, nz = 0;
    long long elements = 0;
    int iterations = 0;
    double residual = 0.0;
    double min_jacobian = 0.0;
    double h1_norm = 0.0, source_norm = 0.0;
};

struct ValidationReport {
    std::vector<ValidationRow> rows;
    std::vector<std::string> notes;

    bool monotone_decreasing() const {
        for (std::size_t k = 1; k < rows.size(); ++k)
            if (!(rows[k].error < rows[k - 1].error)) return false;
        return true;
    }
};

/// Direct solves over a list of epsilons compared with one homogenized
/// solution. Every epsilon is budget-checked before any solve starts.
inline ValidationReport validate(const std::vector<ThinDomainSpec>& specs, const HomSolution& hom,
                                 const ThinMeshOptions& opt = {}, double tol = 1e-10) {
    std::vector<std::shared_ptr<const HexMesh3D>> meshes;
    for (const auto& s : specs) meshes.push_back(std::make_shared<const HexMesh3D>(build_thin_mesh(s, opt)));
    ValidationReport rep;
    for (std::size_t k = 0; k < specs.size(); ++k) {
        const auto& s = specs[k];
        if (s.beta > 1.0 && s.epsilon < 0.15)
            rep.notes.push_back("beta > 1 at epsilon = " + std::to_string(s.epsilon) +
                                " is below the moderate range; the oscillation may be under-resolved");
        const DirectSolution d = solve_direct(s, meshes[k], tol);
        const double g0 = min_profile(s.profile);
        ValidationRow row;
        row.epsilon = s.epsilon;
        row.error = vertical_average_error(d, s.epsilon * g0, [&hom](double a, double b) { return hom.value_at(a, b); });
        row.n1 = meshes[k]->n1;
        row.n2 = meshes[k]->n2;
        row.nz = meshes[k]->nz;
        row.elements = meshes[k]->num_elements();
        row.iterations = d.iterations;
        row.residual = d.residual;
        row.min_jacobian = min_jacobian(*meshes[k]);
        row.h1_norm = d.h1_norm;
        row.source_norm = d.source_norm;
        rep.rows.push_back(row);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Strip reduction: profiles depending on y2 only with sources depending on x2
// only give solutions independent of x1, so the physical problem is the 2D
// one on {a < x2 < b, 0 < x3 < eps g(x2 / eps^beta)}.
// ---------------------------------------------------------------------------

struct StripOptions {
    int cells_per_period = 32;
    int nz = 16;
    double tol = 1e-10;
};

struct StripSolution {
    std::shared_ptr<const TriMesh2D> mesh;
    std::vector<double> u;
    int columns = 0; // lattice columns (x2 lines)
    int nz = 0;
    int iterations = 0;
    double residual = 0.0;

    /// Exact (1/cut) int_0^cut u(x2, x3) dx3 of the P1 field.
    double vertical_average(double x2, double cut) const;
};

inline double StripSolution::vertical_average(double x2, double cut) const {
    const TriMesh2D& m = *mesh;
    const int nv = nz;
    auto id = [nv](int i, int j) { return i * (nv + 1) + j; };
    int i = 0;
    while (i + 1 < columns - 1 && m.nodes[id(i + 1, 0)][0] <= x2) ++i;
    const double xa = m.nodes[id(i, 0)][0], xb = m.nodes[id(i + 1, 0)][0];
    const double s = std::clamp((x2 - xa) / (xb - xa), 0.0, 1.0);
    // Piecewise linear profile of u along the vertical line: lattice lines
    // and the crossings with each quad's diagonal.
    std::vector<std::array<double, 2>> pts; // (x3, u)
    auto on_line = [&](int a, int b) {
        return std::array<double, 2>{(1 - s) * m.nodes[a][1] + s * m.nodes[b][1], (1 - s) * u[a] + s * u[b]};
    };
    for (int j = 0; j <= nv; ++j) {
        pts.push_back(on_line(id(i, j), id(i + 1, j)));
        if (j == nv) break;
        const auto& t0 = m.triangles[2 * (static_cast<std::size_t>(i) * nv + j)];
        const bool anti = t0[2] == id(i, j + 1); // diagonal (i+1, j)-(i, j+1)
        const int a = anti ? id(i, j + 1) : id(i, j), b = anti ? id(i + 1, j) : id(i + 1, j + 1);
        pts.push_back(on_line(a, b));
    }
    if (cut > pts.back()[0] * (1.0 + 1e-12)) fail(ErrorKind::Domain, "averaging strip exceeds the mesh height");
    double integral = 0.0;
    for (std::size_t k = 1; k < pts.size(); ++k) {
        const double z0 = pts[k - 1][0], z1 = pts[k][0];
        if (z0 >= cut) break;
        if (z1 <= cut) {
            integral += 0.5 * (pts[k - 1][1] + pts[k][1]) * (z1 - z0);
        } else {
            const double uc = pts[k - 1][1] + (pts[k][1] - pts[k - 1][1]) * (cut - z0) / (z1 - z0);
            integral += 0.5 * (pts[k - 1][1] + uc) * (cut - z0);
            break;
        }
    }
    return integral / cut;
}

/// The top is fitted node by node, so the profile must be continuous.
inline StripSolution solve_strip(double epsilon, double beta, const ProfileFunction& g, double x2_lo, double x2_hi,
                                 const std::function<double(double)>& f, const StripOptions& opt = {}) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) fail(ErrorKind::Config, "epsilon must lie in (0, 1)");
    if (g.piecewise_constant()) fail(ErrorKind::Config, "strip solver needs a continuous profile");
    if (!(x2_hi > x2_lo)) fail(ErrorKind::Config, "strip interval must be non-degenerate");
    if (opt.cells_per_period < 4 || opt.nz < 2) fail(ErrorKind::Config, "strip needs cells_per_period >= 4, nz >= 2");
    const double s2 = std::pow(epsilon, beta);
    const long long n = detail::axis_cells(x2_hi - x2_lo, s2 * g.period2(), opt.cells_per_period, 0);
    std::vector<double> xs(n + 1);
    for (long long i = 0; i <= n; ++i) xs[i] = i == n ? x2_hi : x2_lo + (x2_hi - x2_lo) * static_cast<double>(i) / n;
    auto mesh = std::make_shared<const TriMesh2D>(
        build_fitted_mesh(xs, [&](double x2) { return epsilon * g(0.0, x2 / s2); }, opt.nz, false));
    AssemblyTerms t;
    t.a_uu = [](double, double) { return 1.0; };
    t.a_vv = t.a_uu;
    t.mass_weight = t.a_uu;
    t.source = [&f](double x2, double) { return f(x2); };
    const AssembledSystem sys = assemble(*mesh, t);
    CgOptions cg;
    cg.tol = opt.tol;
    cg.max_iter = 200000;
    const CgResult r = solve_cg(sys.A, sys.b, cg);
    StripSolution s;
    s.mesh = mesh;
    s.u = sys.dofs.to_nodes(r.x);
    s.columns = static_cast<int>(n + 1);
    s.nz = opt.nz;
    s.iterations = r.iterations;
    s.residual = r.residual;
    return s;
}

/// Relative L2(a, b) distance between the strip's vertical average and a
/// function of x2, Gauss quadrature on every column interval.
inline double strip_average_error(const StripSolution& s, double cut, const std::function<double(double)>& u_hom) {
    const TriMesh2D& m = *s.mesh;
    const Rule1D g = gauss_legendre_unit(4);
    double num = 0.0, den = 0.0;
    for (int i = 0; i + 1 < s.columns; ++i) {
        const double a = m.nodes[i * (s.nz + 1)][0], b = m.nodes[(i + 1) * (s.nz + 1)][0];
        for (std::size_t k = 0; k < g.size(); ++k) {
            const double x = a + (b - a) * g.nodes[k], w = (b - a) * g.weights[k];
            const double d = s.vertical_average(x, cut) - u_hom(x);
            num += w * d * d;
            den += w * u_hom(x) * u_hom(x);
        }
    }
    if (!(den > 0.0)) fail(ErrorKind::Domain, "reference solution has zero norm");
    return std::sqrt(num / den);
}

} // namespace thinhom
