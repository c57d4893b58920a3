#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "thinhom/error.hpp"
#include "thinhom/profile.hpp"

namespace thinhom {

using Point2 = std::array<double, 2>;
using Tri = std::array<int, 3>;

enum class BoundaryTag { Left, Right, Bottom, Top };

inline const char* to_string(BoundaryTag t) {
    switch (t) {
    case BoundaryTag::Left: return "left";
    case BoundaryTag::Right: return "right";
    case BoundaryTag::Bottom: return "bottom";
    case BoundaryTag::Top: return "top";
    }
    return "?";
}

/// How structured quads are split. Mirrored uses the opposite diagonal in the
/// right half so the mesh is symmetric under u -> period - u. Shortest picks
/// the shorter diagonal of each quad (Mirrored on near ties), which avoids
/// obtuse triangles under sloped tops.
enum class DiagonalPattern { Fixed, Mirrored, Shortest };

namespace detail {

inline void push_quad(std::vector<Tri>& tris, int a, int b, int c, int d, bool anti) {
    // a=(i,j) b=(i+1,j) c=(i+1,j+1) d=(i,j+1)
    if (anti) {
        tris.push_back({a, b, d});
        tris.push_back({b, c, d});
    } else {
        tris.push_back({a, b, c});
        tris.push_back({a, c, d});
    }
}

} // namespace detail

struct BoundaryEdge {
    int a, b;
    BoundaryTag tag;
};

/// Conforming P1 triangulation in a (u, v) plane, optionally periodic in u.
struct TriMesh2D {
    std::vector<Point2> nodes;
    std::vector<Tri> triangles; // counter-clockwise
    std::vector<BoundaryEdge> boundary;
    std::vector<std::pair<int, int>> periodic_pairs; // (master, slave), slave = master + period in u
    double period_u = 0.0;                           // 0 when not periodic
    /// Lattice position (i, j) per node for tensor-lattice meshes, else empty.
    /// Periodic slave nodes carry i = lattice_shape[0].
    std::vector<std::array<int, 2>> lattice;
    std::array<int, 2> lattice_shape{0, 0}; // distinct (u, v) line counts

    std::size_t num_nodes() const { return nodes.size(); }
    std::size_t num_triangles() const { return triangles.size(); }

    double signed_area(std::size_t t) const {
        const auto& [a, b, c] = triangles[t];
        const Point2 &p = nodes[a], &q = nodes[b], &r = nodes[c];
        return 0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]));
    }

    Point2 centroid(std::size_t t) const {
        const auto& [a, b, c] = triangles[t];
        return {(nodes[a][0] + nodes[b][0] + nodes[c][0]) / 3.0, (nodes[a][1] + nodes[b][1] + nodes[c][1]) / 3.0};
    }

    double area() const {
        double s = 0.0;
        for (std::size_t t = 0; t < triangles.size(); ++t) s += signed_area(t);
        return s;
    }

    /// Throws degenerate-mesh unless every triangle has positive area.
    void check_orientation() const {
        for (std::size_t t = 0; t < triangles.size(); ++t)
            if (!(signed_area(t) > 0.0))
                fail(ErrorKind::DegenerateMesh, "triangle " + std::to_string(t) + " has non-positive area");
    }
};

/// Counts how many triangles use each undirected edge.
inline std::map<std::pair<int, int>, int> edge_use_counts(const TriMesh2D& m) {
    std::map<std::pair<int, int>, int> use;
    for (const auto& t : m.triangles)
        for (int k = 0; k < 3; ++k) {
            int a = t[k], b = t[(k + 1) % 3];
            if (a > b) std::swap(a, b);
            ++use[{a, b}];
        }
    return use;
}

/// True when no edge is shared by more than two triangles and every edge used
/// once lies on the recorded boundary or on a periodic side.
inline bool is_conforming(const TriMesh2D& m) {
    const auto use = edge_use_counts(m);
    std::map<std::pair<int, int>, int> bnd;
    for (const auto& e : m.boundary) ++bnd[{std::min(e.a, e.b), std::max(e.a, e.b)}];
    for (const auto& [e, n] : use) {
        if (n > 2) return false;
        if (n == 1 && !bnd.count(e)) return false;
        if (n == 2 && bnd.count(e)) return false;
    }
    return true;
}

namespace detail {

// Keeps only nodes referenced by triangles; remaps every index list.
inline void compact_nodes(TriMesh2D& m) {
    std::vector<int> used(m.nodes.size(), -1);
    for (const auto& t : m.triangles)
        for (int v : t) used[v] = 0;
    int next = 0;
    std::vector<Point2> nodes;
    std::vector<std::array<int, 2>> lattice;
    for (std::size_t i = 0; i < used.size(); ++i)
        if (used[i] == 0) {
            used[i] = next++;
            nodes.push_back(m.nodes[i]);
            if (!m.lattice.empty()) lattice.push_back(m.lattice[i]);
        }
    for (auto& t : m.triangles)
        for (int& v : t) v = used[v];
    std::vector<BoundaryEdge> bnd;
    for (const auto& e : m.boundary)
        if (used[e.a] >= 0 && used[e.b] >= 0) bnd.push_back({used[e.a], used[e.b], e.tag});
    std::vector<std::pair<int, int>> pp;
    for (const auto& [a, b] : m.periodic_pairs)
        if (used[a] >= 0 && used[b] >= 0) pp.push_back({used[a], used[b]});
    m.nodes = std::move(nodes);
    m.lattice = std::move(lattice);
    m.boundary = std::move(bnd);
    m.periodic_pairs = std::move(pp);
}

// Merges a uniform grid on [0, top] with required values, dropping uniform
// points closer than `gap` spacings to a required one.
inline std::vector<double> merged_levels(double top, int n, std::span<const double> required, double gap = 0.25) {
    const double h = top / n;
    std::vector<double> req;
    for (double r : required)
        if (r > 1e-12 * top && r < top * (1.0 - 1e-12)) req.push_back(r);
    std::vector<double> out{0.0, top};
    for (int k = 1; k < n; ++k) {
        const double v = top * k / n;
        bool near = false;
        for (double r : req)
            if (std::abs(v - r) < gap * h) near = true;
        if (!near) out.push_back(v);
    }
    out.insert(out.end(), req.begin(), req.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end(), [&](double a, double b) { return b - a <= 1e-12 * top; }), out.end());
    out.back() = top;
    return out;
}

} // namespace detail

namespace detail {

// Triangulates the lattice quads of a mesh whose nodes are numbered i*(n2+1)+j.
inline void split_quads(TriMesh2D& m, std::span<const double> us, int n1, int n2, DiagonalPattern pattern) {
    auto id = [&](int i, int j) { return i * (n2 + 1) + j; };
    const double mid = 0.5 * (us[0] + us[n1]);
    auto d2 = [&](int a, int b) {
        const double du = m.nodes[a][0] - m.nodes[b][0], dv = m.nodes[a][1] - m.nodes[b][1];
        return du * du + dv * dv;
    };
    for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j) {
            const int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
            const bool right = 0.5 * (us[i] + us[i + 1]) > mid;
            bool anti = pattern == DiagonalPattern::Mirrored && right;
            if (pattern == DiagonalPattern::Shortest) {
                const double ac = d2(a, c), bd = d2(b, d);
                anti = std::abs(ac - bd) <= 1e-9 * (ac + bd) ? right : bd < ac;
            }
            push_quad(m.triangles, a, b, c, d, anti);
        }
}

} // namespace detail

/// Tensor-lattice triangulation of [u_0, u_last] x [v_0, v_last] with the
/// given lines; each quad split along one diagonal. Periodic in u when asked,
/// with the last u line identified with the first.
inline TriMesh2D build_lattice_mesh(std::span<const double> us, std::span<const double> vs, bool periodic,
                                    DiagonalPattern pattern = DiagonalPattern::Fixed) {
    const int n1 = static_cast<int>(us.size()) - 1, n2 = static_cast<int>(vs.size()) - 1;
    if (n1 < 2 || n2 < 1) fail(ErrorKind::DegenerateMesh, "lattice mesh needs at least 2 x 1 cells");
    for (int i = 0; i < n1; ++i)
        if (!(us[i + 1] > us[i])) fail(ErrorKind::DegenerateMesh, "u lines must increase");
    for (int j = 0; j < n2; ++j)
        if (!(vs[j + 1] > vs[j])) fail(ErrorKind::DegenerateMesh, "v lines must increase");
    TriMesh2D m;
    auto id = [&](int i, int j) { return i * (n2 + 1) + j; };
    for (int i = 0; i <= n1; ++i)
        for (int j = 0; j <= n2; ++j) {
            m.nodes.push_back({us[i], vs[j]});
            m.lattice.push_back({i, j});
        }
    m.lattice_shape = {periodic ? n1 : n1 + 1, n2 + 1};
    detail::split_quads(m, us, n1, n2, pattern);
    for (int i = 0; i < n1; ++i) {
        m.boundary.push_back({id(i, 0), id(i + 1, 0), BoundaryTag::Bottom});
        m.boundary.push_back({id(i + 1, n2), id(i, n2), BoundaryTag::Top});
    }
    for (int j = 0; j < n2; ++j) {
        m.boundary.push_back({id(0, j + 1), id(0, j), BoundaryTag::Left});
        m.boundary.push_back({id(n1, j), id(n1, j + 1), BoundaryTag::Right});
    }
    if (periodic) {
        m.period_u = us[n1] - us[0];
        for (int j = 0; j <= n2; ++j) m.periodic_pairs.push_back({id(0, j), id(n1, j)});
    }
    m.check_orientation();
    return m;
}

/// Two-layer fitted mesh: n_low rows on (0, mid(u)) and n_band rows on
/// (mid(u), top(u)), with mid < top at every u line.
inline TriMesh2D build_banded_mesh(std::span<const double> us, const std::function<double(double)>& mid,
                                   const std::function<double(double)>& top, int n_low, int n_band, bool periodic,
                                   DiagonalPattern pattern = DiagonalPattern::Shortest) {
    const int n1 = static_cast<int>(us.size()) - 1, n_v = n_low + n_band;
    if (n1 < 2 || n_low < 1 || n_band < 1) fail(ErrorKind::DegenerateMesh, "banded mesh needs at least 2 x 2 cells");
    TriMesh2D m;
    auto id = [&](int i, int j) { return i * (n_v + 1) + j; };
    for (int i = 0; i <= n1; ++i) {
        if (i < n1 && !(us[i + 1] > us[i])) fail(ErrorKind::DegenerateMesh, "u lines must increase");
        const double u = periodic && i == n1 ? us[0] : us[i];
        const double a = mid(u), b = top(u);
        if (!(a > 0.0 && b > a)) fail(ErrorKind::InvalidProfile, "banded mesh needs 0 < mid < top");
        for (int j = 0; j <= n_v; ++j) {
            const double v = j <= n_low ? a * j / n_low : a + (b - a) * (j - n_low) / n_band;
            m.nodes.push_back({us[i], v});
            m.lattice.push_back({i, j});
        }
    }
    m.lattice_shape = {periodic ? n1 : n1 + 1, n_v + 1};
    detail::split_quads(m, us, n1, n_v, pattern);
    for (int i = 0; i < n1; ++i) {
        m.boundary.push_back({id(i, 0), id(i + 1, 0), BoundaryTag::Bottom});
        m.boundary.push_back({id(i + 1, n_v), id(i, n_v), BoundaryTag::Top});
    }
    for (int j = 0; j < n_v; ++j) {
        m.boundary.push_back({id(0, j + 1), id(0, j), BoundaryTag::Left});
        m.boundary.push_back({id(n1, j), id(n1, j + 1), BoundaryTag::Right});
    }
    if (periodic) {
        m.period_u = us[n1] - us[0];
        for (int j = 0; j <= n_v; ++j) m.periodic_pairs.push_back({id(0, j), id(n1, j)});
    }
    m.check_orientation();
    return m;
}

/// Lattice mesh fitted to {u_0 < u < u_last, 0 < v < top(u)}: nodes
/// (u_i, (j / n_v) top(u_i)).
inline TriMesh2D build_fitted_mesh(std::span<const double> us, const std::function<double(double)>& top, int n_v,
                                   bool periodic, DiagonalPattern pattern = DiagonalPattern::Shortest) {
    const int n1 = static_cast<int>(us.size()) - 1;
    if (n1 < 2 || n_v < 2) fail(ErrorKind::DegenerateMesh, "fitted mesh needs at least 2 x 2 cells");
    TriMesh2D m;
    auto id = [&](int i, int j) { return i * (n_v + 1) + j; };
    for (int i = 0; i <= n1; ++i) {
        if (i < n1 && !(us[i + 1] > us[i])) fail(ErrorKind::DegenerateMesh, "u lines must increase");
        const double h = top(periodic && i == n1 ? us[0] : us[i]);
        if (!(h > 0.0)) fail(ErrorKind::InvalidProfile, "mesh top height must be positive");
        for (int j = 0; j <= n_v; ++j) {
            m.nodes.push_back({us[i], h * j / n_v});
            m.lattice.push_back({i, j});
        }
    }
    m.lattice_shape = {periodic ? n1 : n1 + 1, n_v + 1};
    detail::split_quads(m, us, n1, n_v, pattern);
    for (int i = 0; i < n1; ++i) {
        m.boundary.push_back({id(i, 0), id(i + 1, 0), BoundaryTag::Bottom});
        m.boundary.push_back({id(i + 1, n_v), id(i, n_v), BoundaryTag::Top});
    }
    for (int j = 0; j < n_v; ++j) {
        m.boundary.push_back({id(0, j + 1), id(0, j), BoundaryTag::Left});
        m.boundary.push_back({id(n1, j), id(n1, j + 1), BoundaryTag::Right});
    }
    if (periodic) {
        m.period_u = us[n1] - us[0];
        for (int j = 0; j <= n_v; ++j) m.periodic_pairs.push_back({id(0, j), id(n1, j)});
    }
    m.check_orientation();
    return m;
}

/// Mesh of a cell domain bounded above by the profile.
///
/// With `fixed_y1` the domain is the slice Y*(y1) in (y2, y3) with top
/// g(y1, .); without it the domain is in (y1, y3) with top max over y2 of
/// g(y1, .), the support of the slice-measure weight. Smooth profiles get a
/// fitted lattice mesh. Piecewise-constant ones get a lattice box with the
/// jump ordinates as u lines and every piece height as a v line; the steps are
/// then unions of lattice cells, and the cell solver drops the empty ones.
inline TriMesh2D build_cell_mesh(const ProfileFunction& g, std::optional<double> fixed_y1, int n_horizontal,
                                 int n_vertical, bool periodic_horizontal,
                                 DiagonalPattern pattern = DiagonalPattern::Shortest) {
    if (n_horizontal < 2 || n_vertical < 2) fail(ErrorKind::DegenerateMesh, "cell mesh needs n >= 2 in each direction");
    const double period = fixed_y1 ? g.period2() : g.period1();
    if (!g.piecewise_constant()) {
        std::vector<double> us(n_horizontal + 1);
        for (int i = 0; i <= n_horizontal; ++i) us[i] = (i == n_horizontal) ? period : period * i / n_horizontal;
        std::function<double(double)> top;
        if (fixed_y1) {
            const double y1 = *fixed_y1;
            top = [&g, y1](double t) { return g(y1, t); };
        } else {
            top = [&g](double t) { return max_profile(g, t); };
        }
        return build_fitted_mesh(us, top, n_vertical, periodic_horizontal, pattern);
    }
    const auto e1 = g.lattice1(), e2 = g.lattice2();
    std::vector<double> heights;
    for (std::size_t a = 0; a + 1 < e1.size(); ++a)
        for (std::size_t b = 0; b + 1 < e2.size(); ++b) {
            const double y1 = fixed_y1 ? *fixed_y1 : 0.5 * (e1[a] + e1[a + 1]);
            heights.push_back(g(y1, 0.5 * (e2[b] + e2[b + 1])));
        }
    const double top = *std::max_element(heights.begin(), heights.end());
    const auto jumps = fixed_y1 ? g.jumps_y2() : g.jumps_y1();
    const std::vector<double> us = detail::merged_levels(period, n_horizontal, jumps);
    const std::vector<double> vs = detail::merged_levels(top, n_vertical, heights);
    return build_lattice_mesh(us, vs, periodic_horizontal, pattern);
}

/// Axis-aligned rectangle (x1_lo, x1_hi) x (x2_lo, x2_hi).
struct Rectangle {
    double x1_lo = 0.0, x1_hi = 1.0, x2_lo = 0.0, x2_hi = 1.0;

    double width() const { return x1_hi - x1_lo; }
    double height() const { return x2_hi - x2_lo; }
    double area() const { return width() * height(); }

    void validate() const {
        if (!std::isfinite(x1_lo) || !std::isfinite(x1_hi) || !std::isfinite(x2_lo) || !std::isfinite(x2_hi) ||
            !(x1_hi > x1_lo) || !(x2_hi > x2_lo))
            fail(ErrorKind::Config, "rectangle must be finite and non-degenerate");
    }
};

/// Structured triangulation of a rectangle, n1 x n2 quads split along the
/// (i,j)-(i+1,j+1) diagonal.
inline TriMesh2D build_rectangle_mesh(double x1_lo, double x1_hi, double x2_lo, double x2_hi, int n1, int n2) {
    if (n1 < 2 || n2 < 2) fail(ErrorKind::Domain, "rectangle mesh needs n1, n2 >= 2");
    if (!(x1_hi > x1_lo) || !(x2_hi > x2_lo)) fail(ErrorKind::Domain, "rectangle must be non-degenerate");
    std::vector<double> us(n1 + 1), vs(n2 + 1);
    for (int i = 0; i <= n1; ++i) us[i] = (i == n1) ? x1_hi : x1_lo + (x1_hi - x1_lo) * i / n1;
    for (int j = 0; j <= n2; ++j) vs[j] = (j == n2) ? x2_hi : x2_lo + (x2_hi - x2_lo) * j / n2;
    return build_lattice_mesh(us, vs, false);
}

inline TriMesh2D build_rectangle_mesh(const Rectangle& r, int n1, int n2) {
    r.validate();
    return build_rectangle_mesh(r.x1_lo, r.x1_hi, r.x2_lo, r.x2_hi, n1, n2);
}

/// Copy of the mesh keeping only triangles for which `keep` holds; unused
/// nodes and the boundary entries that referenced them are removed. Newly
/// exposed edges are added to the boundary as top edges.
inline TriMesh2D filter_triangles(const TriMesh2D& in, const std::function<bool(std::size_t)>& keep) {
    TriMesh2D m;
    m.nodes = in.nodes;
    m.period_u = in.period_u;
    m.lattice = in.lattice;
    m.lattice_shape = in.lattice_shape;
    for (std::size_t t = 0; t < in.triangles.size(); ++t)
        if (keep(t)) m.triangles.push_back(in.triangles[t]);
    if (m.triangles.empty()) fail(ErrorKind::DegenerateMesh, "no active elements left after filtering");
    const auto use = edge_use_counts(m);
    std::map<std::pair<int, int>, BoundaryTag> old;
    for (const auto& e : in.boundary) old[{std::min(e.a, e.b), std::max(e.a, e.b)}] = e.tag;
    for (const auto& t : m.triangles)
        for (int k = 0; k < 3; ++k) {
            const int a = t[k], b = t[(k + 1) % 3];
            const std::pair<int, int> key{std::min(a, b), std::max(a, b)};
            if (use.at(key) != 1) continue;
            const auto it = old.find(key);
            m.boundary.push_back({a, b, it == old.end() ? BoundaryTag::Top : it->second});
        }
    // Periodic pairs survive only if both ends are still in use.
    std::vector<char> used(m.nodes.size(), 0);
    for (const auto& t : m.triangles)
        for (int v : t) used[v] = 1;
    for (const auto& [a, b] : in.periodic_pairs)
        if (used[a] && used[b]) m.periodic_pairs.push_back({a, b});
    detail::compact_nodes(m);
    return m;
}

} // namespace thinhom
