#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <thread>
#include <vector>

#include "thinhom/assembly.hpp"
#include "thinhom/error.hpp"
#include "thinhom/mesh.hpp"
#include "thinhom/multigrid.hpp"
#include "thinhom/profile.hpp"
#include "thinhom/quadrature.hpp"
#include "thinhom/regime.hpp"
#include "thinhom/sparse.hpp"

namespace thinhom {

enum class CellKind { Resonant2D, ConstrainedY2 };

struct CellResolution {
    int n_h = 64; // cells across the period
    int n_v = 64; // cells across the box height
};

struct CellSolveOptions {
    CellResolution res{};
    // Relative CG residual; the finest weighted cells reach a rounding floor
    // near 2e-12.
    double tol = 1e-11;
    int max_iter = 50000;
    Quadrature2D quad{};
    DiagonalPattern pattern = DiagonalPattern::Shortest;
    /// Gauss nodes in y1 for the slice family; doubled until the change is
    /// below n_y1_tol or n_y1_max is reached.
    int n_y1 = 8;
    int n_y1_max = 64;
    double n_y1_tol = 1e-6;
    /// Uniform x1 samples of q2(x1) for the alpha = 0 resonant regime; values
    /// in between come from trigonometric interpolation.
    int n_x1 = 16;
    /// Richardson extrapolation of coefficients from resolutions n and 2n.
    bool extrapolate = true;
    /// Worker threads for independent slice solves; 1 runs serially.
    unsigned threads = 1;

    void validate() const {
        if (res.n_h < 4 || res.n_v < 4) fail(ErrorKind::Config, "cell resolution must be at least 4 x 4");
        if (!(tol > 0.0)) fail(ErrorKind::Config, "cell solver tolerance must be positive");
        if (n_y1 < 1 || n_y1_max < n_y1) fail(ErrorKind::Config, "need 1 <= n_y1 <= n_y1_max");
        if (n_x1 < 1) fail(ErrorKind::Config, "need n_x1 >= 1");
        quad.validate();
    }
};

/// Solution X of a cell problem on its (u, v) mesh. For slices u = y2,
/// v = y3; for the constrained problem u = y1, v = y3.
struct CorrectorField {
    CellKind kind = CellKind::Resonant2D;
    std::shared_ptr<const TriMesh2D> mesh;
    std::vector<double> values;                    // nodal
    std::vector<std::array<double, 2>> gradient;   // per element
    std::vector<double> element_weight;            // int_T w (area for slices)
    double parameter = std::numeric_limits<double>::quiet_NaN(); // y1 of the slice
    double cell_measure = 0.0; // |Y*(y1)| for slices, |Y*| for the constrained cell
    double mean = 0.0;         // weighted int X / weighted measure
    double energy = 0.0;       // int w |grad X|^2
    double forcing = 0.0;      // int w dX/du
    double h1_norm = 0.0;      // sqrt(int X^2 + |grad X|^2) (unweighted)
    int iterations = 0;
    double residual = 0.0;

    /// 1 - (1/|cell|) int w dX/du: the effective coefficient carried by X.
    double coefficient() const { return 1.0 - forcing / cell_measure; }

    /// Same coefficient after adding `shift` to X; gradients are unchanged.
    double coefficient_with_shift(double shift) const {
        std::vector<double> shifted(values);
        for (double& v : shifted) v += shift;
        double f = 0.0;
        for (std::size_t t = 0; t < mesh->num_triangles(); ++t)
            f += element_weight[t] * element_gradient(*mesh, t, shifted)[0];
        return 1.0 - f / cell_measure;
    }

    FemField field() const { return {mesh.get(), values}; }

    std::array<double, 2> gradient_at(double u, double v) const {
        const double uu = mesh->period_u > 0.0 ? ProfileFunction::reduce(u, mesh->period_u) : u;
        const long t = locate(*mesh, uu, v, 1e-9);
        if (t < 0) fail(ErrorKind::Domain, "point outside the cell mesh");
        return gradient[t];
    }

    double value_at(double u, double v) const {
        const double uu = mesh->period_u > 0.0 ? ProfileFunction::reduce(u, mesh->period_u) : u;
        return interpolate(*mesh, values, uu, v);
    }
};

/// Measure of {y2 in (0, L2) : g(y1, y2) > y3}.
///
/// Smooth profiles: 128 samples of g(y1, .) per evaluation, level crossings
/// refined by bisection to 1e-10. Piecewise-constant profiles: exact from the
/// pieces.
class SliceWeight {
public:
    explicit SliceWeight(const ProfileFunction& g, int samples = 128, double tol = 1e-10)
        : g_(g), samples_(samples), tol_(tol) {
        if (samples_ < 4) fail(ErrorKind::Domain, "slice weight needs at least 4 samples");
    }

    double operator()(double y1, double y3) const { return clamped_integral(y1, y3, std::numeric_limits<double>::infinity(), true); }

    /// Crossings of g(y1, .) with `level` in [0, L2), ascending.
    std::vector<double> crossings(double y1, double level) const {
        std::vector<double> out;
        if (g_.piecewise_constant()) return out;
        const double L = g_.period2();
        double prev = g_(y1, 0.0) - level;
        for (int k = 1; k <= samples_; ++k) {
            const double b = (k == samples_) ? L : L * k / samples_;
            const double cur = g_(y1, b) - level;
            if ((prev > 0.0) != (cur > 0.0)) {
                double lo = L * (k - 1) / samples_, hi = b;
                double flo = prev;
                while (hi - lo > tol_) {
                    const double mid = 0.5 * (lo + hi);
                    const double fm = g_(y1, mid) - level;
                    if ((fm > 0.0) == (flo > 0.0)) {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                }
                out.push_back(0.5 * (lo + hi));
            }
            prev = cur;
        }
        return out;
    }

    /// int_0^L2 clamp(g(y1, y2) - lo, 0, hi - lo) dy2 = int_lo^hi w(y1, y3) dy3.
    /// With `indicator` set, returns w(y1, lo) instead.
    double clamped_integral(double y1, double lo, double hi, bool indicator = false) const {
        const double L = g_.period2();
        if (g_.piecewise_constant()) {
            const auto e = g_.lattice2();
            double s = 0.0;
            for (std::size_t j = 0; j + 1 < e.size(); ++j) {
                const double v = g_(y1, 0.5 * (e[j] + e[j + 1]));
                const double len = e[j + 1] - e[j];
                s += indicator ? (v > lo ? len : 0.0) : len * std::clamp(v - lo, 0.0, hi - lo);
            }
            return s;
        }
        std::vector<double> br = crossings(y1, lo);
        if (indicator) {
            // Sum the lengths of the sub-intervals where g exceeds the level.
            std::vector<double> pts{0.0};
            pts.insert(pts.end(), br.begin(), br.end());
            pts.push_back(L);
            double s = 0.0;
            for (std::size_t k = 0; k + 1 < pts.size(); ++k)
                if (g_(y1, 0.5 * (pts[k] + pts[k + 1])) > lo) s += pts[k + 1] - pts[k];
            return s;
        }
        const auto up = crossings(y1, hi);
        br.insert(br.end(), up.begin(), up.end());
        std::sort(br.begin(), br.end());
        const Rule1D r = composite_gauss(0.0, L, 4, 8, br);
        double s = 0.0;
        for (std::size_t k = 0; k < r.size(); ++k) s += r.weights[k] * std::clamp(g_(y1, r.nodes[k]) - lo, 0.0, hi - lo);
        return s;
    }

    const ProfileFunction& profile() const { return g_; }

private:
    const ProfileFunction& g_;
    int samples_;
    double tol_;
};

namespace detail {

// Vertical extent [lo, hi] of triangle t along the line u = const.
inline std::pair<double, double> vertical_extent(const TriMesh2D& m, std::size_t t, double u) {
    const auto& tri = m.triangles[t];
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (int k = 0; k < 3; ++k) {
        const Point2& p = m.nodes[tri[k]];
        const Point2& q = m.nodes[tri[(k + 1) % 3]];
        const double a = std::min(p[0], q[0]), b = std::max(p[0], q[0]);
        if (u < a || u > b) continue;
        if (b - a <= 0.0) {
            lo = std::min({lo, p[1], q[1]});
            hi = std::max({hi, p[1], q[1]});
            continue;
        }
        const double s = (u - p[0]) / (q[0] - p[0]);
        const double v = p[1] + s * (q[1] - p[1]);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return {lo, hi};
}

inline std::pair<double, double> u_range(const TriMesh2D& m, std::size_t t) {
    const auto& tri = m.triangles[t];
    const double a = std::min({m.nodes[tri[0]][0], m.nodes[tri[1]][0], m.nodes[tri[2]][0]});
    const double b = std::max({m.nodes[tri[0]][0], m.nodes[tri[1]][0], m.nodes[tri[2]][0]});
    return {a, b};
}

// F(t) = int_0^L2 min(g(u, y2), t) dy2 from sorted midpoint samples, so that
// int_lo^hi w(u, y3) dy3 = F(hi) - F(lo).
class SliceDistribution {
public:
    SliceDistribution(const ProfileFunction& g, double u, int samples) : dy_(g.period2() / samples) {
        v_.resize(samples);
        for (int k = 0; k < samples; ++k) v_[k] = g(u, (k + 0.5) * dy_);
        std::sort(v_.begin(), v_.end());
        prefix_.assign(samples + 1, 0.0);
        for (int k = 0; k < samples; ++k) prefix_[k + 1] = prefix_[k] + v_[k];
    }

    double F(double t) const {
        const std::size_t k = std::lower_bound(v_.begin(), v_.end(), t) - v_.begin();
        return dy_ * (prefix_[k] + t * static_cast<double>(v_.size() - k));
    }

private:
    double dy_;
    std::vector<double> v_, prefix_;
};

inline constexpr int kDistributionSamples = 2048;

// Column-wise quadrature in u: two Gauss panels of order 6.
inline Rule1D column_rule(double a, double b) { return composite_gauss(a, b, 6, 2); }

// int_T w for the constrained problem: exact in y3 through F, Gauss in y1. Piecewise-constant profiles are aligned with the lattice, so
// w is constant per element.
inline std::vector<double> constrained_weights(const TriMesh2D& m, const SliceWeight& w) {
    std::vector<double> out(m.num_triangles());
    const ProfileFunction& g = w.profile();
    double col_a = std::numeric_limits<double>::quiet_NaN(), col_b = col_a;
    Rule1D rule;
    std::vector<SliceDistribution> dist;
    for (std::size_t t = 0; t < m.num_triangles(); ++t) {
        if (g.piecewise_constant()) {
            const Point2 c = m.centroid(t);
            out[t] = m.signed_area(t) * w(c[0], c[1]);
            continue;
        }
        const auto [a, b] = u_range(m, t);
        if (a != col_a || b != col_b) {
            col_a = a;
            col_b = b;
            rule = column_rule(a, b);
            dist.clear();
            for (double u : rule.nodes) dist.emplace_back(g, u, kDistributionSamples);
        }
        double s = 0.0;
        for (std::size_t k = 0; k < rule.size(); ++k) {
            const auto [lo, hi] = vertical_extent(m, t, rule.nodes[k]);
            if (hi > lo) s += rule.weights[k] * (dist[k].F(hi) - dist[k].F(lo));
        }
        out[t] = std::max(s, 0.0);
    }
    return out;
}

// Element areas of a slice mesh inside Y*(y1). Fitted meshes are the
// domain; for the stepped box of a piecewise-constant slice an element is
// inside exactly when its centroid is.
inline std::vector<double> slice_weights(const TriMesh2D& m, const ProfileFunction& g, double y1) {
    std::vector<double> out(m.num_triangles());
    for (std::size_t t = 0; t < m.num_triangles(); ++t) {
        const Point2 c = m.centroid(t);
        const bool inside = !g.piecewise_constant() || c[1] < g(y1, c[0]);
        out[t] = inside ? m.signed_area(t) : 0.0;
    }
    return out;
}

inline CorrectorField finish_corrector(CellKind kind, std::shared_ptr<const TriMesh2D> mesh, const AssembledSystem& sys,
                                       std::vector<double> weights, const CgResult& cg, double measure) {
    CorrectorField X;
    X.kind = kind;
    X.mesh = mesh;
    X.values = sys.dofs.to_nodes(cg.x);
    X.element_weight = std::move(weights);
    X.cell_measure = measure;
    X.iterations = cg.iterations;
    X.residual = cg.residual;
    double wsum = 0.0, wx = 0.0, l2 = 0.0, h1 = 0.0;
    X.gradient.resize(mesh->num_triangles());
    for (std::size_t t = 0; t < mesh->num_triangles(); ++t) {
        const auto d = element_gradient(*mesh, t, X.values);
        X.gradient[t] = d;
        const double W = X.element_weight[t];
        const auto& tri = mesh->triangles[t];
        const double xa = X.values[tri[0]], xb = X.values[tri[1]], xc = X.values[tri[2]];
        wsum += W;
        wx += W * (xa + xb + xc) / 3.0;
        X.energy += W * (d[0] * d[0] + d[1] * d[1]);
        X.forcing += W * d[0];
        const double area = mesh->signed_area(t);
        l2 += area / 6.0 * (xa * xa + xb * xb + xc * xc + xa * xb + xb * xc + xc * xa);
        h1 += area * (d[0] * d[0] + d[1] * d[1]);
    }
    X.mean = wx / wsum;
    X.h1_norm = std::sqrt(l2 + h1);
    return X;
}

template <class F>
void ordered_parallel_for(std::size_t n, unsigned threads, F&& body) {
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    const unsigned nt = std::min<unsigned>(threads, static_cast<unsigned>(n));
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(nt);
    for (unsigned k = 0; k < nt; ++k)
        pool.emplace_back([&, k] {
            try {
                for (std::size_t i = k; i < n; i += nt) body(i);
            } catch (...) {
                errors[k] = std::current_exception();
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

struct WeightedCellSolve {
    std::shared_ptr<const TriMesh2D> mesh;
    std::vector<double> weights;
    AssembledSystem sys;
    CgResult cg;
    std::size_t dropped = 0;
};

// Drops empty elements, assembles
//   int W (X_u psi_u + X_v psi_v) = int W psi_u
// and solves it with zero W-weighted mean by multigrid-preconditioned CG.
inline WeightedCellSolve solve_weighted(const TriMesh2D& box, const std::vector<double>& W_box, double cutoff,
                                        const CellSolveOptions& opt) {
    WeightedCellSolve out;
    const TriMesh2D active = filter_triangles(box, [&](std::size_t t) {
        const bool keep = W_box[t] > cutoff * box.signed_area(t);
        if (!keep) ++out.dropped;
        return keep;
    });
    for (std::size_t t = 0; t < box.num_triangles(); ++t)
        if (W_box[t] > cutoff * box.signed_area(t)) out.weights.push_back(W_box[t]);
    out.mesh = std::make_shared<const TriMesh2D>(active);
    const TriMesh2D& mesh = *out.mesh;

    AssemblyTerms terms;
    terms.a_uu = [](double, double) { return 1.0; };
    terms.a_vv = terms.a_uu;
    terms.flux_source = [](double, double) { return std::array<double, 2>{1.0, 0.0}; };
    terms.element_weight_integrals = out.weights;
    out.sys = assemble(mesh, terms);

    const int n = out.sys.dofs.num_dofs;
    // A load that cancels to rounding level (flat slices, weights without
    // y1 dependence) has the exact solution X = 0.
    std::vector<double> gross(n, 0.0);
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        double area = 0.0;
        const auto gr = p1_gradients(mesh, t, area);
        for (int a = 0; a < 3; ++a) gross[out.sys.dofs.dof_of_node[mesh.triangles[t][a]]] += out.weights[t] * std::abs(gr[a][0]);
    }
    if (std::sqrt(dot(out.sys.b, out.sys.b)) <= 1e3 * std::numeric_limits<double>::epsilon() * std::sqrt(dot(gross, gross))) {
        out.cg.x.assign(n, 0.0);
        return out;
    }
    std::vector<double> mean_w(n, 0.0);
    std::vector<std::array<int, 2>> coords(n);
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t)
        for (int v : mesh.triangles[t]) mean_w[out.sys.dofs.dof_of_node[v]] += out.weights[t] / 3.0;
    for (std::size_t v = 0; v < mesh.num_nodes(); ++v) {
        auto c = mesh.lattice[v];
        c[0] %= mesh.lattice_shape[0];
        coords[out.sys.dofs.dof_of_node[v]] = c;
    }
    const auto mg = std::make_shared<MultigridPreconditioner>(out.sys.A, std::move(coords), mesh.lattice_shape, true,
                                                              MultigridPreconditioner::Options{1, 200, true});
    CgOptions cg;
    cg.tol = opt.tol;
    cg.max_iter = opt.max_iter;
    cg.zero_mean = true;
    cg.mean_weights = std::move(mean_w);
    cg.preconditioner = [mg](std::span<const double> r, std::span<double> z) { mg->apply(r, z); };
    out.cg = solve_cg(out.sys.A, out.sys.b, cg);
    return out;
}

inline CellSolveOptions refined(const CellSolveOptions& opt) {
    CellSolveOptions r = opt;
    r.res = {2 * opt.res.n_h, 2 * opt.res.n_v};
    return r;
}

// Leading error order in h of the coefficients: 2 for smooth profiles; the
// 270 degree step corners of piecewise-constant ones give r^(2/3)
// singularities and hence h^(4/3).
inline double error_order(const ProfileFunction& g) { return g.piecewise_constant() ? 4.0 / 3.0 : 2.0; }

// Richardson step from values at n and 2n.
inline double richardson(double coarse, double fine, double order) {
    const double k = std::pow(2.0, order);
    return (k * fine - coarse) / (k - 1.0);
}

} // namespace detail

/// Periodic cell problem on the slice Y*(y1):
///   int grad X . grad psi = int d psi / d y2,  X periodic in y2, zero mean.
inline CorrectorField solve_cell_2d(const ProfileFunction& g, double y1, const CellSolveOptions& opt = {}) {
    opt.validate();
    const TriMesh2D box = build_cell_mesh(g, y1, opt.res.n_h, opt.res.n_v, true, opt.pattern);
    const auto W = detail::slice_weights(box, g, y1);
    auto s = detail::solve_weighted(box, W, 1e-12, opt);
    CorrectorField X = detail::finish_corrector(CellKind::Resonant2D, s.mesh, s.sys, std::move(s.weights), s.cg,
                                                bar_g(g, y1, opt.quad.axis2));
    X.parameter = y1;
    return X;
}

/// Slice coefficient (1/|Y*(x1)|) int (1 - dX/dy2) over Y*(x1), extrapolated
/// from resolutions n and 2n when enabled.
inline double q2_per_x1(const ProfileFunction& g, double x1, const CellSolveOptions& opt = {}) {
    const double q = solve_cell_2d(g, x1, opt).coefficient();
    if (!opt.extrapolate) return q;
    return detail::richardson(q, solve_cell_2d(g, x1, detail::refined(opt)).coefficient(), detail::error_order(g));
}

struct SliceFamilyResult {
    double q2 = 1.0;
    int n_y1 = 0;
    double last_change = 0.0;
    std::vector<std::array<double, 2>> slices; // (y1, per-slice coefficient) at the final n_y1
};

/// q2 = (1/|Y*|) int_{Y*} (1 - dX/dy2) dy with Gauss nodes in y1.
inline SliceFamilyResult q2_resonant_detailed(const ProfileFunction& g, const CellSolveOptions& opt = {}) {
    opt.validate();
    const double cell = mean_g(g, opt.quad) * g.period1() * g.period2();
    auto slice_integral = [&](double y1, double& measure) {
        const CorrectorField X = solve_cell_2d(g, y1, opt);
        measure = X.cell_measure;
        double v = X.cell_measure - X.forcing;
        if (opt.extrapolate) {
            const CorrectorField Xf = solve_cell_2d(g, y1, detail::refined(opt));
            v = detail::richardson(v, Xf.cell_measure - Xf.forcing, detail::error_order(g));
        }
        return v;
    };
    auto evaluate = [&](int n, std::vector<std::array<double, 2>>& slices) {
        const Rule1D r = composite_gauss(0.0, g.period1(), n, 1, g.jumps_y1());
        std::vector<double> per(r.size()), measure(r.size());
        detail::ordered_parallel_for(r.size(), opt.threads,
                                     [&](std::size_t k) { per[k] = slice_integral(r.nodes[k], measure[k]); });
        slices.clear();
        double s = 0.0;
        for (std::size_t k = 0; k < r.size(); ++k) {
            s += r.weights[k] * per[k];
            slices.push_back({r.nodes[k], per[k] / measure[k]});
        }
        return s / cell;
    };
    SliceFamilyResult out;
    int n = opt.n_y1;
    out.q2 = evaluate(n, out.slices);
    out.n_y1 = n;
    out.last_change = std::numeric_limits<double>::infinity();
    while (2 * n <= opt.n_y1_max) {
        std::vector<std::array<double, 2>> slices;
        const double next = evaluate(2 * n, slices);
        out.last_change = std::abs(next - out.q2);
        out.q2 = next;
        out.slices = std::move(slices);
        n *= 2;
        out.n_y1 = n;
        if (out.last_change < opt.n_y1_tol) break;
    }
    return out;
}

inline double q2_resonant(const ProfileFunction& g, const CellSolveOptions& opt = {}) {
    return q2_resonant_detailed(g, opt).q2;
}

struct ConstrainedResult {
    CorrectorField X;
    double q1 = 1.0;          // extrapolated when enabled
    double q1_discrete = 1.0; // X.coefficient() at the requested resolution
    std::size_t dropped_elements = 0;
};

namespace detail {

// Slope breaks of a periodic function sampled on n points: a second
// difference far above its neighbours marks a kink, placed where the
// secant lines on either side meet.
inline std::vector<double> find_kinks(const std::function<double(double)>& f, double period, int n = 1024) {
    const double h = period / n;
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = f(i * h);
    auto at = [&](int i) { return v[((i % n) + n) % n]; };
    std::vector<double> jump(n);
    double slope_max = 0.0;
    for (int i = 0; i < n; ++i) {
        jump[i] = std::abs(at(i + 1) - 2.0 * at(i) + at(i - 1)) / h;
        slope_max = std::max(slope_max, std::abs(at(i + 1) - at(i)) / h);
    }
    auto J = [&](int i) { return jump[((i % n) + n) % n]; };
    std::vector<double> out;
    for (int i = 0; i < n; ++i) {
        const double background = 0.5 * (J(i - 3) + J(i + 3));
        if (J(i) < 1e-3 * (1.0 + slope_max) || J(i) < 20.0 * background) continue;
        if (J(i) < J(i - 1) || J(i) <= J(i + 1)) continue; // one mark per kink
        const double sl = (at(i - 1) - at(i - 2)) / h, sr = (at(i + 2) - at(i + 1)) / h;
        double x = i * h;
        if (std::abs(sl - sr) > 0.0) {
            // (i-1)h + (t - (i-1)h) sl = (i+1)h + (t - (i+1)h) sr, solved for t
            const double t = (at(i + 1) - at(i - 1) + sl * (i - 1) * h - sr * (i + 1) * h) / (sl - sr);
            if (std::abs(t - x) <= 2.0 * h) x = t;
        }
        out.push_back(ProfileFunction::reduce(x, period));
    }
    std::sort(out.begin(), out.end());
    return out;
}

// Column lines on [0, period) graded quadratically towards the kinks.
inline std::vector<double> graded_columns(std::vector<double> kinks, double period, int n) {
    if (kinks.empty()) {
        std::vector<double> us(n + 1);
        for (int i = 0; i <= n; ++i) us[i] = period * i / n;
        return us;
    }
    std::vector<double> br{0.0};
    std::vector<bool> kink{false};
    const double snap = 1e-9 * period;
    for (double k : kinks) {
        if (k < snap || k > period - snap) {
            kink.front() = true;
            continue;
        }
        br.push_back(k);
        kink.push_back(true);
    }
    br.push_back(period);
    kink.push_back(kink.front());
    std::vector<double> us;
    for (std::size_t p = 0; p + 1 < br.size(); ++p) {
        const double a = br[p], b = br[p + 1];
        const int c = std::max(2, static_cast<int>(std::lround(n * (b - a) / period)));
        for (int i = 0; i < c; ++i) {
            const double s = static_cast<double>(i) / c;
            double x = s;
            if (kink[p] && kink[p + 1]) x = s < 0.5 ? 2.0 * s * s : 1.0 - 2.0 * (1.0 - s) * (1.0 - s);
            else if (kink[p]) x = s * s;
            else if (kink[p + 1]) x = 1.0 - (1.0 - s) * (1.0 - s);
            us.push_back(a + (b - a) * x);
        }
    }
    us.push_back(period);
    return us;
}

// Mesh of the constrained cell. Smooth profiles whose slices are not flat
// get a layer fitted to the band min g(y1, .) < y3 < max g(y1, .), where the
// weight falls from 1 to 0, and columns graded towards kinks of the band
// edges; the band collapses there and the solution is singular.
inline TriMesh2D constrained_box(const ProfileFunction& g, const CellSolveOptions& opt) {
    if (g.piecewise_constant())
        return build_cell_mesh(g, std::nullopt, opt.res.n_h, opt.res.n_v, true, opt.pattern);
    const double L1 = g.period1();
    auto lo = [&](double u) { return min_profile(g, u); };
    auto hi = [&](double u) { return max_profile(g, u); };
    constexpr int samples = 256;
    double band = 0.0, top = 0.0;
    for (int i = 0; i < samples; ++i) {
        const double u = L1 * i / samples;
        band = std::max(band, hi(u) - lo(u));
        top = std::max(top, hi(u));
    }
    if (band <= 1e-9 * top) return build_cell_mesh(g, std::nullopt, opt.res.n_h, opt.res.n_v, true, opt.pattern);
    auto kinks = find_kinks(hi, L1);
    for (double k : find_kinks(lo, L1)) kinks.push_back(k);
    std::sort(kinks.begin(), kinks.end());
    kinks.erase(std::unique(kinks.begin(), kinks.end(), [&](double a, double b) { return b - a < 1e-6 * L1; }),
                kinks.end());
    // Where the band closes its rows sit just above the surface, with zero weight.
    const double floor = 1e-4 * band;
    const auto us = graded_columns(kinks, L1, opt.res.n_h);
    const int n_low = opt.res.n_v / 2;
    return build_banded_mesh(us, lo, [&](double u) { return std::max(hi(u), lo(u) + floor); }, n_low,
                             opt.res.n_v - n_low, true, opt.pattern);
}

inline std::pair<CorrectorField, std::size_t> constrained_field(const ProfileFunction& g, const CellSolveOptions& opt) {
    const SliceWeight w(g);
    const TriMesh2D box = constrained_box(g, opt);
    const auto W = constrained_weights(box, w);
    auto s = solve_weighted(box, W, 1e-12 * g.period2(), opt);
    const double cell = mean_g(g, opt.quad) * g.period1() * g.period2();
    return {finish_corrector(CellKind::ConstrainedY2, s.mesh, s.sys, std::move(s.weights), s.cg, cell), s.dropped};
}

} // namespace detail

/// Cell problem on y2-independent functions, reduced to (y1, y3) with the
/// slice-measure weight w:
///   int w (X_y1 psi_y1 + X_y3 psi_y3) = int w psi_y1,  X periodic in y1,
/// zero w-weighted mean; q1 = (1/|Y*|) int w (1 - X_y1).
inline ConstrainedResult solve_cell_constrained(const ProfileFunction& g, const CellSolveOptions& opt = {}) {
    opt.validate();
    ConstrainedResult out;
    auto [X, dropped] = detail::constrained_field(g, opt);
    out.X = std::move(X);
    out.dropped_elements = dropped;
    out.q1_discrete = out.X.coefficient();
    out.q1 = out.q1_discrete;
    if (opt.extrapolate)
        out.q1 = detail::richardson(out.q1_discrete, detail::constrained_field(g, detail::refined(opt)).first.coefficient(),
                                    detail::error_order(g));
    return out;
}

enum class CorrectorComponent { First, Second }; // correctors attached to du/dx1 and du/dx2

/// Point of the reference cell.
struct CellPoint {
    double y1 = 0.0, y2 = 0.0, y3 = 0.0;
};

/// Gradient (d/dy1, d/dy2, d/dy3) of a first-order corrector at a cell point.
///
/// Closed-form correctors are one-dimensional; the cell-solve ones use X
/// from the matching cell problem (supplied or solved on demand). Components
/// not involved in a corrector are zero.
inline std::array<double, 3> corrector_gradient(RegimeClass regime, const ProfileFunction& g,
                                                std::array<double, 2> grad_u, const CellPoint& p,
                                                CorrectorComponent which, const CellSolveOptions& opt = {},
                                                const CorrectorField* precomputed = nullptr) {
    const auto& quad = opt.quad;
    auto unsupported = [&]() -> std::array<double, 3> {
        fail(ErrorKind::UnsupportedRegime, std::string("no ") + (which == CorrectorComponent::First ? "first" : "second") +
                                               " corrector in regime " + to_string(regime));
    };
    // (1 / (<1/h> h(t)) - 1) for the closed-form one-dimensional correctors.
    auto factor_y1 = [&]() {
        const Rule1D r = quad.axis1.rule(0.0, g.period1(), g.jumps_y1());
        double m = 0.0;
        for (std::size_t k = 0; k < r.size(); ++k) m += r.weights[k] / bar_g(g, r.nodes[k], quad.axis2);
        m /= g.period1();
        return 1.0 / (m * bar_g(g, p.y1, quad.axis2)) - 1.0;
    };
    auto factor_y2 = [&](double y1) {
        const Rule1D r = quad.axis2.rule(0.0, g.period2(), g.jumps_y2());
        double m = 0.0;
        for (std::size_t k = 0; k < r.size(); ++k) m += r.weights[k] / g(y1, r.nodes[k]);
        m /= g.period2();
        return 1.0 / (m * g(y1, p.y2)) - 1.0;
    };
    if (p.y3 < 0.0 || p.y3 > g(p.y1, p.y2) * (1.0 + 1e-12))
        fail(ErrorKind::Domain, "cell point lies outside Y*");

    switch (regime) {
    case RegimeClass::WeakWeak:
        if (which == CorrectorComponent::First) return {factor_y1() * grad_u[0], 0.0, 0.0};
        return {0.0, factor_y2(p.y1) * grad_u[1], 0.0};
    case RegimeClass::WeakStrong:
        if (which == CorrectorComponent::First) return {factor_y1() * grad_u[0], 0.0, 0.0};
        return unsupported();
    case RegimeClass::A0_WeakBeta:
        if (which == CorrectorComponent::Second) return {0.0, factor_y2(p.y1) * grad_u[1], 0.0};
        return unsupported();
    case RegimeClass::ResonantWeak:
    case RegimeClass::A0_ResonantBeta: {
        if (which == CorrectorComponent::First) {
            if (regime == RegimeClass::ResonantWeak) return {factor_y1() * grad_u[0], 0.0, 0.0};
            return unsupported();
        }
        std::optional<CorrectorField> own;
        const CorrectorField* X = precomputed;
        if (!X) {
            own = solve_cell_2d(g, p.y1, opt);
            X = &*own;
        }
        const auto d = X->gradient_at(p.y2, p.y3);
        return {0.0, -grad_u[1] * d[0], -grad_u[1] * d[1]};
    }
    case RegimeClass::ResonantStrong: {
        if (which == CorrectorComponent::Second) return unsupported();
        std::optional<ConstrainedResult> own;
        const CorrectorField* X = precomputed;
        if (!X) {
            own = solve_cell_constrained(g, opt);
            X = &own->X;
        }
        const auto d = X->gradient_at(p.y1, p.y3);
        return {-grad_u[0] * d[0], 0.0, -grad_u[0] * d[1]};
    }
    case RegimeClass::A0_StrongBeta:
    case RegimeClass::StrongStrong:
        return unsupported();
    }
    return unsupported();
}

} // namespace thinhom
