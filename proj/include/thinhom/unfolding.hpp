#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "thinhom/error.hpp"
#include "thinhom/mesh.hpp"
#include "thinhom/profile.hpp"
#include "thinhom/quadrature.hpp"

namespace thinhom {

using Field3 = std::function<double(double, double, double)>;

struct CellIndex {
    long index = 0;
    double fraction = 0.0; // in [0, L)
};

/// Splits x into the half-open period cell of width scale * L that contains
/// it and the unscaled position inside that cell.
inline CellIndex cell_decompose(double x, double scale, double L) {
    if (!(scale > 0.0) || !(L > 0.0)) fail(ErrorKind::Domain, "cell_decompose needs scale > 0 and L > 0");
    CellIndex c;
    c.index = static_cast<long>(std::floor(x / (scale * L)));
    c.fraction = x / scale - static_cast<double>(c.index) * L;
    if (c.fraction >= L) {
        ++c.index;
        c.fraction -= L;
    }
    if (c.fraction < 0.0) c.fraction = 0.0;
    return c;
}

/// Quadrature resolutions of the two integration paths.
struct UnfoldResolution {
    // Unfolded path: composite Gauss in (y1, y2), Gauss on [0, g(y1, y2)] in y3.
    int y_order = 4;
    int y_panels = 8;
    int v_order = 5;
    // Physical path: per-cell composite Gauss in x1, x2 and Gauss on [0, eps g] in x3.
    int x_order = 5;
    int x_panels = 6;
    int x3_order = 6;

    std::string describe() const {
        return "y:" + std::to_string(y_order) + "x" + std::to_string(y_panels) + ",v:" + std::to_string(v_order) +
               ";x:" + std::to_string(x_order) + "x" + std::to_string(x_panels) + ",x3:" + std::to_string(x3_order);
    }
};

/// Nodes and weights on Y* = {0 < y3 < g(y1, y2)}.
struct YStarRule {
    std::vector<std::array<double, 3>> nodes;
    std::vector<double> weights;

    double measure() const {
        double s = 0.0;
        for (double w : weights) s += w;
        return s;
    }
};

inline YStarRule build_ystar_rule(const ProfileFunction& g, const UnfoldResolution& res) {
    const Rule1D r1 = composite_gauss(0.0, g.period1(), res.y_order, res.y_panels, g.jumps_y1());
    const Rule1D r2 = composite_gauss(0.0, g.period2(), res.y_order, res.y_panels, g.jumps_y2());
    const Rule1D rv = gauss_legendre_unit(res.v_order);
    YStarRule y;
    for (std::size_t a = 0; a < r1.size(); ++a)
        for (std::size_t b = 0; b < r2.size(); ++b) {
            const double top = g(r1.nodes[a], r2.nodes[b]);
            for (std::size_t c = 0; c < rv.size(); ++c) {
                y.nodes.push_back({r1.nodes[a], r2.nodes[b], top * rv.nodes[c]});
                y.weights.push_back(r1.weights[a] * r2.weights[b] * top * rv.weights[c]);
            }
        }
    return y;
}

/// Cell lattice of the unfolding at one epsilon. S_eps holds the cells
/// [i L1 eps^alpha, (i+1) L1 eps^alpha) x [j L2 eps^beta, (j+1) L2 eps^beta)
/// whose closure lies in the closure of omega; it is a product of index
/// ranges because omega is a rectangle.
class UnfoldGrid {
public:
    UnfoldGrid(double epsilon, double alpha, double beta, ProfileFunction g, Rectangle omega,
               UnfoldResolution res = {})
        : eps_(epsilon), alpha_(alpha), beta_(beta), g_(std::move(g)), omega_(omega), res_(res) {
        if (!(eps_ > 0.0 && eps_ < 1.0)) fail(ErrorKind::Config, "epsilon must lie in (0, 1)");
        if (!(alpha_ >= 0.0) || !(beta_ >= 0.0)) fail(ErrorKind::Config, "exponents must be >= 0");
        omega_.validate();
        s1_ = std::pow(eps_, alpha_);
        s2_ = std::pow(eps_, beta_);
        c1_ = s1_ * g_.period1();
        c2_ = s2_ * g_.period2();
        i_lo_ = snapped_ceil(omega_.x1_lo / c1_);
        i_hi_ = snapped_floor(omega_.x1_hi / c1_);
        j_lo_ = snapped_ceil(omega_.x2_lo / c2_);
        j_hi_ = snapped_floor(omega_.x2_hi / c2_);
        if (i_hi_ < i_lo_) i_hi_ = i_lo_;
        if (j_hi_ < j_lo_) j_hi_ = j_lo_;
        ystar_ = build_ystar_rule(g_, res_);
    }

    double epsilon() const { return eps_; }
    double alpha() const { return alpha_; }
    double beta() const { return beta_; }
    const ProfileFunction& profile() const { return g_; }
    const Rectangle& omega() const { return omega_; }
    const UnfoldResolution& resolution() const { return res_; }
    const YStarRule& ystar() const { return ystar_; }
    double scale1() const { return s1_; } // eps^alpha
    double scale2() const { return s2_; } // eps^beta
    double cell_width1() const { return c1_; }
    double cell_width2() const { return c2_; }

    /// Cells of S_eps are (i, j) with i in [i_lo, i_hi) and j in [j_lo, j_hi).
    std::array<long, 4> index_ranges() const { return {i_lo_, i_hi_, j_lo_, j_hi_}; }
    long num_cells() const { return (i_hi_ - i_lo_) * (j_hi_ - j_lo_); }
    bool in_s(long i, long j) const { return i >= i_lo_ && i < i_hi_ && j >= j_lo_ && j < j_hi_; }

    Rectangle cell(long i, long j) const {
        return {static_cast<double>(i) * c1_, static_cast<double>(i + 1) * c1_, static_cast<double>(j) * c2_,
                static_cast<double>(j + 1) * c2_};
    }

    double covered_area() const { return static_cast<double>(num_cells()) * c1_ * c2_; }
    double residual_area() const { return std::max(0.0, omega_.area() - covered_area()); }

    /// Physical point of the unfolded coordinates (x, y).
    std::array<double, 3> physical_point(double x1, double x2, const std::array<double, 3>& y, bool& covered) const {
        const CellIndex a = cell_decompose(x1, s1_, g_.period1());
        const CellIndex b = cell_decompose(x2, s2_, g_.period2());
        covered = in_s(a.index, b.index);
        return {s1_ * (static_cast<double>(a.index) * g_.period1() + y[0]),
                s2_ * (static_cast<double>(b.index) * g_.period2() + y[1]), eps_ * y[2]};
    }

    /// Top of the physical domain, eps g(x1 / eps^alpha, x2 / eps^beta).
    double thickness(double x1, double x2) const { return eps_ * g_(x1 / s1_, x2 / s2_); }

private:
    static long snapped_ceil(double q) {
        const double r = std::round(q);
        return static_cast<long>(std::abs(q - r) <= 1e-9 * std::max(1.0, std::abs(q)) ? r : std::ceil(q));
    }
    static long snapped_floor(double q) {
        const double r = std::round(q);
        return static_cast<long>(std::abs(q - r) <= 1e-9 * std::max(1.0, std::abs(q)) ? r : std::floor(q));
    }

    double eps_, alpha_, beta_;
    ProfileFunction g_;
    Rectangle omega_;
    UnfoldResolution res_;
    double s1_ = 1.0, s2_ = 1.0, c1_ = 1.0, c2_ = 1.0;
    long i_lo_ = 0, i_hi_ = 0, j_lo_ = 0, j_hi_ = 0;
    YStarRule ystar_;
};

/// T_eps(phi)(x1, x2, y); zero off S_eps, domain error above the profile.
inline double unfold_at(const Field3& phi, const UnfoldGrid& grid, double x1, double x2, const std::array<double, 3>& y) {
    const double top = grid.profile()(y[0], y[1]);
    if (y[2] < 0.0 || y[2] > top * (1.0 + 1e-14))
        fail(ErrorKind::Domain, "unfolded point lies outside Y* (y3 must be in [0, g(y1, y2)])");
    bool covered = false;
    const auto p = grid.physical_point(x1, x2, y, covered);
    return covered ? phi(p[0], p[1], p[2]) : 0.0;
}

/// T_eps(phi) sampled on a tensor rule over omega x Y*: per-piece Gauss in x
/// on the intersections of omega with the cell lattice, times the Y* rule.
struct UnfoldedField {
    const UnfoldGrid* grid = nullptr;
    std::vector<std::array<double, 2>> x_nodes;
    std::vector<double> x_weights;
    std::vector<char> x_covered;
    std::vector<double> values; // x-major: values[ix * ny + iy]

    std::size_t ny() const { return grid->ystar().weights.size(); }
};

namespace detail {

// Breakpoints of [lo, hi] at the cell lattice k * width.
inline std::vector<double> lattice_breaks(double lo, double hi, double width) {
    std::vector<double> b;
    for (long k = static_cast<long>(std::floor(lo / width)) + 1; static_cast<double>(k) * width < hi; ++k)
        b.push_back(static_cast<double>(k) * width);
    return b;
}

} // namespace detail

inline UnfoldedField unfold(const Field3& phi, const UnfoldGrid& grid, int x_order = 3) {
    const Rectangle& w = grid.omega();
    const auto b1 = detail::lattice_breaks(w.x1_lo, w.x1_hi, grid.cell_width1());
    const auto b2 = detail::lattice_breaks(w.x2_lo, w.x2_hi, grid.cell_width2());
    const Rule1D r1 = composite_gauss(w.x1_lo, w.x1_hi, x_order, 1, b1);
    const Rule1D r2 = composite_gauss(w.x2_lo, w.x2_hi, x_order, 1, b2);
    UnfoldedField f;
    f.grid = &grid;
    const auto& ys = grid.ystar();
    for (std::size_t a = 0; a < r1.size(); ++a)
        for (std::size_t b = 0; b < r2.size(); ++b) {
            const double x1 = r1.nodes[a], x2 = r2.nodes[b];
            f.x_nodes.push_back({x1, x2});
            f.x_weights.push_back(r1.weights[a] * r2.weights[b]);
            bool covered = false;
            grid.physical_point(x1, x2, {0.0, 0.0, 0.0}, covered);
            f.x_covered.push_back(covered);
            for (const auto& y : ys.nodes) f.values.push_back(covered ? unfold_at(phi, grid, x1, x2, y) : 0.0);
        }
    return f;
}

/// L2 norm over omega x Y*.
inline double l2_norm(const UnfoldedField& f) {
    const auto& yw = f.grid->ystar().weights;
    double s = 0.0;
    for (std::size_t i = 0; i < f.x_weights.size(); ++i)
        for (std::size_t k = 0; k < yw.size(); ++k) {
            const double v = f.values[i * yw.size() + k];
            s += f.x_weights[i] * yw[k] * v * v;
        }
    return std::sqrt(s);
}

/// Outcome of a two-path check.
struct IdentityReport {
    std::string identity;
    double lhs = 0.0;
    double rhs = 0.0;
    double discrepancy = 0.0; // relative, or the excess lhs - rhs for inequalities
    double epsilon = 0.0;
    std::string resolution;
    bool inequality = false;
};

namespace detail {

inline double relative_gap(double lhs, double rhs) {
    const double scale = std::max(std::abs(lhs), std::abs(rhs));
    return scale > 0.0 ? std::abs(lhs - rhs) / scale : 0.0;
}

// (1/(L1 L2)) int_{omega x Y*} T_eps(phi): T_eps(phi) is constant in x on each
// cell of S_eps and zero elsewhere, so the x integral is exact per cell.
inline double unfolded_integral(const Field3& phi, const UnfoldGrid& grid) {
    const auto [i_lo, i_hi, j_lo, j_hi] = grid.index_ranges();
    const auto& ys = grid.ystar();
    const double cell_area = grid.cell_width1() * grid.cell_width2();
    double s = 0.0;
    for (long i = i_lo; i < i_hi; ++i)
        for (long j = j_lo; j < j_hi; ++j) {
            const Rectangle c = grid.cell(i, j);
            const double x1 = 0.5 * (c.x1_lo + c.x1_hi), x2 = 0.5 * (c.x2_lo + c.x2_hi);
            double cs = 0.0;
            for (std::size_t k = 0; k < ys.nodes.size(); ++k) cs += ys.weights[k] * unfold_at(phi, grid, x1, x2, ys.nodes[k]);
            s += cell_area * cs;
        }
    return s / (grid.profile().period1() * grid.profile().period2());
}

// (1/eps) int phi over the physical domain above `pieces`, each piece
// integrated in physical coordinates with breaks at the mapped profile jumps.
inline double physical_integral(const Field3& phi, const UnfoldGrid& grid, const std::vector<Rectangle>& pieces) {
    const auto& g = grid.profile();
    const auto& res = grid.resolution();
    const Rule1D rv = gauss_legendre_unit(res.x3_order);
    auto mapped_breaks = [](double lo, double hi, double scale, double L, std::span<const double> jumps) {
        std::vector<double> b;
        for (long k = static_cast<long>(std::floor(lo / (scale * L))); static_cast<double>(k) * scale * L < hi; ++k)
            for (double t : jumps) b.push_back(scale * (static_cast<double>(k) * L + t));
        return b;
    };
    double s = 0.0;
    for (const Rectangle& p : pieces) {
        const Rule1D r1 = composite_gauss(p.x1_lo, p.x1_hi, res.x_order, res.x_panels,
                                          mapped_breaks(p.x1_lo, p.x1_hi, grid.scale1(), g.period1(), g.jumps_y1()));
        const Rule1D r2 = composite_gauss(p.x2_lo, p.x2_hi, res.x_order, res.x_panels,
                                          mapped_breaks(p.x2_lo, p.x2_hi, grid.scale2(), g.period2(), g.jumps_y2()));
        for (std::size_t a = 0; a < r1.size(); ++a)
            for (std::size_t b = 0; b < r2.size(); ++b) {
                const double top = grid.thickness(r1.nodes[a], r2.nodes[b]);
                double col = 0.0;
                for (std::size_t c = 0; c < rv.size(); ++c) col += rv.weights[c] * phi(r1.nodes[a], r2.nodes[b], top * rv.nodes[c]);
                s += r1.weights[a] * r2.weights[b] * top * col;
            }
    }
    return s / grid.epsilon();
}

inline std::vector<Rectangle> covered_cells(const UnfoldGrid& grid) {
    const auto [i_lo, i_hi, j_lo, j_hi] = grid.index_ranges();
    std::vector<Rectangle> out;
    for (long i = i_lo; i < i_hi; ++i)
        for (long j = j_lo; j < j_hi; ++j) out.push_back(grid.cell(i, j));
    return out;
}

// Intersections of omega with every lattice cell that meets it.
inline std::vector<Rectangle> all_pieces(const UnfoldGrid& grid) {
    const Rectangle& w = grid.omega();
    auto edges = [](double lo, double hi, double width) {
        std::vector<double> e{lo};
        for (double b : lattice_breaks(lo, hi, width))
            if (b - e.back() > 1e-12 * width) e.push_back(b);
        if (hi - e.back() > 1e-12 * width)
            e.push_back(hi);
        else
            e.back() = hi;
        return e;
    };
    const auto e1 = edges(w.x1_lo, w.x1_hi, grid.cell_width1());
    const auto e2 = edges(w.x2_lo, w.x2_hi, grid.cell_width2());
    std::vector<Rectangle> out;
    for (std::size_t a = 0; a + 1 < e1.size(); ++a)
        for (std::size_t b = 0; b + 1 < e2.size(); ++b) out.push_back({e1[a], e1[a + 1], e2[b], e2[b + 1]});
    return out;
}

} // namespace detail

enum class UnfoldRegion {
    Covered, // R^eps_0, above omega_eps: equality
    Full,    // R^eps, above omega: lhs <= rhs for nonnegative phi
};

/// (1/(L1 L2)) int_{omega x Y*} T_eps(phi) against (1/eps) int phi over the
/// physical domain, each side with its own quadrature.
inline IdentityReport check_integral_identity(const Field3& phi, const UnfoldGrid& grid,
                                              UnfoldRegion region = UnfoldRegion::Covered) {
    IdentityReport r;
    r.identity = region == UnfoldRegion::Covered ? "integral" : "integral-full-domain";
    r.epsilon = grid.epsilon();
    r.resolution = grid.resolution().describe();
    r.lhs = detail::unfolded_integral(phi, grid);
    if (region == UnfoldRegion::Covered) {
        r.rhs = detail::physical_integral(phi, grid, detail::covered_cells(grid));
        r.discrepancy = detail::relative_gap(r.lhs, r.rhs);
    } else {
        r.rhs = detail::physical_integral(phi, grid, detail::all_pieces(grid));
        r.inequality = true;
        r.discrepancy = std::max(0.0, r.lhs - r.rhs);
    }
    return r;
}

/// ||T_eps(phi)||_{L2(omega x Y*)} against (L1 L2 / eps)^(1/2) ||phi||_{L2}
/// over the covered physical domain.
inline IdentityReport check_norm_identity(const Field3& phi, const UnfoldGrid& grid) {
    const Field3 sq = [&phi](double a, double b, double c) {
        const double v = phi(a, b, c);
        return v * v;
    };
    const double L = grid.profile().period1() * grid.profile().period2();
    IdentityReport r;
    r.identity = "norm";
    r.epsilon = grid.epsilon();
    r.resolution = grid.resolution().describe();
    r.lhs = std::sqrt(L * detail::unfolded_integral(sq, grid));
    r.rhs = std::sqrt(L * detail::physical_integral(sq, grid, detail::covered_cells(grid)));
    r.discrepancy = detail::relative_gap(r.lhs, r.rhs);
    return r;
}

/// phi(x) = psi(x1/eps^alpha, x2/eps^beta, x3/eps) with psi periodic unfolds
/// to psi(y) exactly; the discrepancy is the largest pointwise deviation at
/// the centre of every covered cell and every Y* node.
inline IdentityReport check_oscillation_identity(const Field3& psi, const UnfoldGrid& grid) {
    const double s1 = grid.scale1(), s2 = grid.scale2(), eps = grid.epsilon();
    const Field3 phi = [&psi, s1, s2, eps](double a, double b, double c) { return psi(a / s1, b / s2, c / eps); };
    IdentityReport r;
    r.identity = "oscillation";
    r.epsilon = eps;
    r.resolution = grid.resolution().describe();
    const auto [i_lo, i_hi, j_lo, j_hi] = grid.index_ranges();
    for (long i = i_lo; i < i_hi; ++i)
        for (long j = j_lo; j < j_hi; ++j) {
            const Rectangle c = grid.cell(i, j);
            const double x1 = 0.5 * (c.x1_lo + c.x1_hi), x2 = 0.5 * (c.x2_lo + c.x2_hi);
            for (const auto& y : grid.ystar().nodes) {
                const double t = unfold_at(phi, grid, x1, x2, y), v = psi(y[0], y[1], y[2]);
                r.lhs = std::max(r.lhs, std::abs(t));
                r.rhs = std::max(r.rhs, std::abs(v));
                r.discrepancy = std::max(r.discrepancy, std::abs(t - v));
            }
        }
    return r;
}

/// ||T_eps(phi) - phi||_{L2(omega x Y*)} for phi depending on x1, x2 only.
inline double unfolding_distance(const std::function<double(double, double)>& phi, const UnfoldGrid& grid,
                                 int x_order = 3) {
    const Field3 phi3 = [&phi](double a, double b, double) { return phi(a, b); };
    const UnfoldedField T = unfold(phi3, grid, x_order);
    const auto& yw = grid.ystar().weights;
    double s = 0.0;
    for (std::size_t i = 0; i < T.x_weights.size(); ++i) {
        const double p = phi(T.x_nodes[i][0], T.x_nodes[i][1]);
        for (std::size_t k = 0; k < yw.size(); ++k) {
            const double d = T.values[i * yw.size() + k] - p;
            s += T.x_weights[i] * yw[k] * d * d;
        }
    }
    return std::sqrt(s);
}

struct DerivativeScalingReport {
    double h = 0.0;
    std::array<double, 3> residual{}; // max over samples, per y direction
    double max_residual = 0.0;
    int samples = 0;
};

/// Centred differences of T_eps(phi) in y against eps^alpha, eps^beta, eps
/// times T_eps of the exact x-derivatives, sampled at the centre of every
/// covered cell and a fixed set of interior cell points.
inline DerivativeScalingReport check_derivative_scaling(const Field3& phi,
                                                        const std::function<std::array<double, 3>(double, double, double)>& grad,
                                                        const UnfoldGrid& grid, double h) {
    const auto& g = grid.profile();
    const double g0 = min_profile(g);
    if (!(h > 0.0) || h > 0.25 * std::min({g0, g.period1(), g.period2()}))
        fail(ErrorKind::Domain, "finite-difference step must lie in (0, g0/4]");
    DerivativeScalingReport rep;
    rep.h = h;
    const std::array<double, 3> scale{grid.scale1(), grid.scale2(), grid.epsilon()};
    const auto [i_lo, i_hi, j_lo, j_hi] = grid.index_ranges();
    constexpr int ny = 3;
    for (long i = i_lo; i < i_hi; ++i)
        for (long j = j_lo; j < j_hi; ++j) {
            const Rectangle c = grid.cell(i, j);
            const double x1 = 0.5 * (c.x1_lo + c.x1_hi), x2 = 0.5 * (c.x2_lo + c.x2_hi);
            for (int a = 0; a < ny; ++a)
                for (int b = 0; b < ny; ++b)
                    for (int k = 1; k <= 3; ++k) {
                        const std::array<double, 3> y{g.period1() * (a + 0.5) / ny, g.period2() * (b + 0.5) / ny,
                                                      0.25 * k * g0};
                        bool covered = false;
                        const auto p = grid.physical_point(x1, x2, y, covered);
                        const auto d = grad(p[0], p[1], p[2]);
                        for (int dir = 0; dir < 3; ++dir) {
                            auto yp = y, ym = y;
                            yp[dir] += h;
                            ym[dir] -= h;
                            const double fd = (unfold_at(phi, grid, x1, x2, yp) - unfold_at(phi, grid, x1, x2, ym)) / (2.0 * h);
                            rep.residual[dir] = std::max(rep.residual[dir], std::abs(fd - scale[dir] * d[dir]));
                        }
                        ++rep.samples;
                    }
        }
    rep.max_residual = std::max({rep.residual[0], rep.residual[1], rep.residual[2]});
    return rep;
}

/// Pi_eps(phi)(x1, x2, x3) = phi(x1, x2, eps x3) on omega x (0, g0).
inline Field3 rescale_pi(Field3 phi, double epsilon, double g0) {
    if (!(epsilon > 0.0) || !(g0 > 0.0)) fail(ErrorKind::Domain, "rescale_pi needs epsilon > 0 and g0 > 0");
    return [phi = std::move(phi), epsilon, g0](double x1, double x2, double x3) {
        if (x3 < 0.0 || x3 > g0 * (1.0 + 1e-14)) fail(ErrorKind::Domain, "rescaled point lies outside (0, g0)");
        return phi(x1, x2, epsilon * x3);
    };
}

/// ||Pi_eps phi||_{L2(omega x (0, g0))} against eps^(-1/2) ||phi||_{L2(omega x (0, eps g0))},
/// with different rules on the two sides.
inline IdentityReport check_pi_norm_identity(const Field3& phi, double epsilon, const Rectangle& omega, double g0) {
    const Field3 pi = rescale_pi(phi, epsilon, g0);
    auto integrate = [&](const Field3& f, double top, int order, int panels, int v_order) {
        const Rule1D r1 = composite_gauss(omega.x1_lo, omega.x1_hi, order, panels);
        const Rule1D r2 = composite_gauss(omega.x2_lo, omega.x2_hi, order, panels);
        const Rule1D r3 = composite_gauss(0.0, top, v_order, 1);
        double s = 0.0;
        for (std::size_t a = 0; a < r1.size(); ++a)
            for (std::size_t b = 0; b < r2.size(); ++b)
                for (std::size_t c = 0; c < r3.size(); ++c) {
                    const double v = f(r1.nodes[a], r2.nodes[b], r3.nodes[c]);
                    s += r1.weights[a] * r2.weights[b] * r3.weights[c] * v * v;
                }
        return s;
    };
    IdentityReport r;
    r.identity = "pi-norm";
    r.epsilon = epsilon;
    r.resolution = "lhs:6x8,v:8;rhs:5x9,v:9";
    r.lhs = std::sqrt(integrate(pi, g0, 6, 8, 8));
    r.rhs = std::sqrt(integrate(phi, epsilon * g0, 5, 9, 9) / epsilon);
    r.discrepancy = detail::relative_gap(r.lhs, r.rhs);
    return r;
}

/// (1/(eps g0)) int_0^{eps g0} u(x1, x2, x3) dx3 by Gauss quadrature.
inline double vertical_average(const Field3& u, double epsilon, double g0, double x1, double x2, int order = 8) {
    if (!(epsilon > 0.0) || !(g0 > 0.0)) fail(ErrorKind::Domain, "vertical_average needs epsilon > 0 and g0 > 0");
    const double top = epsilon * g0;
    const Rule1D r = composite_gauss(0.0, top, order, 1);
    double s = 0.0;
    for (std::size_t k = 0; k < r.size(); ++k) s += r.weights[k] * u(x1, x2, r.nodes[k]);
    return s / top;
}

} // namespace thinhom
