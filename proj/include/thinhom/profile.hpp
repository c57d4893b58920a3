#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "thinhom/error.hpp"
#include "thinhom/quadrature.hpp"

namespace thinhom {

enum class ProfileKind { Smooth, PiecewiseConstant };

struct ProfileBounds {
    double lower; // g0
    double upper; // g1
};

/// One axis-aligned piece of a piecewise-constant profile, half-open in both
/// directions: [y1_lo, y1_hi) x [y2_lo, y2_hi).
struct PiecewiseRow {
    double y1_lo, y1_hi, y2_lo, y2_hi, value;
};

/// Positive (L1, L2)-periodic top-boundary profile g(y1, y2).
///
/// Arguments are reduced to the base period before the underlying map is
/// called, so periodicity holds exactly at every representable sample point
/// whose reduction is exact. Piecewise-constant profiles carry their jump
/// ordinates so quadrature panels and meshes can be aligned with them.
class ProfileFunction {
public:
    using Map = std::function<double(double, double)>;

    ProfileFunction(std::string name, double period1, double period2, Map map, ProfileKind kind,
                    std::vector<double> jumps1 = {}, std::vector<double> jumps2 = {},
                    std::optional<ProfileBounds> declared = std::nullopt)
        : name_(std::move(name)), l1_(period1), l2_(period2), map_(std::move(map)), kind_(kind),
          jumps1_(std::move(jumps1)), jumps2_(std::move(jumps2)), declared_(declared) {
        if (!(l1_ > 0.0) || !(l2_ > 0.0)) fail(ErrorKind::InvalidProfile, "periods must be positive");
        if (!map_) fail(ErrorKind::InvalidProfile, "profile map is empty");
        normalize_jumps(jumps1_, l1_);
        normalize_jumps(jumps2_, l2_);
        if (declared_ && !(declared_->lower > 0.0 && declared_->upper >= declared_->lower))
            fail(ErrorKind::InvalidProfile, "declared bounds must satisfy 0 < g0 <= g1");
    }

    double operator()(double y1, double y2) const { return map_(reduce(y1, l1_), reduce(y2, l2_)); }

    const std::string& name() const { return name_; }
    double period1() const { return l1_; }
    double period2() const { return l2_; }
    ProfileKind kind() const { return kind_; }
    bool piecewise_constant() const { return kind_ == ProfileKind::PiecewiseConstant; }
    std::span<const double> jumps_y1() const { return jumps1_; }
    std::span<const double> jumps_y2() const { return jumps2_; }
    const std::optional<ProfileBounds>& declared_bounds() const { return declared_; }

    /// Reduces t into [0, period).
    static double reduce(double t, double period) {
        double r = t - period * std::floor(t / period);
        if (r >= period) r = 0.0;
        if (r < 0.0) r = 0.0;
        return r;
    }

    /// Cell edges of the jump lattice along one axis, including 0 and L.
    std::vector<double> lattice1() const { return lattice(jumps1_, l1_); }
    std::vector<double> lattice2() const { return lattice(jumps2_, l2_); }

private:
    static void normalize_jumps(std::vector<double>& j, double period) {
        for (double& t : j) t = reduce(t, period);
        std::sort(j.begin(), j.end());
        j.erase(std::unique(j.begin(), j.end(), [&](double a, double b) { return std::abs(a - b) <= 1e-14 * period; }),
                j.end());
    }

    static std::vector<double> lattice(const std::vector<double>& jumps, double period) {
        std::vector<double> e{0.0};
        for (double t : jumps)
            if (t > 1e-14 * period) e.push_back(t);
        e.push_back(period);
        return e;
    }

    std::string name_;
    double l1_, l2_;
    Map map_;
    ProfileKind kind_;
    std::vector<double> jumps1_, jumps2_;
    std::optional<ProfileBounds> declared_;
};

namespace detail {

inline double checked_value(double v, double y1, double y2) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        std::ostringstream os;
        os << "profile value " << v << " at (" << y1 << ", " << y2 << ") is not strictly positive";
        fail(ErrorKind::InvalidProfile, os.str());
    }
    return v;
}

inline Rule1D axis_rule(const Quadrature1D& q, double period, std::span<const double> jumps) {
    return q.rule(0.0, period, jumps);
}

} // namespace detail

/// Vertical cross-section integral: integral of g(y1, y2) over y2 in (0, L2).
inline double bar_g(const ProfileFunction& g, double y1, const Quadrature1D& quad = {}) {
    if (!std::isfinite(y1)) fail(ErrorKind::Domain, "bar_g: y1 must be finite");
    const Rule1D r = detail::axis_rule(quad, g.period2(), g.jumps_y2());
    double s = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) s += r.weights[i] * detail::checked_value(g(y1, r.nodes[i]), y1, r.nodes[i]);
    return s;
}

/// Average of g over one period cell.
inline double mean_g(const ProfileFunction& g, const Quadrature2D& quad = {}) {
    quad.validate();
    const Rule1D r1 = detail::axis_rule(quad.axis1, g.period1(), g.jumps_y1());
    const Rule1D r2 = detail::axis_rule(quad.axis2, g.period2(), g.jumps_y2());
    double s = 0.0;
    for (std::size_t i = 0; i < r1.size(); ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < r2.size(); ++j)
            row += r2.weights[j] * detail::checked_value(g(r1.nodes[i], r2.nodes[j]), r1.nodes[i], r2.nodes[j]);
        s += r1.weights[i] * row;
    }
    return s / (g.period1() * g.period2());
}

/// 1 / (<h> <1/h>) over [0, period); lies in (0, 1] by Cauchy-Schwarz and
/// equals 1 exactly when h is constant.
inline double harmonic_factor(const std::function<double(double)>& h, double period, const Quadrature1D& quad = {},
                              std::span<const double> breaks = {}) {
    if (!(period > 0.0)) fail(ErrorKind::Domain, "harmonic_factor: period must be positive");
    const Rule1D r = quad.rule(0.0, period, breaks);
    double mean = 0.0, mean_inv = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double v = detail::checked_value(h(r.nodes[i]), r.nodes[i], 0.0);
        mean += r.weights[i] * v;
        mean_inv += r.weights[i] / v;
    }
    mean /= period;
    mean_inv /= period;
    return std::min(1.0, 1.0 / (mean * mean_inv));
}

namespace detail {

// Golden-section minimisation of a unimodal bracket.
template <class F>
std::pair<double, double> golden_min(F&& f, double a, double b, double tol) {
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - invphi * (b - a), d = a + invphi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
    }
    const double x = 0.5 * (a + b);
    return {x, f(x)};
}

// Extremum of a smooth function on a 2D period cell: grid scan then compass search.
template <class F>
double smooth_min_2d(F&& f, double l1, double l2, int n = 256) {
    double best = std::numeric_limits<double>::infinity();
    double b1 = 0.0, b2 = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double y1 = l1 * i / n, y2 = l2 * j / n;
            const double v = f(y1, y2);
            if (v < best) best = v, b1 = y1, b2 = y2;
        }
    double s1 = l1 / n, s2 = l2 / n;
    while (s1 > 1e-13 * l1 || s2 > 1e-13 * l2) {
        bool moved = false;
        const double cand[4][2] = {{s1, 0}, {-s1, 0}, {0, s2}, {0, -s2}};
        for (const auto& c : cand) {
            const double v = f(b1 + c[0], b2 + c[1]);
            if (v < best) {
                best = v, b1 += c[0], b2 += c[1];
                moved = true;
            }
        }
        if (!moved) s1 *= 0.5, s2 *= 0.5;
    }
    return best;
}

template <class F>
double smooth_min_1d(F&& f, double period, int n = 1024) {
    double best = std::numeric_limits<double>::infinity();
    int bi = 0;
    for (int i = 0; i < n; ++i) {
        const double v = f(period * i / n);
        if (v < best) best = v, bi = i;
    }
    const double h = period / n;
    const auto [x, v] = golden_min(f, period * bi / n - h, period * bi / n + h, 1e-13 * period);
    return std::min(best, v);
}

} // namespace detail

/// Minimum of g over the period cell, or over y2 at fixed y1 when supplied.
inline double min_profile(const ProfileFunction& g, std::optional<double> fixed_y1 = std::nullopt) {
    if (g.piecewise_constant()) {
        const auto e1 = g.lattice1();
        const auto e2 = g.lattice2();
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j + 1 < e2.size(); ++j) {
            const double y2 = 0.5 * (e2[j] + e2[j + 1]);
            if (fixed_y1) {
                best = std::min(best, g(*fixed_y1, y2));
            } else {
                for (std::size_t i = 0; i + 1 < e1.size(); ++i) best = std::min(best, g(0.5 * (e1[i] + e1[i + 1]), y2));
            }
        }
        return best;
    }
    if (fixed_y1) {
        const double y1 = *fixed_y1;
        return detail::smooth_min_1d([&](double t) { return g(y1, t); }, g.period2());
    }
    return detail::smooth_min_2d([&](double a, double b) { return g(a, b); }, g.period1(), g.period2());
}

/// Maximum of g over the period cell, or over y2 at fixed y1 when supplied.
inline double max_profile(const ProfileFunction& g, std::optional<double> fixed_y1 = std::nullopt) {
    if (g.piecewise_constant()) {
        const auto e1 = g.lattice1();
        const auto e2 = g.lattice2();
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j + 1 < e2.size(); ++j) {
            const double y2 = 0.5 * (e2[j] + e2[j + 1]);
            if (fixed_y1) {
                best = std::max(best, g(*fixed_y1, y2));
            } else {
                for (std::size_t i = 0; i + 1 < e1.size(); ++i) best = std::max(best, g(0.5 * (e1[i] + e1[i + 1]), y2));
            }
        }
        return best;
    }
    if (fixed_y1) {
        const double y1 = *fixed_y1;
        return -detail::smooth_min_1d([&](double t) { return -g(y1, t); }, g.period2());
    }
    return -detail::smooth_min_2d([&](double a, double b) { return -g(a, b); }, g.period1(), g.period2());
}

/// Sampled extrema on an (n+1)^2 grid over one period; used to check the
/// positivity and boundedness invariants.
inline ProfileBounds sampled_bounds(const ProfileFunction& g, int n = 128) {
    ProfileBounds b{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j) {
            const double v = g(g.period1() * i / n, g.period2() * j / n);
            b.lower = std::min(b.lower, v);
            b.upper = std::max(b.upper, v);
        }
    return b;
}

/// Throws invalid-profile if any sampled value is non-positive or outside the
/// declared bounds.
inline void validate_profile(const ProfileFunction& g, int n = 128) {
    const ProfileBounds b = sampled_bounds(g, n);
    if (!(b.lower > 0.0)) fail(ErrorKind::InvalidProfile, "profile '" + g.name() + "' is not strictly positive");
    if (const auto& d = g.declared_bounds()) {
        const double tol = 1e-12 * d->upper;
        if (b.lower < d->lower - tol || b.upper > d->upper + tol)
            fail(ErrorKind::InvalidProfile, "profile '" + g.name() + "' violates its declared bounds");
    }
}

// ---------------------------------------------------------------------------
// Catalog
// ---------------------------------------------------------------------------

/// Builds a piecewise-constant profile from rows covering one period exactly.
inline ProfileFunction make_table_profile(std::vector<PiecewiseRow> rows, double period1 = 1.0, double period2 = 1.0,
                                          std::string name = "table") {
    if (rows.empty()) fail(ErrorKind::InvalidProfile, "piecewise table is empty");
    std::vector<double> j1, j2;
    double area = 0.0;
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& r : rows) {
        if (!(r.y1_lo >= 0.0 && r.y1_hi <= period1 && r.y1_lo < r.y1_hi && r.y2_lo >= 0.0 && r.y2_hi <= period2 &&
              r.y2_lo < r.y2_hi))
            fail(ErrorKind::InvalidProfile, "piecewise row outside the period cell or empty");
        if (!(r.value > 0.0)) fail(ErrorKind::InvalidProfile, "piecewise row value must be positive");
        j1.push_back(r.y1_lo), j1.push_back(r.y1_hi);
        j2.push_back(r.y2_lo), j2.push_back(r.y2_hi);
        area += (r.y1_hi - r.y1_lo) * (r.y2_hi - r.y2_lo);
        lo = std::min(lo, r.value), hi = std::max(hi, r.value);
    }
    if (std::abs(area - period1 * period2) > 1e-12 * period1 * period2)
        fail(ErrorKind::InvalidProfile, "piecewise rows do not cover the period cell exactly");
    // Every lattice cell must be claimed by exactly one row.
    auto sorted = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        return v;
    };
    const auto e1 = sorted(j1), e2 = sorted(j2);
    for (std::size_t a = 0; a + 1 < e1.size(); ++a)
        for (std::size_t b = 0; b + 1 < e2.size(); ++b) {
            const double m1 = 0.5 * (e1[a] + e1[a + 1]), m2 = 0.5 * (e2[b] + e2[b + 1]);
            int hits = 0;
            for (const auto& r : rows)
                if (m1 >= r.y1_lo && m1 < r.y1_hi && m2 >= r.y2_lo && m2 < r.y2_hi) ++hits;
            if (hits != 1) fail(ErrorKind::InvalidProfile, "piecewise rows overlap or leave gaps");
        }
    auto map = [rows](double y1, double y2) {
        for (const auto& r : rows)
            if (y1 >= r.y1_lo && y1 < r.y1_hi && y2 >= r.y2_lo && y2 < r.y2_hi) return r.value;
        return rows.back().value; // unreachable for a valid cover
    };
    return ProfileFunction(std::move(name), period1, period2, map, ProfileKind::PiecewiseConstant, j1, j2,
                           ProfileBounds{lo, hi});
}

struct CatalogEntry {
    std::string name;
    std::string formula;
    std::vector<double> defaults;
};

inline std::vector<CatalogEntry> profile_catalog() {
    return {
        {"constant", "c", {1.0}},
        {"cos_cos", "a + b cos(2 pi y1/L1) cos(2 pi y2/L2)", {2.0, 1.0}},
        {"sin_y2", "a + b sin(2 pi y2/L2)", {2.0, 1.0}},
        {"cos_y2", "a + b cos(2 pi y2/L2)", {2.0, 1.0}},
        {"sin_y1", "a + b sin(2 pi y1/L1)", {2.0, 1.0}},
        {"separable", "(a1 + b1 sin(2 pi y1/L1)) (a2 + b2 cos(2 pi y2/L2))", {2.0, 0.5, 2.0, 0.5}},
        {"stripes_y2", "a on [0, L2/2), b on [L2/2, L2)", {1.0, 3.0}},
        {"stripes_y1", "a on [0, L1/2), b on [L1/2, L1)", {1.0, 3.0}},
        {"checkerboard", "a on matching half-cells, b elsewhere", {1.0, 3.0}},
        {"fourier", "random smooth Fourier series: seed, modes, amplitude (mean 2)", {1.0, 2.0, 0.8}},
    };
}

namespace detail {

// Uniform double in [0, 1) from the raw 64-bit engine output; identical on
// every platform, unlike std::uniform_real_distribution.
inline double unit_draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

} // namespace detail

/// Catalog profile by name. Empty `params` selects the catalog defaults.
inline ProfileFunction make_profile(const std::string& name, std::vector<double> params = {}, double period1 = 1.0,
                                    double period2 = 1.0) {
    const auto cat = profile_catalog();
    const auto it = std::find_if(cat.begin(), cat.end(), [&](const CatalogEntry& e) { return e.name == name; });
    if (it == cat.end()) fail(ErrorKind::Config, "unknown profile '" + name + "'");
    if (params.empty()) params = it->defaults;
    if (params.size() != it->defaults.size())
        fail(ErrorKind::Config, "profile '" + name + "' expects " + std::to_string(it->defaults.size()) + " parameters");
    const double l1 = period1, l2 = period2;
    constexpr double tau = 2.0 * std::numbers::pi;
    using PK = ProfileKind;

    if (name == "constant") {
        const double c = params[0];
        return ProfileFunction(name, l1, l2, [c](double, double) { return c; }, PK::Smooth, {}, {}, ProfileBounds{c, c});
    }
    if (name == "cos_cos") {
        const double a = params[0], b = params[1];
        return ProfileFunction(
            name, l1, l2, [=](double y1, double y2) { return a + b * std::cos(tau * y1 / l1) * std::cos(tau * y2 / l2); },
            PK::Smooth, {}, {}, ProfileBounds{a - std::abs(b), a + std::abs(b)});
    }
    if (name == "sin_y2") {
        const double a = params[0], b = params[1];
        return ProfileFunction(name, l1, l2, [=](double, double y2) { return a + b * std::sin(tau * y2 / l2); },
                               PK::Smooth, {}, {}, ProfileBounds{a - std::abs(b), a + std::abs(b)});
    }
    if (name == "cos_y2") {
        const double a = params[0], b = params[1];
        return ProfileFunction(name, l1, l2, [=](double, double y2) { return a + b * std::cos(tau * y2 / l2); },
                               PK::Smooth, {}, {}, ProfileBounds{a - std::abs(b), a + std::abs(b)});
    }
    if (name == "sin_y1") {
        const double a = params[0], b = params[1];
        return ProfileFunction(name, l1, l2, [=](double y1, double) { return a + b * std::sin(tau * y1 / l1); },
                               PK::Smooth, {}, {}, ProfileBounds{a - std::abs(b), a + std::abs(b)});
    }
    if (name == "separable") {
        const double a1 = params[0], b1 = params[1], a2 = params[2], b2 = params[3];
        return ProfileFunction(
            name, l1, l2,
            [=](double y1, double y2) { return (a1 + b1 * std::sin(tau * y1 / l1)) * (a2 + b2 * std::cos(tau * y2 / l2)); },
            PK::Smooth, {}, {},
            ProfileBounds{(a1 - std::abs(b1)) * (a2 - std::abs(b2)), (a1 + std::abs(b1)) * (a2 + std::abs(b2))});
    }
    if (name == "stripes_y2") {
        return make_table_profile({{0, l1, 0, l2 / 2, params[0]}, {0, l1, l2 / 2, l2, params[1]}}, l1, l2, name);
    }
    if (name == "stripes_y1") {
        return make_table_profile({{0, l1 / 2, 0, l2, params[0]}, {l1 / 2, l1, 0, l2, params[1]}}, l1, l2, name);
    }
    if (name == "checkerboard") {
        const double a = params[0], b = params[1];
        return make_table_profile({{0, l1 / 2, 0, l2 / 2, a},
                                   {l1 / 2, l1, l2 / 2, l2, a},
                                   {l1 / 2, l1, 0, l2 / 2, b},
                                   {0, l1 / 2, l2 / 2, l2, b}},
                                  l1, l2, name);
    }
    // fourier: 2 + amplitude * sum_{k,l} c_kl cos(2 pi (k y1/L1 + l y2/L2) + phase_kl), sum |c_kl| = 1
    const auto seed = static_cast<std::uint64_t>(params[0]);
    const int modes = static_cast<int>(params[1]);
    const double amp = params[2];
    if (modes < 1 || !(amp >= 0.0 && amp < 2.0)) fail(ErrorKind::Config, "fourier profile needs modes >= 1 and 0 <= amplitude < 2");
    std::mt19937_64 rng(seed);
    struct Mode {
        int k, l;
        double c, phase;
    };
    std::vector<Mode> terms;
    double total = 0.0;
    for (int k = 0; k <= modes; ++k)
        for (int l = -modes; l <= modes; ++l) {
            if (k == 0 && l <= 0) continue;
            const double c = detail::unit_draw(rng) / (1.0 + k * k + l * l);
            const double ph = tau * detail::unit_draw(rng);
            terms.push_back({k, l, c, ph});
            total += c;
        }
    for (auto& t : terms) t.c *= amp / total;
    return ProfileFunction(
        "fourier", l1, l2,
        [terms, l1, l2](double y1, double y2) {
            double v = 2.0;
            for (const auto& t : terms) v += t.c * std::cos(tau * (t.k * y1 / l1 + t.l * y2 / l2) + t.phase);
            return v;
        },
        PK::Smooth, {}, {}, ProfileBounds{2.0 - amp, 2.0 + amp});
}

} // namespace thinhom
