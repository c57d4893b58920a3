#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "thinhom/error.hpp"

namespace thinhom {

/// Nodes and weights of a quadrature rule on a fixed interval.
struct Rule1D {
    std::vector<double> nodes;
    std::vector<double> weights;

    std::size_t size() const { return nodes.size(); }

    template <class F>
    double integrate(F&& f) const {
        double s = 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(nodes[i]);
        return s;
    }
};

/// n-point Gauss-Legendre rule on [0, 1]; exact for polynomials of degree 2n-1.
inline Rule1D gauss_legendre_unit(int n) {
    if (n < 1) fail(ErrorKind::Domain, "Gauss rule needs at least one point, got " + std::to_string(n));
    Rule1D r;
    r.nodes.resize(n);
    r.weights.resize(n);
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        // Newton iteration on P_n starting from the Chebyshev-like guess.
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            const double pn = (n == 1) ? x : p1;
            const double pnm1 = (n == 1) ? 1.0 : p0;
            dp = n * (x * pn - pnm1) / (x * x - 1.0);
            const double dx = pn / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            const double pn = (n == 1) ? x : p1;
            const double pnm1 = (n == 1) ? 1.0 : p0;
            dp = n * (x * pn - pnm1) / (x * x - 1.0);
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        // map [-1,1] -> [0,1]
        r.nodes[i] = 0.5 * (1.0 - x);
        r.nodes[n - 1 - i] = 0.5 * (1.0 + x);
        r.weights[i] = 0.5 * w;
        r.weights[n - 1 - i] = 0.5 * w;
    }
    if (n % 2 == 1) r.nodes[n / 2] = 0.5;
    return r;
}

/// Composite Gauss rule on [a, b] with `panels` uniform panels, further split at
/// every breakpoint lying strictly inside (a, b).
inline Rule1D composite_gauss(double a, double b, int order, int panels, std::span<const double> breaks = {}) {
    if (!(b > a)) fail(ErrorKind::Domain, "composite rule needs a < b");
    if (panels < 1) fail(ErrorKind::Domain, "composite rule needs at least one panel");
    std::vector<double> edges;
    edges.reserve(panels + 1 + breaks.size());
    for (int k = 0; k <= panels; ++k) edges.push_back(k == panels ? b : a + (b - a) * k / panels);
    const double snap = 1e-13 * (b - a);
    for (double t : breaks)
        if (t > a + snap && t < b - snap) edges.push_back(t);
    std::sort(edges.begin(), edges.end());
    std::vector<double> uniq;
    for (double e : edges)
        if (uniq.empty() || e - uniq.back() > snap) uniq.push_back(e);
    uniq.back() = b;

    const Rule1D base = gauss_legendre_unit(order);
    Rule1D r;
    r.nodes.reserve((uniq.size() - 1) * base.size());
    r.weights.reserve((uniq.size() - 1) * base.size());
    for (std::size_t p = 0; p + 1 < uniq.size(); ++p) {
        const double lo = uniq[p], h = uniq[p + 1] - uniq[p];
        for (std::size_t i = 0; i < base.size(); ++i) {
            r.nodes.push_back(lo + h * base.nodes[i]);
            r.weights.push_back(h * base.weights[i]);
        }
    }
    return r;
}

/// Composite Gauss quadrature over one axis: `order` points per panel,
/// `panels` uniform panels, split additionally at the supplied breakpoints.
struct Quadrature1D {
    int order = 5;
    int panels = 32;

    void validate() const {
        if (order < 1 || panels < 1)
            fail(ErrorKind::Domain, "quadrature order and panel count must be >= 1");
    }

    Rule1D rule(double a, double b, std::span<const double> breaks = {}) const {
        validate();
        return composite_gauss(a, b, order, panels, breaks);
    }
};

/// Tensor-product composite quadrature over a period cell.
struct Quadrature2D {
    Quadrature1D axis1{};
    Quadrature1D axis2{};

    void validate() const {
        axis1.validate();
        axis2.validate();
    }
};

/// Points and weights of a quadrature rule on a triangle, in barycentric form.
struct TriangleRule {
    std::vector<std::array<double, 3>> bary;
    std::vector<double> weights; // sum to 1 (multiply by area)
};

/// Degree-n triangle rule obtained by collapsing a Gauss tensor rule (Duffy map).
inline TriangleRule collapsed_triangle_rule(int n) {
    const Rule1D g = gauss_legendre_unit(n);
    TriangleRule r;
    for (std::size_t i = 0; i < g.size(); ++i) {
        for (std::size_t j = 0; j < g.size(); ++j) {
            const double s = g.nodes[i], t = g.nodes[j];
            const double l1 = s * (1.0 - t);
            const double l2 = s * t;
            r.bary.push_back({1.0 - l1 - l2, l1, l2});
            r.weights.push_back(2.0 * g.weights[i] * g.weights[j] * s);
        }
    }
    return r;
}

} // namespace thinhom
