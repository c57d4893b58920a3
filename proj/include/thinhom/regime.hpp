#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "thinhom/error.hpp"
#include "thinhom/profile.hpp"
#include "thinhom/quadrature.hpp"

namespace thinhom {

enum class RegimeClass {
    A0_WeakBeta,
    A0_ResonantBeta,
    A0_StrongBeta,
    WeakWeak,
    ResonantWeak,
    ResonantStrong,
    WeakStrong,
    StrongStrong,
};

inline constexpr std::array<RegimeClass, 8> all_regimes{
    RegimeClass::A0_WeakBeta,    RegimeClass::A0_ResonantBeta, RegimeClass::A0_StrongBeta, RegimeClass::WeakWeak,
    RegimeClass::ResonantWeak,   RegimeClass::ResonantStrong,  RegimeClass::WeakStrong,    RegimeClass::StrongStrong,
};

inline const char* to_string(RegimeClass r) {
    switch (r) {
    case RegimeClass::A0_WeakBeta: return "A0_WeakBeta";
    case RegimeClass::A0_ResonantBeta: return "A0_ResonantBeta";
    case RegimeClass::A0_StrongBeta: return "A0_StrongBeta";
    case RegimeClass::WeakWeak: return "WeakWeak";
    case RegimeClass::ResonantWeak: return "ResonantWeak";
    case RegimeClass::ResonantStrong: return "ResonantStrong";
    case RegimeClass::WeakStrong: return "WeakStrong";
    case RegimeClass::StrongStrong: return "StrongStrong";
    }
    return "?";
}

/// A representative (alpha, beta) pair for each class.
inline std::array<double, 2> representative_exponents(RegimeClass r) {
    switch (r) {
    case RegimeClass::A0_WeakBeta: return {0.0, 0.5};
    case RegimeClass::A0_ResonantBeta: return {0.0, 1.0};
    case RegimeClass::A0_StrongBeta: return {0.0, 1.5};
    case RegimeClass::WeakWeak: return {0.5, 0.75};
    case RegimeClass::ResonantWeak: return {0.5, 1.0};
    case RegimeClass::ResonantStrong: return {1.0, 1.5};
    case RegimeClass::WeakStrong: return {0.5, 1.5};
    case RegimeClass::StrongStrong: return {1.2, 1.5};
    }
    return {0.0, 0.5};
}

/// True when x1 does not oscillate (alpha = 0): coefficients then vary with x1.
inline bool x1_dependent(RegimeClass r) {
    return r == RegimeClass::A0_WeakBeta || r == RegimeClass::A0_ResonantBeta || r == RegimeClass::A0_StrongBeta;
}

/// Regimes whose coefficients need a cell solve.
inline bool needs_cell_solve(RegimeClass r) {
    return r == RegimeClass::A0_ResonantBeta || r == RegimeClass::ResonantWeak || r == RegimeClass::ResonantStrong;
}

struct Regime {
    double alpha = 0.0;
    double beta = 0.5;
};

/// Maps (alpha, beta) to its regime class. Comparisons with 0 and 1 are exact.
inline RegimeClass classify(double alpha, double beta) {
    if (!std::isfinite(alpha) || !std::isfinite(beta)) fail(ErrorKind::UnsupportedRegime, "exponents must be finite");
    if (alpha < 0.0) fail(ErrorKind::UnsupportedRegime, "alpha must be >= 0");
    if (!(beta > 0.0)) fail(ErrorKind::UnsupportedRegime, "beta must be > 0");
    if (alpha == beta)
        fail(ErrorKind::UnsupportedRegime, "alpha = beta has no effective problem; the thin-domain assumption needs alpha < beta");
    if (beta < alpha) fail(ErrorKind::UnsupportedRegime, "beta <= alpha violates the assumption alpha < beta");
    if (alpha == 0.0) {
        if (beta < 1.0) return RegimeClass::A0_WeakBeta;
        if (beta == 1.0) return RegimeClass::A0_ResonantBeta;
        return RegimeClass::A0_StrongBeta;
    }
    if (alpha < 1.0) {
        if (beta < 1.0) return RegimeClass::WeakWeak;
        if (beta == 1.0) return RegimeClass::ResonantWeak;
        return RegimeClass::WeakStrong;
    }
    if (alpha == 1.0) return RegimeClass::ResonantStrong;
    return RegimeClass::StrongStrong;
}

inline RegimeClass classify(const Regime& r) { return classify(r.alpha, r.beta); }

/// Maps the user's source to the right-hand side of the limit problem.
///
/// For sources independent of x3 and of the fast variables the limit source
/// equals f in every regime. The strong-strong limit is stated for the weak
/// limit F of vertical integrals (1/eps) int f dx3, and divides that by <g>.
struct RhsTransform {
    enum class Kind { CellAverage, VerticalIntegralOverMean };
    Kind kind = Kind::CellAverage;
    double mean_g = 1.0;

    std::function<double(double, double)> from_source(std::function<double(double, double)> f) const { return f; }

    std::function<double(double, double)> from_vertical_integral(std::function<double(double, double)> F) const {
        if (kind == Kind::VerticalIntegralOverMean) {
            const double mg = mean_g;
            return [F, mg](double x1, double x2) { return F(x1, x2) / mg; };
        }
        fail(ErrorKind::WrongPath, "vertical-integral sources apply to the strong-strong regime only");
    }
};

enum class CoefficientOrigin { ClosedForm, CellSolve };

inline const char* to_string(CoefficientOrigin o) { return o == CoefficientOrigin::ClosedForm ? "closed-form" : "cell-solve"; }

struct Provenance {
    RegimeClass regime = RegimeClass::WeakWeak;
    CoefficientOrigin a11 = CoefficientOrigin::ClosedForm;
    CoefficientOrigin a22 = CoefficientOrigin::ClosedForm;
    std::string a11_formula, a22_formula, m_formula;
};

/// Coefficients of the unified weak form
///   int a11 u_x1 phi_x1 + a22 u_x2 phi_x2 + m u phi = int m fbar phi.
struct EffectiveCoefficients {
    std::function<double(double, double)> a11, a22, m;
    bool constant = true;
    double q1 = 1.0, q2 = 1.0, m_value = 1.0; // valid when `constant`
    RhsTransform rhs;
    Provenance provenance;
    /// Per-slice q2 samples (parameter, value) when a slice family was solved.
    std::vector<std::array<double, 2>> slice_table;

    double q1_at(double x1, double x2) const { return a11(x1, x2) / m(x1, x2); }
    double q2_at(double x1, double x2) const { return a22(x1, x2) / m(x1, x2); }
};

namespace detail {

inline EffectiveCoefficients constant_coefficients(RegimeClass r, double q1, double q2) {
    EffectiveCoefficients c;
    c.constant = true;
    c.q1 = q1;
    c.q2 = q2;
    c.m_value = 1.0;
    c.a11 = [q1](double, double) { return q1; };
    c.a22 = [q2](double, double) { return q2; };
    c.m = [](double, double) { return 1.0; };
    c.provenance.regime = r;
    c.provenance.m_formula = "1";
    return c;
}

// Slice mean <g(x1, .)> over (0, L2).
inline double slice_mean(const ProfileFunction& g, double x1, const Quadrature1D& q) {
    return bar_g(g, x1, q) / g.period2();
}

inline double slice_harmonic_factor(const ProfileFunction& g, double x1, const Quadrature1D& q) {
    return harmonic_factor([&g, x1](double t) { return g(x1, t); }, g.period2(), q, g.jumps_y2());
}

} // namespace detail

/// harmonic_factor of the cross-section integral y1 -> int g(y1, y2) dy2.
inline double weak_factor_y1(const ProfileFunction& g, const Quadrature2D& quad = {}) {
    return harmonic_factor([&](double y1) { return bar_g(g, y1, quad.axis2); }, g.period1(), quad.axis1, g.jumps_y1());
}

/// (1/L1) int 1 / (<g> <1/g(y1, .)>) dy1, the weak value in the y2 direction.
inline double weak_factor_y2(const ProfileFunction& g, const Quadrature2D& quad = {}) {
    const double mg = mean_g(g, quad);
    const Rule1D r1 = quad.axis1.rule(0.0, g.period1(), g.jumps_y1());
    const Rule1D r2 = quad.axis2.rule(0.0, g.period2(), g.jumps_y2());
    double s = 0.0;
    for (std::size_t i = 0; i < r1.size(); ++i) {
        double inv = 0.0;
        for (std::size_t j = 0; j < r2.size(); ++j) inv += r2.weights[j] / g(r1.nodes[i], r2.nodes[j]);
        inv /= g.period2();
        s += r1.weights[i] / (mg * inv);
    }
    return s / g.period1();
}

/// g0 / <g>, the strong value.
inline double strong_factor(const ProfileFunction& g, const Quadrature2D& quad = {}) {
    return min_profile(g) / mean_g(g, quad);
}

/// Coefficients for the regimes with closed-form expressions.
inline EffectiveCoefficients closed_form_coeffs(RegimeClass cls, const ProfileFunction& g, const Quadrature2D& quad = {}) {
    quad.validate();
    switch (cls) {
    case RegimeClass::A0_WeakBeta:
    case RegimeClass::A0_StrongBeta: {
        EffectiveCoefficients c;
        c.constant = false;
        c.provenance.regime = cls;
        const auto q = quad.axis2;
        auto gp = std::make_shared<ProfileFunction>(g);
        c.m = [gp, q](double x1, double) { return detail::slice_mean(*gp, x1, q); };
        c.a11 = c.m;
        if (cls == RegimeClass::A0_WeakBeta) {
            c.a22 = [gp, q](double x1, double) {
                return detail::slice_mean(*gp, x1, q) * detail::slice_harmonic_factor(*gp, x1, q);
            };
            c.provenance.a22_formula = "<g(x1,.)> / (<g(x1,.)> <1/g(x1,.)>)";
        } else {
            c.a22 = [gp](double x1, double) { return min_profile(*gp, x1); };
            c.provenance.a22_formula = "min over y2 of g(x1,y2)";
        }
        c.provenance.a11_formula = "<g(x1,.)>";
        c.provenance.m_formula = "<g(x1,.)>";
        // Sample the normalized coefficients so summaries have representative values.
        const double x1 = 0.0;
        c.q1 = 1.0;
        c.q2 = c.a22(x1, 0.0) / c.m(x1, 0.0);
        c.m_value = c.m(x1, 0.0);
        return c;
    }
    case RegimeClass::WeakWeak: {
        auto c = detail::constant_coefficients(cls, weak_factor_y1(g, quad), weak_factor_y2(g, quad));
        c.provenance.a11_formula = "1 / (<gbar> <1/gbar>)";
        c.provenance.a22_formula = "(1/L1) int 1 / (<g> <1/g(y1,.)>) dy1";
        return c;
    }
    case RegimeClass::WeakStrong: {
        auto c = detail::constant_coefficients(cls, weak_factor_y1(g, quad), strong_factor(g, quad));
        c.provenance.a11_formula = "1 / (<gbar> <1/gbar>)";
        c.provenance.a22_formula = "g0 / <g>";
        return c;
    }
    case RegimeClass::StrongStrong: {
        const double s = strong_factor(g, quad);
        auto c = detail::constant_coefficients(cls, s, s);
        c.rhs.kind = RhsTransform::Kind::VerticalIntegralOverMean;
        c.rhs.mean_g = mean_g(g, quad);
        c.provenance.a11_formula = "g0 / <g>";
        c.provenance.a22_formula = "g0 / <g>";
        return c;
    }
    case RegimeClass::A0_ResonantBeta:
    case RegimeClass::ResonantWeak:
    case RegimeClass::ResonantStrong:
        fail(ErrorKind::WrongPath, std::string("regime ") + to_string(cls) +
                                       " needs a cell solve; use the cell solver based coefficient path");
    }
    fail(ErrorKind::UnsupportedRegime, "unknown regime");
}

} // namespace thinhom
