#pragma once

#include <array>
#include <cmath>
#include <memory>
#include <numbers>
#include <vector>

#include "thinhom/cellsolver.hpp"
#include "thinhom/regime.hpp"

namespace thinhom {

namespace detail {

// q2(x1) over one period of x1. Piecewise profiles are constant between
// their y1 jumps and get one solve per piece; profiles that do not depend on
// y1 get a single solve; smooth ones are sampled at n_x1 uniform points and
// interpolated trigonometrically.
class SliceCoefficientTable {
public:
    SliceCoefficientTable(const ProfileFunction& g, const CellSolveOptions& opt) : period_(g.period1()) {
        if (g.piecewise_constant()) {
            edges_ = g.lattice1();
            for (std::size_t k = 0; k + 1 < edges_.size(); ++k) add_sample(g, 0.5 * (edges_[k] + edges_[k + 1]), opt);
            return;
        }
        if (independent_of_y1(g)) {
            add_sample(g, 0.0, opt);
            return;
        }
        const int n = opt.n_x1;
        for (int k = 0; k < n; ++k) add_sample(g, period_ * k / n, opt);
        const int K = n / 2;
        a_.assign(K + 1, 0.0);
        b_.assign(K + 1, 0.0);
        for (int k = 0; k <= K; ++k)
            for (int j = 0; j < n; ++j) {
                const double th = 2.0 * std::numbers::pi * k * j / n;
                a_[k] += 2.0 / n * samples_[j][1] * std::cos(th);
                b_[k] += 2.0 / n * samples_[j][1] * std::sin(th);
            }
        if (n % 2 == 0) a_[K] *= 0.5, b_[K] = 0.0;
    }

    double operator()(double x1) const {
        const double t = ProfileFunction::reduce(x1, period_);
        if (!edges_.empty()) {
            for (std::size_t k = 0; k + 1 < edges_.size(); ++k)
                if (t < edges_[k + 1]) return samples_[k][1];
            return samples_.back()[1];
        }
        if (samples_.size() == 1) return samples_[0][1];
        const double th = 2.0 * std::numbers::pi * t / period_;
        double v = 0.5 * a_[0];
        for (std::size_t k = 1; k < a_.size(); ++k) v += a_[k] * std::cos(k * th) + b_[k] * std::sin(k * th);
        return v;
    }

    const std::vector<std::array<double, 2>>& samples() const { return samples_; }

private:
    static bool independent_of_y1(const ProfileFunction& g) {
        constexpr int n = 64;
        for (int i = 1; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const double y2 = g.period2() * j / n;
                if (g(g.period1() * i / n, y2) != g(0.0, y2)) return false;
            }
        return true;
    }

    void add_sample(const ProfileFunction& g, double x1, const CellSolveOptions& opt) {
        samples_.push_back({x1, q2_per_x1(g, x1, opt)});
    }

    double period_;
    std::vector<double> edges_;
    std::vector<std::array<double, 2>> samples_;
    std::vector<double> a_, b_;
};

} // namespace detail

/// Effective coefficients for any supported regime, using the closed forms
/// where they exist and the cell solvers otherwise.
inline EffectiveCoefficients effective_coefficients(RegimeClass cls, const ProfileFunction& g,
                                                    const CellSolveOptions& opt = {}) {
    switch (cls) {
    case RegimeClass::A0_WeakBeta:
    case RegimeClass::A0_StrongBeta:
    case RegimeClass::WeakWeak:
    case RegimeClass::WeakStrong:
    case RegimeClass::StrongStrong: return closed_form_coeffs(cls, g, opt.quad);
    case RegimeClass::A0_ResonantBeta: {
        opt.validate();
        EffectiveCoefficients c;
        c.constant = false;
        c.provenance.regime = cls;
        c.provenance.a22 = CoefficientOrigin::CellSolve;
        c.provenance.a11_formula = "<g(x1,.)>";
        c.provenance.m_formula = "<g(x1,.)>";
        c.provenance.a22_formula = "<g(x1,.)> q2(x1), q2(x1) = 1 - (1/|Y*(x1)|) int dX/dy2";
        auto gp = std::make_shared<ProfileFunction>(g);
        const auto q = opt.quad.axis2;
        auto table = std::make_shared<const detail::SliceCoefficientTable>(g, opt);
        c.m = [gp, q](double x1, double) { return detail::slice_mean(*gp, x1, q); };
        c.a11 = c.m;
        c.a22 = [gp, q, table](double x1, double) { return detail::slice_mean(*gp, x1, q) * (*table)(x1); };
        c.slice_table = table->samples();
        c.q1 = 1.0;
        c.q2 = (*table)(0.0);
        c.m_value = c.m(0.0, 0.0);
        return c;
    }
    case RegimeClass::ResonantWeak: {
        const SliceFamilyResult fam = q2_resonant_detailed(g, opt);
        auto c = detail::constant_coefficients(cls, weak_factor_y1(g, opt.quad), fam.q2);
        c.provenance.a22 = CoefficientOrigin::CellSolve;
        c.provenance.a11_formula = "1 / (<gbar> <1/gbar>)";
        c.provenance.a22_formula = "(1/|Y*|) int (1 - dX/dy2) dy";
        c.slice_table = fam.slices;
        return c;
    }
    case RegimeClass::ResonantStrong: {
        const ConstrainedResult cr = solve_cell_constrained(g, opt);
        auto c = detail::constant_coefficients(cls, cr.q1, strong_factor(g, opt.quad));
        c.provenance.a11 = CoefficientOrigin::CellSolve;
        c.provenance.a11_formula = "(1/|Y*|) int (1 - dX/dy1) dy, X independent of y2";
        c.provenance.a22_formula = "g0 / <g>";
        return c;
    }
    }
    fail(ErrorKind::UnsupportedRegime, "unknown regime");
}

inline EffectiveCoefficients effective_coefficients(double alpha, double beta, const ProfileFunction& g,
                                                    const CellSolveOptions& opt = {}) {
    return effective_coefficients(classify(alpha, beta), g, opt);
}

} // namespace thinhom
