#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "thinhom/error.hpp"

namespace thinhom {

/// Compressed sparse row matrix (square).
struct SparseMatrixCSR {
    int n = 0;
    std::vector<int> row_ptr{0};
    std::vector<int> col;
    std::vector<double> val;

    int dimension() const { return n; }
    std::size_t nnz() const { return val.size(); }

    void multiply(std::span<const double> x, std::span<double> y) const {
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) s += val[k] * x[col[k]];
            y[i] = s;
        }
    }

    std::vector<double> operator*(std::span<const double> x) const {
        std::vector<double> y(n);
        multiply(x, y);
        return y;
    }

    double at(int i, int j) const {
        const auto b = col.begin() + row_ptr[i], e = col.begin() + row_ptr[i + 1];
        const auto it = std::lower_bound(b, e, j);
        return (it != e && *it == j) ? val[it - col.begin()] : 0.0;
    }

    std::vector<double> diagonal() const {
        std::vector<double> d(n, 0.0);
        for (int i = 0; i < n; ++i) d[i] = at(i, i);
        return d;
    }

    /// max |A_ij - A_ji| over stored entries.
    double asymmetry() const {
        double m = 0.0;
        for (int i = 0; i < n; ++i)
            for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) m = std::max(m, std::abs(val[k] - at(col[k], i)));
        return m;
    }

    std::vector<std::vector<double>> to_dense() const {
        std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
        for (int i = 0; i < n; ++i)
            for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) d[i][col[k]] = val[k];
        return d;
    }

    /// Coordinate text export: one "row col value" line per stored entry, 0-based.
    void write_coordinate(std::ostream& os) const {
        os.precision(17);
        os << n << ' ' << n << ' ' << nnz() << '\n';
        for (int i = 0; i < n; ++i)
            for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) os << i << ' ' << col[k] << ' ' << val[k] << '\n';
    }
};

/// Accumulates (row, col, value) contributions; duplicates are summed in a
/// fixed order so the result is independent of how entries were grouped.
class TripletBuilder {
public:
    explicit TripletBuilder(int n) : n_(n) {}

    void add(int i, int j, double v) { t_.emplace_back(i, j, v); }
    int dimension() const { return n_; }

    SparseMatrixCSR build() {
        std::stable_sort(t_.begin(), t_.end(), [](const auto& a, const auto& b) {
            return std::tie(std::get<0>(a), std::get<1>(a)) < std::tie(std::get<0>(b), std::get<1>(b));
        });
        SparseMatrixCSR A;
        A.n = n_;
        A.row_ptr.assign(n_ + 1, 0);
        for (std::size_t k = 0; k < t_.size();) {
            const auto [i, j, v0] = t_[k];
            double v = v0;
            std::size_t l = k + 1;
            while (l < t_.size() && std::get<0>(t_[l]) == i && std::get<1>(t_[l]) == j) v += std::get<2>(t_[l++]);
            A.col.push_back(j);
            A.val.push_back(v);
            ++A.row_ptr[i + 1];
            k = l;
        }
        for (int i = 0; i < n_; ++i) A.row_ptr[i + 1] += A.row_ptr[i];
        return A;
    }

private:
    int n_;
    std::vector<std::tuple<int, int, double>> t_;
};

struct CgOptions {
    double tol = 1e-12;
    int max_iter = 20000;
    bool zero_mean = false;
    /// Weights defining the mean removed when zero_mean is set (lumped mass);
    /// uniform when empty.
    std::vector<double> mean_weights;
    /// z = M^{-1} r for a symmetric positive preconditioner; Jacobi when empty.
    std::function<void(std::span<const double>, std::span<double>)> preconditioner;
};

struct CgResult {
    std::vector<double> x;
    int iterations = 0;
    double residual = 0.0;   // final relative residual
    double projection = 0.0; // |component of b along constants| removed before solving
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline void remove_mean(std::span<double> v, std::span<const double> w) {
    double s = 0.0, ws = 0.0;
    if (w.empty()) {
        for (double x : v) s += x;
        ws = static_cast<double>(v.size());
    } else {
        for (std::size_t i = 0; i < v.size(); ++i) s += w[i] * v[i], ws += w[i];
    }
    const double m = s / ws;
    for (double& x : v) x -= m;
}

} // namespace detail

/// Preconditioned conjugate gradients (Jacobi unless another preconditioner
/// is supplied).
///
/// With `zero_mean`, b is first projected onto the complement of the
/// constants and the iterate is re-centred after every step, so singular
/// pure-stiffness systems with a compatible right-hand side converge to the
/// zero-mean solution.
inline CgResult solve_cg(const SparseMatrixCSR& A, std::span<const double> b_in, const CgOptions& opt = {}) {
    const int n = A.n;
    if (static_cast<int>(b_in.size()) != n) fail(ErrorKind::Domain, "rhs size does not match matrix dimension");
    if (opt.zero_mean && !opt.mean_weights.empty() && static_cast<int>(opt.mean_weights.size()) != n)
        fail(ErrorKind::Domain, "mean weights size does not match matrix dimension");
    CgResult res;
    res.x.assign(n, 0.0);
    std::vector<double> b(b_in.begin(), b_in.end());
    if (opt.zero_mean && n > 0) {
        double s = 0.0;
        for (double v : b) s += v;
        res.projection = std::abs(s) / std::sqrt(static_cast<double>(n));
        detail::remove_mean(b, {});
    }
    const double bnorm = std::sqrt(detail::dot(b, b));
    if (bnorm == 0.0) return res;

    std::vector<double> dinv = A.diagonal();
    for (double& d : dinv) d = (d > 0.0) ? 1.0 / d : 1.0;
    auto precondition = [&](const std::vector<double>& r, std::vector<double>& z) {
        if (opt.preconditioner)
            opt.preconditioner(r, z);
        else
            for (int i = 0; i < n; ++i) z[i] = dinv[i] * r[i];
    };
    std::vector<double> r = b, z(n), p(n), q(n);
    precondition(r, z);
    p = z;
    double rz = detail::dot(r, z);
    double rel = 1.0;
    double last_true = std::numeric_limits<double>::infinity();
    int stalls = 0;
    for (int it = 1; it <= opt.max_iter; ++it) {
        A.multiply(p, q);
        const double pq = detail::dot(p, q);
        if (!(pq > 0.0)) {
            res.iterations = it;
            res.residual = rel;
            throw NonConvergenceError("CG breakdown (matrix not positive definite on the search space)", rel, it);
        }
        const double a = rz / pq;
        for (int i = 0; i < n; ++i) {
            res.x[i] += a * p[i];
            r[i] -= a * q[i];
        }
        if (opt.zero_mean) {
            detail::remove_mean(res.x, opt.mean_weights);
            detail::remove_mean(r, {});
        }
        rel = std::sqrt(detail::dot(r, r)) / bnorm;
        if (rel <= opt.tol) {
            // Confirm against the true residual to rule out recurrence drift.
            std::vector<double> ax = A * std::span<const double>(res.x);
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += (b[i] - ax[i]) * (b[i] - ax[i]);
            const double true_rel = std::sqrt(s) / bnorm;
            if (true_rel <= opt.tol) {
                res.iterations = it;
                res.residual = true_rel;
                return res;
            }
            // Restart from the true residual, unless restarts keep landing
            // on the same rounding floor.
            if (true_rel > 0.5 * last_true && ++stalls >= 3)
                throw NonConvergenceError("CG stagnated above the tolerance at the rounding floor", true_rel, it);
            last_true = true_rel;
            for (int i = 0; i < n; ++i) r[i] = b[i] - ax[i];
            if (opt.zero_mean) detail::remove_mean(r, {});
            precondition(r, z);
            p = z;
            rz = detail::dot(r, z);
            rel = true_rel;
            continue;
        }
        precondition(r, z);
        const double rz_new = detail::dot(r, z);
        const double beta = rz_new / rz;
        rz = rz_new;
        for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    throw NonConvergenceError("CG did not converge within " + std::to_string(opt.max_iter) + " iterations", rel,
                              opt.max_iter);
}

} // namespace thinhom
