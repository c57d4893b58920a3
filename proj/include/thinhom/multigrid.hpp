#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "thinhom/error.hpp"
#include "thinhom/sparse.hpp"

namespace thinhom {

namespace detail {

// Linear interpolation from every other lattice line (index space).
struct LineCoarsening {
    int coarse = 0;
    std::vector<std::array<int, 2>> idx;
    std::vector<std::array<double, 2>> w;
};

inline std::optional<LineCoarsening> coarsen_lines(int n, bool periodic) {
    if (n < 4) return std::nullopt;
    LineCoarsening c;
    c.idx.resize(n);
    c.w.resize(n);
    if (periodic) {
        // Coarse lines are the even indices; with n odd the wrap interval has
        // no fine line in between.
        c.coarse = (n + 1) / 2;
        for (int i = 0; i < n; ++i) {
            if (i % 2 == 0) {
                c.idx[i] = {i / 2, i / 2};
                c.w[i] = {1.0, 0.0};
            } else {
                c.idx[i] = {(i - 1) / 2, ((i + 1) % n) / 2};
                c.w[i] = {0.5, 0.5};
            }
        }
        return c;
    }
    std::vector<int> keep;
    for (int i = 0; i < n; i += 2) keep.push_back(i);
    if (keep.back() != n - 1) keep.push_back(n - 1);
    c.coarse = static_cast<int>(keep.size());
    std::size_t k = 0;
    for (int i = 0; i < n; ++i) {
        while (k + 1 < keep.size() && keep[k + 1] <= i) ++k;
        if (keep[k] == i) {
            c.idx[i] = {static_cast<int>(k), static_cast<int>(k)};
            c.w[i] = {1.0, 0.0};
        } else {
            const double t = double(i - keep[k]) / double(keep[k + 1] - keep[k]);
            c.idx[i] = {static_cast<int>(k), static_cast<int>(k + 1)};
            c.w[i] = {1.0 - t, t};
        }
    }
    return c;
}

inline SparseMatrixCSR transpose(const SparseMatrixCSR& P, int cols) {
    SparseMatrixCSR T;
    T.n = cols;
    T.row_ptr.assign(cols + 1, 0);
    for (int c : P.col) ++T.row_ptr[c + 1];
    for (int c = 0; c < cols; ++c) T.row_ptr[c + 1] += T.row_ptr[c];
    T.col.resize(P.col.size());
    T.val.resize(P.val.size());
    std::vector<int> next(T.row_ptr.begin(), T.row_ptr.end() - 1);
    for (int i = 0; i < P.n; ++i)
        for (int k = P.row_ptr[i]; k < P.row_ptr[i + 1]; ++k) {
            const int pos = next[P.col[k]]++;
            T.col[pos] = i;
            T.val[pos] = P.val[k];
        }
    return T;
}

// C = A B for CSR A (rows x inner) and B (inner x cols); columns sorted per row.
inline SparseMatrixCSR multiply(const SparseMatrixCSR& A, const SparseMatrixCSR& B, int cols) {
    SparseMatrixCSR C;
    C.n = A.n;
    C.row_ptr.assign(A.n + 1, 0);
    std::vector<double> acc(cols, 0.0);
    std::vector<char> mark(cols, 0);
    std::vector<int> touched;
    for (int i = 0; i < A.n; ++i) {
        touched.clear();
        for (int k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k) {
            const int r = A.col[k];
            for (int l = B.row_ptr[r]; l < B.row_ptr[r + 1]; ++l) {
                const int c = B.col[l];
                if (!mark[c]) {
                    mark[c] = 1;
                    touched.push_back(c);
                }
                acc[c] += A.val[k] * B.val[l];
            }
        }
        std::sort(touched.begin(), touched.end());
        for (int c : touched) {
            C.col.push_back(c);
            C.val.push_back(acc[c]);
            acc[c] = 0.0;
            mark[c] = 0;
        }
        C.row_ptr[i + 1] = static_cast<int>(C.col.size());
    }
    return C;
}

} // namespace detail

/// Geometric multigrid V-cycle for a system assembled on a tensor lattice.
///
/// Coarse spaces drop every other lattice line in each direction with
/// index-space linear interpolation; coarse operators are Galerkin products.
/// Symmetric Gauss-Seidel smoothing (forward before, backward after the
/// coarse correction) keeps the cycle symmetric, so it is a valid CG
/// preconditioner. With `singular` the operator is assumed to annihilate
/// constants and the coarsest solve is regularized along them.
class MultigridPreconditioner {
public:
    struct Options {
        int smoothing_sweeps = 1;
        int coarse_size = 200;
        bool singular = false;
    };

    /// `coords[d]` is the lattice position of unknown d; `shape` the line
    /// counts; `periodic_u` wraps the first index.
    MultigridPreconditioner(SparseMatrixCSR A, std::vector<std::array<int, 2>> coords, std::array<int, 2> shape,
                            bool periodic_u, Options opt)
        : opt_(opt) {
        if (static_cast<int>(coords.size()) != A.n) fail(ErrorKind::Domain, "one lattice coordinate per unknown");
        Level top;
        top.A = std::move(A);
        top.coords = std::move(coords);
        top.shape = shape;
        levels_.push_back(std::move(top));
        while (levels_.back().A.n > opt_.coarse_size) {
            Level& f = levels_.back();
            const auto cu = detail::coarsen_lines(f.shape[0], periodic_u);
            const auto cv = detail::coarsen_lines(f.shape[1], false);
            if (!cu && !cv) break;
            const int nu = cu ? cu->coarse : f.shape[0];
            const int nv = cv ? cv->coarse : f.shape[1];
            // Coarse lattice nodes reached by interpolation, numbered in lattice order.
            std::vector<int> node_of(static_cast<std::size_t>(nu) * nv, -1);
            auto weights = [&](const std::array<int, 2>& p, auto&& emit) {
                for (int a = 0; a < 2; ++a) {
                    const int ci = cu ? cu->idx[p[0]][a] : p[0];
                    const double wi = cu ? cu->w[p[0]][a] : (a == 0 ? 1.0 : 0.0);
                    if (wi == 0.0) continue;
                    for (int b = 0; b < 2; ++b) {
                        const int cj = cv ? cv->idx[p[1]][b] : p[1];
                        const double wj = cv ? cv->w[p[1]][b] : (b == 0 ? 1.0 : 0.0);
                        if (wj == 0.0) continue;
                        emit(ci * nv + cj, wi * wj);
                    }
                }
            };
            for (const auto& p : f.coords) weights(p, [&](int c, double) { node_of[c] = 0; });
            std::vector<std::array<int, 2>> ccoords;
            int nc = 0;
            for (int c = 0; c < nu * nv; ++c)
                if (node_of[c] == 0) {
                    node_of[c] = nc++;
                    ccoords.push_back({c / nv, c % nv});
                }
            if (nc >= f.A.n) break;
            SparseMatrixCSR P;
            P.n = f.A.n;
            P.row_ptr.assign(f.A.n + 1, 0);
            for (int d = 0; d < f.A.n; ++d) {
                std::vector<std::pair<int, double>> row;
                weights(f.coords[d], [&](int c, double w) { row.push_back({node_of[c], w}); });
                std::sort(row.begin(), row.end());
                for (const auto& [c, w] : row) {
                    P.col.push_back(c);
                    P.val.push_back(w);
                }
                P.row_ptr[d + 1] = static_cast<int>(P.col.size());
            }
            SparseMatrixCSR PT = detail::transpose(P, nc);
            Level c;
            c.A = detail::multiply(PT, detail::multiply(f.A, P, nc), nc);
            c.coords = std::move(ccoords);
            c.shape = {nu, nv};
            f.P = std::move(P);
            f.PT = std::move(PT);
            levels_.push_back(std::move(c));
        }
        for (auto& l : levels_) {
            l.dinv = l.A.diagonal();
            for (double& d : l.dinv) {
                if (!(d > 0.0)) fail(ErrorKind::Domain, "multigrid needs a positive diagonal");
                d = 1.0 / d;
            }
        }
        factor_coarsest();
    }

    std::size_t num_levels() const { return levels_.size(); }
    int coarsest_size() const { return levels_.back().A.n; }

    void apply(std::span<const double> r, std::span<double> z) const {
        std::vector<double> b(r.begin(), r.end()), x;
        vcycle(0, b, x);
        std::copy(x.begin(), x.end(), z.begin());
    }

private:
    struct Level {
        SparseMatrixCSR A, P, PT;
        std::vector<std::array<int, 2>> coords;
        std::array<int, 2> shape{0, 0};
        std::vector<double> dinv;
    };

    void sweep(const Level& l, std::span<const double> b, std::span<double> x, bool forward) const {
        const int n = l.A.n;
        for (int s = 0; s < n; ++s) {
            const int i = forward ? s : n - 1 - s;
            double acc = b[i];
            for (int k = l.A.row_ptr[i]; k < l.A.row_ptr[i + 1]; ++k) acc -= l.A.val[k] * x[l.A.col[k]];
            x[i] += acc * l.dinv[i];
        }
    }

    void vcycle(std::size_t li, const std::vector<double>& b, std::vector<double>& x) const {
        const Level& l = levels_[li];
        x.assign(l.A.n, 0.0);
        if (li + 1 == levels_.size()) {
            solve_coarsest(b, x);
            return;
        }
        for (int s = 0; s < opt_.smoothing_sweeps; ++s) sweep(l, b, x, true);
        std::vector<double> r(l.A.n);
        l.A.multiply(x, r);
        for (int i = 0; i < l.A.n; ++i) r[i] = b[i] - r[i];
        std::vector<double> bc(l.PT.n), xc;
        l.PT.multiply(r, bc);
        vcycle(li + 1, bc, xc);
        for (int i = 0; i < l.A.n; ++i)
            for (int k = l.P.row_ptr[i]; k < l.P.row_ptr[i + 1]; ++k) x[i] += l.P.val[k] * xc[l.P.col[k]];
        for (int s = 0; s < opt_.smoothing_sweeps; ++s) sweep(l, b, x, false);
    }

    // Dense Cholesky of the coarsest operator, plus rho 11^T when singular.
    void factor_coarsest() {
        const SparseMatrixCSR& A = levels_.back().A;
        const int n = A.n;
        if (n > 4000) fail(ErrorKind::Domain, "multigrid coarsest level too large for a dense factorization");
        chol_.assign(static_cast<std::size_t>(n) * n, 0.0);
        double dmax = 0.0;
        for (int i = 0; i < n; ++i)
            for (int k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k) {
                chol_[static_cast<std::size_t>(i) * n + A.col[k]] = A.val[k];
                if (A.col[k] == i) dmax = std::max(dmax, A.val[k]);
            }
        if (opt_.singular)
            for (double& v : chol_) v += dmax / n;
        // Pivots below this are treated as null directions.
        const double tiny = 1e-13 * dmax;
        pivot_ok_.assign(n, 1);
        for (int j = 0; j < n; ++j) {
            double d = chol_[static_cast<std::size_t>(j) * n + j];
            for (int k = 0; k < j; ++k) d -= chol_[static_cast<std::size_t>(j) * n + k] * chol_[static_cast<std::size_t>(j) * n + k];
            if (!(d > tiny)) {
                pivot_ok_[j] = 0;
                for (int i = j; i < n; ++i) chol_[static_cast<std::size_t>(i) * n + j] = 0.0;
                continue;
            }
            const double ljj = std::sqrt(d);
            chol_[static_cast<std::size_t>(j) * n + j] = ljj;
            for (int i = j + 1; i < n; ++i) {
                double s = chol_[static_cast<std::size_t>(i) * n + j];
                for (int k = 0; k < j; ++k) s -= chol_[static_cast<std::size_t>(i) * n + k] * chol_[static_cast<std::size_t>(j) * n + k];
                chol_[static_cast<std::size_t>(i) * n + j] = s / ljj;
            }
        }
    }

    void solve_coarsest(const std::vector<double>& b, std::vector<double>& x) const {
        const int n = static_cast<int>(b.size());
        std::vector<double> y(n, 0.0);
        for (int i = 0; i < n; ++i) {
            if (!pivot_ok_[i]) continue;
            double s = b[i];
            for (int k = 0; k < i; ++k) s -= chol_[static_cast<std::size_t>(i) * n + k] * y[k];
            y[i] = s / chol_[static_cast<std::size_t>(i) * n + i];
        }
        for (int i = n - 1; i >= 0; --i) {
            if (!pivot_ok_[i]) {
                x[i] = 0.0;
                continue;
            }
            double s = y[i];
            for (int k = i + 1; k < n; ++k) s -= chol_[static_cast<std::size_t>(k) * n + i] * x[k];
            x[i] = s / chol_[static_cast<std::size_t>(i) * n + i];
        }
    }

    Options opt_;
    std::vector<Level> levels_;
    std::vector<double> chol_;
    std::vector<char> pivot_ok_;
};

} // namespace thinhom
