#pragma once

#include <vector>

#include "scalar.hpp"

namespace martcob {

template <class S>
struct LinearSolution {
    bool consistent = false;
    std::vector<S> x; // free variables pinned to zero
    int rank = 0;
};

/// Solves A x = b for row-major A (n rows, m columns) by reduced row echelon
/// form. Exact scalars pivot on the first nonzero entry; doubles pivot on the
/// largest magnitude with a scale-relative zero threshold.
template <class S>
LinearSolution<S> solve_linear(std::vector<S> A, int n, int m, std::vector<S> b,
                               double tol = 1e-12) {
    auto at = [&](int i, int j) -> S& { return A[std::size_t(i) * m + j]; };

    double scale = 1.0;
    if constexpr (!ScalarTraits<S>::exact) {
        for (const S& v : A) scale = std::max(scale, std::fabs(double(v)));
    }
    auto negligible = [&](const S& v) {
        if constexpr (ScalarTraits<S>::exact) {
            (void)tol;
            return v == 0;
        } else {
            return std::fabs(double(v)) <= tol * scale;
        }
    };

    std::vector<int> pivot_col;
    int r = 0;
    for (int c = 0; c < m && r < n; ++c) {
        int p = -1;
        if constexpr (ScalarTraits<S>::exact) {
            for (int i = r; i < n; ++i)
                if (at(i, c) != 0) { p = i; break; }
        } else {
            double best = 0;
            for (int i = r; i < n; ++i) {
                double v = std::fabs(double(at(i, c)));
                if (v > best) { best = v; p = i; }
            }
            if (p >= 0 && negligible(at(p, c))) p = -1;
        }
        if (p < 0) continue;
        if (p != r) {
            for (int j = c; j < m; ++j) std::swap(at(p, j), at(r, j));
            std::swap(b[p], b[r]);
        }
        S inv = S(1) / at(r, c);
        for (int j = c; j < m; ++j) at(r, j) = S(at(r, j) * inv);
        b[r] = S(b[r] * inv);
        for (int i = 0; i < n; ++i) {
            if (i == r) continue;
            S f = at(i, c);
            if (negligible(f)) continue;
            for (int j = c; j < m; ++j) at(i, j) = S(at(i, j) - f * at(r, j));
            b[i] = S(b[i] - f * b[r]);
        }
        pivot_col.push_back(c);
        ++r;
    }

    LinearSolution<S> sol;
    sol.rank = r;
    for (int i = r; i < n; ++i)
        if (!negligible(b[i])) return sol; // inconsistent
    sol.consistent = true;
    sol.x.assign(m, S(0));
    for (int i = 0; i < r; ++i) sol.x[pivot_col[i]] = b[i];
    return sol;
}

} // namespace martcob
