#pragma once

#include <optional>

#include "linalg.hpp"
#include "operators.hpp"

namespace martcob {

/// f is normal when every direction's invariant projection kills it; this is
/// exactly solvability of prod_k (I - U_k*) g = f in the finite-window model
/// (the operator's range on a shift-stable window space is the normal part of
/// that space; the direct solver relies on this and re-verifies by residual).
template <class S>
bool is_normal(const CylinderFn<S>& f) {
    for (int k = 0; k < f.system()->dim(); ++k)
        if (!is_zero_ae(invariant_projection(k, f))) return false;
    return true;
}

template <class S>
CylinderFn<S> normal_project(const CylinderFn<S>& f) {
    return prod_i_minus_invariant(SubsetMask::full(f.system()->dim()), f);
}

/// Strict normality: every direction's tail projection kills f. Raises
/// PeriodicChainUnsupported when some factor has a periodic class.
template <class S>
bool is_strictly_normal(const CylinderFn<S>& f) {
    for (int k = 0; k < f.system()->dim(); ++k)
        if (!is_zero_ae(tail_projection(k, f))) return false;
    return true;
}

template <class S>
CylinderFn<S> strict_project(const CylinderFn<S>& f) {
    CylinderFn<S> g = f;
    for (int k = 0; k < f.system()->dim(); ++k) g = g - tail_projection(k, g);
    return g;
}

/// f - prod_k (I - U_k*) g: what is left after plugging a candidate solution
/// into the equation.
template <class S>
CylinderFn<S> residual(const CylinderFn<S>& f, const CylinderFn<S>& g) {
    return f - prod_i_minus_transfer(SubsetMask::full(f.system()->dim()), g);
}

enum class SolveMethod { series, partial_series, cesaro, direct };

inline const char* to_string(SolveMethod m) {
    switch (m) {
        case SolveMethod::series: return "series";
        case SolveMethod::partial_series: return "partial_series";
        case SolveMethod::cesaro: return "cesaro";
        case SolveMethod::direct: return "direct";
    }
    return "?";
}

template <class S>
struct SolveDiagnostics {
    std::optional<S> last_shell_norm_sq;    // series: size of the final batch
    std::optional<double> subdominant_rho;  // power-iteration estimate, markov only
    std::optional<double> tail_bound_estimate; // NOT certified, informational
    std::vector<MultiIndex> cesaro_ladder;
    std::vector<S> cesaro_ladder_distance_sq; // entry j: |g(ladder[j+1]) - g(ladder[j])|^2
    std::optional<S> distance_to_series_sq;   // cesaro vs series solution, when both apply
};

template <class S>
struct SolveReport {
    CylinderFn<S> solution;
    SolveMethod method = SolveMethod::direct;
    long terms_used = 0;
    std::optional<MultiIndex> average_up_to; // cesaro only
    S residual_norm_sq = S(0);
    bool normal_input = false;
    std::optional<bool> strictly_normal_input; // nullopt: tail undefined (periodic)
    SolveDiagnostics<S> diagnostics;
};

struct SolveOptions {
    /// Series cutoff: stop once a whole shell of terms has norm_sq <= tol^2.
    /// Negative means "mode default": 0 in exact mode, 1e-12 in float mode
    /// (truncation is a different knob than the comparison tolerance).
    double tol = -1;
    long max_shells = 512;
};

namespace detail {

template <class S>
double series_tol(const CylinderFn<S>&, const SolveOptions& o) {
    if (o.tol >= 0) return o.tol;
    return ScalarTraits<S>::exact ? 0.0 : 1e-12;
}

template <class S>
void fill_input_flags(const CylinderFn<S>& f, SolveReport<S>& r) {
    r.normal_input = is_normal(f);
    try {
        r.strictly_normal_input = is_strictly_normal(f);
    } catch (const PeriodicChainUnsupported&) {
        r.strictly_normal_input = std::nullopt;
    }
}

/// Largest non-unit eigenvalue modulus of a markov factor's transition
/// matrix, estimated in doubles. Drives the informational tail estimate.
template <class S>
std::optional<double> estimate_subdominant_rho(const System<S>& sys) {
    std::optional<double> rho;
    for (int k = 0; k < sys.dim(); ++k) {
        const auto& fac = sys.factor(k);
        if (fac.kind() != FactorKind::markov) continue;
        const int A = fac.alphabet();
        if (A < 2) continue;
        std::vector<double> pi(A), x(A);
        for (int a = 0; a < A; ++a) pi[a] = ScalarTraits<S>::to_double(fac.stationary()[a]);
        for (int a = 0; a < A; ++a) x[a] = std::cos(1.0 + a);
        double r = 0;
        for (int it = 0; it < 200; ++it) {
            double mean = 0;
            for (int a = 0; a < A; ++a) mean += pi[a] * x[a];
            for (int a = 0; a < A; ++a) x[a] -= mean;
            double nx = 0;
            for (int a = 0; a < A; ++a) nx += x[a] * x[a];
            nx = std::sqrt(nx);
            if (nx < 1e-300) { r = 0; break; }
            for (int a = 0; a < A; ++a) x[a] /= nx;
            std::vector<double> y(A, 0.0);
            for (int a = 0; a < A; ++a)
                for (int b = 0; b < A; ++b)
                    y[a] += ScalarTraits<S>::to_double(fac.transition(a, b)) * x[b];
            double ny = 0;
            for (int a = 0; a < A; ++a) ny += y[a] * y[a];
            r = std::sqrt(ny);
            x = y;
        }
        rho = std::max(rho.value_or(0.0), r);
    }
    return rho;
}

} // namespace detail

/**
 * Sums U*^n f over n in Z_+^d restricted to the directions in `mask`
 * (solve_series is the full-mask case). Works outward in shells
 * max_k n_k = s and stops at the first shell whose total norm_sq is within
 * the cutoff; for bernoulli directions the terms vanish identically once any
 * n_k reaches the window depth, so exact mode terminates exactly. A markov
 * direction in exact mode needs a positive tol or the shell cap triggers
 * NoConvergence.
 */
template <class S>
SolveReport<S> solve_partial_series(const SubsetMask& mask, const CylinderFn<S>& f,
                                    const SolveOptions& opts = {}) {
    const auto& sys = *f.system();
    const int d = sys.dim();
    if (!is_strictly_normal(f))
        throw NotStrictlyNormal("series solver needs a strictly normal right-hand side");

    const double tol = detail::series_tol(f, opts);
    SolveReport<S> r;
    r.method = mask == SubsetMask::full(d) ? SolveMethod::series
                                           : SolveMethod::partial_series;
    detail::fill_input_flags(f, r);
    CylinderFn<S> g = CylinderFn<S>::zero(f.system());
    const auto members = mask.members(d);
    S shell_sq(0);
    double prev_shell = -1;
    int stalled = 0;
    bool done = false;
    for (long s = 0; s <= opts.max_shells && !done; ++s) {
        CylinderFn<S> shell_sum = CylinderFn<S>::zero(f.system());
        MultiIndex lo = MultiIndex::zeros(d), hi = MultiIndex::zeros(d);
        for (int k : members) hi[k] = s;
        long shell_terms = 0;
        for_each_in_box(lo, hi, [&](const MultiIndex& n) {
            long mx = 0;
            for (int k : members) mx = std::max(mx, n[k]);
            if (mx != s) return;
            shell_sum = shell_sum + transfer_pow(n, f);
            ++shell_terms;
        });
        shell_sq = norm_sq(shell_sum);
        if (scalar_is_zero(shell_sq, tol * tol)) {
            done = true;
        } else {
            g = g + shell_sum;
            r.terms_used += shell_terms;
            // Non-decreasing shell norms over a probe horizon mean the tail is
            // not shrinking; give up early instead of burning the full budget.
            double cur = ScalarTraits<S>::to_double(shell_sq);
            stalled = (s >= 4 && prev_shell >= 0 && cur >= prev_shell) ? stalled + 1 : 0;
            prev_shell = cur;
            if (stalled >= 8)
                throw NoConvergence("series shell norms stopped decreasing");
        }
        if (s == opts.max_shells && !done)
            throw NoConvergence("series did not settle within the shell budget");
    }
    r.solution = canonicalize(g);
    r.diagnostics.last_shell_norm_sq = shell_sq;
    r.residual_norm_sq = norm_sq(f - prod_i_minus_transfer(mask, r.solution));
    r.diagnostics.subdominant_rho = detail::estimate_subdominant_rho(sys);
    if (r.diagnostics.subdominant_rho && *r.diagnostics.subdominant_rho < 1.0) {
        double rho = *r.diagnostics.subdominant_rho;
        double last = std::sqrt(std::max(0.0, ScalarTraits<S>::to_double(shell_sq)));
        r.diagnostics.tail_bound_estimate = last * rho / (1.0 - rho);
    }
    return r;
}

template <class S>
SolveReport<S> solve_series(const CylinderFn<S>& f, const SolveOptions& opts = {}) {
    return solve_partial_series(SubsetMask::full(f.system()->dim()), f, opts);
}

/**
 * Finite averaged adjoint sums: (N_1...N_d)^{-1} sum of S*_M f over
 * 0 <= M <= N-1, with S*_M = 0 whenever some M_k = 0. Collapsing the double
 * sum gives sum over 0 <= n <= N-2 of prod_k (N_k-1-n_k) U*^n f. Reports the
 * finite-N average plus how fast a halving ladder is settling; never
 * extrapolates to the limit.
 */
template <class S>
SolveReport<S> solve_cesaro(const CylinderFn<S>& f, const MultiIndex& N) {
    const auto& sys = *f.system();
    const int d = sys.dim();
    if (N.dim() != d) throw Error("N has wrong dimension");
    for (int k = 0; k < d; ++k)
        if (N[k] < 1) throw Error("cesaro average needs N >= 1 in every direction");
    if (!is_normal(f))
        throw NotNormal("cesaro average converges only for a normal right-hand side");

    auto average = [&](const MultiIndex& n) {
        CylinderFn<S> acc = CylinderFn<S>::zero(f.system());
        long terms = 0;
        bool empty = false;
        for (int k = 0; k < d; ++k) empty |= n[k] < 2;
        if (!empty) {
            MultiIndex hi = MultiIndex::zeros(d);
            for (int k = 0; k < d; ++k) hi[k] = n[k] - 2;
            for_each_in_box(MultiIndex::zeros(d), hi, [&](const MultiIndex& m) {
                long coeff = 1;
                for (int k = 0; k < d; ++k) coeff *= n[k] - 1 - m[k];
                if (coeff == 0) return;
                acc = acc + S(ScalarTraits<S>::from_fraction(coeff, 1)) * transfer_pow(m, f);
                ++terms;
            });
        }
        S scale = ScalarTraits<S>::from_fraction(1, n.product());
        return std::pair<CylinderFn<S>, long>(canonicalize(scale * acc), terms);
    };

    SolveReport<S> r;
    r.method = SolveMethod::cesaro;
    detail::fill_input_flags(f, r);
    auto [g, terms] = average(N);
    r.solution = g;
    r.terms_used = terms;
    r.average_up_to = N;
    r.residual_norm_sq = norm_sq(residual(f, r.solution));

    std::vector<MultiIndex> ladder{N};
    while (ladder.back().max() > 1) {
        MultiIndex h = ladder.back();
        for (int k = 0; k < d; ++k) h[k] = std::max(1L, h[k] / 2);
        ladder.push_back(h);
        if (ladder.size() == 3) break;
    }
    for (std::size_t j = 0; j + 1 < ladder.size(); ++j) {
        auto [gj, t1] = average(ladder[j]);
        auto [gn, t2] = average(ladder[j + 1]);
        (void)t1; (void)t2;
        r.diagnostics.cesaro_ladder_distance_sq.push_back(norm_sq(gj - gn));
    }
    r.diagnostics.cesaro_ladder = std::move(ladder);
    if (r.strictly_normal_input == true && series_usable(sys, SubsetMask::full(d)))
        r.diagnostics.distance_to_series_sq =
            norm_sq(r.solution - solve_series(f).solution);
    return r;
}

/**
 * Exact one-shot solve. Builds prod_k (I - U_k*) as a matrix on the smallest
 * shift-stable window space containing f, solves by reduced row echelon form,
 * and normalizes the solution with prod_k (I - E^{I_k}) (which commutes past
 * the equation). Solvability is decided by the elimination itself, not by a
 * normality pre-check: the range of the operator on that space is exactly its
 * normal part, so inconsistency must coincide with a failed normality flag
 * (and a disagreement is an engine bug, not bad input).
 */
template <class S>
SolveReport<S> solve_direct(const CylinderFn<S>& f) {
    const auto& sys = *f.system();
    const int d = sys.dim();
    SolveReport<S> r;
    r.method = SolveMethod::direct;
    detail::fill_input_flags(f, r);

    if (is_zero_ae(f)) {
        r.solution = CylinderFn<S>::zero(f.system());
        r.residual_norm_sq = norm_sq(residual(f, r.solution));
        return r;
    }

    std::vector<int> w(f.window());
    for (int k = 0; k < d; ++k)
        if (sys.factor(k).kind() == FactorKind::markov) w[k] = std::max(w[k], 1);
    const CylinderFn<S> fw = extend(f, w);
    const std::size_t D = fw.size();
    const SubsetMask full = SubsetMask::full(d);

    // Column j = the operator applied to the j-th coordinate delta.
    std::vector<S> M(D * D, S(0));
    for (std::size_t j = 0; j < D; ++j) {
        std::vector<S> e(D, S(0));
        e[j] = S(1);
        CylinderFn<S> col = prod_i_minus_transfer(full, CylinderFn<S>(f.system(), w, std::move(e)));
        col = extend(col, w);
        for (std::size_t i = 0; i < D; ++i) M[i * D + j] = col.table()[i];
    }
    auto sol = solve_linear<S>(std::move(M), static_cast<int>(D), static_cast<int>(D),
                               fw.table(), detail::kProbTol);
    if (sol.consistent != r.normal_input)
        throw InternalIdentityViolation(
            "solvability of the linear system disagrees with the normality flag");
    if (!sol.consistent)
        throw Unsolvable("right-hand side has a nonzero invariant part; no solution exists");
    CylinderFn<S> g0(f.system(), w, std::move(sol.x));
    r.solution = canonicalize(normal_project(g0));
    r.terms_used = static_cast<long>(D);
    r.residual_norm_sq = norm_sq(residual(f, r.solution));
    if (!scalar_is_zero(r.residual_norm_sq,
                        sys.tolerance() * sys.tolerance()))
        throw InternalIdentityViolation("direct solution fails the residual check");
    return r;
}

/// Solvability of the equation for this right-hand side (see is_normal).
template <class S>
bool is_solvable(const CylinderFn<S>& f) {
    return is_normal(f);
}

/// Whether iterating the adjoint series over these directions can settle:
/// exact arithmetic needs bernoulli factors (their adjoint vanishes once the
/// window is exhausted), float arithmetic needs aperiodic chains (geometric
/// decay towards a cutoff).
template <class S>
bool series_usable(const System<S>& sys, const SubsetMask& mask) {
    for (int k : mask.members(sys.dim())) {
        const auto& fac = sys.factor(k);
        if (fac.kind() == FactorKind::bernoulli) continue;
        if (ScalarTraits<S>::exact || !fac.aperiodic()) return false;
    }
    return true;
}

} // namespace martcob
