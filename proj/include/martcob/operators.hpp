#pragma once

#include "cylinder.hpp"
#include "multi_index.hpp"

namespace martcob {

/**
 * U^n f = f composed with the n-fold shift: the result reads coordinates
 * n_k..n_k+w_k-1 of direction k, expressed on the window w + n. A single
 * index remap, no arithmetic, so it is exactly isometric in both modes.
 */
template <class S>
CylinderFn<S> koopman_pow(const MultiIndex& n, const CylinderFn<S>& f) {
    const auto& sys = *f.system();
    const int d = sys.dim();
    if (n.dim() != d) throw Error("shift count has wrong dimension");
    std::vector<int> w(f.window());
    for (int k = 0; k < d; ++k) w[k] += static_cast<int>(n[k]);
    std::size_t out_len = detail::table_len(sys, w);
    std::vector<std::size_t> out_block(d), in_block(d), in_stride(d);
    std::size_t stride = 1;
    for (int k = d - 1; k >= 0; --k) {
        in_block[k] = f.block_size(k);
        in_stride[k] = stride;
        stride *= in_block[k];
        out_block[k] = detail::ipow_capped(sys.factor(k).alphabet(), w[k], sys.size_cap());
    }
    std::vector<S> out(out_len);
    for (std::size_t idx = 0; idx < out_len; ++idx) {
        std::size_t rest = idx, in_idx = 0;
        for (int k = d - 1; k >= 0; --k) {
            std::size_t b = rest % out_block[k];
            rest /= out_block[k];
            in_idx += (b % in_block[k]) * in_stride[k];
        }
        out[idx] = f.table()[in_idx];
    }
    return CylinderFn<S>(f.system(), std::move(w), std::move(out));
}

template <class S>
CylinderFn<S> koopman(int k, const CylinderFn<S>& f) {
    f.system()->check_direction(k);
    return koopman_pow(MultiIndex::unit(f.system()->dim(), k), f);
}

/**
 * One application of the adjoint in direction k. Averages out the earliest
 * coordinate against the time-reversed kernel:
 *   (U* f)(y_0..y_{w-2}; rest) = sum_a kappa(a | y_0) f(a, y_0..y_{w-2}; rest).
 * For bernoulli kappa(a|.) = p(a) and the window shrinks by one; a markov
 * window never shrinks below 1 because the result still reads y_0.
 */
template <class S>
CylinderFn<S> transfer(int k, const CylinderFn<S>& f) {
    const auto& sys = *f.system();
    sys.check_direction(k);
    const int w = f.window()[k];
    if (w == 0) return f;
    const auto& fac = sys.factor(k);
    const int A = fac.alphabet();
    const auto v = f.dir_view(k);

    if (fac.kind() == FactorKind::markov && w == 1) {
        std::vector<S> out(f.size(), S(0));
        for (std::size_t o = 0; o < v.outer; ++o)
            for (int b = 0; b < A; ++b)
                for (std::size_t i = 0; i < v.inner; ++i) {
                    S acc(0);
                    for (int a = 0; a < A; ++a)
                        acc = S(acc + fac.backward(a, b) *
                                          f.table()[(o * v.block + a) * v.inner + i]);
                    out[(o * v.block + b) * v.inner + i] = acc;
                }
        return CylinderFn<S>(f.system(), f.window(), std::move(out));
    }

    const std::size_t cblock = v.block / A; // A^{w-1}
    std::size_t lead = cblock / A;          // digit y_0 of c is c / lead (w >= 2)
    std::vector<int> wout(f.window());
    --wout[k];
    std::vector<S> out(v.outer * cblock * v.inner, S(0));
    for (std::size_t o = 0; o < v.outer; ++o)
        for (std::size_t c = 0; c < cblock; ++c) {
            const int y0 = w >= 2 ? static_cast<int>(c / lead) : 0;
            for (std::size_t i = 0; i < v.inner; ++i) {
                S acc(0);
                for (int a = 0; a < A; ++a) {
                    S coeff = fac.kind() == FactorKind::bernoulli
                                  ? fac.stationary()[a]
                                  : fac.backward(a, y0);
                    acc = S(acc + coeff *
                                      f.table()[(o * v.block + a * cblock + c) * v.inner + i]);
                }
                out[(o * cblock + c) * v.inner + i] = acc;
            }
        }
    return CylinderFn<S>(f.system(), std::move(wout), std::move(out));
}

template <class S>
CylinderFn<S> transfer_pow(const MultiIndex& n, const CylinderFn<S>& f) {
    if (n.dim() != f.system()->dim()) throw Error("shift count has wrong dimension");
    CylinderFn<S> g = f;
    for (int k = 0; k < n.dim(); ++k)
        for (long i = 0; i < n[k]; ++i) g = transfer(k, g);
    return g;
}

/// E^n in one direction: project onto what the process looks like from time n
/// onward, U_k^n U_k^{*n}.
template <class S>
CylinderFn<S> cond_exp_level(int k, long n, const CylinderFn<S>& f) {
    f.system()->check_direction(k);
    if (n < 0) throw Error("conditional expectation level must be non-negative");
    if (n == 0) return f;
    MultiIndex nk = MultiIndex::zeros(f.system()->dim());
    nk[k] = n;
    return koopman_pow(nk, transfer_pow(nk, f));
}

/// E^m = product over directions of the per-direction projections.
template <class S>
CylinderFn<S> cond_exp_multi(const MultiIndex& m, const CylinderFn<S>& f) {
    if (m.dim() != f.system()->dim()) throw Error("level has wrong dimension");
    CylinderFn<S> g = f;
    for (int k = 0; k < m.dim(); ++k) g = cond_exp_level(k, m[k], g);
    return g;
}

namespace detail {

/// Averages direction k over each closed class: the conditional expectation
/// given which class the direction-k chain lives in.
template <class S>
CylinderFn<S> class_average(int k, const CylinderFn<S>& f) {
    const auto& sys = *f.system();
    if (f.window()[k] == 0) return f;
    const auto& fac = sys.factor(k);
    const int A = fac.alphabet();
    const int C = fac.num_classes();
    const auto v = f.dir_view(k);
    const auto wt = path_weights(fac, f.window()[k]);
    const std::size_t lead = v.block / A; // first letter of block b is b / lead
    std::vector<int> w(f.window());
    w[k] = 1;
    std::vector<S> out(v.outer * A * v.inner, S(0));
    std::vector<S> acc(std::size_t(C) * v.inner);
    for (std::size_t o = 0; o < v.outer; ++o) {
        std::fill(acc.begin(), acc.end(), S(0));
        for (std::size_t b = 0; b < v.block; ++b) {
            if (wt[b] == 0) continue;
            const int c = fac.class_of(static_cast<int>(b / lead));
            for (std::size_t i = 0; i < v.inner; ++i)
                acc[std::size_t(c) * v.inner + i] =
                    S(acc[std::size_t(c) * v.inner + i] +
                      wt[b] * f.table()[(o * v.block + b) * v.inner + i]);
        }
        for (int s = 0; s < A; ++s) {
            const int c = fac.class_of(s);
            for (std::size_t i = 0; i < v.inner; ++i)
                out[(o * A + s) * v.inner + i] =
                    S(acc[std::size_t(c) * v.inner + i] / fac.class_weight(c));
        }
    }
    return canonicalize(CylinderFn<S>(f.system(), std::move(w), std::move(out)));
}

} // namespace detail

/// E^{I_k}: conditional expectation on the shift-invariant field of direction
/// k, i.e. the average over the direction's ergodic class.
template <class S>
CylinderFn<S> invariant_projection(int k, const CylinderFn<S>& f) {
    f.system()->check_direction(k);
    return detail::class_average(k, f);
}

/// E_k^infty: projection on the direction-k tail field. Coincides with the
/// class average when every class is aperiodic; a periodic class has a
/// non-trivial tail (the phase survives at infinity) and is refused.
template <class S>
CylinderFn<S> tail_projection(int k, const CylinderFn<S>& f) {
    const auto& sys = *f.system();
    sys.check_direction(k);
    const auto& fac = sys.factor(k);
    for (int c = 0; c < fac.num_classes(); ++c)
        if (fac.period(c) != 1)
            throw PeriodicChainUnsupported(
                "factor " + std::to_string(k + 1) + " has a class of period " +
                std::to_string(fac.period(c)) + "; its tail field is not the class field");
    return detail::class_average(k, f);
}

/// prod_{k in S} (I - U_k*) applied to f.
template <class S>
CylinderFn<S> prod_i_minus_transfer(const SubsetMask& mask, const CylinderFn<S>& f) {
    CylinderFn<S> g = f;
    for (int k : mask.members(f.system()->dim())) g = g - transfer(k, g);
    return g;
}

/// prod_{k in S} (I - U_k) applied to f.
template <class S>
CylinderFn<S> prod_i_minus_koopman(const SubsetMask& mask, const CylinderFn<S>& f) {
    CylinderFn<S> g = f;
    for (int k : mask.members(f.system()->dim())) g = g - koopman(k, g);
    return g;
}

/// prod_{k in S} (I - E^{I_k}) applied to f.
template <class S>
CylinderFn<S> prod_i_minus_invariant(const SubsetMask& mask, const CylinderFn<S>& f) {
    CylinderFn<S> g = f;
    for (int k : mask.members(f.system()->dim())) g = g - invariant_projection(k, g);
    return g;
}

/// <U_k f, g> == <f, U_k* g>.
template <class S>
bool verify_adjoint(int k, const CylinderFn<S>& f, const CylinderFn<S>& g) {
    S lhs = inner_product(koopman(k, f), g);
    S rhs = inner_product(f, transfer(k, g));
    return scalar_is_zero(S(lhs - rhs), f.system()->tolerance());
}

/// U_i U_j* = U_j* U_i for i != j, witnessed on f.
template <class S>
bool verify_complete_commutation(int i, int j, const CylinderFn<S>& f) {
    f.system()->check_direction(i);
    f.system()->check_direction(j);
    if (i == j)
        throw SameDirection("complete commutation concerns two distinct directions");
    return equal_ae(koopman(i, transfer(j, f)), transfer(j, koopman(i, f)));
}

/// The three projection/kernel relations tying prod(I-U_k*), prod(I-U_k) and
/// prod(I-E^{I_k}) over a direction subset, witnessed on one function.
struct ProjectionRelations {
    bool absorb_ok = false;        // prod(I-U*) prod(I-E) = prod(I-U*), both orders
    bool annihilate_ok = false;    // each E^{I_k}, k in S, kills prod(I-U*) f
    bool kernels_agree = false;    // f sits in all three kernels or in none
    bool in_ker_transfer = false;
    bool in_ker_koopman = false;
    bool in_ker_invariant = false;
    bool all() const { return absorb_ok && annihilate_ok && kernels_agree; }
};

template <class S>
ProjectionRelations verify_projection_relations(const SubsetMask& mask,
                                                const CylinderFn<S>& f) {
    ProjectionRelations r;
    CylinderFn<S> mf = prod_i_minus_transfer(mask, f);
    CylinderFn<S> pf = prod_i_minus_invariant(mask, f);
    CylinderFn<S> m_pf = prod_i_minus_transfer(mask, pf);
    CylinderFn<S> p_mf = prod_i_minus_invariant(mask, mf);
    r.absorb_ok = equal_ae(m_pf, mf) && equal_ae(p_mf, mf);
    r.annihilate_ok = true;
    for (int k : mask.members(f.system()->dim()))
        r.annihilate_ok = r.annihilate_ok && is_zero_ae(invariant_projection(k, mf));
    r.in_ker_transfer = is_zero_ae(mf);
    r.in_ker_koopman = is_zero_ae(prod_i_minus_koopman(mask, f));
    r.in_ker_invariant = is_zero_ae(pf);
    r.kernels_agree = (r.in_ker_transfer == r.in_ker_koopman) &&
                      (r.in_ker_koopman == r.in_ker_invariant);
    return r;
}

} // namespace martcob
