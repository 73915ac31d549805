#pragma once

#include "poisson.hpp"

namespace martcob {

/// h_S = prod_{m in S} U_m* g: the witness the S-component is built from.
template <class S>
CylinderFn<S> witness(const SubsetMask& mask, const CylinderFn<S>& g) {
    CylinderFn<S> h = g;
    for (int m : mask.members(g.system()->dim())) h = transfer(m, h);
    return h;
}

/// B_S = prod_{l not in S} (I - U_l U_l*) h_S: the strictly stationary part
/// the S-coboundary telescopes over; the martingale-difference directions
/// l outside S have already been projected out of it.
template <class S>
CylinderFn<S> component_base(const SubsetMask& mask, const CylinderFn<S>& g) {
    const int d = g.system()->dim();
    CylinderFn<S> b = witness(mask, g);
    for (int l : mask.complement(d).members(d))
        b = b - cond_exp_level(l, 1, b);
    return b;
}

/// A_S = prod_{k in S} (U_k - I) B_S.
template <class S>
CylinderFn<S> component(const SubsetMask& mask, const CylinderFn<S>& g) {
    const int d = g.system()->dim();
    CylinderFn<S> a = component_base(mask, g);
    for (int k : mask.members(d)) a = koopman(k, a) - a;
    return a;
}

/// Martingale-difference flags of one component: for each direction t outside
/// S, E^1_t A_S must vanish. Returns (t, ok) pairs, t ascending.
template <class S>
std::vector<std::pair<int, bool>> martingale_flags(const SubsetMask& mask,
                                                   const CylinderFn<S>& a) {
    const int d = a.system()->dim();
    std::vector<std::pair<int, bool>> flags;
    for (int t = 0; t < d; ++t) {
        if (mask.contains(t)) continue;
        flags.emplace_back(t, is_zero_ae(cond_exp_level(t, 1, a)));
    }
    return flags;
}

template <class S>
struct Decomposition {
    CylinderFn<S> f, g;
    std::vector<CylinderFn<S>> witnesses;  // indexed by subset mask bits
    std::vector<CylinderFn<S>> bases;
    std::vector<CylinderFn<S>> components;
    bool reassembly_ok = false;
    std::vector<std::vector<std::pair<int, bool>>> md_flags;
    bool all_md_ok() const {
        for (const auto& per_mask : md_flags)
            for (const auto& [t, ok] : per_mask)
                if (!ok) return false;
        return true;
    }
};

/// Splits f = sum over subsets S of A_S given a solution g of the equation.
/// Nothing is taken on faith: reassembly and the martingale flags are
/// recomputed from the produced tables.
template <class S>
Decomposition<S> decompose(const CylinderFn<S>& f, const CylinderFn<S>& g) {
    detail::require_same_system(f, g);
    if (!is_zero_ae(residual(f, g)))
        throw ResidualNonzero("g does not solve the equation for this right-hand side");
    const int d = f.system()->dim();
    Decomposition<S> dec;
    dec.f = f;
    dec.g = g;
    CylinderFn<S> sum = CylinderFn<S>::zero(f.system());
    for (const SubsetMask& mask : all_subsets(d)) {
        dec.witnesses.push_back(witness(mask, g));
        dec.bases.push_back(component_base(mask, g));
        CylinderFn<S> a = dec.bases.back();
        for (int k : mask.members(d)) a = koopman(k, a) - a;
        dec.components.push_back(canonicalize(a));
        sum = sum + dec.components.back();
        dec.md_flags.push_back(martingale_flags(mask, dec.components.back()));
    }
    dec.reassembly_ok = equal_ae(sum, f);
    if (!dec.reassembly_ok)
        throw InternalIdentityViolation(
            "components do not reassemble f even though g solves the equation");
    return dec;
}

/// Everything check_decomposition re-verifies about a (possibly tampered)
/// decomposition: the global reassembly, the per-component martingale flags,
/// and the internal consistency of each component with its witness.
template <class S>
struct DecompositionCheck {
    bool reassembly_ok = false;
    std::vector<std::vector<std::pair<int, bool>>> md_flags;
    std::vector<bool> witness_consistent;   // h_S == prod U_m* g
    std::vector<bool> component_consistent; // A_S rebuilt from h_S matches
    bool all() const {
        if (!reassembly_ok) return false;
        for (const auto& per_mask : md_flags)
            for (const auto& [t, ok] : per_mask)
                if (!ok) return false;
        for (bool b : witness_consistent)
            if (!b) return false;
        for (bool b : component_consistent)
            if (!b) return false;
        return true;
    }
};

template <class S>
DecompositionCheck<S> check_decomposition(const Decomposition<S>& dec) {
    const int d = dec.f.system()->dim();
    DecompositionCheck<S> chk;
    CylinderFn<S> sum = CylinderFn<S>::zero(dec.f.system());
    for (const SubsetMask& mask : all_subsets(d)) {
        const auto& a = dec.components[mask.bits()];
        const auto& h = dec.witnesses[mask.bits()];
        sum = sum + a;
        chk.md_flags.push_back(martingale_flags(mask, a));
        chk.witness_consistent.push_back(equal_ae(h, witness(mask, dec.g)));
        CylinderFn<S> rebuilt = h;
        for (int l : mask.complement(d).members(d))
            rebuilt = rebuilt - cond_exp_level(l, 1, rebuilt);
        for (int k : mask.members(d)) rebuilt = koopman(k, rebuilt) - rebuilt;
        chk.component_consistent.push_back(equal_ae(a, rebuilt));
    }
    chk.reassembly_ok = equal_ae(sum, dec.f);
    return chk;
}

/// Reversed martingale-difference property of the shifted-component field
/// xi_j = U^j A_S, probed in the directions outside S: for every j = m + n
/// with m ranging over the grid box and n over its restriction to the
/// complement of S, and for every direction l outside S,
/// E^{j + e_l} U^j A_S must vanish. Vacuously true when S is the full set.
template <class S>
bool reversed_md_ok(const CylinderFn<S>& a, const SubsetMask& mask,
                    const MultiIndex& grid) {
    const int d = a.system()->dim();
    if (grid.dim() != d) throw Error("probe grid has wrong dimension");
    const auto outside = mask.complement(d).members(d);
    bool ok = true;
    for_each_in_box(MultiIndex::zeros(d), grid, [&](const MultiIndex& m) {
        if (!ok) return;
        MultiIndex n_hi = MultiIndex::zeros(d);
        for (int l : outside) n_hi[l] = grid[l];
        for_each_in_box(MultiIndex::zeros(d), n_hi, [&](const MultiIndex& n) {
            if (!ok) return;
            const MultiIndex j = m.plus(n);
            CylinderFn<S> xi = koopman_pow(j, a);
            for (int l : outside) {
                if (!is_zero_ae(cond_exp_multi(j.plus(MultiIndex::unit(d, l)), xi))) {
                    ok = false;
                    break;
                }
            }
        });
    });
    return ok;
}

template <class S>
struct UniquenessReport {
    bool sums_equal = false;
    std::vector<bool> eliminated; // per mask: staged probe vanished at its level
    std::vector<bool> term_zero;  // per mask: the two S-terms agree outright
    bool all() const {
        if (!sums_equal) return false;
        for (bool b : eliminated)
            if (!b) return false;
        for (bool b : term_zero)
            if (!b) return false;
        return true;
    }
};

/**
 * Establishes that two witness families assemble the same function only by
 * having equal terms, the way the uniqueness argument runs: peel subsets by
 * descending cardinality, using that U_l* annihilates (I - U_l U_l*) and that
 * the kernel of prod_{k in S}(I - U_k*) matches the kernel of the koopman-side
 * product. Raises SumsDiffer when the assembled sums disagree outright.
 */
template <class S>
UniquenessReport<S> verify_uniqueness(const std::vector<CylinderFn<S>>& h_a,
                                      const std::vector<CylinderFn<S>>& h_b) {
    if (h_a.empty() || h_a.size() != h_b.size())
        throw Error("witness families must cover the same subsets");
    const auto sys = h_a[0].system();
    const int d = sys->dim();
    if (h_a.size() != (std::size_t(1) << d))
        throw Error("witness family does not cover all subsets");

    auto term = [&](const std::vector<CylinderFn<S>>& h, const SubsetMask& mask) {
        CylinderFn<S> t = h[mask.bits()];
        for (int l : mask.complement(d).members(d))
            t = t - cond_exp_level(l, 1, t);
        for (int k : mask.members(d)) t = koopman(k, t) - t;
        return t;
    };

    std::vector<CylinderFn<S>> diff_terms;
    CylinderFn<S> remainder = CylinderFn<S>::zero(sys);
    for (const SubsetMask& mask : all_subsets(d)) {
        diff_terms.push_back(term(h_b, mask) - term(h_a, mask));
        remainder = remainder + diff_terms.back();
    }
    UniquenessReport<S> rep;
    rep.sums_equal = is_zero_ae(remainder);
    if (!rep.sums_equal)
        throw SumsDiffer("the two witness families assemble different functions");

    rep.eliminated.assign(h_a.size(), false);
    rep.term_zero.assign(h_a.size(), false);
    for (int r = d; r >= 0; --r) {
        for (const SubsetMask& mask : all_subsets(d)) {
            if (mask.cardinality() != r) continue;
            CylinderFn<S> probe = remainder;
            for (int k : mask.members(d)) probe = transfer(k, probe);
            rep.eliminated[mask.bits()] = is_zero_ae(probe);
            rep.term_zero[mask.bits()] = is_zero_ae(diff_terms[mask.bits()]);
        }
        for (const SubsetMask& mask : all_subsets(d))
            if (mask.cardinality() == r)
                remainder = remainder - diff_terms[mask.bits()];
    }
    return rep;
}

} // namespace martcob
