#pragma once

// Brute-force reference implementations used to cross-check the library.
// Everything in here enumerates words letter by letter and multiplies path
// probabilities directly; nothing reuses the library's operator algebra, so
// agreement between the two routes is meaningful evidence.

#include <martcob/martcob.hpp>

#include <vector>

namespace oracle {

using martcob::CylinderFn;
using martcob::MultiIndex;
using martcob::System;

/// One letter per slot per direction: word[k][i] is coordinate i of
/// direction k.
using Word = std::vector<std::vector<int>>;

/// Probability of the cylinder set that pins `word` under the product
/// measure. Relies only on the stored stationary vector and one-step
/// transition probabilities (for an independent factor, transition(a, b)
/// is the letter distribution of b, so the same product applies).
template <class S>
S weight(const System<S>& sys, const Word& word) {
    S acc(1);
    for (int k = 0; k < sys.dim(); ++k) {
        const auto& fac = sys.factor(k);
        if (word[k].empty()) continue;
        acc = S(acc * fac.stationary()[word[k][0]]);
        for (std::size_t i = 0; i + 1 < word[k].size(); ++i)
            acc = S(acc * fac.transition(word[k][i], word[k][i + 1]));
    }
    return acc;
}

/// Visit every word with `len[k]` letters in direction k.
template <class S, class Fn>
void for_each_word(const System<S>& sys, const std::vector<int>& len, Fn&& fn) {
    const int d = sys.dim();
    Word w(d);
    for (int k = 0; k < d; ++k) w[k].assign(len[k], 0);
    for (;;) {
        fn(const_cast<const Word&>(w));
        int k = d - 1;
        while (k >= 0) {
            const int A = sys.factor(k).alphabet();
            int i = int(w[k].size()) - 1;
            while (i >= 0 && w[k][i] == A - 1) w[k][i--] = 0;
            if (i >= 0) {
                ++w[k][i];
                break;
            }
            --k;
        }
        if (k < 0) return;
    }
}

/// Value of the shifted function at a word: the shift by n in direction k
/// makes the function read coordinates n_k .. n_k + w_k - 1.
template <class S>
S shifted_value(const CylinderFn<S>& f, const MultiIndex& n, const Word& word) {
    const int d = f.system()->dim();
    Word sub(d);
    for (int k = 0; k < d; ++k)
        sub[k].assign(word[k].begin() + n[k], word[k].begin() + n[k] + f.window()[k]);
    return f.at(sub);
}

template <class S>
S value(const CylinderFn<S>& f, const Word& word) {
    return shifted_value(f, MultiIndex::zeros(f.system()->dim()), word);
}

/// Expectation by full enumeration.
template <class S>
S expectation(const CylinderFn<S>& f) {
    S acc(0);
    for_each_word(*f.system(), f.window(), [&](const Word& w) {
        acc = S(acc + S(weight(*f.system(), w) * value(f, w)));
    });
    return acc;
}

/// Inner product <shift^m f, shift^n g> by enumeration over the smallest
/// word both shifted functions can read.
template <class S>
S shifted_inner(const CylinderFn<S>& f, const MultiIndex& m, const CylinderFn<S>& g,
                const MultiIndex& n) {
    const auto& sys = *f.system();
    const int d = sys.dim();
    std::vector<int> len(d);
    for (int k = 0; k < d; ++k)
        len[k] = std::max(int(m[k]) + f.window()[k], int(n[k]) + g.window()[k]);
    S acc(0);
    for_each_word(sys, len, [&](const Word& w) {
        acc = S(acc + S(weight(sys, w) * S(shifted_value(f, m, w) * shifted_value(g, n, w))));
    });
    return acc;
}

template <class S>
S inner(const CylinderFn<S>& f, const CylinderFn<S>& g) {
    const int d = f.system()->dim();
    return shifted_inner(f, MultiIndex::zeros(d), g, MultiIndex::zeros(d));
}

/// Indicator of one table slot of the given window: 1 on that cylinder,
/// 0 elsewhere. The indicators span the whole space, so checking an
/// adjointness relation against every one of them pins the operator.
template <class S>
CylinderFn<S> indicator(martcob::SystemPtr<S> sys, const std::vector<int>& window,
                        std::size_t idx) {
    CylinderFn<S> z = martcob::extend(CylinderFn<S>::constant(sys, S(0)), window);
    return z.with_entry(idx, S(1));
}

} // namespace oracle
