#pragma once

#include <utility>
#include <vector>

#include "system.hpp"

namespace martcob {

template <class S>
class CylinderFn;

namespace detail {

/// base^e with the running product checked against the table cap.
inline std::size_t ipow_capped(long base, long e, std::size_t cap) {
    std::size_t r = 1;
    for (long i = 0; i < e; ++i) {
        if (r > cap / static_cast<std::size_t>(base))
            throw SizeCapExceeded("cylinder table would exceed the size cap");
        r *= static_cast<std::size_t>(base);
    }
    return r;
}

/// Table length for a window, capped.
template <class S>
std::size_t table_len(const System<S>& sys, const std::vector<int>& window) {
    std::size_t len = 1;
    for (int k = 0; k < sys.dim(); ++k) {
        std::size_t bk = ipow_capped(sys.factor(k).alphabet(), window[k], sys.size_cap());
        if (len > sys.size_cap() / bk)
            throw SizeCapExceeded("cylinder table would exceed the size cap");
        len *= bk;
    }
    return len;
}

/// Splits flat indices around direction k: idx = (outer * block + b) * inner + i
/// where b runs over the A_k^{w_k} letter blocks of direction k.
struct DirView {
    std::size_t outer, block, inner;
};

} // namespace detail

/**
 * A function of finitely many coordinates of the product system: in each
 * direction k it reads the first window[k] letters. Values live in a dense
 * table indexed direction-major; within a direction, coordinate 0 is the most
 * significant digit.
 */
template <class S>
class CylinderFn {
public:
    CylinderFn() = default;

    CylinderFn(SystemPtr<S> sys, std::vector<int> window, std::vector<S> table)
        : sys_(std::move(sys)), window_(std::move(window)), table_(std::move(table)) {
        if (!sys_) throw Error("cylinder function needs a system");
        if (static_cast<int>(window_.size()) != sys_->dim())
            throw Error("window length must equal the system dimension");
        for (int w : window_)
            if (w < 0) throw Error("negative window entry");
        if (table_.size() != detail::table_len(*sys_, window_))
            throw Error("table length does not match the window");
    }

    static CylinderFn constant(SystemPtr<S> sys, S value) {
        int d = sys->dim();
        return CylinderFn(std::move(sys), std::vector<int>(d, 0), {std::move(value)});
    }
    static CylinderFn zero(SystemPtr<S> sys) { return constant(std::move(sys), S(0)); }

    const SystemPtr<S>& system() const { return sys_; }
    const std::vector<int>& window() const { return window_; }
    const std::vector<S>& table() const { return table_; }
    std::size_t size() const { return table_.size(); }

    detail::DirView dir_view(int k) const {
        detail::DirView v{1, 1, 1};
        const int d = sys_->dim();
        for (int j = 0; j < k; ++j) v.outer *= block_size(j);
        v.block = block_size(k);
        for (int j = k + 1; j < d; ++j) v.inner *= block_size(j);
        return v;
    }

    /// A_k^{w_k}: number of letter blocks in direction k.
    std::size_t block_size(int k) const {
        std::size_t r = 1;
        for (int i = 0; i < window_[k]; ++i) r *= sys_->factor(k).alphabet();
        return r;
    }

    /// Flat index of one letter per direction per window slot,
    /// letters[k][i] = coordinate i of direction k.
    std::size_t encode(const std::vector<std::vector<int>>& letters) const {
        std::size_t idx = 0;
        for (int k = 0; k < sys_->dim(); ++k) {
            const int A = sys_->factor(k).alphabet();
            std::size_t b = 0;
            for (int i = 0; i < window_[k]; ++i) {
                int a = letters[k][i];
                if (a < 0 || a >= A) throw Error("letter out of alphabet range");
                b = b * A + static_cast<std::size_t>(a);
            }
            idx = idx * block_size(k) + b;
        }
        return idx;
    }

    const S& at(const std::vector<std::vector<int>>& letters) const {
        return table_[encode(letters)];
    }

    CylinderFn with_entry(std::size_t idx, S value) const {
        CylinderFn f = *this;
        f.table_.at(idx) = std::move(value);
        return f;
    }

private:
    SystemPtr<S> sys_;
    std::vector<int> window_;
    std::vector<S> table_;
};

namespace detail {
template <class S>
void require_same_system(const CylinderFn<S>& f, const CylinderFn<S>& g) {
    if (!f.system() || !g.system() || !(*f.system() == *g.system()))
        throw SystemMismatch("cylinder functions live on different systems");
}
} // namespace detail

/// Reinterprets f on a wider window; the new deeper coordinates are ignored.
template <class S>
CylinderFn<S> extend(const CylinderFn<S>& f, const std::vector<int>& window) {
    const auto& sys = *f.system();
    const int d = sys.dim();
    std::vector<std::size_t> out_block(d), shrink(d);
    for (int k = 0; k < d; ++k) {
        if (window[k] < f.window()[k])
            throw Error("extend cannot shrink a window");
        out_block[k] = detail::ipow_capped(sys.factor(k).alphabet(), window[k], sys.size_cap());
        shrink[k] = detail::ipow_capped(sys.factor(k).alphabet(),
                                        window[k] - f.window()[k], sys.size_cap());
    }
    std::vector<S> out(detail::table_len(sys, window), S(0));
    for (std::size_t idx = 0; idx < out.size(); ++idx) {
        std::size_t rest = idx, in_idx = 0;
        for (int k = d - 1; k >= 0; --k) {
            std::size_t b = rest % out_block[k];
            rest /= out_block[k];
            // Dropping the deepest digits keeps the shallow coordinates.
            std::size_t strides = 1;
            for (int j = d - 1; j > k; --j) strides *= f.block_size(j);
            in_idx += (b / shrink[k]) * strides;
        }
        out[idx] = f.table()[in_idx];
    }
    return CylinderFn<S>(f.system(), window, std::move(out));
}

/// Common refinement: both arguments re-expressed on the pointwise max window.
template <class S>
std::pair<CylinderFn<S>, CylinderFn<S>> align(const CylinderFn<S>& f,
                                              const CylinderFn<S>& g) {
    detail::require_same_system(f, g);
    std::vector<int> w(f.window());
    bool fgrow = false, ggrow = false;
    for (int k = 0; k < f.system()->dim(); ++k) {
        w[k] = std::max(f.window()[k], g.window()[k]);
        fgrow |= w[k] != f.window()[k];
        ggrow |= w[k] != g.window()[k];
    }
    return {fgrow ? extend(f, w) : f, ggrow ? extend(g, w) : g};
}

template <class S>
CylinderFn<S> map_entries(const CylinderFn<S>& f, const CylinderFn<S>& g,
                          S (*op)(const S&, const S&)) {
    auto [a, b] = align(f, g);
    std::vector<S> out(a.table());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = op(out[i], b.table()[i]);
    return CylinderFn<S>(a.system(), a.window(), std::move(out));
}

template <class S>
CylinderFn<S> operator+(const CylinderFn<S>& f, const CylinderFn<S>& g) {
    return map_entries<S>(f, g, [](const S& x, const S& y) { return S(x + y); });
}
template <class S>
CylinderFn<S> operator-(const CylinderFn<S>& f, const CylinderFn<S>& g) {
    return map_entries<S>(f, g, [](const S& x, const S& y) { return S(x - y); });
}
/// Pointwise product.
template <class S>
CylinderFn<S> operator*(const CylinderFn<S>& f, const CylinderFn<S>& g) {
    return map_entries<S>(f, g, [](const S& x, const S& y) { return S(x * y); });
}
template <class S>
CylinderFn<S> operator-(const CylinderFn<S>& f) {
    std::vector<S> out(f.table());
    for (S& v : out) v = S(-v);
    return CylinderFn<S>(f.system(), f.window(), std::move(out));
}
template <class S>
CylinderFn<S> operator*(const S& c, const CylinderFn<S>& f) {
    std::vector<S> out(f.table());
    for (S& v : out) v = S(c * v);
    return CylinderFn<S>(f.system(), f.window(), std::move(out));
}
template <class S>
CylinderFn<S> operator*(const CylinderFn<S>& f, const S& c) { return c * f; }
template <class S>
CylinderFn<S> operator/(const CylinderFn<S>& f, const S& c) {
    std::vector<S> out(f.table());
    for (S& v : out) v = S(v / c);
    return CylinderFn<S>(f.system(), f.window(), std::move(out));
}

/// Path-measure weights for one direction: entry b is the probability of the
/// length-w letter word encoded by b. Sums to 1 by construction.
template <class S>
std::vector<S> path_weights(const Factor<S>& fac, int w) {
    if (w == 0) return {S(1)};
    const int A = fac.alphabet();
    std::size_t len = 1;
    for (int i = 0; i < w; ++i) len *= A;
    std::vector<S> wt(len);
    std::vector<int> digits(w, 0);
    for (std::size_t b = 0; b < len; ++b) {
        std::size_t rest = b;
        for (int i = w - 1; i >= 0; --i) { digits[i] = rest % A; rest /= A; }
        S p = fac.stationary()[digits[0]];
        for (int i = 0; i + 1 < w; ++i) p = S(p * fac.transition(digits[i], digits[i + 1]));
        wt[b] = p;
    }
    return wt;
}

/// Integrates direction k out entirely (window becomes 0 there).
template <class S>
CylinderFn<S> integrate_direction(const CylinderFn<S>& f, int k) {
    f.system()->check_direction(k);
    if (f.window()[k] == 0) return f;
    auto v = f.dir_view(k);
    auto wt = path_weights(f.system()->factor(k), f.window()[k]);
    std::vector<int> w(f.window());
    w[k] = 0;
    std::vector<S> out(v.outer * v.inner, S(0));
    for (std::size_t o = 0; o < v.outer; ++o)
        for (std::size_t b = 0; b < v.block; ++b) {
            if (wt[b] == 0) continue;
            for (std::size_t i = 0; i < v.inner; ++i)
                out[o * v.inner + i] =
                    S(out[o * v.inner + i] + wt[b] * f.table()[(o * v.block + b) * v.inner + i]);
        }
    return CylinderFn<S>(f.system(), std::move(w), std::move(out));
}

template <class S>
S expectation(const CylinderFn<S>& f) {
    CylinderFn<S> g = f;
    for (int k = f.system()->dim() - 1; k >= 0; --k) g = integrate_direction(g, k);
    return g.table()[0];
}

template <class S>
S inner_product(const CylinderFn<S>& f, const CylinderFn<S>& g) {
    return expectation(f * g);
}

template <class S>
S norm_sq(const CylinderFn<S>& f) {
    return expectation(f * f);
}

/// sqrt of the L2 norm as a double; exact callers should use norm_sq.
template <class S>
double norm_l2(const CylinderFn<S>& f) {
    return std::sqrt(ScalarTraits<S>::to_double(norm_sq(f)));
}

/// Equality almost everywhere: the L2 norm of the difference vanishes
/// (within the system tolerance in float mode).
template <class S>
bool is_zero_ae(const CylinderFn<S>& f) {
    double tol = f.system()->tolerance();
    return scalar_is_zero(norm_sq(f), tol * tol);
}
template <class S>
bool equal_ae(const CylinderFn<S>& f, const CylinderFn<S>& g) {
    return is_zero_ae(f - g);
}

/// Trims every direction whose deepest coordinate the table ignores.
template <class S>
CylinderFn<S> canonicalize(const CylinderFn<S>& f) {
    CylinderFn<S> g = f;
    const int d = f.system()->dim();
    double tol = f.system()->tolerance();
    for (int k = 0; k < d; ++k) {
        for (;;) {
            if (g.window()[k] == 0) break;
            const int A = g.system()->factor(k).alphabet();
            auto v = g.dir_view(k);
            std::size_t outer_blocks = v.block / A;
            bool constant = true;
            for (std::size_t o = 0; o < v.outer && constant; ++o)
                for (std::size_t b = 0; b < outer_blocks && constant; ++b)
                    for (int a = 1; a < A && constant; ++a)
                        for (std::size_t i = 0; i < v.inner; ++i) {
                            const S& ref = g.table()[(o * v.block + b * A) * v.inner + i];
                            const S& alt = g.table()[(o * v.block + b * A + a) * v.inner + i];
                            if (!scalar_is_zero(S(ref - alt), tol)) { constant = false; break; }
                        }
            if (!constant) break;
            std::vector<int> w(g.window());
            --w[k];
            std::vector<S> out(v.outer * outer_blocks * v.inner);
            for (std::size_t o = 0; o < v.outer; ++o)
                for (std::size_t b = 0; b < outer_blocks; ++b)
                    for (std::size_t i = 0; i < v.inner; ++i)
                        out[(o * outer_blocks + b) * v.inner + i] =
                            g.table()[(o * v.block + b * A) * v.inner + i];
            g = CylinderFn<S>(g.system(), std::move(w), std::move(out));
        }
    }
    return g;
}

/// Structural equality of canonical forms (float mode compares entrywise
/// within the system tolerance). Distinct from equal_ae, which is the L2
/// almost-everywhere notion.
template <class S>
bool operator==(const CylinderFn<S>& f, const CylinderFn<S>& g) {
    if (!f.system() || !g.system()) return !f.system() && !g.system();
    if (!(*f.system() == *g.system())) return false;
    CylinderFn<S> a = canonicalize(f), b = canonicalize(g);
    if (a.window() != b.window()) return false;
    double tol = f.system()->tolerance();
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!scalar_is_zero(S(a.table()[i] - b.table()[i]), tol)) return false;
    return true;
}

} // namespace martcob
