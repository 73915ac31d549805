#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "errors.hpp"

namespace martcob {

/// Element of Z_+^d: one non-negative integer per direction.
class MultiIndex {
public:
    MultiIndex() = default;
    explicit MultiIndex(std::vector<long> v) : v_(std::move(v)) { validate(); }
    MultiIndex(std::initializer_list<long> v) : v_(v) { validate(); }
    static MultiIndex zeros(int d) { return MultiIndex(std::vector<long>(d, 0)); }
    static MultiIndex ones(int d) { return MultiIndex(std::vector<long>(d, 1)); }
    static MultiIndex unit(int d, int k) {
        std::vector<long> v(d, 0);
        v.at(k) = 1;
        return MultiIndex(std::move(v));
    }

    int dim() const { return static_cast<int>(v_.size()); }
    long operator[](int k) const { return v_[k]; }
    long& operator[](int k) { return v_[k]; }
    const std::vector<long>& parts() const { return v_; }

    bool operator==(const MultiIndex&) const = default;

    /// Coordinatewise partial order.
    bool leq(const MultiIndex& o) const {
        for (int k = 0; k < dim(); ++k)
            if (v_[k] > o.v_[k]) return false;
        return true;
    }
    bool any_zero() const {
        return std::any_of(v_.begin(), v_.end(), [](long x) { return x == 0; });
    }
    long sum() const { return std::accumulate(v_.begin(), v_.end(), 0L); }
    long product() const {
        return std::accumulate(v_.begin(), v_.end(), 1L,
                               [](long a, long b) { return a * b; });
    }
    long max() const { return *std::max_element(v_.begin(), v_.end()); }

    MultiIndex plus(const MultiIndex& o) const {
        auto r = v_;
        for (int k = 0; k < dim(); ++k) r[k] += o.v_[k];
        return MultiIndex(std::move(r));
    }

    std::string to_string() const {
        std::string s = "(";
        for (int k = 0; k < dim(); ++k) {
            if (k) s += ",";
            s += std::to_string(v_[k]);
        }
        return s + ")";
    }

private:
    void validate() const {
        for (long x : v_)
            if (x < 0) throw Error("negative multi-index entry");
    }
    std::vector<long> v_;
};

/// Runs fn(n) for every n with lo <= n <= hi (coordinatewise), lexicographic
/// order, first coordinate slowest. Empty if any lo[k] > hi[k].
inline void for_each_in_box(const MultiIndex& lo, const MultiIndex& hi,
                            const std::function<void(const MultiIndex&)>& fn) {
    const int d = lo.dim();
    for (int k = 0; k < d; ++k)
        if (lo[k] > hi[k]) return;
    MultiIndex n = lo;
    for (;;) {
        fn(n);
        int k = d - 1;
        while (k >= 0 && n[k] == hi[k]) { n[k] = lo[k]; --k; }
        if (k < 0) return;
        ++n[k];
    }
}

/// Subset of the direction set {0,...,d-1}, stored as a bit mask.
class SubsetMask {
public:
    SubsetMask() = default;
    explicit SubsetMask(std::uint32_t bits) : bits_(bits) {}
    static SubsetMask empty() { return SubsetMask(0); }
    static SubsetMask full(int d) { return SubsetMask((1u << d) - 1u); }
    static SubsetMask single(int k) { return SubsetMask(1u << k); }

    std::uint32_t bits() const { return bits_; }
    bool contains(int k) const { return (bits_ >> k) & 1u; }
    int cardinality() const { return __builtin_popcount(bits_); }
    bool is_empty() const { return bits_ == 0; }
    SubsetMask complement(int d) const {
        return SubsetMask(~bits_ & ((1u << d) - 1u));
    }
    bool operator==(const SubsetMask&) const = default;

    /// Directions in the subset, ascending.
    std::vector<int> members(int d) const {
        std::vector<int> m;
        for (int k = 0; k < d; ++k)
            if (contains(k)) m.push_back(k);
        return m;
    }

    /// Human-readable form with 1-based directions, e.g. "{1,3}".
    std::string to_string(int d) const {
        std::string s = "{";
        bool first = true;
        for (int k = 0; k < d; ++k) {
            if (!contains(k)) continue;
            if (!first) s += ",";
            s += std::to_string(k + 1);
            first = false;
        }
        return s + "}";
    }

private:
    std::uint32_t bits_ = 0;
};

/// All 2^d subsets in mask order (empty set first).
inline std::vector<SubsetMask> all_subsets(int d) {
    std::vector<SubsetMask> out;
    out.reserve(std::size_t(1) << d);
    for (std::uint32_t m = 0; m < (1u << d); ++m) out.emplace_back(m);
    return out;
}

} // namespace martcob
