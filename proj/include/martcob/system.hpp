#pragma once

#include <cstdlib>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "linalg.hpp"
#include "scalar.hpp"

namespace martcob {

enum class FactorKind { bernoulli, markov };

namespace detail {
// Probability identities are checked tighter than general float comparisons.
inline constexpr double kProbTol = 1e-12;

template <class S>
bool prob_eq(const S& a, const S& b) {
    if constexpr (ScalarTraits<S>::exact)
        return a == b;
    else
        return std::fabs(double(a - b)) <= kProbTol;
}
} // namespace detail

/**
 * One independent direction of the product system: either an i.i.d. letter
 * source (bernoulli) or a stationary Markov chain on a finite alphabet.
 *
 * Construction validates everything downstream code relies on: stochasticity,
 * a fully supported stationary vector, and (for markov) the closed-class
 * structure of the support graph. The time-reversed kernel
 * kappa(a|b) = pi(a) Q(a,b) / pi(b) is precomputed here; it is what the
 * adjoint of the shift composes against.
 */
template <class S>
class Factor {
public:
    static Factor bernoulli(std::vector<S> probs) {
        Factor f;
        f.kind_ = FactorKind::bernoulli;
        f.alphabet_ = static_cast<int>(probs.size());
        if (f.alphabet_ < 1) throw Error("bernoulli factor needs a non-empty alphabet");
        validate_distribution(probs, "letter distribution");
        f.pi_ = std::move(probs);
        f.classes_ = {std::vector<int>(f.alphabet_)};
        std::iota(f.classes_[0].begin(), f.classes_[0].end(), 0);
        f.class_of_.assign(f.alphabet_, 0);
        f.periods_ = {1};
        f.class_weight_ = {S(1)};
        return f;
    }

    static Factor markov(std::vector<std::vector<S>> Q,
                         std::optional<std::vector<S>> pi = std::nullopt) {
        Factor f;
        f.kind_ = FactorKind::markov;
        f.alphabet_ = static_cast<int>(Q.size());
        const int A = f.alphabet_;
        if (A < 1) throw Error("markov factor needs a non-empty alphabet");
        f.q_.reserve(std::size_t(A) * A);
        for (const auto& row : Q) {
            if (static_cast<int>(row.size()) != A)
                throw NonStochasticMatrix("transition matrix is not square");
            validate_distribution(row, "transition row");
            f.q_.insert(f.q_.end(), row.begin(), row.end());
        }
        f.analyze_classes();
        if (pi) {
            if (static_cast<int>(pi->size()) != A)
                throw NoStationaryDistribution("pi has wrong length");
            for (const S& p : *pi)
                if (p < 0) throw NegativeProbability("negative stationary mass");
            S sum(0);
            for (const S& p : *pi) sum = S(sum + p);
            if (!detail::prob_eq(sum, S(1)))
                throw NoStationaryDistribution("pi does not sum to 1");
            f.pi_ = std::move(*pi);
        } else {
            f.pi_ = f.derive_stationary();
        }
        for (int a = 0; a < A; ++a)
            if (!(f.pi_[a] > 0))
                throw NoStationaryDistribution(
                    "state " + std::to_string(a) + " has zero stationary mass");
        for (int a = 0; a < A; ++a) {
            S col(0);
            for (int b = 0; b < A; ++b) col = S(col + f.pi_[b] * f.q(b, a));
            if (!detail::prob_eq(col, f.pi_[a]))
                throw NoStationaryDistribution("pi is not stationary for Q");
        }
        for (int a = 0; a < A; ++a)
            if (f.class_of_[a] < 0)
                throw NoStationaryDistribution(
                    "state " + std::to_string(a) +
                    " is transient yet carries stationary mass");
        f.finish_classes();
        return f;
    }

    FactorKind kind() const { return kind_; }
    int alphabet() const { return alphabet_; }

    /// Stationary one-letter distribution (for bernoulli, the letter probs).
    const std::vector<S>& stationary() const { return pi_; }

    /// Forward one-step kernel. Bernoulli reads as an i.i.d. chain.
    S transition(int a, int b) const {
        return kind_ == FactorKind::bernoulli ? pi_[b] : q_[idx(a, b)];
    }

    /// Time-reversed kernel kappa(a|b): law of the previous letter given b.
    S backward(int a, int b) const {
        return kind_ == FactorKind::bernoulli ? pi_[a] : kappa_[idx(a, b)];
    }

    int num_classes() const { return static_cast<int>(classes_.size()); }
    const std::vector<std::vector<int>>& classes() const { return classes_; }
    int class_of(int a) const { return class_of_[a]; }
    const S& class_weight(int c) const { return class_weight_[c]; }
    int period(int c) const { return periods_[c]; }
    bool aperiodic() const {
        for (int p : periods_)
            if (p != 1) return false;
        return true;
    }

    bool operator==(const Factor& o) const {
        return kind_ == o.kind_ && alphabet_ == o.alphabet_ && pi_ == o.pi_ &&
               q_ == o.q_;
    }

private:
    Factor() = default;

    static void validate_distribution(const std::vector<S>& v, const char* what) {
        S sum(0);
        for (const S& p : v) {
            if (p < 0) throw NegativeProbability(std::string("negative entry in ") + what);
            sum = S(sum + p);
        }
        if (!detail::prob_eq(sum, S(1)))
            throw NonStochasticMatrix(std::string(what) + " does not sum to 1");
    }

    std::size_t idx(int a, int b) const { return std::size_t(a) * alphabet_ + b; }
    const S& q(int a, int b) const { return q_[idx(a, b)]; }

    bool edge(int a, int b) const {
        if constexpr (ScalarTraits<S>::exact)
            return q(a, b) != 0;
        else
            return double(q(a, b)) > detail::kProbTol;
    }

    /// Strongly connected components of the support graph; keeps only the
    /// closed ones (states outside every closed class get class_of = -1).
    void analyze_classes() {
        const int A = alphabet_;
        std::vector<char> reach(std::size_t(A) * A, 0);
        for (int a = 0; a < A; ++a)
            for (int b = 0; b < A; ++b) reach[std::size_t(a) * A + b] = edge(a, b);
        for (int m = 0; m < A; ++m)
            for (int a = 0; a < A; ++a)
                if (reach[std::size_t(a) * A + m])
                    for (int b = 0; b < A; ++b)
                        if (reach[std::size_t(m) * A + b]) reach[std::size_t(a) * A + b] = 1;
        class_of_.assign(A, -1);
        for (int a = 0; a < A; ++a) {
            if (class_of_[a] >= 0) continue;
            std::vector<int> comp{a};
            for (int b = a + 1; b < A; ++b)
                if (reach[std::size_t(a) * A + b] && reach[std::size_t(b) * A + a])
                    comp.push_back(b);
            bool closed = true;
            for (int u : comp)
                for (int b = 0; b < A && closed; ++b)
                    if (edge(u, b) && !(reach[std::size_t(b) * A + a] && reach[std::size_t(a) * A + b]))
                        closed = false;
            if (!closed) continue;
            int c = static_cast<int>(classes_.size());
            for (int u : comp) class_of_[u] = c;
            classes_.push_back(std::move(comp));
        }
    }

    /// Periods, class weights, and the reversed kernel; runs after pi is fixed.
    void finish_classes() {
        const int A = alphabet_;
        periods_.clear();
        class_weight_.clear();
        for (const auto& comp : classes_) {
            std::vector<int> level(A, -1);
            std::vector<int> queue{comp[0]};
            level[comp[0]] = 0;
            for (std::size_t h = 0; h < queue.size(); ++h) {
                int u = queue[h];
                for (int v = 0; v < A; ++v)
                    if (edge(u, v) && level[v] < 0 && class_of_[v] == class_of_[u]) {
                        level[v] = level[u] + 1;
                        queue.push_back(v);
                    }
            }
            int g = 0;
            for (int u : comp)
                for (int v : comp)
                    if (edge(u, v)) g = std::gcd(g, level[u] + 1 - level[v]);
            periods_.push_back(g == 0 ? 1 : std::abs(g));
            S w(0);
            for (int u : comp) w = S(w + pi_[u]);
            class_weight_.push_back(w);
        }
        kappa_.assign(std::size_t(A) * A, S(0));
        for (int b = 0; b < A; ++b)
            for (int a = 0; a < A; ++a)
                kappa_[idx(a, b)] = S(pi_[a] * q(a, b) / pi_[b]);
    }

    std::vector<S> derive_stationary() const {
        const int A = alphabet_;
        if (num_classes() != 1 || static_cast<int>(classes_[0].size()) != A)
            throw NoStationaryDistribution(
                "transition matrix is reducible; supply pi explicitly");
        // Rows: (Q^T - I) pi = 0 plus the normalization sum(pi) = 1.
        std::vector<S> M(std::size_t(A + 1) * A, S(0));
        std::vector<S> rhs(A + 1, S(0));
        for (int a = 0; a < A; ++a)
            for (int b = 0; b < A; ++b) {
                S v = q(b, a);
                if (a == b) v = S(v - S(1));
                M[std::size_t(a) * A + b] = v;
            }
        for (int b = 0; b < A; ++b) M[std::size_t(A) * A + b] = S(1);
        rhs[A] = S(1);
        auto sol = solve_linear<S>(std::move(M), A + 1, A, std::move(rhs));
        if (!sol.consistent)
            throw NoStationaryDistribution("failed to derive a stationary vector");
        return sol.x;
    }

    FactorKind kind_ = FactorKind::bernoulli;
    int alphabet_ = 0;
    std::vector<S> pi_;
    std::vector<S> q_;     // row-major Q, markov only
    std::vector<S> kappa_; // row-major kappa(a|b) at [a][b], markov only
    std::vector<std::vector<int>> classes_;
    std::vector<int> class_of_;
    std::vector<int> periods_;
    std::vector<S> class_weight_;
};

/// Product of independent factors; directions are 0-based in this API.
template <class S>
class System {
public:
    System(std::vector<Factor<S>> factors, std::size_t size_cap, double tolerance)
        : factors_(std::move(factors)), size_cap_(size_cap), tol_(tolerance) {
        if (factors_.empty()) throw Error("system needs at least one factor");
        if (factors_.size() > 30) throw Error("too many factors");
        if (size_cap_ == 0) throw Error("size cap must be positive");
        if (tol_ < 0) throw Error("tolerance must be non-negative");
    }

    static std::shared_ptr<const System> make(
        std::vector<Factor<S>> factors,
        std::optional<std::size_t> size_cap = std::nullopt,
        double tolerance = 1e-9) {
        return std::make_shared<const System>(
            std::move(factors), size_cap.value_or(default_size_cap()), tolerance);
    }

    int dim() const { return static_cast<int>(factors_.size()); }
    const Factor<S>& factor(int k) const { return factors_[k]; }
    const std::vector<Factor<S>>& factors() const { return factors_; }
    std::size_t size_cap() const { return size_cap_; }
    double tolerance() const { return tol_; }

    void check_direction(int k) const {
        if (k < 0 || k >= dim())
            throw BadDirection("direction " + std::to_string(k + 1) +
                               " out of range for d=" + std::to_string(dim()));
    }

    bool aperiodic(int k) const { return factors_[k].aperiodic(); }

    /// Identity of the underlying process; cap and tolerance are runtime
    /// configuration and deliberately excluded.
    bool operator==(const System& o) const { return factors_ == o.factors_; }

    /// MARTCOB_SIZE_CAP when set, else 2^24 table entries.
    static std::size_t default_size_cap() {
        const char* env = std::getenv("MARTCOB_SIZE_CAP");
        if (!env || !*env) return std::size_t(1) << 24;
        char* end = nullptr;
        unsigned long long v = std::strtoull(env, &end, 10);
        if (!end || *end != '\0' || v == 0)
            throw ParseError("MARTCOB_SIZE_CAP must be a positive integer");
        return static_cast<std::size_t>(v);
    }

private:
    std::vector<Factor<S>> factors_;
    std::size_t size_cap_;
    double tol_;
};

template <class S>
using SystemPtr = std::shared_ptr<const System<S>>;

} // namespace martcob
