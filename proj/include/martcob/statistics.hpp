#pragma once

#include <algorithm>
#include <cmath>
#include <thread>

#include "decomposition.hpp"
#include "rng.hpp"

namespace martcob {

/// S_N f = sum of U^n f over the box 0 <= n <= N-1; zero whenever some
/// N_k = 0 (the empty-box convention the averaging formulas rely on).
template <class S>
CylinderFn<S> partial_sum(const MultiIndex& N, const CylinderFn<S>& f) {
    const int d = f.system()->dim();
    if (N.dim() != d) throw Error("N has wrong dimension");
    if (N.any_zero()) return CylinderFn<S>::zero(f.system());
    MultiIndex hi = MultiIndex::zeros(d);
    for (int k = 0; k < d; ++k) hi[k] = N[k] - 1;
    CylinderFn<S> acc = CylinderFn<S>::zero(f.system());
    for_each_in_box(MultiIndex::zeros(d), hi, [&](const MultiIndex& n) {
        acc = acc + koopman_pow(n, f);
    });
    return acc;
}

/// S*_M f = sum of U*^n f over 0 <= n <= M-1, zero when some M_k = 0.
template <class S>
CylinderFn<S> adjoint_partial_sum(const MultiIndex& M, const CylinderFn<S>& f) {
    const int d = f.system()->dim();
    if (M.dim() != d) throw Error("M has wrong dimension");
    if (M.any_zero()) return CylinderFn<S>::zero(f.system());
    MultiIndex hi = MultiIndex::zeros(d);
    for (int k = 0; k < d; ++k) hi[k] = M[k] - 1;
    CylinderFn<S> acc = CylinderFn<S>::zero(f.system());
    for_each_in_box(MultiIndex::zeros(d), hi, [&](const MultiIndex& n) {
        acc = acc + transfer_pow(n, f);
    });
    return acc;
}

/// The martingale component's variance two independent ways:
///   direct    = |prod_k (I - E^1_k) g|^2
///   expansion = sum over subsets S of (-1)^{|S|} |prod_{m in S} U_m* g|^2.
/// The two agree for every g; dual-route callers must keep both.
template <class S>
struct VarianceSplit {
    S direct;
    S expansion;
};

template <class S>
VarianceSplit<S> martingale_variance(const CylinderFn<S>& g) {
    const int d = g.system()->dim();
    VarianceSplit<S> v{S(0), S(0)};
    v.direct = norm_sq(component_base(SubsetMask::empty(), g));
    for (const SubsetMask& mask : all_subsets(d)) {
        S w = norm_sq(witness(mask, g));
        v.expansion = mask.cardinality() % 2 ? S(v.expansion - w) : S(v.expansion + w);
    }
    return v;
}

/// d=1 conditional variance of the martingale increment, two forms:
///   form1 = E^1 |(I - U U*) g|^2
///   form2 = U U* (g^2) - (U U* g)^2.
template <class S>
struct CondVarForms {
    CylinderFn<S> form1;
    CylinderFn<S> form2;
};

template <class S>
CondVarForms<S> conditional_variance_d1(const CylinderFn<S>& g) {
    if (g.system()->dim() != 1)
        throw DimensionNotOne("conditional variance forms are a d=1 notion");
    CylinderFn<S> h = g - cond_exp_level(0, 1, g);
    CondVarForms<S> out;
    out.form1 = cond_exp_level(0, 1, h * h);
    CylinderFn<S> eg = cond_exp_level(0, 1, g);
    out.form2 = cond_exp_level(0, 1, g * g) - eg * eg;
    return out;
}

/// |S_N A_empty|^2 = N_1...N_d * sigma^2: the shifted copies of the
/// martingale part are pairwise orthogonal, so the norm grows exactly
/// linearly in the box volume.
template <class S>
struct MdNormIdentity {
    S lhs;
    S rhs;
    bool ok = false;
};

template <class S>
MdNormIdentity<S> md_sum_norm_identity(const CylinderFn<S>& g, const MultiIndex& N) {
    CylinderFn<S> a0 = component_base(SubsetMask::empty(), g);
    MdNormIdentity<S> r;
    r.lhs = norm_sq(partial_sum(N, a0));
    S vol = ScalarTraits<S>::from_fraction(N.product(), 1);
    r.rhs = S(vol * norm_sq(a0));
    double tol = g.system()->tolerance();
    r.ok = scalar_is_zero(S(r.lhs - r.rhs), tol * tol);
    return r;
}

/// One row of the coboundary growth scan: |S_N A_S|^2 normalized by the
/// volume of the directions outside S stays below 4^{|S|} |B_S|^2.
template <class S>
struct CoboundaryRow {
    MultiIndex N;
    S normalized_norm_sq;
    S bound_sq;
    bool ok = false;
};

template <class S>
std::vector<CoboundaryRow<S>> coboundary_bound_scan(const CylinderFn<S>& g,
                                                    const SubsetMask& mask,
                                                    const std::vector<MultiIndex>& Ns) {
    const int d = g.system()->dim();
    CylinderFn<S> a = component(mask, g);
    CylinderFn<S> base = component_base(mask, g);
    S bound = norm_sq(base);
    for (int i = 0; i < mask.cardinality(); ++i) bound = S(bound * S(4));
    double tol = g.system()->tolerance();
    std::vector<CoboundaryRow<S>> rows;
    for (const MultiIndex& N : Ns) {
        if (N.dim() != d) throw Error("N has wrong dimension");
        CoboundaryRow<S> row;
        row.N = N;
        long outside_vol = 1;
        for (int l = 0; l < d; ++l)
            if (!mask.contains(l)) outside_vol *= N[l];
        S denom = ScalarTraits<S>::from_fraction(outside_vol == 0 ? 1 : outside_vol, 1);
        row.normalized_norm_sq = S(norm_sq(partial_sum(N, a)) / denom);
        row.bound_sq = bound;
        if constexpr (ScalarTraits<S>::exact)
            row.ok = row.normalized_norm_sq <= row.bound_sq;
        else
            row.ok = double(row.normalized_norm_sq) <= double(row.bound_sq) + tol;
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace detail {

/// Running first four central moments, mergeable pairwise without loss of
/// the one-pass stability.
struct Moments {
    long n = 0;
    double mean = 0, m2 = 0, m3 = 0, m4 = 0;

    void add(double x) {
        const double n1 = double(n);
        ++n;
        const double delta = x - mean;
        const double dn = delta / double(n);
        const double dn2 = dn * dn;
        const double t1 = delta * dn * n1;
        mean += dn;
        m4 += t1 * dn2 * (double(n) * double(n) - 3.0 * double(n) + 3.0) +
              6.0 * dn2 * m2 - 4.0 * dn * m3;
        m3 += t1 * dn * (double(n) - 2.0) - 3.0 * dn * m2;
        m2 += t1;
    }

    static Moments merge(const Moments& a, const Moments& b) {
        if (a.n == 0) return b;
        if (b.n == 0) return a;
        Moments r;
        const double na = double(a.n), nb = double(b.n);
        const double nn = na + nb;
        const double delta = b.mean - a.mean;
        r.n = a.n + b.n;
        r.mean = a.mean + delta * nb / nn;
        r.m2 = a.m2 + b.m2 + delta * delta * na * nb / nn;
        r.m3 = a.m3 + b.m3 +
               delta * delta * delta * na * nb * (na - nb) / (nn * nn) +
               3.0 * delta * (na * b.m2 - nb * a.m2) / nn;
        r.m4 = a.m4 + b.m4 +
               delta * delta * delta * delta * na * nb *
                   (na * na - na * nb + nb * nb) / (nn * nn * nn) +
               6.0 * delta * delta * (na * na * b.m2 + nb * nb * a.m2) / (nn * nn) +
               4.0 * delta * (na * b.m3 - nb * a.m3) / nn;
        return r;
    }
};

template <class S>
struct FactorSampler {
    std::vector<double> init_cdf;
    std::vector<std::vector<double>> row_cdf;

    explicit FactorSampler(const Factor<S>& fac) {
        const int A = fac.alphabet();
        double acc = 0;
        for (int a = 0; a < A; ++a) {
            acc += ScalarTraits<S>::to_double(fac.stationary()[a]);
            init_cdf.push_back(acc);
        }
        row_cdf.resize(A);
        for (int a = 0; a < A; ++a) {
            acc = 0;
            for (int b = 0; b < A; ++b) {
                acc += ScalarTraits<S>::to_double(fac.transition(a, b));
                row_cdf[a].push_back(acc);
            }
        }
    }
};

} // namespace detail

struct McOptions {
    long samples = 100000;
    std::uint64_t seed = 0;
    int workers = 1;
    bool collect_quantiles = false;
};

struct McReport {
    long samples = 0;
    std::uint64_t seed = 0;
    int workers = 1;
    MultiIndex N;
    double empirical_mean = 0;
    double empirical_variance = 0;
    double exact_mean = 0;     // of the normalized sum (prod N)^{-1/2} S_N f
    double exact_var = 0;      // exact Var(S_N f) / prod N_k
    double target_sigma2 = 0;  // martingale variance of the solution
    double stderr_variance = 0;
    bool pass = false;
    std::vector<double> quantile_probs;
    std::vector<double> quantiles; // standardized sample quantiles
};

/**
 * Samples stationary paths, evaluates the normalized sum
 * (N_1...N_d)^{-1/2} S_N f on each, and compares the empirical variance
 * against the exactly computed Var(S_N f) / prod N_k: the acceptance band is
 * three standard errors of the variance estimator (via the empirical fourth
 * moment). The target and the sample come from independent code paths; the
 * exact side never looks at the RNG.
 */
template <class S>
McReport mc_simulate(const CylinderFn<S>& f, const MultiIndex& N,
                     const McOptions& opts = {}) {
    const auto& sys = *f.system();
    const int d = sys.dim();
    if (N.dim() != d) throw Error("N has wrong dimension");
    for (int k = 0; k < d; ++k)
        if (N[k] < 1) throw Error("simulation needs N >= 1 in every direction");
    if (opts.samples < 2) throw Error("need at least two samples");
    if (opts.workers < 1) throw Error("need at least one worker");
    if (!is_solvable(f))
        throw NotSolvable("f does not admit the decomposition this run would measure");

    SolveReport<S> solved = solve_direct(f);
    VarianceSplit<S> var = martingale_variance(solved.solution);

    CylinderFn<S> sn = partial_sum(N, f);
    McReport rep;
    rep.samples = opts.samples;
    rep.seed = opts.seed;
    rep.workers = opts.workers;
    rep.N = N;
    const double vol = double(N.product());
    const double root_vol = std::sqrt(vol);
    S ex2 = norm_sq(sn);
    S exm = expectation(sn);
    rep.exact_mean = ScalarTraits<S>::to_double(exm) / root_vol;
    rep.exact_var = ScalarTraits<S>::to_double(S(ex2 - exm * exm)) / vol;
    rep.target_sigma2 = ScalarTraits<S>::to_double(var.direct);

    std::vector<double> table(sn.size());
    for (std::size_t i = 0; i < table.size(); ++i)
        table[i] = ScalarTraits<S>::to_double(sn.table()[i]) / root_vol;
    std::vector<detail::FactorSampler<S>> samplers;
    for (int k = 0; k < d; ++k) samplers.emplace_back(sys.factor(k));
    const auto window = sn.window();
    std::vector<std::size_t> block(d);
    for (int k = 0; k < d; ++k) block[k] = sn.block_size(k);

    std::vector<long> counts(opts.workers, opts.samples / opts.workers);
    for (long i = 0; i < opts.samples % opts.workers; ++i) ++counts[i];
    std::vector<long> starts(opts.workers, 0);
    for (int t = 1; t < opts.workers; ++t) starts[t] = starts[t - 1] + counts[t - 1];

    std::vector<detail::Moments> acc(opts.workers);
    std::vector<double> values;
    if (opts.collect_quantiles) values.assign(opts.samples, 0.0);

    auto run_worker = [&](int t) {
        CounterRng rng(opts.seed, std::uint64_t(t) + 1);
        detail::Moments& m = acc[t];
        for (long s = 0; s < counts[t]; ++s) {
            std::size_t idx = 0;
            for (int k = 0; k < d; ++k) {
                int a = rng.pick(samplers[k].init_cdf);
                std::size_t b = std::size_t(a);
                for (int i = 1; i < window[k]; ++i) {
                    a = rng.pick(samplers[k].row_cdf[a]);
                    b = b * sys.factor(k).alphabet() + std::size_t(a);
                }
                idx = idx * block[k] + b;
            }
            double x = table[idx];
            m.add(x);
            if (opts.collect_quantiles) values[starts[t] + s] = x;
        }
    };

    if (opts.workers == 1) {
        run_worker(0);
    } else {
        std::vector<std::thread> threads;
        for (int t = 0; t < opts.workers; ++t) threads.emplace_back(run_worker, t);
        for (auto& th : threads) th.join();
    }

    // Fixed-shape pairwise merge keeps the result identical for a given
    // worker count no matter how the threads were scheduled.
    std::vector<detail::Moments> level = acc;
    while (level.size() > 1) {
        std::vector<detail::Moments> next;
        for (std::size_t i = 0; i + 1 < level.size(); i += 2)
            next.push_back(detail::Moments::merge(level[i], level[i + 1]));
        if (level.size() % 2) next.push_back(level.back());
        level = std::move(next);
    }
    const detail::Moments total = level[0];

    rep.empirical_mean = total.mean;
    rep.empirical_variance = total.m2 / double(total.n - 1);
    const double m4 = total.m4 / double(total.n);
    const double s2 = rep.empirical_variance;
    const double nn = double(total.n);
    double var_of_var = (m4 - s2 * s2 * (nn - 3.0) / (nn - 1.0)) / nn;
    rep.stderr_variance = std::sqrt(std::max(0.0, var_of_var));
    rep.pass = std::fabs(rep.empirical_variance - rep.exact_var) <=
               3.0 * rep.stderr_variance;

    if (opts.collect_quantiles) {
        std::sort(values.begin(), values.end());
        const double sd = std::sqrt(std::max(rep.exact_var, 1e-300));
        rep.quantile_probs = {0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99};
        for (double p : rep.quantile_probs) {
            auto pos = std::size_t(p * double(values.size() - 1));
            rep.quantiles.push_back((values[pos] - rep.exact_mean) / sd);
        }
    }
    return rep;
}

} // namespace martcob
