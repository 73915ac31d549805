#include <catch2/catch_amalgamated.hpp>

#include "common.hpp"

using namespace martcob;

namespace {

SystemPtr<Rational> mixed_system() {
    std::vector<std::vector<Rational>> q{{rat("1/2"), rat("1/2")},
                                         {rat("1/4"), rat("3/4")}};
    return System<Rational>::make({Factor<Rational>::markov(q, std::nullopt),
                                   Factor<Rational>::bernoulli({rat("1/2"), rat("1/2")})});
}

} // namespace

TEST_CASE("shift composition matches direct index shifting") {
    for (auto sys : {coin_system(2), mixed_system()}) {
        CounterRng rng(21, 0);
        const int d = sys->dim();
        for (int i = 0; i < 15; ++i) {
            auto f = random_function<Rational>(sys, random_window(*sys, rng, 2), rng);
            for_each_in_box(MultiIndex::zeros(d), MultiIndex::ones(d).plus(MultiIndex::ones(d)),
                            [&](const MultiIndex& n) {
                                CylinderFn<Rational> uf = koopman_pow(n, f);
                                oracle::for_each_word(*sys, uf.window(), [&](const oracle::Word& w) {
                                    REQUIRE(oracle::value(uf, w) ==
                                            oracle::shifted_value(f, n, w));
                                });
                            });
        }
    }
}

TEST_CASE("shifting preserves the inner product") {
    auto sys = mixed_system();
    CounterRng rng(22, 0);
    for (int i = 0; i < 10; ++i) {
        auto f = random_function<Rational>(sys, random_window(*sys, rng, 2), rng);
        auto g = random_function<Rational>(sys, random_window(*sys, rng, 2), rng);
        for (int k = 0; k < sys->dim(); ++k) {
            REQUIRE(inner_product(koopman(k, f), koopman(k, g)) == inner_product(f, g));
            REQUIRE(norm_sq(transfer(k, f)) <= norm_sq(f));
        }
    }
}

// The averaging operator is pinned as the adjoint of the shift: testing it
// against every indicator of its input window is a complete characterization,
// because the indicators form a basis.
TEST_CASE("averaging operator is the shift's adjoint on a full basis") {
    for (auto sys : {coin_system(1), chain_system(), coin_system(2)}) {
        const int d = sys->dim();
        CounterRng rng(23, 0);
        for (int rep = 0; rep < 4; ++rep) {
            auto h = random_function<Rational>(sys, random_window(*sys, rng, 2), rng);
            for (int k = 0; k < d; ++k) {
                CylinderFn<Rational> th = transfer(k, h);
                const std::vector<int>& w = th.window();
                for (std::size_t idx = 0; idx < th.size(); ++idx) {
                    auto delta = oracle::indicator<Rational>(sys, w, idx);
                    MultiIndex e = MultiIndex::unit(d, k);
                    REQUIRE(oracle::inner(th, delta) ==
                            oracle::shifted_inner(delta, e, h, MultiIndex::zeros(d)));
                }
            }
        }
    }
}

TEST_CASE("averaging after shifting returns the input") {
    for (auto sys : {coin_system(2), mixed_system()}) {
        CounterRng rng(24, 0);
        for (int i = 0; i < 10; ++i) {
            auto f = random_function<Rational>(sys, random_window(*sys, rng, 2), rng);
            for (int k = 0; k < sys->dim(); ++k) {
                CylinderFn<Rational> x = f;
                for (int n = 1; n <= 4; ++n) {
                    x = koopman(k, x);
                    CylinderFn<Rational> back = x;
                    for (int t = 0; t < n; ++t) back = transfer(k, back);
                    REQUIRE(equal_ae(back, f));
                }
            }
        }
    }
}

TEST_CASE("operators in different directions commute in every combination") {
    for (auto sys : {coin_system(2), mixed_system()}) {
        CounterRng rng(25, 0);
        for (int i = 0; i < 10; ++i) {
            auto f = random_function<Rational>(sys, random_window(*sys, rng, 2), rng);
            REQUIRE(verify_complete_commutation(0, 1, f));
            REQUIRE(equal_ae(koopman(0, koopman(1, f)), koopman(1, koopman(0, f))));
            REQUIRE(equal_ae(transfer(0, transfer(1, f)), transfer(1, transfer(0, f))));
            REQUIRE(equal_ae(koopman(0, transfer(1, f)), transfer(1, koopman(0, f))));
        }
    }
}

TEST_CASE("conditional averages are orthogonal projections") {
    auto sys = mixed_system();
    CounterRng rng(26, 0);
    const int d = sys->dim();
    for (int i = 0; i < 8; ++i) {
        auto f = random_function<Rational>(sys, random_window(*sys, rng, 2), rng);
        auto g = random_function<Rational>(sys, random_window(*sys, rng, 2), rng);
        for_each_in_box(MultiIndex::zeros(d), MultiIndex{2, 2}, [&](const MultiIndex& n) {
            CylinderFn<Rational> ef = cond_exp_multi(n, f);
            REQUIRE(equal_ae(cond_exp_multi(n, ef), ef));
            REQUIRE(inner_product(ef, g) == inner_product(f, cond_exp_multi(n, g)));
        });
        // projections along nested levels compose to the finer one
        CylinderFn<Rational> a = cond_exp_level(0, 1, cond_exp_level(0, 2, f));
        CylinderFn<Rational> b = cond_exp_level(0, 2, f);
        REQUIRE(equal_ae(a, b));
    }
    CylinderFn<Rational> one = CylinderFn<Rational>::constant(sys, Rational(1));
    REQUIRE(equal_ae(cond_exp_multi(MultiIndex{3, 1}, one), one));
}

// A projected function only reads coordinates at or past the level: checking
// the projection against shifted test functions pins it uniquely.
TEST_CASE("conditional average is characterized by shifted test functions") {
    auto sys = chain_system();
    CounterRng rng(27, 0);
    for (int i = 0; i < 10; ++i) {
        auto f = random_function<Rational>(sys, {2}, rng);
        for (long n = 1; n <= 3; ++n) {
            MultiIndex lvl{n};
            CylinderFn<Rational> ef = cond_exp_multi(lvl, f);
            for (std::size_t idx = 0; idx < 4; ++idx) {
                auto phi = oracle::indicator<Rational>(sys, {2}, idx);
                REQUIRE(oracle::shifted_inner(ef, MultiIndex::zeros(1), phi, lvl) ==
                        oracle::shifted_inner(f, MultiIndex::zeros(1), phi, lvl));
            }
        }
    }
}

TEST_CASE("class averages fix invariant functions and kill centered ones") {
    auto sys = chain_system();
    CylinderFn<Rational> f(sys, {1}, {rat("2/3"), rat("-1/3")});
    CylinderFn<Rational> ef = invariant_projection(0, f);
    REQUIRE(is_zero_ae(ef));

    // two closed classes: the average within each class survives
    std::vector<std::vector<Rational>> id{{rat("1"), rat("0")}, {rat("0"), rat("1")}};
    auto two = System<Rational>::make(
        {Factor<Rational>::markov(id, std::vector<Rational>{rat("1/2"), rat("1/2")})});
    CylinderFn<Rational> h(two, {1}, {rat("3"), rat("7")});
    CylinderFn<Rational> eh = invariant_projection(0, h);
    REQUIRE(equal_ae(eh, h));
    REQUIRE_FALSE(is_normal(h));
}

TEST_CASE("tail projection needs an aperiodic factor") {
    auto flip = System<Rational>::make({Factor<Rational>::markov(
        {{rat("0"), rat("1")}, {rat("1"), rat("0")}}, std::nullopt)});
    CylinderFn<Rational> f(flip, {1}, {rat("1/2"), rat("-1/2")});
    REQUIRE_THROWS_AS(tail_projection(0, f), PeriodicChainUnsupported);
    REQUIRE_NOTHROW(invariant_projection(0, f));

    auto sys = chain_system();
    CylinderFn<Rational> g(sys, {1}, {rat("2/3"), rat("-1/3")});
    REQUIRE(is_zero_ae(tail_projection(0, g)));
}

TEST_CASE("projection relations hold for every direction subset") {
    for (auto sys : {coin_system(2), mixed_system()}) {
        CounterRng rng(28, 0);
        for (int i = 0; i < 12; ++i) {
            auto f = random_function<Rational>(sys, random_window(*sys, rng, 2), rng);
            for (const SubsetMask& mask : all_subsets(sys->dim())) {
                ProjectionRelations r = verify_projection_relations(mask, f);
                REQUIRE(r.absorb_ok);
                REQUIRE(r.annihilate_ok);
                REQUIRE(r.kernels_agree);
            }
        }
    }
}

TEST_CASE("kernel membership is decided consistently by all three routes") {
    auto sys = coin_system(2);
    CounterRng rng(29, 0);
    SubsetMask mask = SubsetMask::single(0);
    for (int i = 0; i < 10; ++i) {
        // reads nothing in direction 1, so every difference operator in the
        // mask kills it
        auto e = random_function<Rational>(sys, {0, 2}, rng);
        ProjectionRelations r = verify_projection_relations(mask, e);
        REQUIRE(r.in_ker_transfer);
        REQUIRE(r.in_ker_koopman);
        REQUIRE(r.in_ker_invariant);

        auto f = normal_project(random_function<Rational>(sys, {2, 1}, rng));
        if (is_zero_ae(f)) continue;
        ProjectionRelations q = verify_projection_relations(SubsetMask::full(2), f);
        REQUIRE_FALSE(q.in_ker_transfer);
        REQUIRE_FALSE(q.in_ker_koopman);
        REQUIRE_FALSE(q.in_ker_invariant);
    }
}
