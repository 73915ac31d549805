// Standalone acceptance gate. Runs every numbered criterion at full count
// and prints one verdict line each; exits nonzero if any line fails.
//
// Wherever a check has an enumeration-based reference route, the reference
// side comes from oracle.hpp rather than the library's own operators.

#include <martcob/martcob.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "oracle.hpp"

using namespace martcob;

namespace {

int failures = 0;

void verdict(int num, const std::string& what, bool ok) {
    std::cout << "criterion " << num << ": " << (ok ? "PASS" : "FAIL") << " - " << what
              << std::endl;
    if (!ok) ++failures;
}

Rational rat(const std::string& s) { return parse_rational(s); }

std::string fx(const std::string& name) {
    return std::string(MARTCOB_FIXTURES_DIR) + "/" + name;
}

SystemPtr<Rational> coin_pair() {
    return parse_system<Rational>(load_json_file(fx("bernoulli_pair.json")));
}

SystemPtr<Rational> chain_coin_pair() {
    return parse_system<Rational>(load_json_file(fx("markov_bernoulli_product.json")));
}

struct CliResult {
    int code = -1;
    std::string out;
};

CliResult run_cli(const std::string& args) {
    std::string cmd = std::string(MARTCOB_CLI_PATH) + " " + args + " 2>/dev/null";
    FILE* p = popen(cmd.c_str(), "r");
    CliResult r;
    if (!p) return r;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
    int st = pclose(p);
    r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    return r;
}

// ---------------------------------------------------------------------------

bool criterion1() {
    bool ok = true;
    for (auto sys : {coin_pair(), chain_coin_pair()}) {
        const int d = sys->dim();
        CounterRng rng(101, 0);
        for (int i = 0; i < 100; ++i) {
            auto f = random_function<Rational>(sys, random_window(*sys, rng, 2), rng);
            auto g = random_function<Rational>(sys, random_window(*sys, rng, 2), rng);
            for (int k = 0; k < d; ++k) {
                // averaging undoes shifting, power by power
                CylinderFn<Rational> x = f;
                for (int n = 1; n <= 4; ++n) {
                    x = koopman(k, x);
                    CylinderFn<Rational> back = x;
                    for (int t = 0; t < n; ++t) back = transfer(k, back);
                    ok = ok && equal_ae(back, f);
                }
                // the two sides of the adjoint pairing, each evaluated by
                // independent enumeration
                MultiIndex e = MultiIndex::unit(d, k);
                Rational lhs = oracle::shifted_inner(f, e, g, MultiIndex::zeros(d));
                Rational rhs = oracle::inner(f, transfer(k, g));
                ok = ok && (lhs == rhs);
            }
            ok = ok && verify_complete_commutation(0, 1, f);
        }
    }
    return ok;
}

bool criterion2() {
    auto sys = coin_pair();
    bool ok = true;
    CounterRng rng(102, 0);
    for (int i = 0; i < 100; ++i) {
        auto f = random_function<Rational>(sys, random_window(*sys, rng, 2), rng);
        for (const SubsetMask& mask : all_subsets(2)) {
            ProjectionRelations r = verify_projection_relations(mask, f);
            ok = ok && r.absorb_ok && r.annihilate_ok && r.kernels_agree;
        }
    }
    // membership equivalence on elements whose status is known by
    // construction: blind in one masked direction => in the kernel,
    // centered projection of a nonzero draw => outside it
    int classified = 0;
    std::vector<SubsetMask> masks{SubsetMask::single(0), SubsetMask::single(1),
                                  SubsetMask::full(2)};
    for (int i = 0; classified < 10; ++i) {
        SubsetMask mask = masks[std::size_t(i) % masks.size()];
        std::vector<int> w = random_window(*sys, rng, 2);
        w[mask.members(2).front()] = 0;
        auto e = random_function<Rational>(sys, w, rng);
        ProjectionRelations r = verify_projection_relations(mask, e);
        ok = ok && r.in_ker_transfer && r.in_ker_koopman && r.in_ker_invariant;
        ++classified;
    }
    classified = 0;
    for (int i = 0; classified < 10; ++i) {
        SubsetMask mask = masks[std::size_t(i) % masks.size()];
        auto cand = prod_i_minus_invariant(
            mask, random_function<Rational>(sys, {2, 2}, rng));
        if (is_zero_ae(cand)) continue;
        ProjectionRelations r = verify_projection_relations(mask, cand);
        ok = ok && !r.in_ker_transfer && !r.in_ker_koopman && !r.in_ker_invariant;
        ++classified;
    }
    return ok;
}

// Seeded strictly centered inputs shared by criteria 3 and 4.
std::vector<CylinderFn<Rational>> strict_inputs(SystemPtr<Rational> sys, int count,
                                                std::uint64_t seed) {
    CounterRng rng(seed, 0);
    std::vector<CylinderFn<Rational>> out;
    while (int(out.size()) < count) {
        auto f = strict_project(random_function<Rational>(sys, random_window(*sys, rng, 2), rng));
        if (!is_zero_ae(f)) out.push_back(std::move(f));
    }
    return out;
}

bool criterion3() {
    bool ok = true;
    for (auto sys : {parse_system<Rational>(load_json_file(fx("bernoulli_half.json"))),
                     coin_pair()}) {
        const int d = sys->dim();
        for (const auto& f : strict_inputs(sys, 25, 103)) {
            SolveReport<Rational> a = solve_direct(f);
            SolveReport<Rational> b = solve_series(f);
            ok = ok && a.residual_norm_sq == 0 && b.residual_norm_sq == 0;
            ok = ok && equal_ae(normal_project(b.solution), a.solution);
            Rational prev(-1);
            for (long n : {2L, 4L, 8L}) {
                MultiIndex N(std::vector<long>(std::size_t(d), n));
                Rational dist = norm_sq(solve_cesaro(f, N).solution - a.solution);
                if (prev >= 0) ok = ok && dist < prev;
                prev = dist;
            }
        }
        // shifted off its mean, the same draw must be turned away
        CounterRng rng(1031, 0);
        auto f = random_function<Rational>(sys, random_window(*sys, rng, 2), rng) +
                 CylinderFn<Rational>::constant(sys, Rational(1));
        bool rejected = false;
        try {
            solve_direct(f);
        } catch (const Unsolvable&) {
            rejected = true;
        }
        ok = ok && rejected;
        rejected = false;
        try {
            solve_series(f);
        } catch (const NotStrictlyNormal&) {
            rejected = true;
        }
        ok = ok && rejected;
    }
    return ok;
}

bool criterion4() {
    bool ok = true;
    for (auto sys : {parse_system<Rational>(load_json_file(fx("bernoulli_half.json"))),
                     coin_pair()}) {
        const int d = sys->dim();
        for (const auto& f : strict_inputs(sys, 25, 103)) {
            CylinderFn<Rational> g = solve_direct(f).solution;
            Decomposition<Rational> dec = decompose(f, g);
            CylinderFn<Rational> sum = CylinderFn<Rational>::zero(sys);
            for (const auto& a : dec.components) sum = sum + a;
            ok = ok && equal_ae(sum, f);
            for (const SubsetMask& mask : all_subsets(d))
                for (int t : mask.complement(d).members(d))
                    ok = ok && is_zero_ae(cond_exp_level(t, 1, dec.components[mask.bits()]));
            if (d == 1) {
                ok = ok && equal_ae(dec.components[0], g - cond_exp_level(0, 1, g));
                CylinderFn<Rational> tg = transfer(0, g);
                ok = ok && equal_ae(dec.components[1], koopman(0, tg) - tg);
            }
        }
    }
    // frozen worked example
    auto sys = parse_system<Rational>(load_json_file(fx("bernoulli_half.json")));
    auto f = parse_function<Rational>(load_json_file(fx("fn_pair_product.json")), sys);
    Decomposition<Rational> dec = decompose(f, solve_direct(f).solution);
    CylinderFn<Rational> a0(sys, {2}, {rat("-1/4"), rat("-3/4"), rat("1/4"), rat("3/4")});
    CylinderFn<Rational> a1(sys, {2}, {rat("0"), rat("1/2"), rat("-1/2"), rat("0")});
    ok = ok && equal_ae(dec.components[0], a0) && equal_ae(dec.components[1], a1);

    auto pair = coin_pair();
    auto fc = parse_function<Rational>(load_json_file(fx("fn_cross_product.json")), pair);
    Decomposition<Rational> dc = decompose(fc, solve_direct(fc).solution);
    ok = ok && dc.components.size() == 4 && dc.all_md_ok() && dc.reassembly_ok;
    return ok;
}

bool criterion5() {
    auto sys = coin_pair();
    bool ok = true;
    CounterRng rng(105, 0);
    int done = 0;
    while (done < 20) {
        auto f = normal_project(random_function<Rational>(sys, {2, 1}, rng));
        if (is_zero_ae(f)) continue;
        CylinderFn<Rational> g = solve_direct(f).solution;
        int blind = done % 2;
        std::vector<int> w = random_window(*sys, rng, 2);
        w[blind] = 0;
        auto e = random_function<Rational>(sys, w, rng);
        Decomposition<Rational> a = decompose(f, g);
        Decomposition<Rational> b = decompose(f, g + e);
        UniquenessReport rep = verify_uniqueness(a.witnesses, b.witnesses);
        ok = ok && rep.sums_equal && rep.all();
        for (bool lv : rep.eliminated) ok = ok && lv;
        for (bool tz : rep.term_zero) ok = ok && tz;
        ++done;
    }
    return ok;
}

bool criterion6() {
    bool ok = true;
    auto half = parse_system<Rational>(load_json_file(fx("bernoulli_half.json")));
    auto pair = coin_pair();
    {
        CounterRng rng(106, 0);
        for (int i = 0; i < 50; ++i) {
            auto g1 = random_function<Rational>(half, random_window(*half, rng, 2), rng);
            auto g2 = random_function<Rational>(pair, random_window(*pair, rng, 2), rng);
            VarianceSplit<Rational> v1 = martingale_variance(g1);
            VarianceSplit<Rational> v2 = martingale_variance(g2);
            ok = ok && v1.direct == v1.expansion && v2.direct == v2.expansion;
        }
    }
    auto f1 = parse_function<Rational>(load_json_file(fx("fn_depth_one.json")), half);
    auto f2 = parse_function<Rational>(load_json_file(fx("fn_pair_product.json")), half);
    auto f3 = parse_function<Rational>(load_json_file(fx("fn_cross_product.json")), pair);
    ok = ok && martingale_variance(solve_direct(f1).solution).direct == rat("1/4");
    ok = ok && martingale_variance(solve_direct(f2).solution).direct == rat("5/16");
    ok = ok && martingale_variance(solve_direct(f3).solution).direct == rat("5/64");

    {
        CounterRng rng(1061, 0);
        for (auto sys : {half, pair}) {
            const int d = sys->dim();
            for (int i = 0; i < 10; ++i) {
                auto g = random_function<Rational>(sys, random_window(*sys, rng, 2), rng);
                for_each_in_box(MultiIndex::ones(d),
                                MultiIndex(std::vector<long>(std::size_t(d), 3)),
                                [&](const MultiIndex& N) {
                                    MdNormIdentity<Rational> r = md_sum_norm_identity(g, N);
                                    ok = ok && r.ok && r.lhs == r.rhs;
                                });
            }
        }
    }
    {
        auto chain = parse_system<Rational>(load_json_file(fx("markov_two_state.json")));
        CounterRng rng(1062, 0);
        for (int i = 0; i < 100; ++i) {
            auto sys = (i % 2) ? chain : half;
            auto g = random_function<Rational>(sys, random_window(*sys, rng, 2), rng);
            CondVarForms<Rational> forms = conditional_variance_d1(g);
            ok = ok && equal_ae(forms.form1, forms.form2);
            ok = ok && expectation(forms.form1) == martingale_variance(g).direct;
        }
    }
    return ok;
}

bool criterion7() {
    bool ok = true;
    const char* names[] = {"bernoulli_half.json",   "bernoulli_pair.json",
                           "markov_two_state.json", "markov_bernoulli_product.json",
                           "markov_flip.json",      "markov_identity.json"};
    for (const char* name : names) {
        auto sys = parse_system<Rational>(load_json_file(fx(name)));
        const int d = sys->dim();
        std::vector<MultiIndex> boxes;
        for_each_in_box(MultiIndex::ones(d), MultiIndex(std::vector<long>(std::size_t(d), 4)),
                        [&](const MultiIndex& N) { boxes.push_back(N); });
        CounterRng rng(107, 0);
        for (int i = 0; i < 5; ++i) {
            auto f = normal_project(random_function<Rational>(sys, random_window(*sys, rng, 2), rng));
            CylinderFn<Rational> g = solve_direct(f).solution;
            for (const SubsetMask& mask : all_subsets(d)) {
                if (mask.is_empty()) continue;
                for (const auto& row : coboundary_bound_scan(g, mask, boxes))
                    ok = ok && row.ok && row.normalized_norm_sq <= row.bound_sq;
            }
        }
    }
    {
        // float lane runs the same scan under its tolerance
        auto sys = parse_system<double>(load_json_file(fx("bernoulli_pair_float.json")));
        std::vector<MultiIndex> boxes;
        for_each_in_box(MultiIndex::ones(2), MultiIndex{4, 4},
                        [&](const MultiIndex& N) { boxes.push_back(N); });
        CounterRng rng(1071, 0);
        for (int i = 0; i < 5; ++i) {
            auto f = normal_project(random_function<double>(sys, random_window(*sys, rng, 2), rng));
            CylinderFn<double> g = solve_direct(f).solution;
            for (const SubsetMask& mask : all_subsets(2)) {
                if (mask.is_empty()) continue;
                for (const auto& row : coboundary_bound_scan(g, mask, boxes))
                    ok = ok && row.ok;
            }
        }
    }
    return ok;
}

bool criterion8() {
    auto sys = parse_system<Rational>(load_json_file(fx("bernoulli_half.json")));
    auto f = parse_function<Rational>(load_json_file(fx("fn_pair_product.json")), sys);
    McOptions opts;
    opts.samples = 100000;
    opts.seed = 42;
    opts.workers = 2;
    opts.collect_quantiles = true;
    auto t0 = std::chrono::steady_clock::now();
    McReport a = mc_simulate(f, MultiIndex{8}, opts);
    McReport b = mc_simulate(f, MultiIndex{8}, opts);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool ok = a.pass;
    ok = ok && a.exact_var == 19.0 / 64.0;
    ok = ok && std::abs(a.empirical_variance - a.exact_var) <= 3 * a.stderr_variance;
    ok = ok && secs < 30.0;
    ok = ok && mc_report_json(a) == mc_report_json(b);
    return ok;
}

bool criterion9() {
    bool ok = true;
    const char* systems[] = {"bernoulli_half.json",   "bernoulli_pair.json",
                             "markov_two_state.json", "markov_bernoulli_product.json",
                             "markov_flip.json",      "markov_identity.json",
                             "bernoulli_pair_float.json"};
    for (const char* name : systems) {
        CliResult r = run_cli("check --system " + fx(name));
        ok = ok && r.code == 0;
    }

    std::string dec_path = "/tmp/acceptance_dec.json";
    CliResult d = run_cli("decompose --system " + fx("bernoulli_pair.json") + " --function " +
                          fx("fn_cross_product.json") + " --out " + dec_path);
    ok = ok && d.code == 0;
    Json base = load_json_file(dec_path);

    // Which verdicts a single-entry edit must flip, and nothing else:
    // reassembly R, witness W[mask], component C[mask], md flags M[mask].
    struct Mutation {
        const char* where; // f, g, or component index + h/A
        int comp;
        const char* field;
        int entry;
        bool expect_reassembly;
        std::vector<int> bad_witness;
        std::vector<int> bad_component;
        std::vector<int> bad_md;
    };
    std::vector<Mutation> plan = {
        {"f", -1, "", 0, false, {}, {}, {}},
        {"f", -1, "", 7, false, {}, {}, {}},
        {"g", -1, "", 0, true, {0, 1, 2, 3}, {}, {}},
        {"g", -1, "", 5, true, {0, 1, 2, 3}, {}, {}},
        {"c", 0, "h", 1, true, {0}, {0}, {}},
        {"c", 1, "h", 0, true, {1}, {1}, {}},
        // the last two witnesses vanish for this fixture, so a corrupted
        // copy is still annihilated by assembly: only the witness flag flips
        {"c", 2, "h", 0, true, {2}, {}, {}},
        {"c", 3, "h", 0, true, {3}, {}, {}},
        {"c", 0, "A", 0, false, {}, {0}, {0}},
        {"c", 1, "A", 2, false, {}, {1}, {1}},
        {"c", 2, "A", 0, false, {}, {2}, {2}},
        {"c", 3, "A", 0, false, {}, {3}, {}},
    };

    int run = 0;
    for (const auto& mu : plan) {
        Json j = base;
        if (std::string(mu.where) == "f")
            j["f"]["table"][mu.entry] = "9/8";
        else if (std::string(mu.where) == "g")
            j["g"]["table"][mu.entry] = "9/8";
        else
            j["components"][mu.comp][mu.field]["table"][mu.entry] = "9/8";
        std::string mut_path = "/tmp/acceptance_mut.json";
        atomic_write(mut_path, j.dump());
        CliResult r = run_cli("check --system " + fx("bernoulli_pair.json") +
                              " --decomposition " + mut_path);
        bool this_ok = r.code == 3;
        Json rep;
        try {
            rep = Json::parse(r.out);
        } catch (...) {
            this_ok = false;
        }
        if (this_ok) {
            this_ok = this_ok && rep["ok"] == false;
            this_ok = this_ok && rep["reassembly_ok"] == mu.expect_reassembly;
            for (int m = 0; m < 4; ++m) {
                const Json& c = rep["components"][m];
                bool want_w = true, want_c = true, want_md = true;
                for (int b : mu.bad_witness) want_w = want_w && b != m;
                for (int b : mu.bad_component) want_c = want_c && b != m;
                for (int b : mu.bad_md) want_md = want_md && b != m;
                this_ok = this_ok && c["witness_ok"] == want_w;
                this_ok = this_ok && c["component_ok"] == want_c;
                bool md_all = true;
                for (const auto& flag : c["md"]) md_all = md_all && flag["ok"] == true;
                this_ok = this_ok && md_all == want_md;
            }
        }
        if (!this_ok)
            std::cout << "  mutation " << run << " (" << mu.where << " " << mu.comp << " "
                      << mu.field << "[" << mu.entry << "]) did not fail as expected"
                      << std::endl;
        ok = ok && this_ok;
        ++run;
    }
    ok = ok && run >= 10;
    std::remove(dec_path.c_str());
    return ok;
}

} // namespace

int main() {
    verdict(1, "shift/average operator identities, adjointness, commutation", criterion1());
    verdict(2, "projection relations and kernel equivalence", criterion2());
    verdict(3, "solver agreement, averaged convergence, rejection", criterion3());
    verdict(4, "decomposition reassembly, one-step kills, worked values", criterion4());
    verdict(5, "witness uniqueness under kernel perturbations", criterion5());
    verdict(6, "variance formulas, growth identity, conditional forms", criterion6());
    verdict(7, "normalized sums stay under the telescoping bound", criterion7());
    verdict(8, "monte carlo variance band, runtime, determinism", criterion8());
    verdict(9, "front door suite and mutation sensitivity", criterion9());
    if (failures) {
        std::cout << failures << " criterion(s) failed" << std::endl;
        return 1;
    }
    std::cout << "all criteria passed" << std::endl;
    return 0;
}
