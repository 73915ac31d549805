// Batch front door for the library: loads system/function files, runs the
// solvers, decompositions, identity scans, and simulations, and emits
// machine-readable reports on stdout (JSON by default, CSV where a tabular
// form exists).
//
// Exit codes are a stable contract:
//   0 ok, 2 parse error, 3 validation or check failure, 4 solver
//   precondition, 5 internal identity violation, 6 simulation outside band.

#include <CLI11.hpp>
#include <martcob/martcob.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

namespace {

using namespace martcob;

struct Config {
    std::string system_path;
    std::string function_path;
    std::string decomposition_path;
    std::string method = "direct";
    std::string n_flag;
    std::string out_path;
    std::string format = "json";
    std::string arithmetic;
    std::string tol_flag;
    long samples = 100000;
    std::uint64_t seed = 0;
    int threads = 1;
    bool quantiles = false;
};

const char* error_name(const Error& e) {
#define MARTCOB_NAME(T) \
    if (dynamic_cast<const T*>(&e)) return #T;
    MARTCOB_NAME(ParseError)
    MARTCOB_NAME(NegativeProbability)
    MARTCOB_NAME(NonStochasticMatrix)
    MARTCOB_NAME(NoStationaryDistribution)
    MARTCOB_NAME(SizeCapExceeded)
    MARTCOB_NAME(SystemMismatch)
    MARTCOB_NAME(BadDirection)
    MARTCOB_NAME(SameDirection)
    MARTCOB_NAME(DimensionNotOne)
    MARTCOB_NAME(PeriodicChainUnsupported)
    MARTCOB_NAME(NotNormal)
    MARTCOB_NAME(NotStrictlyNormal)
    MARTCOB_NAME(Unsolvable)
    MARTCOB_NAME(NotSolvable)
    MARTCOB_NAME(NoConvergence)
    MARTCOB_NAME(SumsDiffer)
    MARTCOB_NAME(ResidualNonzero)
    MARTCOB_NAME(InternalIdentityViolation)
#undef MARTCOB_NAME
    return "Error";
}

int exit_code_for(const Error& e) {
    if (dynamic_cast<const ParseError*>(&e)) return 2;
    if (dynamic_cast<const InternalIdentityViolation*>(&e)) return 5;
    if (dynamic_cast<const PeriodicChainUnsupported*>(&e) ||
        dynamic_cast<const NotNormal*>(&e) ||
        dynamic_cast<const NotStrictlyNormal*>(&e) ||
        dynamic_cast<const Unsolvable*>(&e) ||
        dynamic_cast<const NotSolvable*>(&e) ||
        dynamic_cast<const NoConvergence*>(&e) ||
        dynamic_cast<const SizeCapExceeded*>(&e) ||
        dynamic_cast<const ResidualNonzero*>(&e))
        return 4;
    return 3;
}

/// Print the payload and, if requested, also persist it atomically.
void emit(const Config& cfg, const Json& j, const std::optional<std::string>& csv) {
    std::string payload;
    if (cfg.format == "csv") {
        if (!csv) throw ParseError("this command has no CSV form; use --format json");
        payload = *csv;
    } else {
        payload = j.dump(2) + "\n";
    }
    std::cout << payload;
    if (!cfg.out_path.empty()) atomic_write(cfg.out_path, payload);
}

Arithmetic pick_arithmetic(const Json& sysj, const Config& cfg) {
    if (cfg.arithmetic.empty()) return peek_arithmetic(sysj);
    return parse_arithmetic(cfg.arithmetic);
}

/// Run `fn` with the scalar type selected by the system file (or the
/// --arithmetic override). `fn` receives a std::type_identity tag.
template <class Fn>
int with_scalar(const Json& sysj, const Config& cfg, Fn&& fn) {
    if (pick_arithmetic(sysj, cfg) == Arithmetic::exact)
        return fn(std::type_identity<Rational>{});
    return fn(std::type_identity<double>{});
}

MultiIndex parse_n_flag(const std::string& s, int d) {
    std::vector<long> vals;
    std::string cur;
    for (char c : s + ",") {
        if (c == ',') {
            if (cur.empty()) throw ParseError("--N expects a comma-separated list of integers");
            try {
                std::size_t pos = 0;
                long v = std::stol(cur, &pos);
                if (pos != cur.size() || v < 0) throw std::invalid_argument("");
                vals.push_back(v);
            } catch (const std::exception&) {
                throw ParseError("--N entries must be non-negative integers, got '" + cur + "'");
            }
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (int(vals.size()) != d)
        throw ParseError("--N has " + std::to_string(vals.size()) + " entries, the system has " +
                         std::to_string(d) + " directions");
    return MultiIndex(vals);
}

MultiIndex n_or_default(const Config& cfg, int d, long each) {
    if (cfg.n_flag.empty()) return MultiIndex(std::vector<long>(std::size_t(d), each));
    return parse_n_flag(cfg.n_flag, d);
}

double tol_or(const Config& cfg, double fallback) {
    if (cfg.tol_flag.empty()) return fallback;
    Rational r = parse_rational(cfg.tol_flag);
    if (r < 0) throw ParseError("--tol must be non-negative");
    return r.get_d();
}

// ---------------------------------------------------------------- validate

template <class S>
int run_validate(const Config& cfg, const Json& sysj) {
    SystemPtr<S> sys = parse_system<S>(sysj, !cfg.arithmetic.empty());
    const int d = sys->dim();
    Json probes = Json::array();
    bool all_ok = true;
    auto record = [&](const std::string& name, bool ok) {
        probes.push_back(Json{{"name", name}, {"ok", ok}});
        all_ok = all_ok && ok;
    };

    // Structural facts about each factor: stochastic rows, stationarity of
    // the distribution actually stored, and a normalized backward kernel.
    for (int k = 0; k < d; ++k) {
        const auto& fac = sys->factor(k);
        const int A = fac.alphabet();
        bool rows = true, stat = true, back = true;
        for (int a = 0; a < A; ++a) {
            S row(0), bk(0);
            for (int b = 0; b < A; ++b) row = S(row + fac.transition(a, b));
            for (int b = 0; b < A; ++b) bk = S(bk + fac.backward(b, a));
            rows = rows && scalar_is_zero(S(row - S(1)), sys->tolerance());
            back = back && scalar_is_zero(S(bk - S(1)), sys->tolerance());
        }
        for (int b = 0; b < A; ++b) {
            S acc(0);
            for (int a = 0; a < A; ++a)
                acc = S(acc + S(fac.stationary()[a] * fac.transition(a, b)));
            stat = stat && scalar_is_zero(S(acc - fac.stationary()[b]), sys->tolerance());
        }
        std::string tag = "direction_" + std::to_string(k + 1);
        record(tag + "_rows_stochastic", rows);
        record(tag + "_distribution_stationary", stat);
        record(tag + "_backward_kernel_normalized", back);
    }

    // Seeded operator probes on random functions.
    CounterRng rng(2024, 0);
    bool adjoint = true, inv_shift = true, commute = true, weights = true;
    for (int i = 0; i < 10; ++i) {
        std::vector<int> w = random_window(*sys, rng, 2);
        CylinderFn<S> f = random_function<S>(sys, w, rng);
        CylinderFn<S> phi = random_function<S>(sys, random_window(*sys, rng, 2), rng);
        weights = weights &&
                  scalar_is_zero(
                      S(expectation(extend(CylinderFn<S>::constant(sys, S(1)), w)) - S(1)),
                      sys->tolerance());
        for (int k = 0; k < d; ++k) {
            adjoint = adjoint && verify_adjoint(k, f, phi);
            for (long n = 1; n <= 2; ++n) {
                MultiIndex e = MultiIndex::zeros(d);
                e[k] = n;
                CylinderFn<S> back = koopman_pow(e, f);
                for (long t = 0; t < n; ++t) back = transfer(k, back);
                inv_shift = inv_shift && equal_ae(back, f);
            }
        }
        for (int k = 0; k < d; ++k)
            for (int l = k + 1; l < d; ++l)
                commute = commute && verify_complete_commutation(k, l, f);
    }
    record("weights_normalize", weights);
    record("adjointness", adjoint);
    record("inverse_then_shift_identity", inv_shift);
    if (d >= 2) record("complete_commutation", commute);

    Json j;
    j["ok"] = all_ok;
    j["system"] = system_json(*sys);
    j["probes"] = std::move(probes);
    emit(cfg, j, std::nullopt);
    return all_ok ? 0 : 3;
}

// ------------------------------------------------------------------- solve

template <class S>
int run_solve(const Config& cfg, const Json& sysj) {
    SystemPtr<S> sys = parse_system<S>(sysj, !cfg.arithmetic.empty());
    const int d = sys->dim();
    CylinderFn<S> f = parse_function<S>(load_json_file(cfg.function_path), sys);
    SolveOptions opts;
    opts.tol = tol_or(cfg, -1.0);

    SolveReport<S> rep;
    Json extra;
    if (cfg.method == "direct") {
        rep = solve_direct(f);
        // Independent route: when the one-sided series applies, it must land
        // on the same canonical solution.
        if (rep.strictly_normal_input.value_or(false) &&
            series_usable(*sys, SubsetMask::full(d))) {
            SolveReport<S> srep = solve_series(f, opts);
            if (!equal_ae(normal_project(srep.solution), normal_project(rep.solution)))
                throw InternalIdentityViolation("series and direct solutions disagree");
            extra["series_cross_check"] = "agree";
        } else if (rep.strictly_normal_input == std::nullopt) {
            extra["series_cross_check"] = "skipped: tail projection undefined for a periodic factor";
        } else if (!*rep.strictly_normal_input) {
            extra["series_cross_check"] = "skipped: input not strictly normal";
        } else {
            extra["series_cross_check"] = "skipped: series does not terminate for this system";
        }
    } else if (cfg.method == "series") {
        rep = solve_series(f, opts);
    } else if (cfg.method == "cesaro") {
        if (cfg.n_flag.empty()) throw ParseError("--method cesaro needs --N");
        rep = solve_cesaro(f, parse_n_flag(cfg.n_flag, d));
    } else {
        throw ParseError("--method must be one of direct, series, cesaro");
    }

    Json j = solve_report_json(rep);
    for (auto& [k, v] : extra.items()) j[k] = v;
    emit(cfg, j, std::nullopt);
    return 0;
}

// --------------------------------------------------------------- decompose

template <class S>
int run_decompose(const Config& cfg, const Json& sysj) {
    SystemPtr<S> sys = parse_system<S>(sysj, !cfg.arithmetic.empty());
    CylinderFn<S> f = parse_function<S>(load_json_file(cfg.function_path), sys);
    SolveReport<S> rep = solve_direct(f);
    Decomposition<S> dec = decompose(f, rep.solution);
    if (!dec.all_md_ok())
        throw InternalIdentityViolation(
            "a component fails its reversed martingale-difference check");
    emit(cfg, decomposition_json(dec), std::nullopt);
    return 0;
}

// ---------------------------------------------------------------- variance

template <class S>
int run_variance(const Config& cfg, const Json& sysj) {
    SystemPtr<S> sys = parse_system<S>(sysj, !cfg.arithmetic.empty());
    const int d = sys->dim();
    CylinderFn<S> f = parse_function<S>(load_json_file(cfg.function_path), sys);
    SolveReport<S> rep = solve_direct(f);
    const CylinderFn<S>& g = rep.solution;

    VarianceSplit<S> split = martingale_variance(g);
    double tol = sys->tolerance();
    if (!scalar_is_zero(S(split.direct - split.expansion), tol * tol))
        throw InternalIdentityViolation("the two variance formulas disagree");

    Json j;
    j["sigma2_empty"] = Json{{"direct", scalar_json<S>(split.direct)},
                             {"expansion", scalar_json<S>(split.expansion)}};

    if (d == 1) {
        CondVarForms<S> forms = conditional_variance_d1(g);
        bool agree = equal_ae(forms.form1, forms.form2);
        S mean = expectation(forms.form1);
        bool mean_ok = scalar_is_zero(S(mean - split.direct), tol * tol);
        if (!agree || !mean_ok)
            throw InternalIdentityViolation("conditional variance forms are inconsistent");
        j["conditional_variance"] = Json{{"forms_agree", agree},
                                         {"mean", scalar_json<S>(mean)},
                                         {"mean_matches_sigma2", mean_ok}};
    }

    MultiIndex hi = n_or_default(cfg, d, 3);
    MultiIndex lo = MultiIndex::ones(d);
    Json rows = Json::array();
    std::vector<VarianceCsvRow> csv_rows;
    for_each_in_box(lo, hi, [&](const MultiIndex& N) {
        MdNormIdentity<S> md = md_sum_norm_identity(g, N);
        if (!md.ok) throw InternalIdentityViolation("partial-sum norm identity failed");
        CylinderFn<S> sn = partial_sum(N, f);
        S mean = expectation(sn);
        S var = S(norm_sq(sn) - S(mean * mean));
        S vol = ScalarTraits<S>::from_fraction(N.product(), 1);
        S exact_var = S(var / vol);
        Json row;
        row["N"] = multi_index_json(N);
        row["exact_var"] = scalar_json<S>(exact_var);
        row["md_norm_lhs"] = scalar_json<S>(md.lhs);
        row["md_norm_rhs"] = scalar_json<S>(md.rhs);
        row["md_ok"] = md.ok;
        rows.push_back(std::move(row));
        VarianceCsvRow cr;
        cr.N = N;
        cr.exact_var = ScalarTraits<S>::to_string(exact_var);
        cr.sigma2_empty = ScalarTraits<S>::to_string(split.direct);
        cr.pass = md.ok;
        csv_rows.push_back(std::move(cr));
    });
    j["rows"] = std::move(rows);
    emit(cfg, j, variance_csv(csv_rows, d));
    return 0;
}

// -------------------------------------------------------------------- sums

template <class S>
int run_sums(const Config& cfg, const Json& sysj) {
    SystemPtr<S> sys = parse_system<S>(sysj, !cfg.arithmetic.empty());
    const int d = sys->dim();
    CylinderFn<S> f = parse_function<S>(load_json_file(cfg.function_path), sys);
    SolveReport<S> rep = solve_direct(f);
    const CylinderFn<S>& g = rep.solution;
    VarianceSplit<S> split = martingale_variance(g);

    MultiIndex hi = n_or_default(cfg, d, 4);
    MultiIndex lo = MultiIndex::ones(d);
    std::vector<MultiIndex> boxes;
    for_each_in_box(lo, hi, [&](const MultiIndex& N) { boxes.push_back(N); });

    Json md_rows = Json::array();
    std::vector<VarianceCsvRow> csv_rows;
    for (const MultiIndex& N : boxes) {
        MdNormIdentity<S> md = md_sum_norm_identity(g, N);
        if (!md.ok) throw InternalIdentityViolation("partial-sum norm identity failed");
        Json row;
        row["N"] = multi_index_json(N);
        row["lhs"] = scalar_json<S>(md.lhs);
        row["rhs"] = scalar_json<S>(md.rhs);
        row["ok"] = md.ok;
        md_rows.push_back(std::move(row));
        VarianceCsvRow cr;
        cr.N = N;
        cr.exact_var =
            ScalarTraits<S>::to_string(S(md.lhs / ScalarTraits<S>::from_fraction(N.product(), 1)));
        cr.sigma2_empty = ScalarTraits<S>::to_string(split.direct);
        cr.pass = md.ok;
        csv_rows.push_back(std::move(cr));
    }

    Json cob = Json::array();
    for (const SubsetMask& mask : all_subsets(d)) {
        if (mask.is_empty()) continue;
        auto scan = coboundary_bound_scan(g, mask, boxes);
        Json entry;
        entry["S"] = mask_string(mask);
        entry["label"] = mask.to_string(d);
        Json srows = Json::array();
        for (const auto& r : scan) {
            if (!r.ok)
                throw InternalIdentityViolation("coboundary growth exceeded its telescoping bound");
            srows.push_back(Json{{"N", multi_index_json(r.N)},
                                 {"normalized_norm_sq", scalar_json<S>(r.normalized_norm_sq)},
                                 {"bound_sq", scalar_json<S>(r.bound_sq)},
                                 {"ok", r.ok}});
        }
        entry["rows"] = std::move(srows);
        cob.push_back(std::move(entry));
    }

    Json j;
    j["sigma2_empty"] = scalar_json<S>(split.direct);
    j["md_norm_identity"] = std::move(md_rows);
    j["coboundary_bounds"] = std::move(cob);
    emit(cfg, j, variance_csv(csv_rows, d));
    return 0;
}

// ---------------------------------------------------------------- simulate

template <class S>
int run_simulate(const Config& cfg, const Json& sysj) {
    SystemPtr<S> sys = parse_system<S>(sysj, !cfg.arithmetic.empty());
    const int d = sys->dim();
    CylinderFn<S> f = parse_function<S>(load_json_file(cfg.function_path), sys);
    McOptions opts;
    opts.samples = cfg.samples;
    opts.seed = cfg.seed;
    opts.workers = cfg.threads;
    opts.collect_quantiles = cfg.quantiles;
    MultiIndex N = n_or_default(cfg, d, 8);
    McReport rep = mc_simulate(f, N, opts);
    std::vector<VarianceCsvRow> csv_rows{mc_csv_row(rep, rep.target_sigma2)};
    emit(cfg, mc_report_json(rep), variance_csv(csv_rows, d));
    return rep.pass ? 0 : 6;
}

// ------------------------------------------------------------------- check

template <class S>
int run_check(const Config& cfg, const Json& sysj) {
    SystemPtr<S> sys = parse_system<S>(sysj, !cfg.arithmetic.empty());
    const int d = sys->dim();

    if (!cfg.decomposition_path.empty()) {
        Decomposition<S> dec =
            parse_decomposition<S>(load_json_file(cfg.decomposition_path), sys);
        DecompositionCheck chk = check_decomposition(dec);
        Json comps = Json::array();
        for (const SubsetMask& mask : all_subsets(d)) {
            std::size_t i = mask.bits();
            Json md = Json::array();
            for (const auto& [t, ok] : chk.md_flags[i])
                md.push_back(Json{{"t", t + 1}, {"ok", ok}});
            comps.push_back(Json{{"S", mask_string(mask)},
                                 {"label", mask.to_string(d)},
                                 {"witness_ok", bool(chk.witness_consistent[i])},
                                 {"component_ok", bool(chk.component_consistent[i])},
                                 {"md", std::move(md)}});
        }
        Json j;
        j["ok"] = chk.all();
        j["reassembly_ok"] = chk.reassembly_ok;
        j["components"] = std::move(comps);
        emit(cfg, j, std::nullopt);
        return chk.all() ? 0 : 3;
    }

    if (!cfg.function_path.empty()) {
        // Parsed for its side effects: a corrupt table must surface here.
        parse_function<S>(load_json_file(cfg.function_path), sys);
    }
    CheckOptions opts;
    opts.seed = cfg.seed;
    CheckReport rep = run_check_suite<S>(sys, opts);
    emit(cfg, check_report_json(rep), check_report_csv(rep));
    return rep.all_ok() ? 0 : 3;
}

template <class Runner>
int dispatch(const Config& cfg, Runner&& runner) {
    Json sysj = load_json_file(cfg.system_path);
    return with_scalar(sysj, cfg, [&](auto tag) {
        using S = typename decltype(tag)::type;
        return runner.template operator()<S>(cfg, sysj);
    });
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Transfer-operator toolkit for products of one-sided shifts"};
    app.require_subcommand(1);
    Config cfg;

    auto add_common = [&](CLI::App* sub, bool needs_function) {
        sub->add_option("--system", cfg.system_path, "system description (JSON)")
            ->required();
        if (needs_function)
            sub->add_option("--function", cfg.function_path, "function table (JSON)")
                ->required();
        sub->add_option("--out", cfg.out_path, "also write the report to this path");
        sub->add_option("--format", cfg.format, "output format")
            ->check(CLI::IsMember({"json", "csv"}));
        sub->add_option("--arithmetic", cfg.arithmetic,
                        "override the arithmetic declared by the system file")
            ->check(CLI::IsMember({"exact", "float64"}));
    };

    CLI::App* validate = app.add_subcommand("validate", "check a system file's structure");
    add_common(validate, false);

    CLI::App* solve = app.add_subcommand("solve", "solve prod_k (I - U_k*) g = f");
    add_common(solve, true);
    solve->add_option("--method", cfg.method, "direct, series, or cesaro")
        ->check(CLI::IsMember({"direct", "series", "cesaro"}));
    solve->add_option("--N", cfg.n_flag, "box for the averaging method (comma list)");
    solve->add_option("--tol", cfg.tol_flag, "series truncation threshold (rational)");

    CLI::App* decompose_cmd = app.add_subcommand("decompose", "split f into orthogonal components");
    add_common(decompose_cmd, true);

    CLI::App* variance = app.add_subcommand("variance", "variance formulas and norm identities");
    add_common(variance, true);
    variance->add_option("--N", cfg.n_flag, "upper corner of the N grid (comma list)");

    CLI::App* sums = app.add_subcommand("sums", "partial-sum growth against its bounds");
    add_common(sums, true);
    sums->add_option("--N", cfg.n_flag, "upper corner of the N grid (comma list)");

    CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo variance of normalized sums");
    add_common(simulate, true);
    simulate->add_option("--N", cfg.n_flag, "summation box (comma list)");
    simulate->add_option("--samples", cfg.samples, "number of sampled trajectories")
        ->check(CLI::PositiveNumber);
    simulate->add_option("--seed", cfg.seed, "master seed");
    simulate->add_option("--threads", cfg.threads, "worker count")
        ->check(CLI::PositiveNumber);
    simulate->add_flag("--quantiles", cfg.quantiles, "include standardized quantile table");

    CLI::App* check = app.add_subcommand("check", "run the randomized property suite");
    check->add_option("--system", cfg.system_path, "system description (JSON)")->required();
    check->add_option("--function", cfg.function_path, "optional function table to parse");
    check->add_option("--decomposition", cfg.decomposition_path,
                      "verify a stored decomposition instead of running the suite");
    check->add_option("--seed", cfg.seed, "suite seed");
    check->add_option("--out", cfg.out_path, "also write the report to this path");
    check->add_option("--format", cfg.format, "output format")
        ->check(CLI::IsMember({"json", "csv"}));
    check->add_option("--arithmetic", cfg.arithmetic,
                      "override the arithmetic declared by the system file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (app.got_subcommand(validate))
            return dispatch(cfg, []<class S>(const Config& c, const Json& j) {
                return run_validate<S>(c, j);
            });
        if (app.got_subcommand(solve))
            return dispatch(cfg, []<class S>(const Config& c, const Json& j) {
                return run_solve<S>(c, j);
            });
        if (app.got_subcommand(decompose_cmd))
            return dispatch(cfg, []<class S>(const Config& c, const Json& j) {
                return run_decompose<S>(c, j);
            });
        if (app.got_subcommand(variance))
            return dispatch(cfg, []<class S>(const Config& c, const Json& j) {
                return run_variance<S>(c, j);
            });
        if (app.got_subcommand(sums))
            return dispatch(cfg, []<class S>(const Config& c, const Json& j) {
                return run_sums<S>(c, j);
            });
        if (app.got_subcommand(simulate))
            return dispatch(cfg, []<class S>(const Config& c, const Json& j) {
                return run_simulate<S>(c, j);
            });
        if (app.got_subcommand(check))
            return dispatch(cfg, []<class S>(const Config& c, const Json& j) {
                return run_check<S>(c, j);
            });
        throw ParseError("no subcommand selected");
    } catch (const Error& e) {
        Json err;
        err["error"] = Json{{"type", error_name(e)}, {"message", e.what()}};
        std::cout << err.dump(2) << std::endl;
        return exit_code_for(e);
    } catch (const std::exception& e) {
        Json err;
        err["error"] = Json{{"type", "Error"}, {"message", e.what()}};
        std::cout << err.dump(2) << std::endl;
        return 3;
    }
}
