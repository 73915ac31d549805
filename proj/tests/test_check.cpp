#include <catch2/catch_amalgamated.hpp>

#include "common.hpp"

using namespace martcob;

TEST_CASE("property suite passes on every shipped system") {
    for (const char* name : {"bernoulli_half.json", "bernoulli_pair.json",
                             "markov_two_state.json", "markov_bernoulli_product.json",
                             "markov_flip.json", "markov_identity.json"}) {
        auto sys = load_system(name);
        CheckOptions opts;
        opts.functions_per_check = 8;
        CheckReport rep = run_check_suite<Rational>(sys, opts);
        INFO(name);
        for (const auto& e : rep.entries) {
            INFO(e.name << ": " << e.details);
            CHECK(e.ok);
        }
        REQUIRE(rep.all_ok());
        REQUIRE_FALSE(rep.tolerance_misconfigured);
    }
}

TEST_CASE("property suite passes in float mode") {
    auto sysj = load_json_file(fixture_path("bernoulli_pair_float.json"));
    auto sys = parse_system<double>(sysj);
    CheckOptions opts;
    opts.functions_per_check = 6;
    CheckReport rep = run_check_suite<double>(sys, opts);
    for (const auto& e : rep.entries) {
        INFO(e.name << ": " << e.details);
        CHECK(e.ok);
    }
    REQUIRE(rep.all_ok());
}

TEST_CASE("zero tolerance in float mode is flagged as misconfiguration") {
    auto sys = System<double>::make({Factor<double>::bernoulli({0.5, 0.5})},
                                    std::nullopt, 0.0);
    CheckOptions opts;
    opts.functions_per_check = 3;
    CheckReport rep = run_check_suite<double>(sys, opts);
    REQUIRE(rep.tolerance_misconfigured);
    REQUIRE_FALSE(rep.all_ok());
    REQUIRE(rep.entries[0].name == "tolerance_configuration");
    REQUIRE_FALSE(rep.entries[0].ok);
}

TEST_CASE("different suite seeds still pass and failures count correctly") {
    auto sys = load_system("bernoulli_half.json");
    for (std::uint64_t seed : {1ull, 2026ull}) {
        CheckOptions opts;
        opts.seed = seed;
        opts.functions_per_check = 5;
        CheckReport rep = run_check_suite<Rational>(sys, opts);
        REQUIRE(rep.all_ok());
        REQUIRE(rep.failed() == 0);
    }
}
