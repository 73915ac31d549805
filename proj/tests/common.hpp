#pragma once

#include <martcob/martcob.hpp>

#include <string>

#include "oracle.hpp"

inline std::string fixture_path(const std::string& name) {
    return std::string(MARTCOB_FIXTURES_DIR) + "/" + name;
}

template <class S = martcob::Rational>
martcob::SystemPtr<S> load_system(const std::string& name) {
    return martcob::parse_system<S>(martcob::load_json_file(fixture_path(name)));
}

template <class S = martcob::Rational>
martcob::CylinderFn<S> load_function(const std::string& name, martcob::SystemPtr<S> sys) {
    return martcob::parse_function<S>(martcob::load_json_file(fixture_path(name)), sys);
}

inline martcob::Rational rat(const std::string& s) { return martcob::parse_rational(s); }

/// Fair coin, d independent copies.
inline martcob::SystemPtr<martcob::Rational> coin_system(int d) {
    using namespace martcob;
    std::vector<Factor<Rational>> fs;
    for (int k = 0; k < d; ++k)
        fs.push_back(Factor<Rational>::bernoulli({rat("1/2"), rat("1/2")}));
    return System<Rational>::make(std::move(fs));
}

/// Aperiodic two-state chain with stationary vector (1/3, 2/3).
inline martcob::SystemPtr<martcob::Rational> chain_system() {
    using namespace martcob;
    std::vector<std::vector<Rational>> q{{rat("1/2"), rat("1/2")},
                                         {rat("1/4"), rat("3/4")}};
    return System<Rational>::make({Factor<Rational>::markov(q, std::nullopt)});
}
