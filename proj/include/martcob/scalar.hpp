#pragma once

#include <cctype>
#include <cmath>
#include <cstdio>
#include <string>

#include <gmpxx.h>

#include "errors.hpp"

namespace martcob {

/// Exact scalar type used throughout the library when arithmetic = "exact".
using Rational = mpq_class;

namespace detail {

/// Parses a decimal literal ("-0.25", "1e-3", "42") into an exact rational.
/// Fraction syntax ("3/4") is handled by the caller.
inline Rational decimal_to_rational(const std::string& s) {
    std::size_t i = 0;
    bool neg = false;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) neg = (s[i++] == '-');
    mpz_class mant = 0;
    long frac_digits = 0;
    bool any = false, dot = false;
    for (; i < s.size(); ++i) {
        char c = s[i];
        if (c == '.') {
            if (dot) throw ParseError("bad number: " + s);
            dot = true;
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            mant = mant * 10 + (c - '0');
            if (dot) ++frac_digits;
            any = true;
        } else {
            break;
        }
    }
    if (!any) throw ParseError("bad number: " + s);
    long exp10 = 0;
    if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
        ++i;
        bool eneg = false;
        if (i < s.size() && (s[i] == '+' || s[i] == '-')) eneg = (s[i++] == '-');
        if (i >= s.size()) throw ParseError("bad number: " + s);
        for (; i < s.size(); ++i) {
            if (!std::isdigit(static_cast<unsigned char>(s[i])))
                throw ParseError("bad number: " + s);
            exp10 = exp10 * 10 + (s[i] - '0');
            if (exp10 > 4096) throw ParseError("exponent out of range: " + s);
        }
        if (eneg) exp10 = -exp10;
    } else if (i != s.size()) {
        throw ParseError("bad number: " + s);
    }
    exp10 -= frac_digits;
    mpz_class num = mant, den = 1;
    mpz_class ten = 10;
    if (exp10 >= 0) {
        mpz_class p;
        mpz_pow_ui(p.get_mpz_t(), ten.get_mpz_t(), static_cast<unsigned long>(exp10));
        num *= p;
    } else {
        mpz_pow_ui(den.get_mpz_t(), ten.get_mpz_t(), static_cast<unsigned long>(-exp10));
    }
    if (neg) num = -num;
    Rational r(num, den);
    r.canonicalize();
    return r;
}

} // namespace detail

/// Parses "p/q" fraction syntax or a decimal literal into an exact rational.
inline Rational parse_rational(const std::string& s) {
    auto slash = s.find('/');
    if (slash != std::string::npos) {
        try {
            Rational r(s);
            // canonicalize() on a zero denominator raises SIGFPE, not an
            // exception, so reject it while the parts are still untouched
            if (r.get_den() == 0) throw ParseError("bad rational: " + s);
            r.canonicalize();
            return r;
        } catch (const std::invalid_argument&) {
            throw ParseError("bad rational: " + s);
        }
    }
    return detail::decimal_to_rational(s);
}

inline std::string rational_to_string(const Rational& q) { return q.get_str(); }

/// Static facts about a scalar type plus the handful of operations whose
/// spelling differs between exact rationals and doubles.
template <class S>
struct ScalarTraits;

template <>
struct ScalarTraits<Rational> {
    static constexpr bool exact = true;
    static const char* name() { return "exact"; }
    static Rational from_fraction(long num, long den) {
        if (den < 0) { num = -num; den = -den; }
        Rational r(num, den);
        r.canonicalize();
        return r;
    }
    static Rational from_string(const std::string& s) { return parse_rational(s); }
    static std::string to_string(const Rational& x) { return x.get_str(); }
    static double to_double(const Rational& x) { return x.get_d(); }
    static Rational abs(const Rational& x) { return x < 0 ? Rational(-x) : x; }
};

template <>
struct ScalarTraits<double> {
    static constexpr bool exact = false;
    static const char* name() { return "float64"; }
    static double from_fraction(long num, long den) {
        return static_cast<double>(num) / static_cast<double>(den);
    }
    static double from_string(const std::string& s) {
        return parse_rational(s).get_d();
    }
    static std::string to_string(double x) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", x);
        return buf;
    }
    static double to_double(double x) { return x; }
    static double abs(double x) { return std::fabs(x); }
};

/// Scalar zero test. `tol` is ignored in exact mode.
template <class S>
bool scalar_is_zero(const S& x, double tol) {
    if constexpr (ScalarTraits<S>::exact) {
        (void)tol;
        return x == 0;
    } else {
        return std::fabs(x) <= tol;
    }
}

} // namespace martcob
