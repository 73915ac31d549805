#pragma once

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "check.hpp"

namespace martcob {

using Json = nlohmann::ordered_json;

inline Json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot read " + path);
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
}

/// Write-temp-then-rename so a crashed run never leaves a half-written
/// report behind.
inline void atomic_write(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp);
        out << content;
        out.flush();
        if (!out) throw Error("write failed for " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error("cannot move " + tmp + " to " + path + ": " + ec.message());
}

enum class Arithmetic { exact, float64 };

inline Arithmetic parse_arithmetic(const std::string& s) {
    if (s == "exact") return Arithmetic::exact;
    if (s == "float64") return Arithmetic::float64;
    throw ParseError("arithmetic must be \"exact\" or \"float64\", got \"" + s + "\"");
}

/// The arithmetic a system description asks for, defaulting to exact.
inline Arithmetic peek_arithmetic(const Json& j) {
    if (!j.is_object() || !j.contains("arithmetic")) return Arithmetic::exact;
    if (!j["arithmetic"].is_string())
        throw ParseError("arithmetic field must be a string");
    return parse_arithmetic(j["arithmetic"].get<std::string>());
}

/// Scalars arrive as "p/q" strings, decimal strings, or JSON integers. Raw
/// JSON floats are refused in exact mode: the binary value behind "0.1" is
/// not the rational the author meant, and silently keeping it would defeat
/// the point of exact arithmetic.
template <class S>
S parse_scalar(const Json& j) {
    if (j.is_string()) return ScalarTraits<S>::from_string(j.get<std::string>());
    if (j.is_number_integer())
        return ScalarTraits<S>::from_fraction(j.get<long>(), 1);
    if (j.is_number_float()) {
        if constexpr (ScalarTraits<S>::exact)
            throw ParseError(
                "exact mode needs scalars as strings (\"p/q\" or decimal), got a JSON float");
        else
            return j.get<double>();
    }
    throw ParseError("expected a scalar, got " + std::string(j.type_name()));
}

template <class S>
Json scalar_json(const S& x) {
    if constexpr (ScalarTraits<S>::exact)
        return Json(ScalarTraits<S>::to_string(x));
    else
        return Json(double(x));
}

template <class S>
std::vector<S> parse_scalar_array(const Json& j, const char* what) {
    if (!j.is_array()) throw ParseError(std::string(what) + " must be an array");
    std::vector<S> out;
    out.reserve(j.size());
    for (const auto& v : j) out.push_back(parse_scalar<S>(v));
    return out;
}

template <class S>
Factor<S> parse_factor(const Json& j) {
    if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
        throw ParseError("factor needs a string kind");
    const std::string kind = j["kind"].get<std::string>();
    if (kind == "bernoulli") {
        if (!j.contains("probs"))
            throw ParseError("bernoulli factor needs probs");
        return Factor<S>::bernoulli(parse_scalar_array<S>(j["probs"], "probs"));
    }
    if (kind == "markov") {
        if (!j.contains("Q") || !j["Q"].is_array())
            throw ParseError("markov factor needs a Q matrix");
        std::vector<std::vector<S>> Q;
        for (const auto& row : j["Q"])
            Q.push_back(parse_scalar_array<S>(row, "Q row"));
        std::optional<std::vector<S>> pi;
        if (j.contains("pi")) pi = parse_scalar_array<S>(j["pi"], "pi");
        return Factor<S>::markov(std::move(Q), std::move(pi));
    }
    throw ParseError("unknown factor kind \"" + kind + "\"");
}

/// `ignore_declared` lets a caller force a different arithmetic than the
/// file declares (the CLI's override flag); by default a mismatch is an
/// error so nobody reads exact fixtures as floats by accident.
template <class S>
SystemPtr<S> parse_system(const Json& j, bool ignore_declared = false) {
    if (!j.is_object() || !j.contains("factors") || !j["factors"].is_array() ||
        j["factors"].empty())
        throw ParseError("system description needs a non-empty factors array");
    const Arithmetic want =
        ScalarTraits<S>::exact ? Arithmetic::exact : Arithmetic::float64;
    if (!ignore_declared && peek_arithmetic(j) != want)
        throw ParseError("system arithmetic does not match the requested scalar type");

    std::vector<Factor<S>> factors;
    for (const auto& fj : j["factors"]) factors.push_back(parse_factor<S>(fj));

    std::optional<std::size_t> cap;
    if (j.contains("size_cap")) {
        if (!j["size_cap"].is_number_integer() || j["size_cap"].get<long long>() <= 0)
            throw ParseError("size_cap must be a positive integer");
        cap = std::size_t(j["size_cap"].get<long long>());
    }
    double tol = ScalarTraits<S>::exact ? 0.0 : 1e-9;
    if (j.contains("tolerance")) {
        const auto& t = j["tolerance"];
        if (t.is_number())
            tol = t.get<double>();
        else if (t.is_string())
            tol = parse_rational(t.get<std::string>()).get_d();
        else
            throw ParseError("tolerance must be a number or numeric string");
        if (tol < 0) throw ParseError("tolerance must be non-negative");
    }
    return System<S>::make(std::move(factors), cap, tol);
}

template <class S>
Json factor_json(const Factor<S>& fac) {
    Json j;
    if (fac.kind() == FactorKind::bernoulli) {
        j["kind"] = "bernoulli";
        Json probs = Json::array();
        for (const S& p : fac.stationary()) probs.push_back(scalar_json<S>(p));
        j["probs"] = std::move(probs);
    } else {
        j["kind"] = "markov";
        Json Q = Json::array();
        for (int a = 0; a < fac.alphabet(); ++a) {
            Json row = Json::array();
            for (int b = 0; b < fac.alphabet(); ++b)
                row.push_back(scalar_json<S>(fac.transition(a, b)));
            Q.push_back(std::move(row));
        }
        j["Q"] = std::move(Q);
        Json pi = Json::array();
        for (const S& p : fac.stationary()) pi.push_back(scalar_json<S>(p));
        j["pi"] = std::move(pi);
    }
    return j;
}

template <class S>
Json system_json(const System<S>& sys) {
    Json j;
    j["arithmetic"] = ScalarTraits<S>::name();
    Json factors = Json::array();
    for (int k = 0; k < sys.dim(); ++k) factors.push_back(factor_json(sys.factor(k)));
    j["factors"] = std::move(factors);
    j["tolerance"] = sys.tolerance();
    j["size_cap"] = sys.size_cap();
    return j;
}

template <class S>
CylinderFn<S> parse_function(const Json& j, SystemPtr<S> sys) {
    if (!j.is_object() || !j.contains("window") || !j.contains("table"))
        throw ParseError("function needs window and table fields");
    const auto& jw = j["window"];
    if (!jw.is_array() || int(jw.size()) != sys->dim())
        throw ParseError("function window must list one depth per direction (" +
                         std::to_string(sys->dim()) + ")");
    std::vector<int> window;
    for (const auto& v : jw) {
        if (!v.is_number_integer() || v.get<long>() < 0)
            throw ParseError("window depths must be non-negative integers");
        window.push_back(int(v.get<long>()));
    }
    const std::size_t need = detail::table_len(*sys, window);
    const auto& jt = j["table"];
    if (!jt.is_array())
        throw ParseError("function table must be an array");
    if (jt.size() != need)
        throw ParseError("function table has " + std::to_string(jt.size()) +
                         " entries, window needs " + std::to_string(need));
    std::vector<S> table;
    table.reserve(need);
    for (const auto& v : jt) table.push_back(parse_scalar<S>(v));
    return CylinderFn<S>(std::move(sys), std::move(window), std::move(table));
}

template <class S>
Json function_json(const CylinderFn<S>& f) {
    Json j;
    j["window"] = f.window();
    Json table = Json::array();
    for (const S& v : f.table()) table.push_back(scalar_json<S>(v));
    j["table"] = std::move(table);
    return j;
}

inline Json multi_index_json(const MultiIndex& n) {
    Json j = Json::array();
    for (int k = 0; k < n.dim(); ++k) j.push_back(n[k]);
    return j;
}

template <class S>
Json solve_report_json(const SolveReport<S>& r) {
    Json j;
    j["method"] = to_string(r.method);
    j["is_normal"] = r.normal_input;
    if (r.strictly_normal_input)
        j["is_strictly_normal"] = *r.strictly_normal_input;
    else
        j["is_strictly_normal"] = nullptr;
    j["terms_used"] = r.terms_used;
    if (r.average_up_to)
        j["average_up_to"] = multi_index_json(*r.average_up_to);
    j["residual_norm_sq"] = scalar_json<S>(r.residual_norm_sq);
    j["solution"] = function_json(r.solution);
    Json diag;
    if (r.diagnostics.last_shell_norm_sq)
        diag["last_shell_norm_sq"] = scalar_json<S>(*r.diagnostics.last_shell_norm_sq);
    if (r.diagnostics.subdominant_rho)
        diag["subdominant_rho"] = *r.diagnostics.subdominant_rho;
    if (r.diagnostics.tail_bound_estimate)
        diag["tail_bound_estimate"] = *r.diagnostics.tail_bound_estimate;
    if (!r.diagnostics.cesaro_ladder.empty()) {
        Json ladder = Json::array();
        for (const auto& n : r.diagnostics.cesaro_ladder)
            ladder.push_back(multi_index_json(n));
        diag["cesaro_ladder"] = std::move(ladder);
        Json dist = Json::array();
        for (const S& v : r.diagnostics.cesaro_ladder_distance_sq)
            dist.push_back(scalar_json<S>(v));
        diag["cesaro_ladder_distance_sq"] = std::move(dist);
    }
    if (r.diagnostics.distance_to_series_sq)
        diag["distance_to_series_sq"] =
            scalar_json<S>(*r.diagnostics.distance_to_series_sq);
    j["diagnostics"] = std::move(diag);
    return j;
}

/// Subset masks travel as decimal strings of the bit pattern; bit t-1 set
/// means direction t belongs to the subset (directions are 1-based in all
/// artifacts).
inline std::string mask_string(const SubsetMask& mask) {
    return std::to_string(mask.bits());
}

inline SubsetMask parse_mask(const Json& j, int d) {
    if (!j.is_string()) throw ParseError("subset mask must be a string");
    const std::string& s = j.get<std::string>();
    std::uint32_t bits = 0;
    try {
        std::size_t pos = 0;
        unsigned long v = std::stoul(s, &pos);
        if (pos != s.size() || v >= (1ul << d)) throw ParseError("");
        bits = std::uint32_t(v);
    } catch (...) {
        throw ParseError("bad subset mask \"" + s + "\"");
    }
    return SubsetMask(bits);
}

template <class S>
Json decomposition_json(const Decomposition<S>& dec) {
    const int d = dec.f.system()->dim();
    Json j;
    j["f"] = function_json(dec.f);
    j["g"] = function_json(dec.g);
    Json comps = Json::array();
    for (const SubsetMask& mask : all_subsets(d)) {
        Json c;
        c["S"] = mask_string(mask);
        c["h"] = function_json(dec.witnesses[mask.bits()]);
        c["A"] = function_json(dec.components[mask.bits()]);
        Json md = Json::array();
        for (const auto& [t, ok] : dec.md_flags[mask.bits()]) {
            Json flag;
            flag["t"] = t + 1;
            flag["ok"] = ok;
            md.push_back(std::move(flag));
        }
        c["md"] = std::move(md);
        comps.push_back(std::move(c));
    }
    j["components"] = std::move(comps);
    j["reassembly_ok"] = dec.reassembly_ok;
    return j;
}

/// Reload a stored decomposition without trusting it: tables are taken as
/// written (so tampering is representable) and every flag gets recomputed by
/// check_decomposition.
template <class S>
Decomposition<S> parse_decomposition(const Json& j, SystemPtr<S> sys) {
    if (!j.is_object() || !j.contains("f") || !j.contains("g") ||
        !j.contains("components") || !j["components"].is_array())
        throw ParseError("decomposition needs f, g and a components array");
    const int d = sys->dim();
    Decomposition<S> dec;
    dec.f = parse_function<S>(j["f"], sys);
    dec.g = parse_function<S>(j["g"], sys);
    const std::size_t want = std::size_t(1) << d;
    if (j["components"].size() != want)
        throw ParseError("decomposition must list all " + std::to_string(want) +
                         " subsets");
    dec.witnesses.assign(want, CylinderFn<S>::zero(sys));
    dec.components.assign(want, CylinderFn<S>::zero(sys));
    dec.md_flags.assign(want, std::vector<std::pair<int, bool>>{});
    std::vector<bool> seen(want, false);
    for (const auto& c : j["components"]) {
        if (!c.is_object() || !c.contains("S") || !c.contains("h") || !c.contains("A"))
            throw ParseError("each component needs S, h and A");
        SubsetMask mask = parse_mask(c["S"], d);
        if (seen[mask.bits()])
            throw ParseError("subset " + mask_string(mask) + " listed twice");
        seen[mask.bits()] = true;
        dec.witnesses[mask.bits()] = parse_function<S>(c["h"], sys);
        dec.components[mask.bits()] = parse_function<S>(c["A"], sys);
        if (c.contains("md")) {
            if (!c["md"].is_array()) throw ParseError("md must be an array");
            for (const auto& flag : c["md"]) {
                if (!flag.is_object() || !flag.contains("t") || !flag.contains("ok"))
                    throw ParseError("md entries need t and ok");
                dec.md_flags[mask.bits()].emplace_back(flag["t"].get<int>() - 1,
                                                       flag["ok"].get<bool>());
            }
        }
    }
    for (std::size_t i = 0; i < want; ++i)
        if (!seen[i]) throw ParseError("subset " + std::to_string(i) + " missing");
    dec.reassembly_ok = j.value("reassembly_ok", false);
    return dec;
}

inline Json mc_report_json(const McReport& r) {
    Json j;
    j["samples"] = r.samples;
    j["seed"] = r.seed;
    j["workers"] = r.workers;
    j["N"] = multi_index_json(r.N);
    j["empirical_mean"] = r.empirical_mean;
    j["empirical_variance"] = r.empirical_variance;
    j["exact_mean"] = r.exact_mean;
    j["exact_var"] = r.exact_var;
    j["target_sigma2"] = r.target_sigma2;
    j["stderr"] = r.stderr_variance;
    j["pass"] = r.pass;
    if (!r.quantile_probs.empty()) {
        Json q;
        q["probs"] = r.quantile_probs;
        q["values"] = r.quantiles;
        j["quantiles"] = std::move(q);
    }
    return j;
}

/// One CSV row of the shared variance-table schema. Exact-only rows leave
/// the empirical columns empty.
struct VarianceCsvRow {
    MultiIndex N;
    std::string exact_var;
    std::string sigma2_empty;
    std::string emp_var;
    std::string stderr_s;
    bool pass = false;
};

inline std::string variance_csv(const std::vector<VarianceCsvRow>& rows, int d) {
    std::string out;
    for (int k = 1; k <= d; ++k) out += "N" + std::to_string(k) + ",";
    out += "exact_var,sigma2_empty,emp_var,stderr,pass\n";
    for (const auto& row : rows) {
        for (int k = 0; k < d; ++k) out += std::to_string(row.N[k]) + ",";
        out += row.exact_var + "," + row.sigma2_empty + "," + row.emp_var + "," +
               row.stderr_s + "," + (row.pass ? "1" : "0") + "\n";
    }
    return out;
}

inline VarianceCsvRow mc_csv_row(const McReport& r, double sigma2_empty) {
    VarianceCsvRow row;
    row.N = r.N;
    row.exact_var = ScalarTraits<double>::to_string(r.exact_var);
    row.sigma2_empty = ScalarTraits<double>::to_string(sigma2_empty);
    row.emp_var = ScalarTraits<double>::to_string(r.empirical_variance);
    row.stderr_s = ScalarTraits<double>::to_string(r.stderr_variance);
    row.pass = r.pass;
    return row;
}

inline Json check_report_json(const CheckReport& rep) {
    Json j;
    j["ok"] = rep.all_ok();
    j["failed"] = rep.failed();
    j["tolerance_misconfigured"] = rep.tolerance_misconfigured;
    Json entries = Json::array();
    for (const auto& e : rep.entries) {
        Json ej;
        ej["name"] = e.name;
        ej["ok"] = e.ok;
        if (!e.details.empty()) ej["details"] = e.details;
        entries.push_back(std::move(ej));
    }
    j["checks"] = std::move(entries);
    return j;
}

inline std::string check_report_csv(const CheckReport& rep) {
    std::string out = "check,ok\n";
    for (const auto& e : rep.entries)
        out += e.name + "," + (e.ok ? "1" : "0") + "\n";
    return out;
}

} // namespace martcob
