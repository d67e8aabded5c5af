#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "milne/discretization.hpp"
#include "milne/io.hpp"

namespace milne {

/// Invalid configuration; the message names the field and, when found, its line.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    double T_b = 0.0;
    AngularProfile psi_b;
    std::vector<double> B_schedule{5.0, 10.0, 20.0, 40.0};
    std::size_t nx = 401;
    std::size_t nmu = 16;
    double tol = 1e-10;
    double ode_tol = 1e-10;
    double linear_tol = 1e-10;
    /// Relative slack on the nonlinear inequality checks.
    double estimate_slack = 0.02;
    /// Flux check passes when max |T' - <mu psi>| <= flux_constant * h^2.
    double flux_constant = 2.0;
    std::vector<double> alpha{0.25, 0.5, 0.75, 0.9};
    std::vector<double> beta{0.25, 0.5};
    double linear_B = 5.0;
    AngularProfile phi_b = AngularProfile::constant(1.0);
    double cb_alpha = 0.5;
    double cb_beta = 0.25;
    std::size_t rayleigh_K = 20;
    std::size_t rayleigh_random = 50;
    std::uint64_t seed = 12345;
    std::filesystem::path output_dir = "out";
    /// The parsed document, echoed into the report.
    io::ojson source;

    BoundaryData boundary() const { return {T_b, psi_b}; }
};

namespace detail {

inline std::string line_of(const std::string& text, const std::string& key) {
    const std::string needle = "\"" + key + "\"";
    const auto pos = text.find(needle);
    if (pos == std::string::npos) return "";
    std::size_t line = 1;
    for (std::size_t i = 0; i < pos; ++i)
        if (text[i] == '\n') ++line;
    return " (line " + std::to_string(line) + ")";
}

inline AngularProfile parse_profile(const io::ojson& j, const std::string& name, const std::string& text) {
    auto fail = [&](const std::string& why) -> AngularProfile {
        throw ConfigError("config: field '" + name + "'" + line_of(text, name) + ": " + why);
    };
    if (j.is_number()) return AngularProfile::constant(j.get<double>());
    if (!j.is_object() || j.size() != 1) return fail("expected a number or one of {constant, polynomial, tabulated}");
    const auto& [k, v] = *j.items().begin();
    if (k == "constant" && v.is_number()) return AngularProfile::constant(v.get<double>());
    auto numbers = [&]() {
        if (!v.is_array() || v.empty()) fail("'" + k + "' must be a nonempty array of numbers");
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number()) fail("'" + k + "' must contain numbers only");
            out.push_back(e.get<double>());
        }
        return out;
    };
    if (k == "polynomial") return AngularProfile::polynomial(numbers());
    if (k == "tabulated") return AngularProfile::tabulated(numbers());
    return fail("unknown form '" + k + "'");
}

}  // namespace detail

/**
 * @brief Parses and validates a run configuration.
 *
 * Relative output directories resolve against base_dir (the config file's
 * directory). Unknown keys are rejected so that typos do not pass silently.
 */
inline RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = ".") {
    io::ojson j;
    try {
        j = io::ojson::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config: malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config: top level must be an object");

    auto where = [&](const std::string& key) { return detail::line_of(text, key); };
    auto bad = [&](const std::string& key, const std::string& why) {
        throw ConfigError("config: field '" + key + "'" + where(key) + ": " + why);
    };
    static const std::set<std::string> known{"T_b",        "psi_b",     "B_schedule", "grid",   "tolerances",
                                             "alpha",      "beta",      "linearized", "C_b",    "rayleigh",
                                             "output_dir", "seed",      "schema_version", "description"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key())) bad(it.key(), "unknown field");

    RunConfig c;
    c.source = j;
    auto number = [&](const io::ojson& obj, const std::string& key, double& out) {
        if (!obj.contains(key)) return;
        if (!obj[key].is_number()) bad(key, "must be a number");
        out = obj[key].get<double>();
    };
    auto count = [&](const io::ojson& obj, const std::string& key, std::size_t& out) {
        if (!obj.contains(key)) return;
        if (!obj[key].is_number_unsigned()) bad(key, "must be a positive integer");
        out = obj[key].get<std::size_t>();
    };
    auto list = [&](const io::ojson& obj, const std::string& key, std::vector<double>& out) {
        if (!obj.contains(key)) return;
        if (!obj[key].is_array() || obj[key].empty()) bad(key, "must be a nonempty array of numbers");
        out.clear();
        for (const auto& e : obj[key]) {
            if (!e.is_number()) bad(key, "must contain numbers only");
            out.push_back(e.get<double>());
        }
    };

    if (!j.contains("T_b")) throw ConfigError("config: missing required field 'T_b'");
    number(j, "T_b", c.T_b);
    if (!(c.T_b >= 0.0)) bad("T_b", "must be nonnegative");
    if (!j.contains("psi_b")) throw ConfigError("config: missing required field 'psi_b'");
    c.psi_b = detail::parse_profile(j["psi_b"], "psi_b", text);

    list(j, "B_schedule", c.B_schedule);
    if (c.B_schedule.size() < 3) bad("B_schedule", "needs at least 3 entries");
    for (std::size_t i = 0; i < c.B_schedule.size(); ++i) {
        if (!(c.B_schedule[i] > 0.0)) bad("B_schedule", "entries must be positive");
        if (i && !(c.B_schedule[i] > c.B_schedule[i - 1])) bad("B_schedule", "must be increasing");
    }
    if (j.contains("grid")) {
        const auto& g = j["grid"];
        if (!g.is_object()) bad("grid", "must be an object");
        count(g, "nx", c.nx);
        count(g, "nmu", c.nmu);
    }
    if (c.nx < 3) bad("nx", "must be at least 3");
    if (c.nmu < 2 || c.nmu % 2) bad("nmu", "must be even and at least 2");
    if (j.contains("tolerances")) {
        const auto& t = j["tolerances"];
        if (!t.is_object()) bad("tolerances", "must be an object");
        number(t, "milne", c.tol);
        number(t, "ode", c.ode_tol);
        number(t, "linearized", c.linear_tol);
        number(t, "estimate_slack", c.estimate_slack);
        number(t, "flux_constant", c.flux_constant);
        if (!(c.tol > 0.0 && c.ode_tol > 0.0 && c.linear_tol > 0.0)) bad("tolerances", "must be positive");
    }
    list(j, "alpha", c.alpha);
    for (double a : c.alpha)
        if (!(a > 0.0 && a < 1.0)) bad("alpha", "values must lie in (0,1)");
    list(j, "beta", c.beta);
    for (double b : c.beta)
        if (!(b > 0.0 && b < 1.0)) bad("beta", "values must lie in (0,1)");
    if (j.contains("linearized")) {
        const auto& l = j["linearized"];
        if (!l.is_object()) bad("linearized", "must be an object");
        number(l, "B", c.linear_B);
        if (!(c.linear_B > 0.0)) bad("linearized", "B must be positive");
        if (l.contains("phi_b")) c.phi_b = detail::parse_profile(l["phi_b"], "phi_b", text);
    }
    if (j.contains("C_b")) {
        const auto& cb = j["C_b"];
        if (!cb.is_object()) bad("C_b", "must be an object");
        number(cb, "alpha", c.cb_alpha);
        number(cb, "beta", c.cb_beta);
        if (!(0.0 < c.cb_beta && c.cb_beta < c.cb_alpha && c.cb_alpha < 1.0))
            bad("C_b", "requires 0 < beta < alpha < 1");
    }
    if (j.contains("rayleigh")) {
        const auto& r = j["rayleigh"];
        if (!r.is_object()) bad("rayleigh", "must be an object");
        count(r, "K", c.rayleigh_K);
        count(r, "random", c.rayleigh_random);
    }
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned()) bad("seed", "must be a nonnegative integer");
        c.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("output_dir")) {
        if (!j["output_dir"].is_string()) bad("output_dir", "must be a string");
        c.output_dir = j["output_dir"].get<std::string>();
    }
    if (c.output_dir.is_relative()) c.output_dir = base_dir / c.output_dir;
    if (j.contains("schema_version") && j["schema_version"] != 1) bad("schema_version", "only version 1 is supported");

    // Reject data that the solvers would refuse later, with the field name attached.
    const Grid probe(c.B_schedule.front(), c.nx, c.nmu);
    try {
        (void)c.boundary().inflow(probe);
    } catch (const std::exception& e) {
        bad("psi_b", e.what());
    }
    try {
        (void)c.phi_b.values(probe);
    } catch (const std::exception& e) {
        bad("phi_b", e.what());
    }
    return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = io::read_file(path.string());
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return parse_config(text, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

}  // namespace milne
