#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "milne/config.hpp"
#include "milne/diagnostics.hpp"
#include "milne/io.hpp"
#include "milne/linearized.hpp"
#include "milne/milne.hpp"
#include "milne/spectral.hpp"

namespace milne {

inline constexpr int kReportSchemaVersion = 1;

enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_solver = 3, exit_verification = 4 };

struct RunOutcome {
    int exit_code = exit_ok;
    io::ojson report;
    std::vector<std::string> failed_checks;
};

namespace detail {

inline io::ojson array_of(const std::vector<double>& v) {
    io::ojson a = io::ojson::array();
    for (double x : v) a.push_back(x);
    return a;
}

inline io::ojson nullable(double v) { return std::isfinite(v) ? io::ojson(v) : io::ojson(nullptr); }

inline double spacing(const Grid& g) { return g.B() / static_cast<double>(g.nx() - 1); }

inline io::Table profile_table(const MilneSolution& s, const Grid& g) {
    io::Table t;
    t.header = {"x", "T", "dT_dx", "bracket_psi", "bracket_mu_psi"};
    const auto dT = ddx(s.T, g);
    for (std::size_t i = 0; i < g.nx(); ++i)
        t.rows.push_back({g.x()[i], s.T[i], dT[i], moment(s.psi.at(i), 0, g), moment(s.psi.at(i), 1, g)});
    return t;
}

inline std::string alpha_label(double a) { return "bound_alpha_" + io::label_double(a); }

inline io::Table decay_table(const MilneSolution& s, const Grid& g, double T_inf, const std::vector<double>& alphas,
                             const std::vector<double>& M, const DecayCheck& fit) {
    io::Table t;
    t.header = {"x", "abs_T_minus_T_inf", "fit"};
    for (double a : alphas) t.header.push_back(alpha_label(a));
    const bool have_fit = std::isfinite(fit.fitted_rate);
    for (std::size_t i = 0; i < g.nx(); ++i) {
        const double x = g.x()[i];
        std::vector<double> row{x, std::abs(s.T[i] - T_inf),
                                have_fit ? std::exp(fit.fitted_intercept + fit.fitted_rate * x) : 0.0};
        for (std::size_t k = 0; k < alphas.size(); ++k) row.push_back(M[k] * std::exp(-alphas[k] * x));
        t.rows.push_back(std::move(row));
    }
    return t;
}

}  // namespace detail

/**
 * @brief Solve, diagnose and report one configuration.
 *
 * Writes report.json, profiles.csv and decay.csv into the output directory.
 * Exit code 3 when a solver fails (a partial report is still written), 4 when
 * any check fails.
 */
inline RunOutcome run_pipeline(const RunConfig& c) {
    namespace fs = std::filesystem;
    RunOutcome out;
    io::ojson& rep = out.report;
    rep["schema_version"] = kReportSchemaVersion;
    rep["config"] = c.source;
    fs::create_directories(c.output_dir);
    auto write_report = [&] { io::write_file((c.output_dir / "report.json").string(), io::dump(rep)); };

    const BoundaryData bd = c.boundary();
    MilneOptions mopt;
    mopt.tol = c.tol;
    mopt.ode.tol = c.ode_tol;
    LinearizedOptions lopt;
    lopt.tol = c.linear_tol;

    HalfspaceResult hs;
    try {
        hs = extend_to_halfspace(bd, c.B_schedule, c.nx, c.nmu, mopt);
    } catch (const std::exception& e) {
        rep["status"] = "solver_failure";
        rep["error"] = e.what();
        write_report();
        out.exit_code = exit_solver;
        return out;
    }
    const Grid& g = hs.largest_grid();
    const MilneSolution& s = hs.largest();
    const double T_inf = hs.T_inf;
    const double gamma = bd.gamma(g);
    io::ojson checks = io::ojson::object();
    auto check = [&](const std::string& name, bool ok) {
        checks[name] = ok;
        if (!ok) out.failed_checks.push_back(name);
    };

    const auto gap = boundary_gap(bd, g, c.alpha);
    rep["status"] = "ok";
    rep["boundary"] = {{"T_b", bd.T_b()}, {"gamma", gamma}, {"gap", gap.gap}, {"well_prepared", bd.is_well_prepared(g)}};
    rep["T_inf"] = T_inf;

    io::ojson halfspace;
    halfspace["B"] = detail::array_of(hs.B);
    halfspace["endpoint"] = detail::array_of(hs.endpoint);
    halfspace["cauchy"] = detail::array_of(hs.cauchy);
    halfspace["cauchy_decreasing"] = hs.cauchy_decreasing;
    io::ojson iters = io::ojson::array(), rates = io::ojson::array();
    for (const auto& sol : hs.solutions) {
        iters.push_back(sol.iterations);
        rates.push_back(sol.rate);
    }
    halfspace["iterations"] = iters;
    halfspace["rate"] = rates;
    rep["halfspace"] = halfspace;

    bool ladder = true, bounds = true;
    for (const auto& sol : hs.solutions) {
        ladder = ladder && sol.ladder_ok;
        bounds = bounds && sol.bounds_ok;
    }
    rep["solver"] = {{"ladder_ok", ladder}, {"bounds_ok", bounds}, {"final_increment", s.residuals.empty() ? 0.0 : s.residuals.back()}};
    check("monotone_ladder", ladder);
    check("maximum_principle", bounds);

    io::ojson mtab = io::ojson::array();
    for (std::size_t k = 0; k < gap.alpha.size(); ++k) {
        mtab.push_back({{"alpha", gap.alpha[k]}, {"M_alpha", gap.M_alpha[k]}, {"T_b_plus_M", bd.T_b() + gap.M_alpha[k]}});
        check("T_inf_bound_alpha_" + io::label_double(gap.alpha[k]), T_inf <= bd.T_b() + gap.M_alpha[k] + 10.0 * c.tol);
    }
    rep["M_alpha"] = mtab;

    const double abs_tol = 10.0 * c.tol;
    std::vector<double> west{0.0};
    west.insert(west.end(), c.alpha.begin(), c.alpha.end());
    io::ojson est = io::ojson::array(), dec = io::ojson::array(), inten = io::ojson::array();
    for (double a : west) {
        const auto e = weighted_estimate_nonlinear(s, a, bd, g, c.estimate_slack, c.tol);
        est.push_back({{"alpha", a}, {"lhs", e.lhs}, {"rhs", e.rhs}, {"pass", e.pass}});
        check("weighted_estimate_alpha_" + io::label_double(a), e.pass);
    }
    DecayCheck fit;
    for (std::size_t k = 0; k < c.alpha.size(); ++k) {
        const double a = c.alpha[k];
        const auto d = decay_envelope(s.T, g, a, T_inf, gap.M_alpha[k], c.estimate_slack, abs_tol);
        fit = d;
        // The fitted exponential lies under the envelope on [0, inf) iff it starts below M and decays faster.
        const bool under = std::isfinite(d.fitted_rate) && std::exp(d.fitted_intercept) <= gap.M_alpha[k] && -d.fitted_rate >= a;
        dec.push_back({{"alpha", a},
                       {"max_ratio", detail::nullable(d.max_ratio)},
                       {"fitted_rate", detail::nullable(d.fitted_rate)},
                       {"fitted_amplitude", detail::nullable(std::exp(d.fitted_intercept))},
                       {"fit_under_envelope", under},
                       {"pass", d.pass}});
        check("decay_envelope_alpha_" + io::label_double(a), d.pass);
        const auto ic = intensity_decay(s, g, a, T_inf, bd, c.estimate_slack, abs_tol);
        inten.push_back({{"alpha", a}, {"worst", detail::nullable(ic.worst)}, {"pass", ic.pass}});
        check("intensity_decay_alpha_" + io::label_double(a), ic.pass);
    }
    rep["estimates"] = {{"weighted", est}, {"decay", dec}, {"intensity", inten}};

    const auto cons = conservation_report(s, g);
    const double h = detail::spacing(g);
    const double flux_bound = c.flux_constant * h * h;
    const auto hrf = half_range_flux(s, g);
    double hrf_min = *std::min_element(hrf.begin(), hrf.end()), hrf_rise = 0.0;
    for (std::size_t i = 1; i < hrf.size(); ++i) hrf_rise = std::max(hrf_rise, hrf[i] - hrf[i - 1]);
    rep["conservation"] = {{"flux_residual", cons.flux_residual}, {"flux_bound", flux_bound}, {"h", h},
                           {"invariant_drift", cons.invariant_drift}, {"half_range_flux_min", hrf_min},
                           {"half_range_flux_max_rise", hrf_rise}};
    check("flux_identity", cons.flux_residual <= flux_bound);
    check("half_range_flux_nonnegative", hrf_min >= -1e-10);

    // Linearized problem around the computed background on [0, linear_B].
    io::ojson lin;
    try {
        const auto lg = std::make_shared<const Grid>(c.linear_B, c.nx, c.nmu);
        const auto own = solve_bounded_milne(bd, *lg, std::nullopt, mopt);
        const MilneSolution* bg = &own;
        const Field S1(lg->nx(), 0.0);
        const auto pb = c.phi_b.values(*lg);
        const auto ls = solve_linearized_bounded(S1, pb, bg->T, *lg, lopt);
        const double delta = delta_constant(c.linear_B);
        double rmax = 0.0;
        for (double r : ls.contraction_ratios) rmax = std::max(rmax, r);
        lin["B"] = c.linear_B;
        lin["delta"] = delta;
        lin["max_contraction_ratio"] = rmax;
        lin["iterations"] = ls.iterations;
        lin["g_inf"] = ls.g_inf;
        lin["weight_degenerate"] = ls.weight_degenerate;
        check("linear_contraction", rmax <= delta + 0.05);
        io::ojson le = io::ojson::array(), nb = io::ojson::array();
        std::vector<double> betas{0.0};
        betas.insert(betas.end(), c.beta.begin(), c.beta.end());
        for (double b : betas) {
            const auto e = weighted_estimate_linear(ls, bg->T, c.phi_b, S1, b, *lg);
            le.push_back({{"beta", b}, {"lhs", e.lhs}, {"rhs", e.rhs}, {"pass", e.pass}});
            check("linear_estimate_beta_" + io::label_double(b), e.pass);
        }
        for (double b : c.beta) {
            const double N = n_beta(c.phi_b, S1, b, *lg);
            const auto d = decay_envelope(ls.g, *lg, b, ls.g_inf, N, 0.0, abs_tol);
            nb.push_back({{"beta", b}, {"N_beta", N}, {"max_ratio", detail::nullable(d.max_ratio)}, {"pass", d.pass}});
            check("linear_decay_beta_" + io::label_double(b), d.pass);
        }
        lin["estimate"] = le;
        lin["N_beta"] = nb;
    } catch (const IterationFailure& e) {
        lin["error"] = e.what();
        check("linear_solver", false);
    }
    io::ojson dtab = io::ojson::array();
    for (double B : c.B_schedule) dtab.push_back({{"B", B}, {"delta", delta_constant(B)}});
    lin["delta_table"] = dtab;
    rep["linearized"] = lin;

    io::ojson spec = io::ojson::array();
    const auto family = default_test_family(g, c.rayleigh_K, c.rayleigh_random, c.seed);
    const auto A1 = compute_A1(s.T, g);
    for (double b : c.beta) {
        const auto A0 = compute_A0(s.T, b, g);
        const auto R = rayleigh_test(s.T, b, family, g);
        const bool a0_pass = A0.value < 0.5;
        const bool below_one = !a0_pass || R.max_quotient < 1.0;
        const bool hardy = !a0_pass || R.max_quotient <= 4.0 * A0.value * A0.value + 0.05;
        spec.push_back({{"beta", b},
                        {"A0", detail::nullable(A0.value)},
                        {"A0_squared", detail::nullable(A0.value * A0.value)},
                        {"A0_truncation", detail::nullable(A0.truncation)},
                        {"A1", detail::nullable(A1.value)},
                        {"rayleigh_max", R.max_quotient},
                        {"rayleigh_skipped", R.skipped},
                        {"passes", {{"A0_below_half", a0_pass}, {"rayleigh_below_one", below_one}, {"hardy_bound", hardy}}}});
        check("spectral_consistency_beta_" + io::label_double(b), below_one && hardy);
    }
    rep["spectral"] = spec;

    if (bd.T_b() > 0.0) {
        const double cb = compute_Cb(bd.T_b(), gamma, c.cb_alpha, c.cb_beta);
        rep["C_b"] = {{"alpha", c.cb_alpha}, {"beta", c.cb_beta}, {"value", cb}, {"gap_below_C_b", gap.gap <= cb}};
    } else {
        rep["C_b"] = nullptr;
    }

    rep["checks"] = checks;
    rep["pass"] = out.failed_checks.empty();
    write_report();
    io::write_file((c.output_dir / "profiles.csv").string(), io::write_csv(detail::profile_table(s, g)));
    io::write_file((c.output_dir / "decay.csv").string(),
                   io::write_csv(detail::decay_table(s, g, T_inf, gap.alpha, gap.M_alpha, fit)));
    out.exit_code = out.failed_checks.empty() ? exit_ok : exit_verification;
    return out;
}

struct VerifyOutcome {
    int exit_code = exit_ok;
    std::vector<std::string> violations;
};

/**
 * @brief Re-checks stored profiles against the invariants without re-solving.
 *
 * Reads report.json and profiles.csv from report_dir. Unknown schema
 * versions and unreadable files are input errors (exit 2).
 */
inline VerifyOutcome verify_pipeline(const RunConfig& c, const std::filesystem::path& report_dir) {
    VerifyOutcome out;
    io::ojson rep;
    io::Table prof;
    try {
        rep = io::ojson::parse(io::read_file((report_dir / "report.json").string()));
        prof = io::read_csv(io::read_file((report_dir / "profiles.csv").string()));
    } catch (const std::exception& e) {
        out.exit_code = exit_config;
        out.violations.push_back(std::string("unreadable report: ") + e.what());
        return out;
    }
    if (!rep.contains("schema_version") || rep["schema_version"] != kReportSchemaVersion) {
        out.exit_code = exit_config;
        out.violations.push_back("unsupported report schema version");
        return out;
    }
    auto fail = [&](const std::string& what) { out.violations.push_back(what); };
    if (rep.value("status", "") != "ok") fail("report status is not ok");

    std::vector<double> x, T, flux;
    try {
        x = prof.col("x");
        T = prof.col("T");
        flux = prof.col("bracket_mu_psi");
    } catch (const std::exception& e) {
        out.exit_code = exit_config;
        out.violations.push_back(e.what());
        return out;
    }
    if (x.size() < 3) {
        out.exit_code = exit_config;
        out.violations.push_back("profiles.csv has fewer than 3 rows");
        return out;
    }
    const Grid g(x, c.nmu);
    const BoundaryData bd = c.boundary();
    const double gamma = bd.gamma(g), T_inf = T.back();
    const double abs_tol = 10.0 * c.tol;

    if (std::abs(T.front() - bd.T_b()) > 1e-12) fail("boundary value T(0) != T_b");
    for (double t : T)
        if (t < -1e-12 || t > gamma + 1e-12) {
            fail("maximum principle 0 <= T <= gamma");
            break;
        }
    if (!rep.contains("T_inf") || std::abs(rep["T_inf"].get<double>() - T_inf) > 0.0) fail("T_inf differs from profile");

    const auto dT = ddx(T, g);
    double fr = 0.0;
    for (std::size_t i = 0; i < T.size(); ++i) fr = std::max(fr, std::abs(dT[i] - flux[i]));
    const double h = g.B() / static_cast<double>(g.nx() - 1);
    if (fr > c.flux_constant * h * h) fail("flux identity exceeds flux_constant * h^2");
    const double stored = rep.contains("conservation") ? rep["conservation"].value("flux_residual", -1.0) : -1.0;
    if (std::abs(fr - stored) > 1e-9 * std::max(fr, stored) + 1e-15) fail("flux identity residual differs from report");

    const double defect = bd.half_range_defect(g);
    for (double a : c.alpha) {
        const auto d = decay_envelope(T, g, a, T_inf, m_alpha(defect, a), c.estimate_slack, abs_tol);
        if (!d.pass) fail("decay envelope alpha=" + io::label_double(a));
        // The temperature part of the weighted estimate alone must respect the bound.
        Field f(T.size());
        for (std::size_t i = 0; i < T.size(); ++i)
            f[i] = std::exp(2.0 * a * x[i]) * 4.0 * T[i] * T[i] * T[i] * dT[i] * dT[i];
        const double span = std::expm1(2.0 * a * g.B()) / (2.0 * a);
        const double slack = c.tol * c.tol * (4.0 * gamma * gamma * gamma + 2.0) * span;
        if (integrate(f, g) > 0.5 * defect * (1.0 + c.estimate_slack) + slack + 1e-14)
            fail("weighted estimate (temperature part) alpha=" + io::label_double(a));
    }
    if (!rep.value("pass", false)) {
        std::string names;
        if (rep.contains("checks"))
            for (auto it = rep["checks"].begin(); it != rep["checks"].end(); ++it)
                if (!it.value().get<bool>()) names += (names.empty() ? "" : ", ") + it.key();
        fail("report flags failed checks: " + names);
    }
    out.exit_code = out.violations.empty() ? exit_ok : exit_verification;
    return out;
}

}  // namespace milne
