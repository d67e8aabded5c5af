#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include "milne/discretization.hpp"
#include "milne/elliptic.hpp"
#include "milne/errors.hpp"
#include "milne/parallel.hpp"
#include "milne/transport.hpp"

namespace milne {

/// Starting rung (T0, psi0) of the monotone ladder.
struct SubSolution {
    Field T0;
    IntensityField psi0;

    static SubSolution zero(const Grid& g) { return {Field(g.nx(), 0.0), IntensityField(g)}; }
    /// Constant pair (c, c^4); a subsolution whenever c <= T_b and c^4 <= min psi_b.
    static SubSolution constant(const Grid& g, double c) { return {Field(g.nx(), c), IntensityField(g, c * c * c * c)}; }
};

struct MilneOptions {
    double tol = 1e-10;
    std::size_t max_iter = 2'000'000;
    bool keep_history = false;
    bool validate_start = true;
    OdeOptions ode{};
};

struct MilneSolution {
    Field T;
    IntensityField psi;
    double T_inf = 0.0;
    double gamma = 0.0;
    std::size_t iterations = 0;
    /// max(|T^{k+1}-T^k|, |psi^{k+1}-psi^k|) per iteration.
    std::vector<double> residuals;
    /// Estimated asymptotic contraction factor of the increments at exit.
    double rate = 0.0;
    /// Ladder and bound checks evaluated on every iterate as it is produced.
    bool ladder_ok = true;
    bool bounds_ok = true;
    std::vector<Field> T_history;
    std::vector<IntensityField> psi_history;
};

inline double fourth(double t) { return t * t * t * t; }

inline Field pow4(std::span<const double> T) {
    Field out(T.size());
    for (std::size_t i = 0; i < T.size(); ++i) out[i] = fourth(T[i]);
    return out;
}

/**
 * @brief Checks the discrete subsolution inequalities.
 *
 * -T0'' + 2 phi(T0) <= <psi0> on rows 1..n-1, psi0 below the transport solve
 * with source T0^4 and its own inflow, and boundary values under the data.
 */
inline bool is_subsolution(const SubSolution& s, const BoundaryData& bd, const Grid& g, double tol = 1e-9) {
    if (s.T0.size() != g.nx() || s.psi0.nx() != g.nx() || s.psi0.nmu() != g.nmu()) return false;
    const double gamma = bd.gamma(g);
    const PhiExtension phi{gamma};
    if (s.T0[0] < -tol || s.T0[0] > bd.T_b() + tol) return false;
    auto inflow = bd.inflow(g);
    std::vector<double> own(g.half());
    for (std::size_t k = 0; k < g.half(); ++k) {
        own[k] = s.psi0(0, g.pos(k));
        if (own[k] < -tol || own[k] > inflow[k] + tol) return false;
    }
    auto L = apply_neg_laplacian(s.T0, g);
    for (std::size_t i = 1; i < g.nx(); ++i)
        if (L[i] + 2.0 * phi(s.T0[i]) - bracket(s.psi0.at(i), g) > tol) return false;
    auto bound = TransportSolver(g).bounded(pow4(s.T0), own);
    for (std::size_t n = 0; n < bound.data().size(); ++n)
        if (s.psi0.data()[n] - bound.data()[n] > tol) return false;
    return true;
}

/**
 * @brief Monotone iteration on [0,B]:
 *   -T^{k+1}'' + 2 phi(T^{k+1}) = <psi^k>,   mu psi^{k+1}' + psi^{k+1} = (T^k)^4.
 *
 * The increments contract geometrically with a factor rho close to 1 on long
 * domains, so the stop test is incr / (1 - rho) < tol with rho estimated from
 * the increment history; this bounds the distance to the limit rather than
 * the last step.
 */
inline MilneSolution solve_bounded_milne(const BoundaryData& bd, const Grid& g,
                                         std::optional<SubSolution> start = std::nullopt,
                                         const MilneOptions& opt = {}) {
    const double gamma = bd.gamma(g);
    require(std::isfinite(gamma), "solve_bounded_milne: gamma must be finite");
    const auto inflow = bd.inflow(g);
    SubSolution s = start ? std::move(*start) : SubSolution::zero(g);
    if (opt.validate_start && start && !is_subsolution(s, bd, g))
        throw ContractViolation("solve_bounded_milne: start is not a subsolution");

    MilneSolution out;
    out.gamma = gamma;
    const double g4 = fourth(gamma);
    const PhiExtension phi{gamma};
    const TransportSolver ts(g);
    const std::size_t n = g.nx();

    Field T = std::move(s.T0);
    IntensityField psi = std::move(s.psi0);
    if (opt.keep_history) {
        out.T_history.push_back(T);
        out.psi_history.push_back(psi);
    }

    if (gamma == 0.0) {  // all data zero: the zero pair is the solution
        out.T = Field(n, 0.0);
        out.psi = IntensityField(g);
        return out;
    }

    constexpr std::size_t window = 50;  // even
    const double floor = 8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, g4);
    Field src(n), h(n);
    IntensityField psi_next(g);
    for (std::size_t k = 0; k < opt.max_iter; ++k) {
        for (std::size_t i = 0; i < n; ++i) src[i] = std::clamp(bracket(psi.at(i), g), 0.0, 2.0 * g4);
        Field T_next = solve_monotone_ode(src, bd.T_b(), 2.0, phi, g, opt.ode, std::span<const double>(T));
        for (std::size_t i = 0; i < n; ++i) h[i] = fourth(T[i]);
        ts.bounded_into(h, inflow, psi_next);

        double incr = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = T_next[i] - T[i];
            incr = std::max(incr, std::abs(d));
            if (d < -1e-12) out.ladder_ok = false;
            if (T_next[i] < -1e-12 || T_next[i] > gamma + 1e-12) out.bounds_ok = false;
        }
        for (std::size_t m = 0; m < psi.data().size(); ++m) {
            const double v = psi_next.data()[m], d = v - psi.data()[m];
            incr = std::max(incr, std::abs(d));
            if (d < -1e-12) out.ladder_ok = false;
            if (v < -1e-12 || v > g4 + 1e-12) out.bounds_ok = false;
        }
        T.swap(T_next);
        std::swap(psi, psi_next);
        out.residuals.push_back(incr);
        out.iterations = k + 1;
        if (opt.keep_history) {
            out.T_history.push_back(T);
            out.psi_history.push_back(psi);
        }

        if (incr <= floor) break;
        // The T and psi updates decouple into two interleaved chains, so
        // increments alternate; compare envelopes an even lag apart.
        if (k >= window + 1) {
            const double env = std::max(incr, out.residuals[k - 1]);
            const double past = std::max(out.residuals[k - window], out.residuals[k - window - 1]);
            if (past > 0.0 && env < past) {
                out.rate = std::pow(env / past, 1.0 / static_cast<double>(window));
                if (env / (1.0 - out.rate) < opt.tol) break;
            }
        }
        if (k + 1 == opt.max_iter)
            throw IterationFailure("solve_bounded_milne: no convergence", incr, out.iterations);
    }
    out.T = std::move(T);
    out.psi = std::move(psi);
    out.T_inf = out.T.back();
    return out;
}

/// True iff every stored iterate dominates its predecessor within -1e-12.
inline bool verify_monotone_ladder(const MilneSolution& s) {
    for (std::size_t k = 1; k < s.T_history.size(); ++k) {
        const auto &a = s.T_history[k - 1], &b = s.T_history[k];
        for (std::size_t i = 0; i < a.size(); ++i)
            if (b[i] - a[i] < -1e-12) return false;
    }
    for (std::size_t k = 1; k < s.psi_history.size(); ++k) {
        const auto &a = s.psi_history[k - 1].data(), &b = s.psi_history[k].data();
        for (std::size_t i = 0; i < a.size(); ++i)
            if (b[i] - a[i] < -1e-12) return false;
    }
    return true;
}

/// Max-norm discrepancy over all pairs of converged solutions from the given starts.
inline double uniqueness_probe(const BoundaryData& bd, const Grid& g, const std::vector<SubSolution>& starts,
                               const MilneOptions& opt = {}) {
    std::vector<MilneSolution> sols(starts.size());
    parallel_for(starts.size(), [&](std::size_t i) { sols[i] = solve_bounded_milne(bd, g, starts[i], opt); });
    double d = 0.0;
    for (std::size_t a = 0; a < sols.size(); ++a)
        for (std::size_t b = a + 1; b < sols.size(); ++b) {
            d = std::max(d, max_abs_diff(sols[a].T, sols[b].T));
            d = std::max(d, max_abs_diff(sols[a].psi, sols[b].psi));
        }
    return d;
}

/// Exact solution for the data scaled to (lambda T_b, lambda^4 psi_b); a subsolution for the original data.
inline SubSolution scaled_data_start(const BoundaryData& bd, const Grid& g, double lambda, const MilneOptions& opt = {}) {
    require(0.0 <= lambda && lambda <= 1.0, "scaled_data_start: lambda must lie in [0,1]");
    auto v = bd.inflow(g);
    for (double& p : v) p *= fourth(lambda);
    auto small = BoundaryData::tabulated(lambda * bd.T_b(), v);
    auto s = solve_bounded_milne(small, g, std::nullopt, opt);
    return {std::move(s.T), std::move(s.psi)};
}

struct HalfspaceResult {
    std::vector<double> B;
    std::vector<std::shared_ptr<const Grid>> grids;
    std::vector<MilneSolution> solutions;
    /// T^{B_i}(B_i) per schedule entry.
    std::vector<double> endpoint;
    /// |T^{B_{i+1}}(B_{i+1}) - T^{B_i}(B_i)|.
    std::vector<double> cauchy;
    /// False when the Cauchy differences fail to decrease along the schedule.
    bool cauchy_decreasing = true;
    double T_inf = 0.0;

    const MilneSolution& largest() const { return solutions.back(); }
    const Grid& largest_grid() const { return *grids.back(); }
};

/**
 * @brief Solves on each B of an increasing schedule (concurrently) and reads T_inf off the largest.
 *
 * nx is the node count on the largest domain; shorter domains keep the same
 * spacing (nearest node count), so the endpoint differences reflect B and not h.
 */
inline HalfspaceResult extend_to_halfspace(const BoundaryData& bd, const std::vector<double>& schedule, std::size_t nx,
                                           std::size_t nmu, const MilneOptions& opt = {}) {
    require(schedule.size() >= 3, "extend_to_halfspace: need at least 3 domain lengths");
    for (std::size_t i = 1; i < schedule.size(); ++i)
        require(schedule[i] > schedule[i - 1], "extend_to_halfspace: schedule must be increasing");
    require(nx >= 3, "extend_to_halfspace: need at least 3 nodes");
    HalfspaceResult r;
    r.B = schedule;
    const double cells = static_cast<double>(nx - 1) / schedule.back();
    for (double B : schedule) {
        const auto n = static_cast<std::size_t>(std::llround(cells * B)) + 1;
        r.grids.push_back(std::make_shared<const Grid>(B, std::max<std::size_t>(n, 3), nmu));
    }
    r.solutions.resize(schedule.size());
    parallel_for(schedule.size(),
                 [&](std::size_t i) { r.solutions[i] = solve_bounded_milne(bd, *r.grids[i], std::nullopt, opt); });
    for (const auto& s : r.solutions) r.endpoint.push_back(s.T.back());
    for (std::size_t i = 1; i < r.endpoint.size(); ++i) r.cauchy.push_back(std::abs(r.endpoint[i] - r.endpoint[i - 1]));
    for (std::size_t i = 1; i < r.cauchy.size(); ++i)
        if (r.cauchy[i] > r.cauchy[i - 1]) r.cauchy_decreasing = false;
    r.T_inf = r.endpoint.back();
    return r;
}

}  // namespace milne
