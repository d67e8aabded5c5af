#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "milne/discretization.hpp"
#include "milne/elliptic.hpp"
#include "milne/errors.hpp"
#include "milne/transport.hpp"

namespace milne {

struct LinearizedOptions {
    double tol = 1e-10;
    std::size_t max_iter = 1'000'000;
};

struct LinearizedSolution {
    Field g;
    IntensityField phi;
    double g_inf = 0.0;
    /// ||g_k - g_{k-1}||^2 / ||g_{k-1} - g_{k-2}||^2 in the 16 T^6 weighted norm.
    std::vector<double> contraction_ratios;
    /// Weighted increment norms per iteration.
    std::vector<double> increments;
    std::size_t iterations = 0;
    /// Set when T vanishes somewhere and the unweighted L2 norm was used instead.
    bool weight_degenerate = false;
};

/// Phi(g) = transport solve with source 4 T^3 g and inflow phi_b.
inline IntensityField phi_map(std::span<const double> g, std::span<const double> phi_b, std::span<const double> T,
                              const Grid& grid) {
    require(g.size() == grid.nx() && T.size() == grid.nx(), "phi_map: field length does not match grid");
    Field src(grid.nx());
    for (std::size_t i = 0; i < src.size(); ++i) src[i] = 4.0 * T[i] * T[i] * T[i] * g[i];
    return TransportSolver(grid).bounded(src, phi_b);
}

/**
 * @brief Iterative solve of the linear pair
 *   g'' + <phi - 4T^3 g> = f,   mu phi' + phi - 4T^3 g = s,
 * with g(0) = g0, g'(B) = q, phi(0,mu>0) = phi_b, reflective at B.
 *
 * Eliminating phi gives -g'' + 8T^3 g = <Phi(g)> - f with Phi including s;
 * each sweep solves that BVP directly with the previous iterate inside Phi.
 */
inline LinearizedSolution solve_linear_pair(std::span<const double> f, const IntensityField& s,
                                            std::span<const double> phi_b, std::span<const double> T, const Grid& grid,
                                            const LinearizedOptions& opt = {}, double g0 = 0.0, double q = 0.0,
                                            std::optional<std::span<const double>> start = std::nullopt) {
    const std::size_t n = grid.nx();
    require(f.size() == n && T.size() == n, "linearized: field length does not match grid");
    require(s.nx() == n && s.nmu() == grid.nmu(), "linearized: source shape does not match grid");
    require(phi_b.size() == grid.half(), "linearized: phi_b must cover the positive nodes");

    LinearizedSolution out;
    const TransportSolver ts(grid);
    Field k8(n), w(n), t3(n);
    for (std::size_t i = 0; i < n; ++i) {
        t3[i] = 4.0 * T[i] * T[i] * T[i];
        k8[i] = 2.0 * t3[i];
        w[i] = t3[i] * t3[i];
        if (T[i] <= 0.0) out.weight_degenerate = true;
    }
    if (out.weight_degenerate) std::fill(w.begin(), w.end(), 1.0);

    auto wnorm = [&](const Field& a, const Field& b) {
        Field d(n);
        for (std::size_t i = 0; i < n; ++i) d[i] = w[i] * (a[i] - b[i]) * (a[i] - b[i]);
        return std::sqrt(std::max(0.0, integrate(d, grid)));
    };
    auto Phi = [&](const Field& g) {
        IntensityField src(s);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < grid.nmu(); ++j) src(i, j) += t3[i] * g[i];
        return ts.bounded(src, phi_b);
    };

    Field g = start ? Field(start->begin(), start->end()) : Field(n, 0.0);
    require(g.size() == n, "linearized: start length mismatch");
    Field rhs(n);
    double first = 0.0, prev = 0.0, rate = 0.0;
    for (std::size_t k = 0; k < opt.max_iter; ++k) {
        auto phi = Phi(g);
        for (std::size_t i = 0; i < n; ++i) rhs[i] = bracket(phi.at(i), grid) - f[i];
        Field gn = solve_linear_bvp(k8, rhs, g0, grid, q);
        const double inc = wnorm(gn, g);
        g.swap(gn);
        out.increments.push_back(inc);
        out.iterations = k + 1;
        if (k == 0) first = inc;
        // ratios below the roundoff floor of the increments carry no information
        if (k > 0 && prev > 0.0 && inc > 1e-11 * first) {
            const double r = (inc * inc) / (prev * prev);
            out.contraction_ratios.push_back(r);
            rate = std::sqrt(r);
        }
        double scale = 0.0;
        for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(g[i]));
        if (inc <= 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + scale)) break;
        if (k > 0 && rate < 1.0 && inc / (1.0 - rate) < opt.tol) break;
        prev = inc;
        if (k + 1 == opt.max_iter) throw IterationFailure("linearized: no convergence", inc, out.iterations);
    }
    out.phi = Phi(g);
    out.g = std::move(g);
    out.g_inf = out.g.back();
    return out;
}

/// Broadcast a per-node value to every angle.
inline IntensityField broadcast(std::span<const double> v, const Grid& grid) {
    IntensityField out(grid);
    for (std::size_t i = 0; i < grid.nx(); ++i)
        for (std::size_t j = 0; j < grid.nmu(); ++j) out(i, j) = v[i];
    return out;
}

/**
 * @brief Homogeneous-boundary linearized problem on [0,B]:
 *   g'' + <phi - 4T^3 g> = <S1>,   mu phi' + phi - 4T^3 g = S1,
 * g(0) = 0, g'(B) = 0, phi(0,mu>0) = phi_b, reflective at B.
 */
inline LinearizedSolution solve_linearized_bounded(std::span<const double> S1, std::span<const double> phi_b,
                                                   std::span<const double> T, const Grid& grid,
                                                   const LinearizedOptions& opt = {},
                                                   std::optional<std::span<const double>> start = std::nullopt) {
    require(S1.size() == grid.nx(), "solve_linearized_bounded: S1 length mismatch");
    Field f(S1.size());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = 2.0 * S1[i];
    return solve_linear_pair(f, broadcast(S1, grid), phi_b, T, grid, opt, 0.0, 0.0, start);
}

/// Contraction constant int_0^1 (1 - e^{-B/mu}) / int_0^1 (1 + e^{-B/mu}), adaptive Gauss-Kronrod.
inline double delta_constant(double B) {
    require(B > 0.0 && std::isfinite(B), "delta_constant: B must be positive");
    using boost::math::quadrature::gauss_kronrod;
    auto ex = [B](double m) { return m <= 0.0 ? 0.0 : std::exp(-B / m); };
    const double num = gauss_kronrod<double, 61>::integrate([&](double m) { return 1.0 - ex(m); }, 0.0, 1.0, 20, 1e-12);
    const double den = gauss_kronrod<double, 61>::integrate([&](double m) { return 1.0 + ex(m); }, 0.0, 1.0, 20, 1e-12);
    return num / den;
}

/// N_beta = (2 beta)^{-1/2} ( 2/(3(1-beta)) int_0^1 mu phi_b^2 + 4/(3(1-beta)^2) ||e^{beta x} S1||^2 )^{1/2}.
inline double n_beta(const AngularProfile& phi_b, std::span<const double> S1, double beta, const Grid& grid) {
    require(beta > 0.0 && beta < 1.0, "n_beta: beta must lie in (0,1)");
    require(S1.size() == grid.nx(), "n_beta: S1 length mismatch");
    Field e(grid.nx());
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = std::exp(2.0 * beta * grid.x()[i]) * S1[i] * S1[i];
    const double s = integrate(e, grid);
    const double m = phi_b.half_range_moment(grid);
    return std::sqrt((2.0 / (3.0 * (1.0 - beta)) * m + 4.0 / (3.0 * (1.0 - beta) * (1.0 - beta)) * s) / (2.0 * beta));
}

struct LinearEstimate {
    double lhs = 0.0;
    double rhs = 0.0;
    bool pass = false;
};

/**
 * @brief Weighted estimate for the linearized pair:
 *   int int e^{2bx} (phi - 4T^3 g)^2 + 1/(1-b) int_{-1}^0 |mu| phi(0)^2
 *     <= 1/(1-b) int_0^1 mu phi_b^2 + 2/(1-b)^2 int e^{2bx} S1^2.
 */
inline LinearEstimate weighted_estimate_linear(const LinearizedSolution& sol, std::span<const double> T,
                                               const AngularProfile& phi_b, std::span<const double> S1, double beta,
                                               const Grid& grid, double tol_rel = 0.01) {
    require(beta >= 0.0 && beta < 1.0, "weighted_estimate_linear: beta must lie in [0,1)");
    const std::size_t n = grid.nx();
    Field a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double e = std::exp(2.0 * beta * grid.x()[i]);
        const double t3g = 4.0 * T[i] * T[i] * T[i] * sol.g[i];
        double q = 0.0;
        for (std::size_t j = 0; j < grid.nmu(); ++j) q += grid.w()[j] * (sol.phi(i, j) - t3g) * (sol.phi(i, j) - t3g);
        a[i] = e * q;
        b[i] = e * S1[i] * S1[i];
    }
    double wall = 0.0;
    for (std::size_t j = 0; j < grid.half(); ++j) wall += grid.w()[j] * std::abs(grid.mu()[j]) * sol.phi(0, j) * sol.phi(0, j);
    LinearEstimate r;
    r.lhs = integrate(a, grid) + wall / (1.0 - beta);
    r.rhs = phi_b.half_range_moment(grid) / (1.0 - beta) + 2.0 / ((1.0 - beta) * (1.0 - beta)) * integrate(b, grid);
    r.pass = r.lhs <= r.rhs * (1.0 + tol_rel) + 1e-14;
    return r;
}

struct LinearResiduals {
    /// max |g'' + <phi - 4T^3 g> - f| over interior nodes.
    double ode = 0.0;
    /// max |mu phi' + phi - 4T^3 g - s| over interior nodes.
    double transport = 0.0;
    /// max |g' - <mu phi>| over all nodes.
    double flux = 0.0;
};

/// Finite-difference residuals of a computed pair; second order in the grid spacing.
inline LinearResiduals linear_residuals(std::span<const double> g, const IntensityField& phi, std::span<const double> T,
                                        std::span<const double> f, const IntensityField& s, const Grid& grid) {
    const std::size_t n = grid.nx();
    LinearResiduals r;
    auto L = apply_neg_laplacian(g, grid);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double t3 = 4.0 * T[i] * T[i] * T[i];
        r.ode = std::max(r.ode, std::abs(-L[i] + bracket(phi.at(i), grid) - 2.0 * t3 * g[i] - f[i]));
    }
    std::vector<double> col(n);
    for (std::size_t j = 0; j < grid.nmu(); ++j) {
        for (std::size_t i = 0; i < n; ++i) col[i] = phi(i, j);
        auto d = ddx(col, grid);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double t3 = 4.0 * T[i] * T[i] * T[i];
            r.transport = std::max(r.transport, std::abs(grid.mu()[j] * d[i] + phi(i, j) - t3 * g[i] - s(i, j)));
        }
    }
    auto dg = ddx(g, grid);
    for (std::size_t i = 0; i < n; ++i) r.flux = std::max(r.flux, std::abs(dg[i] - moment(phi.at(i), 1, grid)));
    return r;
}

struct GeneralLinearResult {
    LinearizedSolution solution;
    /// First and second subsystems and the corrector G.
    Field g1, g2, G;
    /// <S~2> - <S~1> at B; nonzero means the integral defining G diverges beyond B.
    double tail_defect = 0.0;
};

/**
 * @brief General data g(0) = g_b, independent sources:
 *   g'' + <phi - 4T^3 g> = <S1>,   mu phi' + phi - 4T^3 g = S2.
 *
 * With h = g - g_b e^{-x} the sources become
 *   S~1 = S1 + (4T^3 - 1/2) g_b e^{-x},   S~2 = S2 + 4T^3 g_b e^{-x},
 * and D = <S~2> - <S~1>. The first subsystem takes transport source
 * S~2 - D/2; the corrector mu G with G' = (3/2) D, G(B) = 0 absorbs the
 * moment mismatch; the second subsystem has transport source
 * -(mu^2 G' + mu G) + D/2 and inflow -mu G(0). On [0,B] the shift leaves
 * g'(B) = -g_b e^{-B}.
 */
inline GeneralLinearResult solve_linearized_general(double g_b, std::span<const double> phi_b,
                                                    std::span<const double> S1, const IntensityField& S2,
                                                    std::span<const double> T, const Grid& grid,
                                                    const LinearizedOptions& opt = {}) {
    const std::size_t n = grid.nx(), nm = grid.nmu();
    require(S1.size() == n && T.size() == n, "solve_linearized_general: field length mismatch");
    require(S2.nx() == n && S2.nmu() == nm, "solve_linearized_general: S2 shape mismatch");
    Field e(n), St1(n), D(n);
    IntensityField St2(S2);
    for (std::size_t i = 0; i < n; ++i) {
        e[i] = std::exp(-grid.x()[i]);
        const double t3 = 4.0 * T[i] * T[i] * T[i];
        St1[i] = S1[i] + (t3 - 0.5) * g_b * e[i];
        for (std::size_t j = 0; j < nm; ++j) St2(i, j) += t3 * g_b * e[i];
        D[i] = bracket(St2.at(i), grid) - 2.0 * St1[i];
    }
    GeneralLinearResult out;
    out.tail_defect = D.back();

    Field f1(n);
    IntensityField s1(St2);
    for (std::size_t i = 0; i < n; ++i) {
        f1[i] = 2.0 * St1[i];
        for (std::size_t j = 0; j < nm; ++j) s1(i, j) -= 0.5 * D[i];
    }
    auto first = solve_linear_pair(f1, s1, phi_b, T, grid, opt);

    Field G(n, 0.0);
    for (std::size_t i = n - 1; i-- > 0;) G[i] = G[i + 1] - 1.5 * 0.5 * grid.dx(i) * (D[i] + D[i + 1]);
    IntensityField s2(grid);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < nm; ++j) {
            const double m = grid.mu()[j];
            s2(i, j) = -(m * m * 1.5 * D[i] + m * G[i]) + 0.5 * D[i];
        }
    std::vector<double> in2(grid.half());
    for (std::size_t k = 0; k < grid.half(); ++k) in2[k] = -grid.mu()[grid.pos(k)] * G[0];
    auto second = solve_linear_pair(Field(n, 0.0), s2, in2, T, grid, opt);

    LinearizedSolution& sol = out.solution;
    sol.g.resize(n);
    sol.phi = IntensityField(grid);
    for (std::size_t i = 0; i < n; ++i) {
        sol.g[i] = g_b * e[i] + first.g[i] + second.g[i];
        for (std::size_t j = 0; j < nm; ++j) sol.phi(i, j) = grid.mu()[j] * G[i] + first.phi(i, j) + second.phi(i, j);
    }
    sol.g_inf = sol.g.back();
    sol.iterations = first.iterations + second.iterations;
    sol.contraction_ratios = first.contraction_ratios;
    sol.contraction_ratios.insert(sol.contraction_ratios.end(), second.contraction_ratios.begin(),
                                  second.contraction_ratios.end());
    sol.weight_degenerate = first.weight_degenerate;
    out.g1 = std::move(first.g);
    out.g2 = std::move(second.g);
    out.G = std::move(G);
    return out;
}

/// Direct route for the general problem: one iteration on the unshifted pair with the same boundary slope.
inline LinearizedSolution solve_linearized_general_direct(double g_b, std::span<const double> phi_b,
                                                          std::span<const double> S1, const IntensityField& S2,
                                                          std::span<const double> T, const Grid& grid,
                                                          const LinearizedOptions& opt = {}) {
    Field f(S1.size());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = 2.0 * S1[i];
    return solve_linear_pair(f, S2, phi_b, T, grid, opt, g_b, -g_b * std::exp(-grid.B()));
}

}  // namespace milne
