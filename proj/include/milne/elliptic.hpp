#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "milne/discretization.hpp"
#include "milne/errors.hpp"

namespace milne {

/// Strictly increasing extension of T^4 outside [0, gamma].
struct PhiExtension {
    double gamma;

    double operator()(double T) const {
        if (T < 0.0) return T / (1.0 - T);
        if (T <= gamma) return T * T * T * T;
        const double d = T - gamma;
        return gamma * gamma * gamma * gamma + d / (1.0 + d);
    }

    double derivative(double T) const {
        if (T < 0.0) return 1.0 / ((1.0 - T) * (1.0 - T));
        if (T <= gamma) return 4.0 * T * T * T;
        const double d = 1.0 + T - gamma;
        return 1.0 / (d * d);
    }
};

/// f(x) = int_0^x int_t^B h(s) ds dt, trapezoidal per cell.
inline Field green_apply(std::span<const double> h, const Grid& g) {
    require(h.size() == g.nx(), "green_apply: length mismatch");
    const std::size_t n = g.nx();
    Field F(n, 0.0), f(n, 0.0);
    for (std::size_t i = n - 1; i-- > 0;) F[i] = F[i + 1] + 0.5 * g.dx(i) * (h[i] + h[i + 1]);
    for (std::size_t i = 1; i < n; ++i) f[i] = f[i - 1] + 0.5 * g.dx(i - 1) * (F[i - 1] + F[i]);
    return f;
}

namespace detail {

/// In-place Thomas algorithm; sub[i] couples row i to i-1, sup[i] to i+1.
inline void thomas(std::vector<double> sub, std::vector<double> diag, std::vector<double> sup, std::vector<double>& rhs) {
    const std::size_t n = diag.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double m = sub[i] / diag[i - 1];
        diag[i] -= m * sup[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - sup[i] * rhs[i + 1]) / diag[i];
}

/// Stencil of -d2/dx2 with Dirichlet row 0 and a ghost-node Neumann row at B.
struct Stencil {
    std::vector<double> sub, diag, sup;
};

inline Stencil laplacian(const Grid& g) {
    const std::size_t n = g.nx();
    Stencil s{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
    s.diag[0] = 1.0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double hl = g.dx(i - 1), hr = g.dx(i), c = 2.0 / (hl + hr);
        s.sub[i] = -c / hl;
        s.sup[i] = -c / hr;
        s.diag[i] = c / hl + c / hr;
    }
    const double h = g.dx(n - 2);
    s.sub[n - 1] = -2.0 / (h * h);
    s.diag[n - 1] = 2.0 / (h * h);
    return s;
}

}  // namespace detail

/// (-d2/dx2 T)_i for i >= 1, with the ghost node at B carrying slope q.
inline Field apply_neg_laplacian(std::span<const double> T, const Grid& g, double q = 0.0) {
    const std::size_t n = g.nx();
    if (n < 3) throw UnsupportedGrid("apply_neg_laplacian: need at least 3 nodes");
    Field r(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double hl = g.dx(i - 1), hr = g.dx(i);
        r[i] = -2.0 / (hl + hr) * ((T[i + 1] - T[i]) / hr - (T[i] - T[i - 1]) / hl);
    }
    const double h = g.dx(n - 2);
    r[n - 1] = -2.0 * (T[n - 2] - T[n - 1] + h * q) / (h * h);
    return r;
}

/// Max-norm residual of -T'' + c phi(T) - g over rows 1..n-1.
inline double ode_residual(std::span<const double> T, std::span<const double> src, double c, const PhiExtension& phi,
                           const Grid& g) {
    auto L = apply_neg_laplacian(T, g);
    double r = 0.0;
    for (std::size_t i = 1; i < g.nx(); ++i) r = std::max(r, std::abs(L[i] + c * phi(T[i]) - src[i]));
    return r;
}

/// Roundoff floor of the discrete residual: the stencil amplifies eps by ~4|T|/h^2.
inline double residual_floor(std::span<const double> T, const Grid& g) {
    double hmin = std::numeric_limits<double>::infinity(), tmax = 1.0;
    for (std::size_t i = 0; i + 1 < g.nx(); ++i) hmin = std::min(hmin, g.dx(i));
    for (double t : T) tmax = std::max(tmax, std::abs(t));
    return 64.0 * std::numeric_limits<double>::epsilon() * tmax / (hmin * hmin);
}

struct OdeOptions {
    double tol = 1e-10;
    std::size_t max_iter = 100;
};

/**
 * @brief Solves -T'' + c phi(T) = g, T(0) = T_b, T'(B) = 0.
 *
 * Newton on the three-point finite-difference system; the Jacobian is an
 * M-matrix, so the discrete maximum principle and the comparison principle
 * hold exactly. A step is halved while it increases the residual.
 */
inline Field solve_monotone_ode(std::span<const double> src, double T_b, double c, const PhiExtension& phi,
                                const Grid& g, const OdeOptions& opt = {},
                                std::optional<std::span<const double>> guess = std::nullopt) {
    const std::size_t n = g.nx();
    if (n < 3) throw UnsupportedGrid("solve_monotone_ode: need at least 3 nodes");
    require(src.size() == n, "solve_monotone_ode: source length mismatch");
    require(c > 0.0, "solve_monotone_ode: coupling c must be positive");
    require(0.0 <= T_b && T_b <= phi.gamma, "solve_monotone_ode: requires 0 <= T_b <= gamma");
    const double cap = c * phi(phi.gamma);
    const double slack = 1e-12 * (1.0 + cap);
    for (double v : src)
        require(v >= -slack && v <= cap + slack, "solve_monotone_ode: requires 0 <= g <= c phi(gamma)");

    Field T = guess ? Field(guess->begin(), guess->end()) : Field(n, T_b);
    require(T.size() == n, "solve_monotone_ode: guess length mismatch");
    T[0] = T_b;
    const auto L = detail::laplacian(g);

    auto residual_vec = [&](const Field& t) {
        auto r = apply_neg_laplacian(t, g);
        r[0] = 0.0;
        for (std::size_t i = 1; i < n; ++i) r[i] += c * phi(t[i]) - src[i];
        return r;
    };
    auto norm = [](const Field& r) {
        double m = 0.0;
        for (double v : r) m = std::max(m, std::abs(v));
        return m;
    };

    Field F = residual_vec(T);
    double res = norm(F);
    bool small_step = false;
    for (std::size_t it = 0; it < opt.max_iter; ++it) {
        auto diag = L.diag;
        for (std::size_t i = 1; i < n; ++i) diag[i] += c * phi.derivative(T[i]);
        Field d(n);
        for (std::size_t i = 0; i < n; ++i) d[i] = -F[i];
        d[0] = 0.0;
        detail::thomas(L.sub, diag, L.sup, d);

        double step = 1.0, dmax = 0.0;
        Field trial(n);
        double tres = res;
        for (int halvings = 0; halvings < 40; ++halvings) {
            for (std::size_t i = 0; i < n; ++i) trial[i] = T[i] + step * d[i];
            F = residual_vec(trial);
            tres = norm(F);
            if (tres <= res || tres <= residual_floor(trial, g)) break;
            step *= 0.5;
        }
        for (double v : d) dmax = std::max(dmax, std::abs(step * v));
        T.swap(trial);
        res = tres;
        double scale = 1.0;
        for (double t : T) scale = std::max(scale, std::abs(t));
        if (small_step) break;
        if (dmax <= 1e-14 * scale) small_step = true;  // one polishing step after convergence
    }
    if (res > std::max(opt.tol, residual_floor(T, g)))
        throw IterationFailure("solve_monotone_ode: residual above tolerance", res, opt.max_iter);
    return T;
}

/// Compares two ODE solves with ordered data; true iff T1 <= T2 within tol.
inline bool ode_monotone_check(std::span<const double> g1, std::span<const double> g2, double T_b1, double T_b2,
                               double c, const PhiExtension& phi, const Grid& g, const OdeOptions& opt = {}) {
    require(g1.size() == g2.size(), "ode_monotone_check: length mismatch");
    for (std::size_t i = 0; i < g1.size(); ++i)
        require(0.0 <= g1[i] && g1[i] <= g2[i], "ode_monotone_check: requires 0 <= g1 <= g2");
    require(0.0 <= T_b1 && T_b1 <= T_b2 && T_b2 <= phi.gamma,
            "ode_monotone_check: requires 0 <= T_b1 <= T_b2 <= gamma");
    auto T1 = solve_monotone_ode(g1, T_b1, c, phi, g, opt);
    auto T2 = solve_monotone_ode(g2, T_b2, c, phi, g, opt);
    for (std::size_t i = 0; i < T1.size(); ++i)
        if (T1[i] - T2[i] > opt.tol) return false;
    return true;
}

/// Direct solve of -u'' + k(x) u = r, u(0) = u0, u'(B) = q.
inline Field solve_linear_bvp(std::span<const double> k, std::span<const double> r, double u0, const Grid& g,
                              double q = 0.0) {
    const std::size_t n = g.nx();
    if (n < 3) throw UnsupportedGrid("solve_linear_bvp: need at least 3 nodes");
    require(k.size() == n && r.size() == n, "solve_linear_bvp: length mismatch");
    auto L = detail::laplacian(g);
    Field rhs(r.begin(), r.end());
    rhs[0] = u0;
    for (std::size_t i = 1; i < n; ++i) L.diag[i] += k[i];
    const double h = g.dx(n - 2);
    rhs[n - 1] += 2.0 * q / h;
    detail::thomas(L.sub, L.diag, L.sup, rhs);
    return rhs;
}

}  // namespace milne
