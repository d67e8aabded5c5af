#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "milne/discretization.hpp"
#include "milne/errors.hpp"

namespace milne {

struct HardyConstant {
    /// sup_r (int_r^B w1)^{1/2} (int_0^r 1/w2)^{1/2}; +inf when T touches zero.
    double value = 0.0;
    /// Node at which the supremum is attained.
    double argmax = 0.0;
    /// Increase of the supremum if the tail beyond B is extrapolated exponentially.
    double truncation = 0.0;
};

namespace detail {

inline HardyConstant hardy_sup(std::span<const double> T, double beta, const Grid& g) {
    const std::size_t n = g.nx();
    require(T.size() == n, "hardy: length mismatch");
    HardyConstant r;
    for (double t : T)
        if (!(t > 0.0)) {
            r.value = std::numeric_limits<double>::infinity();
            return r;
        }
    const auto dT = ddx(T, g);
    Field w1(n), iw2(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = g.x()[i];
        w1[i] = std::exp(2.0 * beta * x) * 36.0 * T[i] * dT[i] * dT[i];
        iw2[i] = std::exp(-2.0 * beta * x) / (4.0 * T[i] * T[i] * T[i]);
    }
    Field tail(n, 0.0), head(n, 0.0);
    for (std::size_t i = n - 1; i-- > 0;) tail[i] = tail[i + 1] + 0.5 * g.dx(i) * (w1[i] + w1[i + 1]);
    for (std::size_t i = 1; i < n; ++i) head[i] = head[i - 1] + 0.5 * g.dx(i - 1) * (iw2[i - 1] + iw2[i]);

    // Tail beyond B: w1 extrapolated with the decay rate seen over the last cells.
    double extra = 0.0;
    const std::size_t m = std::min<std::size_t>(n - 1, 10);
    const double a = w1[n - 1 - m], b = w1[n - 1];
    if (b > 0.0 && a > 0.0) {
        const double rate = std::log(a / b) / (g.x()[n - 1] - g.x()[n - 1 - m]);
        extra = rate > 0.0 ? b / rate : std::numeric_limits<double>::infinity();
    }
    double best = 0.0, best_ext = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = tail[i] * head[i];
        if (v > best) {
            best = v;
            r.argmax = g.x()[i];
        }
        best_ext = std::max(best_ext, (tail[i] + extra) * head[i]);
    }
    r.value = std::sqrt(best);
    r.truncation = std::sqrt(best_ext) - r.value;
    return r;
}

}  // namespace detail

/// Hardy constant A0 with weights e^{2 beta x} 36 T T'^2 and e^{-2 beta x} / (4 T^3); sup over nodes.
inline HardyConstant compute_A0(std::span<const double> T, double beta, const Grid& g) {
    require(beta >= 0.0 && beta < 1.0, "compute_A0: beta must lie in [0,1)");
    return detail::hardy_sup(T, beta, g);
}

/// Same supremum without the exponential weights.
inline HardyConstant compute_A1(std::span<const double> T, const Grid& g) { return detail::hardy_sup(T, 0.0, g); }

/// Test function f with f(0) = 0 and its derivative, sampled at the nodes.
struct TestFunction {
    Field f;
    Field df;
};

/// Uniform double in [0,1) built from the top 53 bits, identical on every platform.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/**
 * @brief Default family: sin(k pi x / 2B) for k = 1..K, x e^{-c x}, and
 * cumulative integrals of nonnegative noise.
 */
inline std::vector<TestFunction> default_test_family(const Grid& g, std::size_t K = 20, std::size_t n_random = 50,
                                                     std::uint64_t seed = 12345) {
    const std::size_t n = g.nx();
    const double B = g.B();
    std::vector<TestFunction> fam;
    for (std::size_t k = 1; k <= K; ++k) {
        TestFunction t{Field(n), Field(n)};
        const double a = static_cast<double>(k) * std::numbers::pi / (2.0 * B);
        for (std::size_t i = 0; i < n; ++i) {
            t.f[i] = std::sin(a * g.x()[i]);
            t.df[i] = a * std::cos(a * g.x()[i]);
        }
        fam.push_back(std::move(t));
    }
    for (double c : {0.1, 0.25, 0.5, 1.0, 2.0, 4.0}) {
        TestFunction t{Field(n), Field(n)};
        for (std::size_t i = 0; i < n; ++i) {
            const double x = g.x()[i], e = std::exp(-c * x);
            t.f[i] = x * e;
            t.df[i] = (1.0 - c * x) * e;
        }
        fam.push_back(std::move(t));
    }
    std::mt19937_64 rng(seed);
    for (std::size_t r = 0; r < n_random; ++r) {
        TestFunction t{Field(n, 0.0), Field(n)};
        for (std::size_t i = 0; i < n; ++i) t.df[i] = uniform01(rng);
        for (std::size_t i = 1; i < n; ++i) t.f[i] = t.f[i - 1] + 0.5 * g.dx(i - 1) * (t.df[i - 1] + t.df[i]);
        fam.push_back(std::move(t));
    }
    return fam;
}

struct RayleighResult {
    double max_quotient = 0.0;
    std::vector<double> quotients;
    /// Test functions dropped because the denominator fell below 1e-14.
    std::size_t skipped = 0;
};

/// Quotients int e^{2bx} 36 T T'^2 f^2 / int e^{2bx} 4 T^3 f'^2 over a test family.
inline RayleighResult rayleigh_test(std::span<const double> T, double beta, const std::vector<TestFunction>& family,
                                    const Grid& g) {
    const std::size_t n = g.nx();
    require(T.size() == n, "rayleigh_test: length mismatch");
    const auto dT = ddx(T, g);
    RayleighResult r;
    Field num(n), den(n);
    for (const auto& t : family) {
        require(t.f.size() == n && t.df.size() == n, "rayleigh_test: test function length mismatch");
        require(std::abs(t.f[0]) <= 1e-14, "rayleigh_test: test functions must vanish at x = 0");
        for (std::size_t i = 0; i < n; ++i) {
            const double e = std::exp(2.0 * beta * g.x()[i]);
            num[i] = e * 36.0 * T[i] * dT[i] * dT[i] * t.f[i] * t.f[i];
            den[i] = e * 4.0 * T[i] * T[i] * T[i] * t.df[i] * t.df[i];
        }
        const double d = trapezoid(den, g.x());
        if (d < 1e-14) {
            ++r.skipped;
            continue;
        }
        const double q = trapezoid(num, g.x()) / d;
        r.quotients.push_back(q);
        r.max_quotient = std::max(r.max_quotient, q);
    }
    return r;
}

/// C_b = min{ T_b sqrt(3 a (1-a)) / 2, T_b^3 b (a - b) sqrt(a) / (72 gamma) }.
inline double compute_Cb(double T_b, double gamma, double alpha, double beta) {
    require(0.0 < beta && beta < alpha && alpha < 1.0, "compute_Cb: requires 0 < beta < alpha < 1");
    require(T_b > 0.0 && gamma >= T_b, "compute_Cb: requires T_b > 0 and gamma >= T_b");
    const double first = 0.5 * T_b * std::sqrt(3.0 * alpha * (1.0 - alpha));
    const double second = T_b * T_b * T_b * beta * (alpha - beta) * std::sqrt(alpha) / (72.0 * gamma);
    return std::min(first, second);
}

struct GapReport {
    /// 1/2 int_0^1 mu (psi_b - T_b^4)^2.
    double gap = 0.0;
    std::vector<double> alpha;
    std::vector<double> M_alpha;
};

inline GapReport boundary_gap(const BoundaryData& bd, const Grid& g, const std::vector<double>& alphas = {}) {
    GapReport r;
    r.gap = 0.5 * bd.half_range_defect(g);
    for (double a : alphas) {
        require(a > 0.0 && a < 1.0, "boundary_gap: alpha must lie in (0,1)");
        r.alpha.push_back(a);
        r.M_alpha.push_back(std::sqrt(2.0 * r.gap / (6.0 * a * (1.0 - a))));
    }
    return r;
}

struct StabilityTable {
    std::vector<double> eps;
    std::vector<double> A;
    double A0 = 0.0;
    /// Least eps with A' >= 1/2, if any.
    std::optional<double> first_failure;
    /// Slope of A' - A0 against eps through the origin, and the worst deviation from that line.
    double slope = 0.0;
    double line_residual = 0.0;
};

/// A' = compute_A0(T + eps h) for each eps.
inline StabilityTable perturbation_stability(std::span<const double> T, std::span<const double> h,
                                             const std::vector<double>& eps, double beta, const Grid& g) {
    require(h.size() == T.size(), "perturbation_stability: length mismatch");
    require(std::abs(h[0]) <= 1e-14, "perturbation_stability: perturbation must vanish at x = 0");
    StabilityTable r;
    r.A0 = compute_A0(T, beta, g).value;
    require(r.A0 < 0.5, "perturbation_stability: background must satisfy A0 < 1/2");
    Field Tp(T.size());
    double sxy = 0.0, sxx = 0.0;
    for (double e : eps) {
        for (std::size_t i = 0; i < T.size(); ++i) Tp[i] = T[i] + e * h[i];
        const double a = compute_A0(Tp, beta, g).value;
        r.eps.push_back(e);
        r.A.push_back(a);
        if (a >= 0.5 && (!r.first_failure || e < *r.first_failure)) r.first_failure = e;
        if (std::isfinite(a)) {
            sxy += e * (a - r.A0);
            sxx += e * e;
        }
    }
    r.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    for (std::size_t k = 0; k < r.eps.size(); ++k)
        if (std::isfinite(r.A[k]))
            r.line_residual = std::max(r.line_residual, std::abs(r.A[k] - r.A0 - r.slope * r.eps[k]));
    return r;
}

}  // namespace milne
