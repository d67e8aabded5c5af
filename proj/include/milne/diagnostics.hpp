#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "milne/discretization.hpp"
#include "milne/errors.hpp"
#include "milne/milne.hpp"

namespace milne {

/// M_alpha = (6 alpha (1-alpha))^{-1/2} (int_0^1 mu (psi_b - T_b^4)^2 dmu)^{1/2}.
inline double m_alpha(double defect, double alpha) {
    require(alpha > 0.0 && alpha < 1.0, "m_alpha: alpha must lie in (0,1)");
    return std::sqrt(defect / (6.0 * alpha * (1.0 - alpha)));
}

struct EstimateCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    bool pass = false;
};

/**
 * @brief Weighted energy estimate with weight exp(2 alpha x):
 *   int e^{2ax} 4T^3 T'^2 + (1-a) int int e^{2ax} (psi-T^4)^2
 *     + 1/2 int_{-1}^0 |mu| (psi(0)-T_b^4)^2  <=  1/2 int_0^1 mu (psi_b-T_b^4)^2.
 *
 * field_tol is the pointwise accuracy of (T, psi); it adds the absolute slack
 * field_tol^2 (4 gamma^3 + 2) int_0^B e^{2ax}, which matters only when the rhs vanishes.
 */
inline EstimateCheck weighted_estimate_nonlinear(const MilneSolution& s, double alpha, const BoundaryData& bd,
                                                 const Grid& g, double tol_rel = 0.02, double field_tol = 0.0) {
    require(alpha >= 0.0 && alpha < 1.0, "weighted_estimate_nonlinear: alpha must lie in [0,1)");
    const std::size_t n = g.nx();
    const auto dT = ddx(s.T, g);
    Field f1(n), f2(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double e = std::exp(2.0 * alpha * g.x()[i]);
        const double t = s.T[i], t4 = fourth(t);
        f1[i] = e * 4.0 * t * t * t * dT[i] * dT[i];
        double q = 0.0;
        for (std::size_t j = 0; j < g.nmu(); ++j) q += g.w()[j] * (s.psi(i, j) - t4) * (s.psi(i, j) - t4);
        f2[i] = e * q;
    }
    const double tb4 = fourth(bd.T_b());
    double wall = 0.0;
    for (std::size_t j = 0; j < g.half(); ++j) {
        const double d = s.psi(0, j) - tb4;
        wall += g.w()[j] * std::abs(g.mu()[j]) * d * d;
    }
    EstimateCheck r;
    r.lhs = integrate(f1, g) + (1.0 - alpha) * integrate(f2, g) + 0.5 * wall;
    r.rhs = 0.5 * bd.half_range_defect(g);
    const double gm = bd.gamma(g);
    const double span = alpha > 0.0 ? std::expm1(2.0 * alpha * g.B()) / (2.0 * alpha) : g.B();
    const double slack = field_tol * field_tol * (4.0 * gm * gm * gm + 2.0) * span;
    r.pass = r.lhs <= r.rhs * (1.0 + tol_rel) + slack + 1e-14;
    return r;
}

struct DecayCheck {
    /// max_i |T - T_inf| / (M_alpha e^{-alpha x_i}); <= 1 + slack means no violation.
    double max_ratio = 0.0;
    /// Least-squares fit log|T - T_inf| ~ fitted_intercept + fitted_rate x over x <= B/2,
    /// where the Neumann end does not flatten the profile; NaN when fewer than 2 usable nodes.
    double fitted_rate = std::numeric_limits<double>::quiet_NaN();
    double fitted_intercept = std::numeric_limits<double>::quiet_NaN();
    bool pass = false;
};

/// Checks |T - T_inf| <= M e^{-alpha x} (1 + tol_rel) at every node and fits the observed decay rate.
inline DecayCheck decay_envelope(std::span<const double> T, const Grid& g, double alpha, double T_inf, double M,
                                 double tol_rel = 0.02, double tol_abs = 1e-12) {
    require(alpha > 0.0 && alpha < 1.0, "decay_envelope: alpha must lie in (0,1)");
    DecayCheck r;
    bool ok = true;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t cnt = 0;
    for (std::size_t i = 0; i < g.nx(); ++i) {
        const double d = std::abs(T[i] - T_inf), x = g.x()[i];
        const double bound = M * std::exp(-alpha * x);
        if (bound > 0.0) r.max_ratio = std::max(r.max_ratio, d / bound);
        else if (d > tol_abs) r.max_ratio = std::numeric_limits<double>::infinity();
        if (d > bound * (1.0 + tol_rel) + tol_abs) ok = false;
        if (d > 1e-12 && x <= 0.5 * g.B()) {
            const double y = std::log(d);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            ++cnt;
        }
    }
    if (cnt >= 2) {
        const double c = static_cast<double>(cnt);
        r.fitted_rate = (c * sxy - sx * sy) / (c * sxx - sx * sx);
        r.fitted_intercept = (sy - r.fitted_rate * sx) / c;
    }
    r.pass = ok;
    return r;
}

inline DecayCheck decay_envelope(const MilneSolution& s, const Grid& g, double alpha, double T_inf,
                                 const BoundaryData& bd, double tol_rel = 0.02, double tol_abs = 1e-12) {
    return decay_envelope(s.T, g, alpha, T_inf, m_alpha(bd.half_range_defect(g), alpha), tol_rel, tol_abs);
}

struct IntensityCheck {
    /// Worst |psi - T_inf^4| / bound over all (node, angle).
    double worst = 0.0;
    bool pass = false;
};

/**
 * @brief Pointwise intensity bounds:
 *   mu > 0: |psi - T_inf^4| <= |psi_b - T_b^4| e^{-x/mu} + C e^{-alpha x} / (1 - mu alpha)
 *   mu < 0: |psi - T_inf^4| <= C e^{-alpha x} / (1 - mu alpha)
 * with C = 4 (T_b + 2 M_alpha)^3 M_alpha.
 */
inline IntensityCheck intensity_decay(const MilneSolution& s, const Grid& g, double alpha, double T_inf,
                                      const BoundaryData& bd, double tol_rel = 0.02, double tol_abs = 1e-12) {
    require(alpha > 0.0 && alpha < 1.0, "intensity_decay: alpha must lie in (0,1)");
    const double M = m_alpha(bd.half_range_defect(g), alpha);
    const double tb = bd.T_b(), C = 4.0 * std::pow(tb + 2.0 * M, 3) * M;
    const double ti4 = fourth(T_inf), tb4 = fourth(tb);
    const auto inflow = bd.inflow(g);
    IntensityCheck r;
    bool ok = true;
    for (std::size_t i = 0; i < g.nx(); ++i) {
        const double x = g.x()[i];
        for (std::size_t j = 0; j < g.nmu(); ++j) {
            const double m = g.mu()[j];
            double bound = C * std::exp(-alpha * x) / (1.0 - m * alpha);
            if (m > 0.0) bound += std::abs(inflow[j - g.half()] - tb4) * std::exp(-x / m);
            const double d = std::abs(s.psi(i, j) - ti4);
            if (bound > 0.0) r.worst = std::max(r.worst, d / bound);
            else if (d > tol_abs) r.worst = std::numeric_limits<double>::infinity();
            if (d > bound * (1.0 + tol_rel) + tol_abs) ok = false;
        }
    }
    r.pass = ok;
    return r;
}

struct ConservationReport {
    /// max_i |T'(x_i) - <mu psi(x_i)>|.
    double flux_residual = 0.0;
    /// max - min of T - <mu^2 psi>; reported without a sign convention.
    double invariant_drift = 0.0;
};

inline ConservationReport conservation_report(std::span<const double> T, const IntensityField& psi, const Grid& g) {
    ConservationReport r;
    const auto dT = ddx(T, g);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = 0; i < g.nx(); ++i) {
        r.flux_residual = std::max(r.flux_residual, std::abs(dT[i] - moment(psi.at(i), 1, g)));
        const double v = T[i] - moment(psi.at(i), 2, g);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    r.invariant_drift = hi - lo;
    return r;
}

inline ConservationReport conservation_report(const MilneSolution& s, const Grid& g) {
    return conservation_report(s.T, s.psi, g);
}

/// <mu (psi - T^4)^2> per node; nonnegative and non-increasing for exact solutions.
inline Field half_range_flux(const MilneSolution& s, const Grid& g) {
    Field out(g.nx());
    for (std::size_t i = 0; i < g.nx(); ++i) {
        const double t4 = fourth(s.T[i]);
        double q = 0.0;
        for (std::size_t j = 0; j < g.nmu(); ++j) q += g.w()[j] * g.mu()[j] * (s.psi(i, j) - t4) * (s.psi(i, j) - t4);
        out[i] = q;
    }
    return out;
}

}  // namespace milne
