#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "milne/discretization.hpp"
#include "milne/errors.hpp"

namespace milne {

/**
 * @brief Solves mu dpsi/dx + psi = h along characteristics.
 *
 * The source is treated as piecewise linear between nodes, so every cell
 * step is exact:
 *   psi_{i+1} = E psi_i + a h_i + b h_{i+1}
 * with tau = dx/|mu|, E = exp(-tau), q = (1-E)/tau, a = q - E, b = 1 - q.
 * Downwind sweeps for mu < 0 use the mirrored step. All three coefficients
 * are nonnegative, so the discrete solution operator is order preserving.
 */
class TransportSolver {
public:
    explicit TransportSolver(const Grid& g) : g_(&g) {
        const std::size_t cells = g.nx() - 1, half = g.half();
        E_.resize(cells * half);
        a_.resize(cells * half);
        b_.resize(cells * half);
        for (std::size_t k = 0; k < half; ++k) {
            const double m = g.mu()[g.pos(k)];
            if (!(m > 0.0)) throw ContractViolation("transport: angular node at mu = 0");
            for (std::size_t i = 0; i < cells; ++i) {
                const double tau = g.dx(i) / m;
                const double one_minus_E = -std::expm1(-tau);
                double b;
                if (tau < 1e-4)
                    b = tau * (0.5 - tau * (1.0 / 6.0 - tau * (1.0 / 24.0 - tau / 120.0)));
                else
                    b = 1.0 - one_minus_E / tau;
                const std::size_t id = k * cells + i;
                E_[id] = 1.0 - one_minus_E;
                a_[id] = one_minus_E - b;
                b_[id] = b;
            }
        }
    }

    const Grid& grid() const { return *g_; }

    /// Reflective right boundary: psi(B,mu) = psi(B,-mu).
    IntensityField bounded(std::span<const double> h, std::span<const double> inflow) const {
        IntensityField out(*g_);
        bounded_into(h, inflow, out);
        return out;
    }

    void bounded_into(std::span<const double> h, std::span<const double> inflow, IntensityField& out) const {
        check(h, inflow);
        sweep([&](std::size_t i, std::size_t) { return h[i]; }, inflow, out, true);
    }

    /// Angle-dependent source s(x_i, mu_j).
    IntensityField bounded(const IntensityField& s, std::span<const double> inflow) const {
        require(s.nx() == g_->nx() && s.nmu() == g_->nmu(), "transport: source shape mismatch");
        require(inflow.size() == g_->half(), "transport: inflow must cover the positive nodes");
        IntensityField out(*g_);
        sweep([&](std::size_t i, std::size_t j) { return s(i, j); }, inflow, out, true);
        return out;
    }

    /// Half-line problem with h(x) = h(B) for x > B; incoming mu < 0 data from the tail.
    IntensityField halfspace(std::span<const double> h, std::span<const double> inflow) const {
        check(h, inflow);
        IntensityField out(*g_);
        sweep([&](std::size_t i, std::size_t) { return h[i]; }, inflow, out, false);
        return out;
    }

private:
    void check(std::span<const double> h, std::span<const double> inflow) const {
        require(h.size() == g_->nx(), "transport: source length does not match nx");
        require(inflow.size() == g_->half(), "transport: inflow must cover the positive nodes");
    }

    template <class Src>
    void sweep(Src src, std::span<const double> inflow, IntensityField& out, bool reflective) const {
        const std::size_t n = g_->nx(), cells = n - 1;
        for (std::size_t k = 0; k < g_->half(); ++k) {
            const std::size_t jp = g_->pos(k), jn = g_->partner(jp);
            const double* E = E_.data() + k * cells;
            const double* a = a_.data() + k * cells;
            const double* b = b_.data() + k * cells;
            double p = inflow[k];
            out(0, jp) = p;
            for (std::size_t i = 0; i < cells; ++i) {
                p = E[i] * p + a[i] * src(i, jp) + b[i] * src(i + 1, jp);
                out(i + 1, jp) = p;
            }
            p = reflective ? p : src(n - 1, jn);
            out(n - 1, jn) = p;
            for (std::size_t i = cells; i-- > 0;) {
                p = E[i] * p + a[i] * src(i + 1, jn) + b[i] * src(i, jn);
                out(i, jn) = p;
            }
        }
    }

    const Grid* g_;
    std::vector<double> E_, a_, b_;
};

inline IntensityField solve_bounded(std::span<const double> h, std::span<const double> inflow, const Grid& g) {
    return TransportSolver(g).bounded(h, inflow);
}

inline IntensityField solve_halfspace(std::span<const double> h, std::span<const double> inflow, const Grid& g) {
    return TransportSolver(g).halfspace(h, inflow);
}

/// True iff the ordered inputs produce ordered bounded-interval solutions.
inline bool monotone_check(std::span<const double> h1, std::span<const double> h2, std::span<const double> pb1,
                           std::span<const double> pb2, const Grid& g) {
    require(h1.size() == h2.size() && pb1.size() == pb2.size(), "monotone_check: length mismatch");
    for (std::size_t i = 0; i < h1.size(); ++i)
        require(0.0 <= h1[i] && h1[i] <= h2[i], "monotone_check: requires 0 <= h1 <= h2");
    for (std::size_t k = 0; k < pb1.size(); ++k)
        require(0.0 <= pb1[k] && pb1[k] <= pb2[k], "monotone_check: requires 0 <= psi_b1 <= psi_b2");
    TransportSolver ts(g);
    auto p1 = ts.bounded(h1, pb1), p2 = ts.bounded(h2, pb2);
    for (std::size_t n = 0; n < p1.data().size(); ++n)
        if (p1.data()[n] - p2.data()[n] > 1e-12) return false;
    return true;
}

}  // namespace milne
