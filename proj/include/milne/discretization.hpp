#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "milne/errors.hpp"

namespace milne {

using Field = std::vector<double>;

/**
 * @brief Gauss-Legendre nodes and weights on [-1,1], ascending.
 *
 * Only the positive half is computed by Newton iteration on P_n; the
 * negative half is mirrored so that the +/- pairing is bitwise exact.
 */
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(std::size_t n) {
    require(n >= 2 && n % 2 == 0, "gauss_legendre: order must be even and >= 2");
    std::vector<double> mu(n), w(n);
    const std::size_t half = n / 2;
    for (std::size_t i = 0; i < half; ++i) {
        double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                            (static_cast<double>(n) + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = z;
            for (std::size_t k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / static_cast<double>(k);
                p0 = p1;
                p1 = p2;
            }
            dp = static_cast<double>(n) * (z * p1 - p0) / (z * z - 1.0);
            double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        double wi = 2.0 / ((1.0 - z * z) * dp * dp);
        mu[half + (half - 1 - i)] = z;
        w[half + (half - 1 - i)] = wi;
        mu[i] = -z;
        w[i] = wi;
    }
    // mu[i] was filled with -z for the largest z first, so the negative half is ascending.
    return {mu, w};
}

/**
 * @brief Spatial nodes on [0,B] and angular quadrature on [-1,1].
 *
 * Angular nodes are ascending; index j pairs with nmu-1-j, and the
 * positive nodes occupy [nmu/2, nmu).
 */
class Grid {
public:
    Grid(double B, std::size_t nx, std::size_t nmu) {
        require(B > 0.0 && std::isfinite(B), "Grid: B must be positive and finite");
        if (nx < 2) throw UnsupportedGrid("Grid: nx must be at least 2");
        x_.resize(nx);
        for (std::size_t i = 0; i < nx; ++i)
            x_[i] = B * static_cast<double>(i) / static_cast<double>(nx - 1);
        x_.back() = B;
        init_angles(nmu);
        uniform_ = true;
    }

    Grid(std::vector<double> x, std::size_t nmu) : x_(std::move(x)) {
        if (x_.size() < 2) throw UnsupportedGrid("Grid: nx must be at least 2");
        require(x_.front() == 0.0, "Grid: x[0] must be 0");
        for (std::size_t i = 1; i < x_.size(); ++i)
            require(x_[i] > x_[i - 1], "Grid: nodes must be strictly increasing");
        init_angles(nmu);
        const double h = x_.back() / static_cast<double>(x_.size() - 1);
        uniform_ = true;
        for (std::size_t i = 1; i < x_.size(); ++i)
            if (std::abs((x_[i] - x_[i - 1]) - h) > 1e-12 * x_.back()) uniform_ = false;
    }

    double B() const { return x_.back(); }
    std::size_t nx() const { return x_.size(); }
    std::size_t nmu() const { return mu_.size(); }
    std::size_t half() const { return mu_.size() / 2; }
    /// Angular index of the k-th positive node (k = 0 is the smallest mu > 0).
    std::size_t pos(std::size_t k) const { return half() + k; }
    std::size_t partner(std::size_t j) const { return mu_.size() - 1 - j; }
    bool uniform() const { return uniform_; }
    double dx(std::size_t cell) const { return x_[cell + 1] - x_[cell]; }

    const std::vector<double>& x() const { return x_; }
    const std::vector<double>& mu() const { return mu_; }
    const std::vector<double>& w() const { return w_; }

private:
    void init_angles(std::size_t nmu) {
        require(nmu >= 2 && nmu % 2 == 0, "Grid: nmu must be even and >= 2");
        auto [m, w] = gauss_legendre(nmu);
        mu_ = std::move(m);
        w_ = std::move(w);
    }

    std::vector<double> x_, mu_, w_;
    bool uniform_ = true;
};

/// psi(x_i, mu_j) stored node-major so angular moments read contiguous memory.
class IntensityField {
public:
    IntensityField() = default;
    IntensityField(std::size_t nx, std::size_t nmu, double fill = 0.0)
        : nx_(nx), nmu_(nmu), v_(nx * nmu, fill) {}
    explicit IntensityField(const Grid& g, double fill = 0.0) : IntensityField(g.nx(), g.nmu(), fill) {}

    double& operator()(std::size_t i, std::size_t j) { return v_[i * nmu_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return v_[i * nmu_ + j]; }
    std::span<const double> at(std::size_t i) const { return {v_.data() + i * nmu_, nmu_}; }
    std::span<double> at(std::size_t i) { return {v_.data() + i * nmu_, nmu_}; }

    std::size_t nx() const { return nx_; }
    std::size_t nmu() const { return nmu_; }
    std::vector<double>& data() { return v_; }
    const std::vector<double>& data() const { return v_; }

private:
    std::size_t nx_ = 0, nmu_ = 0;
    std::vector<double> v_;
};

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    require(a.size() == b.size(), "max_abs_diff: length mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

inline double max_abs_diff(const IntensityField& a, const IntensityField& b) {
    return max_abs_diff(a.data(), b.data());
}

/// <f> = sum_j w_j f(mu_j).
inline double bracket(std::span<const double> f, const Grid& g) {
    require(f.size() == g.nmu(), "bracket: length does not match angular grid");
    double s = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) s += g.w()[j] * f[j];
    return s;
}

/// sum_j w_j mu_j^k f(mu_j) for k in {0,1,2}.
inline double moment(std::span<const double> f, int k, const Grid& g) {
    require(f.size() == g.nmu(), "moment: length does not match angular grid");
    require(k >= 0 && k <= 2, "moment: k must be 0, 1 or 2");
    double s = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) {
        double m = g.mu()[j];
        double p = k == 0 ? 1.0 : (k == 1 ? m : m * m);
        s += g.w()[j] * p * f[j];
    }
    return s;
}

/// Per-node angular moment of an intensity field.
inline Field moment_profile(const IntensityField& psi, int k, const Grid& g) {
    Field out(psi.nx());
    for (std::size_t i = 0; i < psi.nx(); ++i) out[i] = moment(psi.at(i), k, g);
    return out;
}

/**
 * @brief Second-order derivative on the spatial grid.
 *
 * Three-point Lagrange stencils: centred in the interior, one-sided at
 * both ends. On a uniform grid they reduce to the textbook formulas.
 */
inline Field ddx(std::span<const double> f, const std::vector<double>& x) {
    const std::size_t n = x.size();
    if (n < 3) throw UnsupportedGrid("ddx: need at least 3 nodes");
    require(f.size() == n, "ddx: length mismatch");
    Field d(n);
    auto three = [&](std::size_t a, std::size_t at) {
        const double x0 = x[a], x1 = x[a + 1], x2 = x[a + 2], t = x[at];
        const double l0 = ((t - x1) + (t - x2)) / ((x0 - x1) * (x0 - x2));
        const double l1 = ((t - x0) + (t - x2)) / ((x1 - x0) * (x1 - x2));
        const double l2 = ((t - x0) + (t - x1)) / ((x2 - x0) * (x2 - x1));
        return l0 * f[a] + l1 * f[a + 1] + l2 * f[a + 2];
    };
    d[0] = three(0, 0);
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = three(i - 1, i);
    d[n - 1] = three(n - 3, n - 1);
    return d;
}

inline Field ddx(std::span<const double> f, const Grid& g) { return ddx(f, g.x()); }

/// Composite trapezoid rule.
inline double trapezoid(std::span<const double> f, const std::vector<double>& x) {
    require(f.size() == x.size(), "trapezoid: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) s += 0.5 * (x[i + 1] - x[i]) * (f[i] + f[i + 1]);
    return s;
}

/**
 * @brief Composite Simpson on uniform grids, trapezoid otherwise.
 *
 * An odd number of uniform cells closes with the 3/8 rule on the last three.
 */
inline double integrate(std::span<const double> f, const Grid& g) {
    const auto& x = g.x();
    const std::size_t cells = x.size() - 1;
    if (!g.uniform() || cells < 2) return trapezoid(f, x);
    const double h = x[1] - x[0];
    std::size_t simpson_cells = cells % 2 == 0 ? cells : cells - 3;
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < simpson_cells; i += 2) s += h / 3.0 * (f[i] + 4.0 * f[i + 1] + f[i + 2]);
    if (simpson_cells != cells) {
        std::size_t i = simpson_cells;
        s += 3.0 * h / 8.0 * (f[i] + 3.0 * f[i + 1] + 3.0 * f[i + 2] + f[i + 3]);
    }
    return s;
}

/// Function of mu on (0,1]: constant, polynomial sum_k c_k mu^k, or values tabulated at the positive nodes.
class AngularProfile {
public:
    enum class Kind { constant, polynomial, tabulated };

    AngularProfile() : AngularProfile(Kind::constant, {0.0}) {}
    static AngularProfile constant(double c) { return AngularProfile(Kind::constant, {c}); }
    static AngularProfile polynomial(std::vector<double> coeffs) {
        require(!coeffs.empty(), "AngularProfile: empty polynomial");
        return AngularProfile(Kind::polynomial, std::move(coeffs));
    }
    /// Values at the positive angular nodes, ascending in mu.
    static AngularProfile tabulated(std::vector<double> values) {
        return AngularProfile(Kind::tabulated, std::move(values));
    }

    Kind kind() const { return kind_; }
    const std::vector<double>& coefficients() const { return c_; }

    std::vector<double> values(const Grid& g) const {
        if (kind_ == Kind::tabulated) {
            require(c_.size() == g.half(), "AngularProfile: tabulated values do not match nmu/2");
            return c_;
        }
        std::vector<double> out(g.half());
        for (std::size_t k = 0; k < g.half(); ++k) out[k] = eval(g.mu()[g.pos(k)]);
        return out;
    }

    /// int_0^1 mu (p(mu) - shift)^2 dmu; exact for analytic profiles, node quadrature for tables.
    double half_range_moment(const Grid& g, double shift = 0.0) const {
        if (kind_ == Kind::tabulated) {
            auto v = values(g);
            double s = 0.0;
            for (std::size_t k = 0; k < g.half(); ++k) {
                const std::size_t j = g.pos(k);
                s += g.w()[j] * g.mu()[j] * (v[k] - shift) * (v[k] - shift);
            }
            return s;
        }
        std::vector<double> q = c_;
        q[0] -= shift;
        double s = 0.0;
        for (std::size_t a = 0; a < q.size(); ++a)
            for (std::size_t b = 0; b < q.size(); ++b) s += q[a] * q[b] / static_cast<double>(a + b + 2);
        return s;
    }

    AngularProfile scaled(double lambda) const {
        auto c = c_;
        for (double& v : c) v *= lambda;
        return AngularProfile(kind_, std::move(c));
    }

private:
    AngularProfile(Kind k, std::vector<double> c) : kind_(k), c_(std::move(c)) {}

    double eval(double m) const {
        double s = 0.0;
        for (std::size_t k = c_.size(); k-- > 0;) s = s * m + c_[k];
        return s;
    }

    Kind kind_;
    std::vector<double> c_;
};

/// Boundary data (T_b, psi_b) with psi_b kept in analytic form when available.
class BoundaryData {
public:
    BoundaryData(double T_b, AngularProfile psi_b) : T_b_(T_b), psi_b_(std::move(psi_b)) {
        require(T_b >= 0.0 && std::isfinite(T_b), "BoundaryData: T_b must be nonnegative");
        if (psi_b_.kind() != AngularProfile::Kind::tabulated)
            for (double c : psi_b_.coefficients()) require(std::isfinite(c), "BoundaryData: psi_b must be finite");
        if (psi_b_.kind() == AngularProfile::Kind::constant)
            require(psi_b_.coefficients()[0] >= 0.0, "BoundaryData: psi_b must be nonnegative");
    }

    static BoundaryData constant(double T_b, double c) { return {T_b, AngularProfile::constant(c)}; }
    static BoundaryData polynomial(double T_b, std::vector<double> c) {
        return {T_b, AngularProfile::polynomial(std::move(c))};
    }
    static BoundaryData tabulated(double T_b, std::vector<double> v) {
        return {T_b, AngularProfile::tabulated(std::move(v))};
    }
    static BoundaryData well_prepared(double T_b) { return constant(T_b, T_b * T_b * T_b * T_b); }

    double T_b() const { return T_b_; }
    const AngularProfile& psi_b() const { return psi_b_; }

    /// psi_b at the positive nodes of g; rejects negative values.
    std::vector<double> inflow(const Grid& g) const {
        auto out = psi_b_.values(g);
        for (double v : out) require(v >= 0.0 && std::isfinite(v), "BoundaryData: psi_b must be nonnegative");
        return out;
    }

    /// gamma = max(T_b, max psi_b^{1/4}) over the positive nodes.
    double gamma(const Grid& g) const {
        double gmax = T_b_;
        for (double v : inflow(g)) gmax = std::max(gmax, std::pow(v, 0.25));
        return gmax;
    }

    /// int_0^1 mu (psi_b - T_b^4)^2 dmu.
    double half_range_defect(const Grid& g) const {
        return psi_b_.half_range_moment(g, T_b_ * T_b_ * T_b_ * T_b_);
    }

    bool is_well_prepared(const Grid& g) const {
        const double tb4 = T_b_ * T_b_ * T_b_ * T_b_;
        for (double v : inflow(g))
            if (v != tb4) return false;
        return true;
    }

private:
    double T_b_;
    AngularProfile psi_b_;
};

}  // namespace milne
