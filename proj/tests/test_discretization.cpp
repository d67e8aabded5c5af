#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "milne/discretization.hpp"
#include "milne/spectral.hpp"

using namespace milne;

namespace {

Field per_angle(const Grid& g, double (*f)(double)) {
    Field v(g.nmu());
    for (std::size_t j = 0; j < g.nmu(); ++j) v[j] = f(g.mu()[j]);
    return v;
}

}  // namespace

TEST(Grid, Invariants) {
    for (std::size_t nmu : {2u, 4u, 8u, 16u, 32u}) {
        Grid g(10.0, 401, nmu);
        EXPECT_EQ(g.x().front(), 0.0);
        EXPECT_EQ(g.x().back(), 10.0);
        for (std::size_t i = 1; i < g.nx(); ++i) EXPECT_GT(g.x()[i], g.x()[i - 1]);
        double sw = 0.0;
        for (double w : g.w()) {
            EXPECT_GT(w, 0.0);
            sw += w;
        }
        EXPECT_NEAR(sw, 2.0, 1e-12);
        for (std::size_t j = 0; j < nmu; ++j) {
            EXPECT_NE(g.mu()[j], 0.0);
            EXPECT_DOUBLE_EQ(g.mu()[j], -g.mu()[g.partner(j)]);
            EXPECT_DOUBLE_EQ(g.w()[j], g.w()[g.partner(j)]);
        }
        for (std::size_t k = 0; k < g.half(); ++k) EXPECT_GT(g.mu()[g.pos(k)], 0.0);
    }
}

TEST(Grid, RejectsBadShapes) {
    EXPECT_THROW(Grid(1.0, 401, 15), ContractViolation);
    EXPECT_THROW(Grid(1.0, 401, 0), ContractViolation);
    EXPECT_THROW(Grid(-1.0, 401, 16), ContractViolation);
    EXPECT_THROW(Grid(std::vector<double>{0.0, 0.5, 0.4, 1.0}, 4), ContractViolation);
    EXPECT_THROW(Grid(std::vector<double>{0.1, 0.5, 1.0}, 4), ContractViolation);
}

TEST(Bracket, Examples) {
    Grid g(1.0, 11, 16);
    EXPECT_NEAR(bracket(per_angle(g, [](double) { return 1.0; }), g), 2.0, 1e-14);
    EXPECT_NEAR(bracket(per_angle(g, [](double m) { return m; }), g), 0.0, 1e-15);
    EXPECT_NEAR(bracket(per_angle(g, [](double m) { return m * m; }), g), 2.0 / 3.0, 1e-12);
    EXPECT_THROW(bracket(Field(3, 1.0), g), ContractViolation);
}

TEST(Moment, Examples) {
    Grid g(1.0, 11, 16);
    const Field c(g.nmu(), 0.7);
    EXPECT_NEAR(moment(c, 1, g), 0.0, 1e-15);
    EXPECT_NEAR(moment(c, 2, g), 2.0 * 0.7 / 3.0, 1e-14);
    // The kink at mu = 0 is not polynomial, so full-range Gauss-Legendre is only approximate here.
    const double half = moment(per_angle(g, [](double m) { return m > 0 ? 1.0 : 0.0; }), 1, g);
    EXPECT_NEAR(half, 0.5, 2e-3);
    EXPECT_NE(half, 0.5);
    EXPECT_THROW(moment(c, 3, g), ContractViolation);
}

TEST(Bracket, PolynomialExactness) {
    for (std::size_t nmu : {4u, 8u, 16u}) {
        Grid g(1.0, 5, nmu);
        for (std::size_t d = 0; d <= 2 * nmu - 1; ++d) {
            Field f(nmu);
            for (std::size_t j = 0; j < nmu; ++j) f[j] = std::pow(g.mu()[j], static_cast<double>(d));
            const double exact = d % 2 ? 0.0 : 2.0 / static_cast<double>(d + 1);
            EXPECT_NEAR(bracket(f, g), exact, 1e-12) << "nmu=" << nmu << " degree=" << d;
        }
    }
}

TEST(Bracket, ReflectionConsistency) {
    Grid g(1.0, 5, 16);
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        Field f(g.nmu()), r(g.nmu());
        for (auto& v : f) v = uniform01(rng) - 0.5;
        for (std::size_t j = 0; j < g.nmu(); ++j) r[j] = f[g.partner(j)];
        EXPECT_NEAR(bracket(f, g), bracket(r, g), 1e-14);
    }
}

TEST(GaussLegendre, MatchesKnownTwoPointRule) {
    auto [x, w] = gauss_legendre(2);
    EXPECT_NEAR(x[1], 1.0 / std::sqrt(3.0), 1e-15);
    EXPECT_NEAR(w[0], 1.0, 1e-15);
}

TEST(Ddx, Examples) {
    Grid g(1.0, 11, 2);
    Field c(g.nx(), 3.0), lin(g.nx()), quad(g.nx());
    for (std::size_t i = 0; i < g.nx(); ++i) {
        lin[i] = g.x()[i];
        quad[i] = g.x()[i] * g.x()[i];
    }
    for (double v : ddx(c, g)) EXPECT_NEAR(v, 0.0, 1e-13);
    for (double v : ddx(lin, g)) EXPECT_NEAR(v, 1.0, 1e-13);
    const auto dq = ddx(quad, g);
    // Three-point stencils are exact on quadratics, one-sided ends included.
    for (std::size_t i = 0; i < g.nx(); ++i) EXPECT_NEAR(dq[i], 2.0 * g.x()[i], 1e-12);
    EXPECT_THROW(ddx(Field{1.0, 2.0}, Grid(1.0, 2, 2)), UnsupportedGrid);
}

TEST(Ddx, SecondOrderConvergence) {
    double prev = 0.0;
    for (std::size_t nx : {21u, 41u, 81u, 161u}) {
        Grid g(2.0, nx, 2);
        Field f(nx);
        for (std::size_t i = 0; i < nx; ++i) f[i] = std::sin(3.0 * g.x()[i]);
        const auto d = ddx(f, g);
        double err = 0.0;
        for (std::size_t i = 0; i < nx; ++i) err = std::max(err, std::abs(d[i] - 3.0 * std::cos(3.0 * g.x()[i])));
        if (prev > 0.0) {
            EXPECT_GT(prev / err, 3.5);
        }
        prev = err;
    }
}

TEST(Ddx, NonuniformQuadraticExact) {
    std::vector<double> x{0.0, 0.1, 0.35, 0.4, 0.8, 1.3, 2.0};
    Field f(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) f[i] = 1.0 - 2.0 * x[i] + 0.5 * x[i] * x[i];
    const auto d = ddx(f, x);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(d[i], -2.0 + x[i], 1e-12);
}

TEST(Integrate, SimpsonAndTrapezoid) {
    Grid g(2.0, 201, 2);
    Field f(g.nx());
    for (std::size_t i = 0; i < g.nx(); ++i) f[i] = std::exp(-g.x()[i]);
    EXPECT_NEAR(integrate(f, g), 1.0 - std::exp(-2.0), 1e-9);
    Grid even(2.0, 200, 2);
    Field fe(even.nx());
    for (std::size_t i = 0; i < even.nx(); ++i) fe[i] = std::exp(-even.x()[i]);
    EXPECT_NEAR(integrate(fe, even), 1.0 - std::exp(-2.0), 1e-9);
    EXPECT_NEAR(trapezoid(f, g.x()), 1.0 - std::exp(-2.0), 1e-5);
}

TEST(AngularProfile, PolynomialAndTabulated) {
    Grid g(1.0, 5, 8);
    const auto p = AngularProfile::polynomial({0.5, 0.0, 2.0});
    const auto v = p.values(g);
    for (std::size_t k = 0; k < g.half(); ++k) {
        const double m = g.mu()[g.pos(k)];
        EXPECT_NEAR(v[k], 0.5 + 2.0 * m * m, 1e-15);
    }
    const auto t = AngularProfile::tabulated(v);
    EXPECT_EQ(t.values(g), v);
    EXPECT_THROW(AngularProfile::tabulated({1.0, 2.0}).values(g), ContractViolation);
    // int_0^1 mu (0.5 + 2 mu^2 - 1)^2 dmu, exact.
    const double exact = 0.25 * 0.5 - 2.0 * 0.25 + 4.0 / 6.0;
    EXPECT_NEAR(p.half_range_moment(g, 1.0), exact, 1e-14);
}

TEST(BoundaryData, GammaAndDefect) {
    Grid g(1.0, 5, 16);
    const auto bd = BoundaryData::constant(1.0, 0.5);
    EXPECT_DOUBLE_EQ(bd.gamma(g), 1.0);
    EXPECT_NEAR(bd.half_range_defect(g), 0.125, 1e-15);
    const auto hot = BoundaryData::constant(0.5, 16.0);
    EXPECT_DOUBLE_EQ(hot.gamma(g), 2.0);
    EXPECT_TRUE(BoundaryData::well_prepared(1.3).is_well_prepared(g));
    EXPECT_FALSE(bd.is_well_prepared(g));
    EXPECT_THROW(BoundaryData::constant(-1.0, 1.0), ContractViolation);
    EXPECT_THROW((void)BoundaryData::constant(1.0, -0.1).inflow(g), ContractViolation);
}

TEST(IntensityField, NodeMajorLayout) {
    IntensityField f(3, 4);
    f(1, 2) = 5.0;
    EXPECT_EQ(f.data()[1 * 4 + 2], 5.0);
    EXPECT_EQ(f.at(1)[2], 5.0);
}
