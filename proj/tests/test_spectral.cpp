#include <cmath>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>
#include <gtest/gtest.h>

#include "milne/milne.hpp"
#include "milne/spectral.hpp"

using namespace milne;

namespace {

// T = 1 + 0.1 e^{-x}, beta = 1/4, B = 20: continuous supremum from adaptive quadrature and Brent refinement.
constexpr double kA0Golden = 0.10239585468401857;

Field profile(const Grid& g) {
    Field T(g.nx());
    for (std::size_t i = 0; i < g.nx(); ++i) T[i] = 1.0 + 0.1 * std::exp(-g.x()[i]);
    return T;
}

double a0_oracle(double beta, double B) {
    using boost::math::quadrature::gauss_kronrod;
    auto w1 = [beta](double x) {
        const double e = std::exp(-x);
        return std::exp(2.0 * beta * x) * 36.0 * (1.0 + 0.1 * e) * 0.01 * e * e;
    };
    auto iw2 = [beta](double x) { return std::exp(-2.0 * beta * x) / (4.0 * std::pow(1.0 + 0.1 * std::exp(-x), 3)); };
    auto prod = [&](double r) {
        if (r <= 0.0 || r >= B) return 0.0;
        return gauss_kronrod<double, 31>::integrate(w1, r, B, 15, 1e-14) *
               gauss_kronrod<double, 31>::integrate(iw2, 0.0, r, 15, 1e-14);
    };
    double best_r = 0.0, best = 0.0;
    for (double r = 0.01; r < B; r += 0.01)
        if (prod(r) > best) {
            best = prod(r);
            best_r = r;
        }
    auto [r, v] = boost::math::tools::brent_find_minima([&](double x) { return -prod(x); }, best_r - 0.01, best_r + 0.01, 50);
    (void)r;
    return std::sqrt(-v);
}

}  // namespace

TEST(ComputeA0, ConstantProfileIsZero) {
    Grid g(10.0, 201, 2);
    EXPECT_NEAR(compute_A0(Field(g.nx(), 1.3), 0.25, g).value, 0.0, 1e-12);
    EXPECT_NEAR(compute_A1(Field(g.nx(), 1.3), g).value, 0.0, 1e-12);
}

TEST(ComputeA0, MatchesQuadratureOracle) {
    EXPECT_NEAR(a0_oracle(0.25, 20.0), kA0Golden, 1e-9);
    Grid g(20.0, 4001, 2);
    const auto a = compute_A0(profile(g), 0.25, g);
    EXPECT_NEAR(a.value, kA0Golden, 1e-5);
    EXPECT_LT(a.value, 0.5);
    EXPECT_GE(a.truncation, 0.0);
    EXPECT_LT(a.truncation, 1e-6);
    Grid coarse(20.0, 401, 2);
    const double ec = std::abs(compute_A0(profile(coarse), 0.25, coarse).value - kA0Golden);
    EXPECT_GT(ec / std::abs(a.value - kA0Golden), 20.0);
}

TEST(ComputeA0, TouchingZeroIsInfinite) {
    Grid g(5.0, 51, 2);
    Field T(g.nx(), 1.0);
    T[20] = 0.0;
    EXPECT_TRUE(std::isinf(compute_A0(T, 0.25, g).value));
    EXPECT_THROW(compute_A0(Field(g.nx(), 1.0), 1.0, g), ContractViolation);
}

TEST(ComputeA0, IncreasingInBeta) {
    Grid g(20.0, 801, 2);
    const auto T = profile(g);
    double prev = compute_A1(T, g).value;
    EXPECT_DOUBLE_EQ(prev, compute_A0(T, 0.0, g).value);
    for (double b : {0.1, 0.25, 0.5, 0.75}) {
        const double a = compute_A0(T, b, g).value;
        EXPECT_GT(a, prev);
        prev = a;
    }
}

TEST(RayleighTest, ConstantProfileGivesZero) {
    Grid g(5.0, 201, 2);
    const auto r = rayleigh_test(Field(g.nx(), 1.0), 0.25, default_test_family(g), g);
    EXPECT_NEAR(r.max_quotient, 0.0, 1e-24);
    EXPECT_EQ(r.skipped, 0u);
}

TEST(RayleighTest, BelowHardyBoundOnSolvedBackgrounds) {
    for (double pb : {0.999, 0.5}) {
        Grid g(10.0, 401, 16);
        const auto s = solve_bounded_milne(BoundaryData::constant(1.0, pb), g);
        for (double beta : {0.0, 0.25, 0.5}) {
            const auto r = rayleigh_test(s.T, beta, default_test_family(g), g);
            const double A0 = compute_A0(s.T, beta, g).value;
            EXPECT_LT(r.max_quotient, 1.0);
            EXPECT_LE(r.max_quotient, 4.0 * A0 * A0 + 0.05) << "psi_b=" << pb << " beta=" << beta;
        }
    }
}

TEST(RayleighTest, RejectsNonvanishingTestFunction) {
    Grid g(2.0, 21, 2);
    std::vector<TestFunction> fam{{Field(g.nx(), 1.0), Field(g.nx(), 0.0)}};
    EXPECT_THROW(rayleigh_test(Field(g.nx(), 1.0), 0.0, fam, g), ContractViolation);
}

TEST(DefaultTestFamily, DeterministicAndVanishing) {
    Grid g(5.0, 101, 2);
    const auto a = default_test_family(g), b = default_test_family(g);
    ASSERT_EQ(a.size(), 20u + 6u + 50u);
    for (std::size_t k = 0; k < a.size(); ++k) {
        EXPECT_EQ(a[k].f, b[k].f);
        EXPECT_EQ(a[k].f[0], 0.0);
    }
    EXPECT_NE(default_test_family(g, 20, 50, 7).back().f, a.back().f);
}

TEST(ComputeCb, Examples) {
    EXPECT_NEAR(compute_Cb(1.0, 1.0, 0.5, 0.25), 0.25 * 0.25 * std::sqrt(0.5) / 72.0, 1e-17);
    EXPECT_NEAR(compute_Cb(1.0, 1.0, 0.5, 0.25), 6.138e-4, 1e-7);
    // The first branch, T_b sqrt(3 a (1-a)) / 2 = sqrt(3)/4 here, is never the smaller one for gamma >= T_b.
    EXPECT_LT(compute_Cb(1.0, 1.0, 0.5, 0.25), std::sqrt(3.0) / 4.0);
    EXPECT_NEAR(compute_Cb(1.0, 2.0, 0.5, 0.25), 0.5 * compute_Cb(1.0, 1.0, 0.5, 0.25), 1e-18);
    EXPECT_THROW(compute_Cb(1.0, 1.0, 0.5, 0.5), ContractViolation);
    EXPECT_THROW(compute_Cb(1.0, 0.5, 0.5, 0.25), ContractViolation);
    EXPECT_THROW(compute_Cb(0.0, 1.0, 0.5, 0.25), ContractViolation);
}

TEST(ComputeCb, MonotoneInBoundaryTemperature) {
    double prev = 0.0;
    for (double Tb = 0.1; Tb < 3.0; Tb += 0.1) {
        const double c = compute_Cb(Tb, 3.0, 0.6, 0.3);
        EXPECT_GT(c, prev);
        prev = c;
    }
}

TEST(BoundaryGap, Examples) {
    Grid g(1.0, 5, 16);
    const auto r = boundary_gap(BoundaryData::constant(1.0, 0.5), g, {0.5});
    EXPECT_NEAR(r.gap, 1.0 / 16.0, 1e-15);
    EXPECT_NEAR(r.M_alpha[0], 1.0 / (2.0 * std::sqrt(3.0)), 1e-15);
    EXPECT_EQ(boundary_gap(BoundaryData::well_prepared(1.2), g).gap, 0.0);
    EXPECT_THROW(boundary_gap(BoundaryData::constant(1.0, 0.5), g, {1.0}), ContractViolation);
}

TEST(BoundaryGap, QuadraticScalingAndZeroIffWellPrepared) {
    Grid g(1.0, 5, 16);
    const auto p = AngularProfile::polynomial({0.2, 0.5, 0.3});
    const double base = boundary_gap(BoundaryData(1.0, p), g).gap;
    EXPECT_GT(base, 0.0);
    for (double s : {0.5, 2.0, 3.0}) {
        // psi_b - T_b^4 scaled by s.
        const auto q = AngularProfile::polynomial({1.0 + s * (0.2 - 1.0), s * 0.5, s * 0.3});
        EXPECT_NEAR(boundary_gap(BoundaryData(1.0, q), g).gap, s * s * base, 1e-14);
    }
    for (double pb : {0.9, 0.99, 0.999999, 1.0, 1.01}) {
        const auto bd = BoundaryData::constant(1.0, pb);
        EXPECT_EQ(boundary_gap(bd, g).gap == 0.0, bd.is_well_prepared(g));
    }
}

TEST(PerturbationStability, LinearNearZeroAndFailureReported) {
    Grid g(20.0, 801, 2);
    const auto T = profile(g);
    Field h(g.nx());
    for (std::size_t i = 0; i < g.nx(); ++i) h[i] = g.x()[i] * std::exp(-g.x()[i]);
    const auto small = perturbation_stability(T, h, {0.0, 0.025, 0.05, 0.075, 0.1}, 0.25, g);
    EXPECT_DOUBLE_EQ(small.A[0], small.A0);
    EXPECT_DOUBLE_EQ(small.A0, compute_A0(T, 0.25, g).value);
    EXPECT_FALSE(small.first_failure);
    EXPECT_LT(small.line_residual, 0.1 * std::abs(small.slope) * 0.1);

    const auto big = perturbation_stability(T, h, {0.0, 1.0, 5.0, 20.0}, 0.25, g);
    ASSERT_TRUE(big.first_failure);
    EXPECT_GE(compute_A0([&] {
                  Field t(T);
                  for (std::size_t i = 0; i < t.size(); ++i) t[i] += *big.first_failure * h[i];
                  return t;
              }(),
                         0.25, g)
                  .value,
              0.5);
    EXPECT_THROW(perturbation_stability(T, Field(g.nx(), 1.0), {0.0}, 0.25, g), ContractViolation);
}
