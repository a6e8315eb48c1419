#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "eeb/curve.hpp"
#include "eeb/errors.hpp"
#include "support/simpson.hpp"

using eeb::Curve;
using testing_support::adaptive_simpson;

namespace {

Curve table2_theta() { return Curve::linear_ttm(0.467, 0.05, 0.25); }
Curve table2_r() { return Curve::exp_decay(0.005, 0.02, 2.0); }
Curve table2_q() { return Curve::exp_decay(0.0, 0.015, 0.5); }

Curve random_curve(std::mt19937_64& g) {
    std::uniform_real_distribution<double> U(-0.5, 0.5), P(0.0, 5.0);
    switch (g() % 4) {
    case 0: return Curve::constant(U(g));
    case 1: return Curve::exp_decay(U(g), U(g), P(g));
    case 2: return Curve::linear_ttm(U(g), U(g), 1.0 + P(g));
    default: return Curve::piecewise_constant({0.3, 0.7, 1.4}, {U(g), U(g), U(g), U(g)});
    }
}

}  // namespace

TEST(Curve, EvaluatesDocumentedExamples) {
    EXPECT_EQ(Curve::constant(0.02)(0.5), 0.02);
    EXPECT_DOUBLE_EQ(Curve::exp_decay(0.0, 0.01, 0.01)(0.0), 0.01);
    EXPECT_DOUBLE_EQ(table2_theta()(0.25), 0.467);
}

TEST(Curve, PiecewiseConstantLookup) {
    Curve c = Curve::piecewise_constant({1.0, 2.0}, {0.1, 0.2, 0.3});
    EXPECT_EQ(c(0.5), 0.1);
    EXPECT_EQ(c(1.0), 0.2);
    EXPECT_EQ(c(5.0), 0.3);
    EXPECT_NEAR(c.integral(0.5, 2.5), 0.05 + 0.2 + 0.15, 1e-15);
    EXPECT_THROW(Curve::piecewise_constant({2.0, 1.0}, {0, 0, 0}), eeb::ValidationError);
}

TEST(Discount, Examples) {
    EXPECT_EQ(eeb::discount_factor(Curve::constant(0.0), 0.2, 0.9), 1.0);
    EXPECT_NEAR(eeb::discount_factor(Curve::constant(0.05), 0.0, 1.0), std::exp(-0.05), 1e-15);
    EXPECT_EQ(eeb::discount_factor(Curve::constant(0.05), 0.3, 0.3), 1.0);
    EXPECT_THROW(eeb::discount_factor(Curve::constant(0.05), 1.0, 0.5), eeb::DomainError);
    eeb::DiscountCurve dc(Curve::constant(0.05));
    EXPECT_NEAR(dc(0.0, 1.0), 0.951229424500714, 1e-12);
}

TEST(Discount, Multiplicativity) {
    std::mt19937_64 g(7);
    std::uniform_real_distribution<double> U(0.0, 2.0);
    for (int i = 0; i < 200; ++i) {
        Curve r = random_curve(g);
        double a = U(g), b = U(g), c = U(g);
        if (a > b) std::swap(a, b);
        if (b > c) std::swap(b, c);
        if (a > b) std::swap(a, b);
        const double lhs = eeb::discount_factor(r, a, b) * eeb::discount_factor(r, b, c);
        EXPECT_NEAR(lhs, eeb::discount_factor(r, a, c), 1e-12);
    }
}

TEST(Carry, Examples) {
    EXPECT_EQ(eeb::integrated_carry(Curve::constant(0.03), Curve::constant(0.03), 0.0, 2.0), 0.0);
    EXPECT_NEAR(eeb::integrated_carry(Curve::constant(0.05), Curve::constant(0.02), 0.0, 1.0),
                0.03, 1e-15);
    const Curve r = table2_r(), q = table2_q();
    const double ref = adaptive_simpson([&](double s) { return r(s) - q(s); }, 0.0, 0.25, 1e-15);
    EXPECT_NEAR(eeb::integrated_carry(r, q, 0.0, 0.25), ref, 1e-12);
    EXPECT_THROW(eeb::integrated_carry(r, q, 0.3, 0.1), eeb::DomainError);
}

TEST(Curve, AnalyticIntegralsMatchQuadrature) {
    std::mt19937_64 g(11);
    std::uniform_real_distribution<double> U(0.0, 2.0);
    for (int i = 0; i < 100; ++i) {
        Curve c = random_curve(g);
        double a = U(g), b = U(g);
        if (a > b) std::swap(a, b);
        const double ref1 = adaptive_simpson([&](double s) { return c(s); }, a, b, 1e-14);
        const double ref2 = adaptive_simpson([&](double s) { return c(s) * c(s); }, a, b, 1e-14);
        if (c.kind() != Curve::Kind::piecewise_constant) {
            EXPECT_NEAR(c.integral(a, b), ref1, 1e-10) << c.describe();
            EXPECT_NEAR(c.integral_of_square(a, b), ref2, 1e-10) << c.describe();
        } else {
            // Simpson cannot resolve the jumps to 1e-10; integrate piece by piece.
            double r1 = 0.0, r2 = 0.0, lo = a;
            for (double br : {0.3, 0.7, 1.4, 1e9}) {
                const double hi = std::min(br, b);
                if (hi > lo) {
                    r1 += c(0.5 * (lo + hi)) * (hi - lo);
                    r2 += std::pow(c(0.5 * (lo + hi)), 2) * (hi - lo);
                    lo = hi;
                }
            }
            EXPECT_NEAR(c.integral(a, b), r1, 1e-12);
            EXPECT_NEAR(c.integral_of_square(a, b), r2, 1e-12);
        }
    }
}

TEST(ThetaIntegrals, ZeroAndConstant) {
    auto z = eeb::theta_integrals(Curve::constant(0.0), 0.1, 0.6, 2.0);
    EXPECT_NEAR(z.C, 2.0 * 0.5, 1e-15);
    auto c = eeb::theta_integrals(Curve::constant(0.7), 0.1, 0.6, 2.0);
    EXPECT_NEAR(c.C, 2.0 * (std::exp(0.7 * 0.5) - 1.0) / 0.7, 1e-14);
    EXPECT_NEAR(c.A(0.6), std::exp(0.35), 1e-14);
    EXPECT_THROW(eeb::theta_integrals(Curve::constant(0.7), 0.6, 0.1, 2.0), eeb::DomainError);
}

TEST(ThetaIntegrals, LinearMatchesQuadrature) {
    const Curve th = table2_theta();
    const double eps = 8.56;
    for (auto [t, u] : {std::pair{0.0, 0.25}, std::pair{0.1, 0.11}, std::pair{0.2, 0.2000001},
                        std::pair{0.0, 0.01}}) {
        auto ti = eeb::theta_integrals(th, t, u, eps);
        auto A = [&](double s) {
            return std::exp(adaptive_simpson([&](double w) { return th(w); }, t, s, 1e-16));
        };
        const double ref = 0.5 * eps * eps * adaptive_simpson(A, t, u, 1e-15);
        EXPECT_NEAR(ti.C, ref, 1e-12 * std::max(1.0, ref)) << t << " " << u;
        EXPECT_NEAR(ti.A(u), A(u), 1e-13);
    }
}

TEST(ThetaIntegrals, OtherKindsMatchQuadrature) {
    for (const Curve& th : {Curve::exp_decay(0.4, 0.3, 2.0),
                            Curve::piecewise_constant({0.1, 0.2}, {0.5, -0.3, 1.1}),
                            Curve::linear_ttm(0.2, -0.4, 1.0)}) {
        auto ti = eeb::theta_integrals(th, 0.05, 0.35, 1.5);
        auto A = [&](double s) { return std::exp(th.integral(0.05, s)); };
        double ref = 0.0;
        for (double lo : {0.05, 0.1, 0.2})
            ref += adaptive_simpson(A, lo, lo == 0.2 ? 0.35 : (lo == 0.05 ? 0.1 : 0.2), 1e-15);
        EXPECT_NEAR(ti.C, 0.5 * 1.5 * 1.5 * ref, 1e-12) << th.describe();
    }
}
