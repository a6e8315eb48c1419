#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <random>

#include "eeb/errors.hpp"
#include "eeb/oracle.hpp"
#include "eeb/pricer.hpp"

using namespace eeb;

namespace {

BlackScholesTD bs_const(double r, double q, double s) {
    return {Curve::constant(r), Curve::constant(q), Curve::constant(s)};
}

double ncdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Textbook Black-Scholes European prices and vega per unit sigma.
double bs_put(double S, double K, double r, double q, double s, double T) {
    const double d1 = (std::log(S / K) + (r - q + 0.5 * s * s) * T) / (s * std::sqrt(T));
    const double d2 = d1 - s * std::sqrt(T);
    return K * std::exp(-r * T) * ncdf(-d2) - S * std::exp(-q * T) * ncdf(-d1);
}

double bs_call(double S, double K, double r, double q, double s, double T) {
    return bs_put(S, K, r, q, s, T) + S * std::exp(-q * T) - K * std::exp(-r * T);
}

double bs_vega(double S, double K, double r, double q, double s, double T) {
    const double d1 = (std::log(S / K) + (r - q + 0.5 * s * s) * T) / (s * std::sqrt(T));
    return S * std::exp(-q * T) * std::sqrt(T) * std::exp(-0.5 * d1 * d1) / std::sqrt(2.0 * M_PI);
}

struct Solved {
    BlackScholesTD model;
    LognormalKernel kernel;
    Contract contract;
    ExerciseBoundary boundary;
};

Solved solve_bs(double r, double q, double s, double K, double T, int M,
                OptionKind kind = OptionKind::put, double t0 = 0.0) {
    const BlackScholesTD m = bs_const(r, q, s);
    SolverConfig cfg;
    cfg.steps = M;
    const Contract c{kind, K, T};
    return {m, LognormalKernel(m), c, solve_boundary_density(m, c, cfg, t0)};
}

double price(const Solved& s, double t, double x) {
    return price_american(s.kernel, s.boundary, s.contract, t, x).american;
}

}  // namespace

TEST(Pricer, ReferencePutAgainstOraclesAndClosedForm) {
    const auto start = std::chrono::steady_clock::now();
    const Solved s = solve_bs(0.05, 0.0, 0.2, 100.0, 1.0, 200);
    const PricingResult p = price_american_put(s.kernel, s.boundary, s.contract, 0.0, 100.0);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const double crr = binomial_american(s.contract, 100.0, 0.05, 0.0, 0.2, 10000);
    const LatticeSolution fd = psor_american_put(s.model, s.contract, Lattice1D{});
    EXPECT_EQ(p.region, Region::continuation);
    EXPECT_LE(std::abs(p.american / crr - 1.0), 5e-4);
    EXPECT_LE(std::abs(p.american / fd.price(100.0) - 1.0), 5e-4);
    EXPECT_NEAR(p.european, bs_put(100.0, 100.0, 0.05, 0.0, 0.2, 1.0), 1e-6);
    EXPECT_NEAR(p.american, p.european + p.eep, 1e-12);
    EXPECT_LT(secs, 1.0);
}

TEST(Pricer, ExerciseRegionIsIntrinsic) {
    const Solved s = solve_bs(0.05, 0.0, 0.2, 100.0, 1.0, 50);
    const double x = 0.5 * s.boundary.at(0.0);
    const PricingResult p = price_with_greeks(s.kernel, s.boundary, s.contract, 0.0, x);
    EXPECT_EQ(p.region, Region::exercise);
    EXPECT_EQ(p.american, 100.0 - x);
    ASSERT_TRUE(p.greeks.has_value());
    EXPECT_EQ(p.greeks->delta, -1.0);
    EXPECT_EQ(p.greeks->gamma, 0.0);
    EXPECT_EQ(p.greeks->theta, 0.0);
    EXPECT_EQ(p.greeks->vega, 0.0);
}

TEST(Pricer, ZeroRatePutHasNoPremium) {
    const Solved s = solve_bs(0.0, 0.03, 0.25, 100.0, 1.0, 20);
    for (double x : {60.0, 100.0, 140.0}) {
        const PricingResult p = price_american(s.kernel, s.boundary, s.contract, 0.0, x);
        EXPECT_EQ(p.eep, 0.0);
        EXPECT_EQ(p.american, p.european);
        EXPECT_NEAR(p.european, bs_put(x, 100.0, 0.0, 0.03, 0.25, 1.0), 1e-10);
        // With no premium the boundary term drops out and vega is the European vega.
        EXPECT_NEAR(greek_vega_fredholm(s.kernel, s.boundary, s.contract, 0.0, x),
                    0.25 * bs_vega(x, 100.0, 0.0, 0.03, 0.25, 1.0), 1e-8);
    }
}

TEST(Pricer, DominatesIntrinsicAndEuropeanOnLattice) {
    const int M = 50;
    const Solved s = solve_bs(0.06, 0.01, 0.3, 100.0, 1.0, M);
    // Discretisation bound: the diagonal jump w_0 H / 2 next to the boundary.
    const double tol = 0.5 * (0.5 / M) * 0.06 * 100.0;
    for (int i = 0; i < 50; i += 7)
        for (double x = 40.0; x <= 200.0; x += 5.0) {
            const double t = s.boundary.times[i];
            const PricingResult p = price_american(s.kernel, s.boundary, s.contract, t, x);
            EXPECT_GE(p.american, std::max(100.0 - x, 0.0) - tol) << t << " " << x;
            if (p.region == Region::continuation) EXPECT_GE(p.eep, -tol);
        }
}

TEST(Pricer, DiscreteValueMatching) {
    // Just above X_B(t_i) the decomposition reproduces the node equation, whose
    // diagonal term w_0 H / 2 a continuation point does not receive.
    const int M = 200;
    const Solved s = solve_bs(0.05, 0.0, 0.2, 100.0, 1.0, M);
    for (int i = 0; i < M; i += 20) {
        const double t = s.boundary.times[i], xb = s.boundary.values(0, i);
        const double x = xb * (1.0 + 1e-13);
        const double w0 = 0.5 / M;
        const double diag = 0.5 * w0 * (0.05 * 100.0);
        EXPECT_NEAR(price(s, t, x), 100.0 - x - diag, 1e-7) << "t=" << t;
    }
}

TEST(Pricer, SmoothPastingOnRefinedGrid) {
    const Solved s = solve_bs(0.05, 0.0, 0.2, 100.0, 1.0, 1600);
    for (int i : {0, 400, 800, 1200}) {
        const double t = s.boundary.times[i], xb = s.boundary.values(0, i);
        const DeltaGamma dg = greek_delta_gamma(s.kernel, s.boundary, s.contract, t, xb + 1e-3);
        EXPECT_FALSE(dg.near_boundary);
        EXPECT_NEAR(dg.delta, -1.0, 5e-3) << "t=" << t;
    }
    const DeltaGamma near = greek_delta_gamma(s.kernel, s.boundary, s.contract, 0.0,
                                              s.boundary.values(0, 0) + 1e-7);
    EXPECT_TRUE(near.near_boundary);
    EXPECT_EQ(near.delta, -1.0);
}

TEST(Pricer, DeltaGammaMatchFiniteDifferencesOnRandomDraws) {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> ur(0.01, 0.08), uq(0.0, 0.04), us(0.15, 0.45),
        uT(0.25, 2.0), ux(1.02, 1.6);
    for (int draw = 0; draw < 20; ++draw) {
        const double r = ur(rng), q = uq(rng), sg = us(rng), T = uT(rng);
        const Solved s = solve_bs(r, q, sg, 100.0, T, 40);
        const double x = s.boundary.at(0.0) * ux(rng);
        if (x <= s.boundary.at(0.0)) continue;
        const DeltaGamma dg = greek_delta_gamma(s.kernel, s.boundary, s.contract, 0.0, x);
        const double h = 1e-3 * x;
        const double up = price(s, 0.0, x + h), mid = price(s, 0.0, x), dn = price(s, 0.0, x - h);
        EXPECT_NEAR(dg.delta, (up - dn) / (2 * h), 1e-4) << "draw " << draw;
        EXPECT_NEAR(dg.gamma, (up - 2 * mid + dn) / (h * h), 1e-4) << "draw " << draw;
    }
}

TEST(Pricer, FarOutOfTheMoneyGreeksVanish) {
    const Solved s = solve_bs(0.05, 0.0, 0.2, 100.0, 0.5, 40);
    const PricingResult p = price_with_greeks(s.kernel, s.boundary, s.contract, 0.0, 400.0);
    ASSERT_TRUE(p.greeks.has_value());
    EXPECT_LT(std::abs(p.greeks->delta), 1e-6);
    EXPECT_LT(std::abs(p.greeks->gamma), 1e-6);
    EXPECT_LT(std::abs(p.greeks->theta), 1e-6);
    EXPECT_LT(std::abs(p.greeks->vega), 1e-6);
}

TEST(Pricer, VegaMatchesBumpAndRevalueOnRandomDraws) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ur(0.01, 0.08), uq(0.0, 0.04), us(0.15, 0.45),
        uT(0.25, 2.0), ux(0.9, 1.2);
    const int M = 40;
    int checked = 0;
    for (int draw = 0; draw < 20; ++draw) {
        const double r = ur(rng), q = uq(rng), sg = us(rng), T = uT(rng), x = 100.0 * ux(rng);
        const Solved s = solve_bs(r, q, sg, 100.0, T, M);
        if (x <= s.boundary.at(0.0) * 1.001) continue;
        ++checked;
        const double vega = greek_vega_fredholm(s.kernel, s.boundary, s.contract, 0.0, x) / sg;
        const double ds = 1e-3;
        const Solved up = solve_bs(r, q, sg + ds, 100.0, T, M), dn = solve_bs(r, q, sg - ds, 100.0, T, M);
        const double fd = (price(up, 0.0, x) - price(dn, 0.0, x)) / (2 * ds);
        EXPECT_LE(std::abs(vega / fd - 1.0), 0.01) << "draw " << draw << " vega " << vega << " fd " << fd;
    }
    EXPECT_EQ(checked, 20);
}

TEST(Pricer, ThetaMatchesBumpAndResolve) {
    const double r = 0.05, q = 0.01, sg = 0.25, T = 1.0, x = 105.0, t = 0.2, dt = 1e-3;
    const int M = 100;
    const Solved s = solve_bs(r, q, sg, 100.0, T, M, OptionKind::put, t);
    const double theta = greek_theta(s.kernel, s.boundary, s.contract, t, x);
    const Solved up = solve_bs(r, q, sg, 100.0, T, M, OptionKind::put, t + dt);
    const Solved dn = solve_bs(r, q, sg, 100.0, T, M, OptionKind::put, t - dt);
    const double fd = (price(up, t + dt, x) - price(dn, t - dt, x)) / (2 * dt);
    EXPECT_LT(theta, 0.0);
    EXPECT_LE(std::abs(theta / fd - 1.0), 0.01) << theta << " vs " << fd;
}

TEST(Pricer, ThetaSatisfiesThePricingEquation) {
    // Constant coefficients: theta = r V - (r - q) x delta - sigma^2 x^2 gamma / 2.
    const double r = 0.05, q = 0.02, sg = 0.3;
    const Solved s = solve_bs(r, q, sg, 100.0, 1.0, 100);
    const double x = 110.0;
    const PricingResult p = price_with_greeks(s.kernel, s.boundary, s.contract, 0.0, x);
    const Greeks& g = *p.greeks;
    const double pde = r * p.american - (r - q) * x * g.delta - 0.5 * sg * sg * x * x * g.gamma;
    EXPECT_NEAR(g.theta, pde, 5e-3 * std::abs(pde));
}

TEST(Pricer, CallWithoutDividendIsEuropean) {
    const Solved s = solve_bs(0.05, 0.0, 0.2, 100.0, 1.0, 20, OptionKind::call);
    EXPECT_TRUE(std::isinf(s.boundary.values(0, 0)));
    const PricingResult p = price_american_call(s.kernel, s.boundary, s.contract, 0.0, 110.0);
    EXPECT_EQ(p.eep, 0.0);
    EXPECT_NEAR(p.american, bs_call(110.0, 100.0, 0.05, 0.0, 0.2, 1.0), 1e-10);
}

TEST(Pricer, CallPutSymmetry) {
    for (auto [r, q] : {std::pair{0.04, 0.04}, std::pair{0.03, 0.07}}) {
        const double sg = 0.3, T = 1.0, x = 95.0, K = 100.0;
        const Solved call = solve_bs(r, q, sg, K, T, 200, OptionKind::call);
        const Solved put = solve_bs(q, r, sg, x, T, 200, OptionKind::put);
        const double c = price(call, 0.0, x), p = price(put, 0.0, K);
        EXPECT_LE(std::abs(c / p - 1.0), 1e-3) << "r=" << r << " q=" << q;
    }
}

TEST(Pricer, DeepInTheMoneyCallIsIntrinsic) {
    const Solved s = solve_bs(0.03, 0.07, 0.3, 100.0, 1.0, 20, OptionKind::call);
    const double x = 2.0 * s.boundary.at(0.0);
    const PricingResult p = price_american_call(s.kernel, s.boundary, s.contract, 0.0, x);
    EXPECT_EQ(p.region, Region::exercise);
    EXPECT_EQ(p.american, x - 100.0);
    const DeltaGamma dg = greek_delta_gamma(s.kernel, s.boundary, s.contract, 0.0, x);
    EXPECT_EQ(dg.delta, 1.0);
    EXPECT_EQ(dg.gamma, 0.0);
}

TEST(Pricer, CoverageAndKindErrors) {
    const Solved s = solve_bs(0.05, 0.0, 0.2, 100.0, 1.0, 10, OptionKind::put, 0.5);
    EXPECT_THROW(price_american(s.kernel, s.boundary, s.contract, 0.2, 100.0), DomainError);
    const Contract call{OptionKind::call, 100.0, 1.0};
    EXPECT_THROW(price_american(s.kernel, s.boundary, call, 0.6, 100.0), ValidationError);
    EXPECT_THROW(price_american_call(s.kernel, s.boundary, s.contract, 0.6, 100.0), ValidationError);
    const Contract longer{OptionKind::put, 100.0, 2.0};
    EXPECT_THROW(price_american(s.kernel, s.boundary, longer, 0.6, 100.0), DomainError);
}

TEST(Pricer, OffGridStartUsesInterpolatedBoundary) {
    const Solved s = solve_bs(0.05, 0.0, 0.2, 100.0, 1.0, 200);
    const double a = price(s, 0.3, 100.0), b = price(s, 0.3025, 100.0), c = price(s, 0.305, 100.0);
    EXPECT_GT(a, b);
    EXPECT_GT(b, c);
    EXPECT_NEAR(b, 0.5 * (a + c), 1e-4);
}

TEST(Pricer, CosKernelMatchesClosedFormKernel) {
    const BlackScholesTD m = bs_const(0.05, 0.0, 0.2);
    CosConfig cos;
    cos.a = std::log(100.0) - 4.0;
    cos.b = std::log(100.0) + 4.0;
    cos.n = 512;
    SolverConfig cfg;
    cfg.steps = 25;
    const Contract c{OptionKind::put, 100.0, 1.0};
    const ExerciseBoundary bd = solve_boundary_density(m, c, cfg);
    const ExerciseBoundary bc = solve_boundary_cos(m, c, cfg, cos);
    LognormalKernel lk(m);
    CosKernel ck(m, cos, -1.0);
    for (double x : {90.0, 100.0, 120.0}) {
        const PricingResult a = price_with_greeks(lk, bd, c, 0.0, x);
        const PricingResult b = price_with_greeks(ck, bc, c, 0.0, x);
        EXPECT_NEAR(a.american, b.american, 1e-8);
        EXPECT_NEAR(a.greeks->delta, b.greeks->delta, 1e-8);
        EXPECT_NEAR(a.greeks->gamma, b.greeks->gamma, 1e-8);
        EXPECT_NEAR(a.greeks->theta, b.greeks->theta, 1e-4);
        EXPECT_NEAR(a.greeks->vega, b.greeks->vega, 1e-3);
    }
}

TEST(Pricer, OuPutAboveEuropeanAndMatchesLattice) {
    const double K = 60.0;
    const ArithmeticOU m{Curve::constant(0.02), Curve::exp_decay(0.0, 0.01, 0.01),
                         Curve::exp_decay(0.0, 2.0 * K, 10.0)};
    SolverConfig cfg;
    cfg.steps = 20;
    cfg.rule = SolverConfig::Rule::simpson;
    cfg.substeps = 16;
    const Contract c{OptionKind::put, K, 1.0};
    const ExerciseBoundary b = solve_boundary_density(m, c, cfg);
    GaussianKernel k(m);
    const LatticeSolution fd = psor_american_put(m, c, Lattice1D{});
    for (double x : {20.0, 40.0, 60.0, 90.0}) {
        const PricingResult p = price_american(k, b, c, 0.0, x);
        EXPECT_GE(p.eep, 0.0);
        EXPECT_NEAR(p.american, fd.price(x), 0.01 * K) << "x=" << x;
    }
}
