#include <gtest/gtest.h>

#include <cmath>

#include "eeb/errors.hpp"
#include "eeb/oracle.hpp"

using namespace eeb;

namespace {

BlackScholesTD bs_const(double r, double q, double s) {
    return {Curve::constant(r), Curve::constant(q), Curve::constant(s)};
}

ArithmeticOU table1(double K) {
    return {Curve::constant(0.02), Curve::exp_decay(0.0, 0.01, 0.01), Curve::exp_decay(0.0, 2.0 * K, 10.0)};
}

double ncdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double bs_put(double S, double K, double r, double q, double s, double T) {
    const double d1 = (std::log(S / K) + (r - q + 0.5 * s * s) * T) / (s * std::sqrt(T));
    const double d2 = d1 - s * std::sqrt(T);
    return K * std::exp(-r * T) * ncdf(-d2) - S * std::exp(-q * T) * ncdf(-d1);
}

Lattice1D lattice(int n) {
    Lattice1D l;
    l.space_nodes = n + 1;
    l.time_steps = n;
    return l;
}

}  // namespace

TEST(Binomial, SingleStepDeepInTheMoneyIsIntrinsic) {
    const Contract c{OptionKind::put, 100.0, 1.0};
    EXPECT_DOUBLE_EQ(binomial_american(c, 20.0, 0.05, 0.0, 0.2, 1), 80.0);
}

TEST(Binomial, AmericanDominatesEuropean) {
    const Contract c{OptionKind::put, 100.0, 1.0};
    for (double S : {80.0, 100.0, 120.0}) {
        const double am = binomial_american(c, S, 0.05, 0.0, 0.2, 2000);
        const double eu = binomial_american(c, S, 0.05, 0.0, 0.2, 2000, false);
        EXPECT_GE(am, eu);
        EXPECT_NEAR(eu, bs_put(S, 100.0, 0.05, 0.0, 0.2, 1.0), 5e-3);
    }
}

TEST(Psor, AgreesWithBinomialOnReferencePut) {
    const Contract c{OptionKind::put, 100.0, 1.0};
    const LatticeSolution fd = psor_american_put(bs_const(0.05, 0.0, 0.2), c, Lattice1D{});
    const double crr = binomial_american(c, 100.0, 0.05, 0.0, 0.2, 10000);
    EXPECT_LE(std::abs(fd.price(100.0) / crr - 1.0), 1e-3);
    EXPECT_LE(std::abs(fd.price(100.0) / crr - 1.0), 5e-4);
    EXPECT_GT(fd.boundary_at(0.0), 80.0);
    EXPECT_LT(fd.boundary_at(0.0), 82.0);
    EXPECT_NEAR(fd.boundary_at(1.0), 100.0, 0.5);
}

TEST(Psor, ZeroRateMatchesUnconstrainedSolve) {
    const Contract c{OptionKind::put, 100.0, 1.0};
    for (const LatticeModel& m : {LatticeModel{bs_const(0.0, 0.02, 0.25)},
                                  LatticeModel{ArithmeticOU{Curve::constant(0.0), Curve::constant(0.02),
                                                            Curve::constant(25.0)}}}) {
        Lattice1D l = lattice(800);
        const LatticeSolution am = psor_american_put(m, c, l);
        const LatticeSolution eu = psor_american_put(m, c, l, false);
        for (double x : {70.0, 100.0, 130.0}) EXPECT_NEAR(am.price(x), eu.price(x), 1e-6) << x;
    }
}

TEST(Psor, EuropeanSolveMatchesClosedForm) {
    const Contract c{OptionKind::put, 100.0, 1.0};
    const LatticeSolution eu = psor_american_put(bs_const(0.05, 0.01, 0.2), c, Lattice1D{}, false);
    for (double x : {80.0, 100.0, 120.0}) EXPECT_NEAR(eu.price(x), bs_put(x, 100.0, 0.05, 0.01, 0.2, 1.0), 2e-3);
}

TEST(Psor, GridRefinementConverges) {
    const Contract c{OptionKind::put, 100.0, 1.0};
    const BlackScholesTD m = bs_const(0.05, 0.0, 0.2);
    double prev_price = 0.0, prev_gap = INFINITY;
    for (int n : {250, 500, 1000, 2000}) {
        const double p = psor_american_put(m, c, lattice(n)).price(100.0);
        if (n > 250) {
            const double gap = std::abs(p - prev_price);
            EXPECT_LT(gap, prev_gap) << n;
            prev_gap = gap;
        }
        prev_price = p;
    }
}

TEST(Psor, OuBoundaryIsBelowStrikeAndRising) {
    const double K = 60.0;
    const LatticeSolution s = psor_american_put(table1(K), {OptionKind::put, K, 1.0}, Lattice1D{});
    EXPECT_EQ(s.grid[0], 0.0);
    for (Eigen::Index i = 1; i < s.boundary.size(); ++i) {
        EXPECT_LE(s.boundary[i], K);
        EXPECT_GE(s.boundary[i] + 1e-12, s.boundary[i - 1]);
    }
}

TEST(Psor, RejectsBadInputs) {
    const Contract c{OptionKind::put, 100.0, 1.0};
    Lattice1D l = lattice(100);
    l.max_sweeps = 1;
    EXPECT_THROW(psor_american_put(bs_const(0.05, 0.0, 0.2), c, l), ConvergenceError);
    Lattice1D bad;
    bad.tolerance = 0.0;
    EXPECT_THROW(psor_american_put(bs_const(0.05, 0.0, 0.2), c, bad), ValidationError);
    EXPECT_THROW(psor_american_put(bs_const(0.05, 0.0, 0.2), {OptionKind::call, 100.0, 1.0}, Lattice1D{}),
                 ValidationError);
}

TEST(MonteCarlo, NoNoiseIsDeterministic) {
    const ArithmeticOU m{Curve::constant(0.05), Curve::constant(0.01), Curve::constant(0.0)};
    const McMoments mc = mc_density_moments(m, 0.0, 1.0, 50.0, 1000, 0.01, {});
    EXPECT_EQ(mc.variance, 0.0);
    EXPECT_NEAR(mc.mean, 50.0 * std::exp(0.04), 1e-3);
}

TEST(MonteCarlo, DriftlessMeanWithinThreeStandardErrors) {
    const ArithmeticOU m{Curve::constant(0.03), Curve::constant(0.03), Curve::constant(20.0)};
    const McMoments mc = mc_density_moments(m, 0.0, 1.0, 60.0, 100000, 0.01, {}, 11, 8, 8);
    EXPECT_LE(std::abs(mc.mean - 60.0), 3.0 * mc.mean_se);
}

TEST(MonteCarlo, Table1MomentsMatchClosedForm) {
    const ArithmeticOU m = table1(60.0);
    const McMoments mc = mc_density_moments(m, 0.0, 0.5, 60.0, 200000, 0.005, {50.0}, 3, 8, 8);
    const GaussianLaw g = ou_transition(m, 0.0, 0.5, 60.0);
    EXPECT_LE(std::abs(mc.mean - g.mean), 3.0 * mc.mean_se);
    EXPECT_LE(std::abs(mc.variance - g.variance), 3.0 * mc.variance_se);
}

TEST(MonteCarlo, SeededAndThreadCountInvariant) {
    const ArithmeticOU m = table1(60.0);
    const McMoments a = mc_density_moments(m, 0.0, 0.5, 60.0, 20000, 0.01, {50.0}, 5, 8, 1);
    const McMoments b = mc_density_moments(m, 0.0, 0.5, 60.0, 20000, 0.01, {50.0}, 5, 8, 4);
    const McMoments c = mc_density_moments(m, 0.0, 0.5, 60.0, 20000, 0.01, {50.0}, 6, 8, 4);
    EXPECT_EQ(a.mean, b.mean);
    EXPECT_EQ(a.psi1[0], b.psi1[0]);
    EXPECT_NE(a.mean, c.mean);
}
