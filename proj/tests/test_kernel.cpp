#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "eeb/errors.hpp"
#include "eeb/kernel.hpp"
#include "eeb/oracle.hpp"
#include "support/simpson.hpp"

using namespace eeb;
using testing_support::adaptive_simpson;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = 3.141592653589793238462643383279502884;

ArithmeticOU table1(double K) {
    return {Curve::constant(0.02), Curve::exp_decay(0.0, 0.01, 0.01), Curve::exp_decay(0.0, 2.0 * K, 10.0)};
}

BlackScholesTD bs_curves() {
    return {Curve::exp_decay(0.03, 0.06, 1.5), Curve::constant(0.01), Curve::exp_decay(0.18, 0.25, 2.0)};
}

BlackScholesTD bs_const(double r, double q, double s) {
    return {Curve::constant(r), Curve::constant(q), Curve::constant(s)};
}

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * kPi); }

// Integrate {1, X} against the normal (or lognormal) law with the given parameters.
Moments integrate_law(double loc, double sd, bool lognormal, double lo, double hi) {
    auto dens = [&](double X) {
        if (!lognormal) return normal_pdf((X - loc) / sd) / sd;
        if (X <= 0.0) return 0.0;
        return normal_pdf((std::log(X) - loc) / sd) / (X * sd);
    };
    const double a = std::max(lo, lognormal ? std::exp(loc - 12 * sd) : loc - 12 * sd);
    const double b = std::min(hi, lognormal ? std::exp(loc + 12 * sd) : loc + 12 * sd);
    if (!(b > a)) return {};
    return {adaptive_simpson(dens, a, b, 1e-14),
            adaptive_simpson([&](double X) { return X * dens(X); }, a, b, 1e-12)};
}

// Mean and standard deviation of the OU law written out from the SDE.
std::pair<double, double> ou_law(const ArithmeticOU& m, double t, double u, double x) {
    const double mean = x * std::exp(m.r.integral(t, u) - m.q.integral(t, u));
    auto g2 = [&](double s) {
        const double g = std::exp(m.r.integral(s, u) - m.q.integral(s, u));
        return m.sigma(s) * m.sigma(s) * g * g;
    };
    return {mean, std::sqrt(adaptive_simpson(g2, t, u, 1e-12))};
}

}  // namespace

TEST(GaussianKernel, MomentsMatchDirectIntegration) {
    const ArithmeticOU m = table1(60.0);
    GaussianKernel k(m);
    for (double x : {20.0, 60.0, 75.0}) {
        const auto [mean, sd] = ou_law(m, 0.1, 0.6, x);
        for (auto [lo, hi] : {std::pair{-kInf, 50.0}, std::pair{0.0, 50.0}, std::pair{40.0, kInf}}) {
            const MomentSens ms = k.moments(0.1, 0.6, x, lo, hi);
            const Moments ref = integrate_law(mean, sd, false, lo, hi);
            EXPECT_NEAR(ms.value.m0, ref.m0, 1e-10);
            EXPECT_NEAR(ms.value.m1, ref.m1, 1e-8 * std::max(1.0, std::abs(ref.m1)));
        }
    }
}

TEST(GaussianKernel, SensitivitiesMatchFiniteDifferences) {
    const ArithmeticOU m = table1(60.0);
    GaussianKernel k(m);
    const double t = 0.2, u = 0.7, x = 55.0, lo = -kInf, hi = 48.0;
    const MomentSens s = k.moments(t, u, x, lo, hi, kAllSens);
    const double h = 1e-3;
    const MomentSens up = k.moments(t, u, x + h, lo, hi), dn = k.moments(t, u, x - h, lo, hi);
    EXPECT_NEAR(s.dx.m0, (up.value.m0 - dn.value.m0) / (2 * h), 1e-8);
    EXPECT_NEAR(s.dx.m1, (up.value.m1 - dn.value.m1) / (2 * h), 1e-7);
    EXPECT_NEAR(s.dxx.m0, (up.value.m0 - 2 * s.value.m0 + dn.value.m0) / (h * h), 1e-5);
    EXPECT_NEAR(s.dxx.m1, (up.value.m1 - 2 * s.value.m1 + dn.value.m1) / (h * h), 1e-4);
    const double ht = 1e-5;
    const MomentSens tu = k.moments(t + ht, u, x, lo, hi), td = k.moments(t - ht, u, x, lo, hi);
    EXPECT_NEAR(s.dt.m0, (tu.value.m0 - td.value.m0) / (2 * ht), 1e-6);
    EXPECT_NEAR(s.dt.m1, (tu.value.m1 - td.value.m1) / (2 * ht), 1e-5);
    const double hs = 1e-5;
    GaussianKernel ku(std::get<ArithmeticOU>(with_vol_scale(m, 1 + hs)));
    GaussianKernel kd(std::get<ArithmeticOU>(with_vol_scale(m, 1 - hs)));
    const MomentSens su = ku.moments(t, u, x, lo, hi), sd = kd.moments(t, u, x, lo, hi);
    EXPECT_NEAR(s.dscale.m0, (su.value.m0 - sd.value.m0) / (2 * hs), 1e-7);
    EXPECT_NEAR(s.dscale.m1, (su.value.m1 - sd.value.m1) / (2 * hs), 1e-5);
    const auto [mean, sd0] = ou_law(m, t, u, x);
    EXPECT_NEAR(s.density_hi, normal_pdf((hi - mean) / sd0) / sd0, 1e-12);
    EXPECT_EQ(s.density_lo, 0.0);
}

TEST(GaussianKernel, ZeroElapsedTimeIsPointMass) {
    GaussianKernel k(table1(60.0));
    const MomentSens in = k.moments(0.3, 0.3, 40.0, -kInf, 50.0);
    EXPECT_DOUBLE_EQ(in.value.m0, 1.0);
    EXPECT_DOUBLE_EQ(in.value.m1, 40.0);
    const MomentSens out = k.moments(0.3, 0.3, 55.0, -kInf, 50.0);
    EXPECT_DOUBLE_EQ(out.value.m0, 0.0);
}

TEST(LognormalKernel, MomentsMatchDirectIntegration) {
    const BlackScholesTD m = bs_curves();
    LognormalKernel k(m);
    const double t = 0.1, u = 0.9;
    const double var = m.sigma.integral_of_square(t, u);
    for (double x : {70.0, 100.0, 130.0}) {
        const double loc = std::log(x) + m.r.integral(t, u) - m.q.integral(t, u) - 0.5 * var;
        for (auto [lo, hi] : {std::pair{0.0, 90.0}, std::pair{80.0, 120.0}, std::pair{110.0, kInf}}) {
            const MomentSens ms = k.moments(t, u, x, lo, hi);
            const Moments ref = integrate_law(loc, std::sqrt(var), true, lo, hi);
            EXPECT_NEAR(ms.value.m0, ref.m0, 1e-10);
            EXPECT_NEAR(ms.value.m1, ref.m1, 1e-8 * std::max(1.0, ref.m1));
        }
    }
}

TEST(LognormalKernel, SensitivitiesMatchFiniteDifferences) {
    const BlackScholesTD m = bs_curves();
    LognormalKernel k(m);
    const double t = 0.25, u = 0.75, x = 104.0, lo = 0.0, hi = 92.0;
    const MomentSens s = k.moments(t, u, x, lo, hi, kAllSens);
    const double h = 1e-2;
    const MomentSens up = k.moments(t, u, x + h, lo, hi), dn = k.moments(t, u, x - h, lo, hi);
    EXPECT_NEAR(s.dx.m0, (up.value.m0 - dn.value.m0) / (2 * h), 1e-8);
    EXPECT_NEAR(s.dx.m1, (up.value.m1 - dn.value.m1) / (2 * h), 1e-6);
    EXPECT_NEAR(s.dxx.m0, (up.value.m0 - 2 * s.value.m0 + dn.value.m0) / (h * h), 1e-6);
    EXPECT_NEAR(s.dxx.m1, (up.value.m1 - 2 * s.value.m1 + dn.value.m1) / (h * h), 1e-4);
    const double ht = 1e-5;
    const MomentSens tu = k.moments(t + ht, u, x, lo, hi), td = k.moments(t - ht, u, x, lo, hi);
    EXPECT_NEAR(s.dt.m0, (tu.value.m0 - td.value.m0) / (2 * ht), 1e-6);
    EXPECT_NEAR(s.dt.m1, (tu.value.m1 - td.value.m1) / (2 * ht), 1e-4);
    const double hs = 1e-5;
    LognormalKernel ku(std::get<BlackScholesTD>(with_vol_scale(m, 1 + hs)));
    LognormalKernel kd(std::get<BlackScholesTD>(with_vol_scale(m, 1 - hs)));
    const MomentSens su = ku.moments(t, u, x, lo, hi), sd = kd.moments(t, u, x, lo, hi);
    EXPECT_NEAR(s.dscale.m0, (su.value.m0 - sd.value.m0) / (2 * hs), 1e-7);
    EXPECT_NEAR(s.dscale.m1, (su.value.m1 - sd.value.m1) / (2 * hs), 1e-5);
    const TransitionDensity d = TransitionDensity::black_scholes(m, t, u, x);
    EXPECT_NEAR(s.density_hi, d(hi), 1e-12);
}

TEST(CosKernel, BlackScholesMatchesLognormalClosedForm) {
    const BlackScholesTD m = bs_const(0.05, 0.02, 0.2);
    CosConfig cfg;
    cfg.a = std::log(100.0) - 3.0;
    cfg.b = std::log(100.0) + 3.0;
    cfg.n = 256;
    CosKernel ck(m, cfg, -1.0);
    LognormalKernel lk(m);
    const double t = 0.0, u = 0.5, lo = 0.0, hi = 95.0;
    for (double x : {85.0, 100.0, 115.0}) {
        const MomentSens c = ck.moments(t, u, x, lo, hi, kAllSens);
        const MomentSens l = lk.moments(t, u, x, lo, hi, kAllSens);
        EXPECT_NEAR(c.value.m0, l.value.m0, 1e-10);
        EXPECT_NEAR(c.value.m1, l.value.m1, 1e-8);
        EXPECT_NEAR(c.dx.m0, l.dx.m0, 1e-10);
        EXPECT_NEAR(c.dx.m1, l.dx.m1, 1e-8);
        EXPECT_NEAR(c.dxx.m0, l.dxx.m0, 1e-10);
        EXPECT_NEAR(c.dxx.m1, l.dxx.m1, 1e-8);
        EXPECT_NEAR(c.dt.m0, l.dt.m0, 1e-6);
        EXPECT_NEAR(c.dt.m1, l.dt.m1, 1e-4);
        EXPECT_NEAR(c.dscale.m0, l.dscale.m0, 1e-6);
        EXPECT_NEAR(c.dscale.m1, l.dscale.m1, 1e-4);
        EXPECT_NEAR(c.density_hi, l.density_hi, 1e-10);
    }
}

TEST(CosKernel, RejectsOutOfRangeConditioning) {
    CosConfig cfg;
    cfg.a = std::log(50.0);
    cfg.b = std::log(200.0);
    cfg.n = 64;
    CosKernel ck(bs_const(0.05, 0.0, 0.2), cfg, -1.0);
    const auto [lo, hi] = ck.conditioning_range();
    EXPECT_NEAR(lo, 50.0, 1e-9);
    EXPECT_NEAR(hi, 200.0, 1e-9);
}

TEST(MakeKernel, DispatchesOnModelAndCosOptIn) {
    EXPECT_EQ(make_kernel(table1(60.0))->name(), "gaussian");
    EXPECT_EQ(make_kernel(bs_const(0.05, 0.0, 0.2))->name(), "lognormal");
    CosConfig cfg;
    cfg.a = 0.0;
    cfg.b = 10.0;
    EXPECT_EQ(make_kernel(bs_const(0.05, 0.0, 0.2), cfg)->name(), "cos");
    EXPECT_THROW(make_kernel(table1(60.0), cfg), ValidationError);
}

TEST(PsiPartialMoments, EmptyAndFullIntervals) {
    LognormalKernel k(bs_const(0.05, 0.01, 0.3));
    const Moments z = psi_partial_moments(k, 0.0, 0.0, 1.0, 100.0);
    EXPECT_EQ(z.m0, 0.0);
    EXPECT_EQ(z.m1, 0.0);
    const Moments f = psi_partial_moments(k, kInf, 0.0, 1.0, 100.0);
    EXPECT_NEAR(f.m0, 1.0, 1e-14);
    EXPECT_NEAR(f.m1, 100.0 * std::exp(0.04), 1e-10);
}

TEST(PsiPartialMoments, ClosedFormMatchesDensityQuadrature) {
    const ArithmeticOU ou = table1(60.0);
    GaussianKernel gk(ou);
    const TransitionDensity d = TransitionDensity::ou(ou, 0.0, 0.5, 60.0);
    const Moments a = psi_partial_moments(gk, 50.0, 0.0, 0.5, 60.0);
    const Moments b = psi_partial_moments(d, 50.0);
    EXPECT_NEAR(a.m0, b.m0, 1e-10);
    EXPECT_NEAR(a.m1, b.m1, 1e-8);

    const BlackScholesTD bs = bs_curves();
    LognormalKernel lk(bs);
    const TransitionDensity dl = TransitionDensity::black_scholes(bs, 0.2, 0.9, 100.0);
    const Moments c = psi_partial_moments(lk, 90.0, 0.2, 0.9, 100.0);
    const Moments e = psi_partial_moments(dl, 90.0);
    EXPECT_NEAR(c.m0, e.m0, 1e-10);
    EXPECT_NEAR(c.m1, e.m1, 1e-8);
}

TEST(PsiPartialMoments, OuMatchesMonteCarloWithinThreeStandardErrors) {
    const ArithmeticOU ou = table1(60.0);
    GaussianKernel gk(ou);
    const std::vector<double> thr{30.0, 50.0, 70.0};
    const McMoments mc = mc_density_moments(ou, 0.0, 0.5, 60.0, 1'000'000, 0.005, thr, 7, 8, 8);
    for (std::size_t j = 0; j < thr.size(); ++j) {
        const Moments p = psi_partial_moments(gk, thr[j], 0.0, 0.5, 60.0);
        EXPECT_LE(std::abs(p.m0 - mc.psi1[j]), 3.0 * mc.psi1_se[j]) << "threshold " << thr[j];
        EXPECT_LE(std::abs(p.m1 - mc.psi2[j]), 3.0 * mc.psi2_se[j]) << "threshold " << thr[j];
    }
}
