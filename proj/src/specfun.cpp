#include "eeb/specfun.hpp"

#include <array>
#include <cmath>
#include <string>

#include "eeb/errors.hpp"

namespace eeb {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kHalfLog2Pi = 0.91893853320467274178;

bool is_nonpositive_integer(cplx z) {
    return z.imag() == 0.0 && z.real() <= 0.0 && z.real() == std::floor(z.real());
}

// log sin(pi z) without overflow for large |Im z|; only exp() of it is used.
cplx log_sin_pi(cplx z) {
    const cplx w = kPi * z;
    if (std::abs(w.imag()) < 20.0) return std::log(std::sin(w));
    const cplx I(0.0, 1.0);
    if (w.imag() > 0.0)
        return -I * w + cplx(-std::log(2.0), kPi / 2) +
               std::log(1.0 - std::exp(2.0 * I * w));
    return std::conj(log_sin_pi(std::conj(z)));
}

cplx stirling(cplx z) {
    // Bernoulli coefficients B_2k / (2k (2k-1))
    static constexpr std::array<double, 10> c = {
        1.0 / 12.0,          -1.0 / 360.0,          1.0 / 1260.0,         -1.0 / 1680.0,
        1.0 / 1188.0,        -691.0 / 360360.0,     1.0 / 156.0,          -3617.0 / 122400.0,
        43867.0 / 244188.0,  -174611.0 / 125400.0};
    const cplx iz = 1.0 / z, iz2 = iz * iz;
    cplx s = 0.0, p = iz;
    for (double ck : c) {
        s += ck * p;
        p *= iz2;
    }
    return (z - 0.5) * std::log(z) - z + kHalfLog2Pi + s;
}

}  // namespace

cplx log_gamma(cplx z) {
    if (is_nonpositive_integer(z))
        throw PoleError("log_gamma: pole at z = " + std::to_string(z.real()));
    if (z.real() < 0.5) return std::log(kPi) - log_sin_pi(z) - log_gamma(1.0 - z);
    cplx shift = 0.0;
    while (std::abs(z) < 15.0) {
        shift += std::log(z);
        z += 1.0;
    }
    return stirling(z) - shift;
}

cplx rgamma(cplx z) {
    if (is_nonpositive_integer(z)) return 0.0;
    return std::exp(-log_gamma(z));
}

namespace detail {

cplx kummer_series(cplx a, cplx b, cplx z) {
    constexpr int kMaxTerms = 10000;
    cplx term = 1.0, sum = 1.0;
    int small_run = 0;
    for (int n = 0; n < kMaxTerms; ++n) {
        term *= (a + double(n)) / (b + double(n)) * z / double(n + 1);
        sum += term;
        if (term == 0.0) return sum;
        if (std::abs(term) < 1e-16 * std::abs(sum)) {
            if (++small_run >= 2 && n > std::abs(a)) return sum;
        } else {
            small_run = 0;
        }
    }
    throw ConvergenceError("kummer_m: series did not converge", std::abs(sum), std::abs(term));
}

// DLMF 13.7.2 with optimal truncation of both divergent series.
cplx kummer_asymptotic(cplx a, cplx b, cplx z) {
    const cplx I(0.0, 1.0);
    const double arg = std::arg(z);
    const cplx sgn = (arg > -kPi / 2 && arg <= kPi) ? 1.0 : -1.0;
    const cplx log_z = std::log(z);

    auto divergent = [&](cplx p, cplx q, cplx x, double& tail) {
        cplx term = 1.0, sum = 1.0;
        double prev = 1.0;
        tail = 0.0;
        for (int s = 0; s < 500; ++s) {
            const cplx next = term * (p + double(s)) * (q + double(s)) / (double(s + 1) * x);
            const double mag = std::abs(next);
            if (mag > prev) break;
            term = next;
            sum += term;
            prev = mag;
            tail = mag;
            if (mag < 1e-17 * std::abs(sum)) {
                tail = 0.0;
                break;
            }
        }
        return sum;
    };

    double tail1 = 0.0, tail2 = 0.0;
    const cplx lgb = log_gamma(b);
    cplx out = 0.0;
    const cplx ra = rgamma(a);
    if (ra != 0.0) {
        const cplx s1 = divergent(1.0 - a, b - a, z, tail1);
        out += std::exp(lgb + z + (a - b) * log_z) * ra * s1;
    }
    const cplx rba = rgamma(b - a);
    if (rba != 0.0) {
        const cplx s2 = divergent(a, a - b + 1.0, -z, tail2);
        out += std::exp(lgb + sgn * I * kPi * a - a * log_z) * rba * s2;
    }
    if (tail1 > 1e-13 || tail2 > 1e-13)
        throw ConvergenceError("kummer_m: asymptotic expansion not accurate at this |z|",
                               std::abs(out), std::max(tail1, tail2));
    return out;
}

}  // namespace detail

cplx kummer_m(cplx a, cplx b, cplx z) {
    if (is_nonpositive_integer(b)) throw PoleError("kummer_m: b is a non-positive integer");
    if (z == 0.0) return 1.0;
    if (std::abs(z) > detail::kKummerAsymptoticRadius) {
        try {
            return detail::kummer_asymptotic(a, b, z);
        } catch (const ConvergenceError&) {
            if (std::abs(z) > 700.0) throw;
        }
    }
    if (z.real() < 0.0) return std::exp(z) * detail::kummer_series(b - a, b, -z);
    return detail::kummer_series(a, b, z);
}

double bessel_k1_scaled(double x) {
    if (!(x > 0.0)) throw DomainError("bessel_k1: x must be positive");
    if (x <= 2.0) return std::exp(x) * bessel_k1(x);
    if (x > 40.0) {
        // Hankel expansion with mu = 4
        double term = 1.0, sum = 1.0;
        for (int k = 1; k < 30; ++k) {
            const double odd = 2.0 * k - 1.0;
            const double next = term * (4.0 - odd * odd) / (k * 8.0 * x);
            if (std::abs(next) > std::abs(term)) break;
            term = next;
            sum += term;
            if (std::abs(term) < 1e-17) break;
        }
        return std::sqrt(kPi / (2.0 * x)) * sum;
    }
    // exp(x) K1(x) = int_0^inf exp(-x (cosh t - 1)) cosh t dt; trapezoid converges
    // geometrically for this analytic, rapidly decaying integrand.
    const double h = std::min(0.1, 0.25 / std::sqrt(x));
    const double tmax = std::acosh(1.0 + 42.0 / x);
    double sum = 0.5;
    for (int j = 1; j * h <= tmax + h; ++j) {
        const double t = j * h, ch = std::cosh(t);
        sum += std::exp(-x * (ch - 1.0)) * ch;
    }
    return h * sum;
}

double bessel_k1(double x) {
    if (!(x > 0.0)) throw DomainError("bessel_k1: x must be positive");
    if (x > 2.0) return x > 745.0 ? 0.0 : std::exp(-x) * bessel_k1_scaled(x);
    // DLMF 10.31.1, n = 1
    constexpr double kEuler = 0.57721566490153286061;
    const double y = 0.25 * x * x;
    double term = 1.0, i1 = 0.0, rest = 0.0, harmonic = 0.0;
    for (int k = 0; k < 60; ++k) {
        if (k > 0) {
            term *= y / (double(k) * double(k + 1));
            harmonic += 1.0 / k;
        }
        // psi(k+1) + psi(k+2) = -2 gamma + H_k + H_{k+1}
        const double psi_sum = -2.0 * kEuler + 2.0 * harmonic + 1.0 / (k + 1);
        i1 += term;
        rest += psi_sum * term;
        if (term < 1e-18 * i1) break;
    }
    i1 *= 0.5 * x;
    return 1.0 / x + std::log(0.5 * x) * i1 - 0.25 * x * rest;
}

}  // namespace eeb
