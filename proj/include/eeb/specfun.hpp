/**
 * @file specfun.hpp
 * @brief Complex log-Gamma, Kummer M and the Bessel function K1
 */

#pragma once

#include <complex>

namespace eeb {

using cplx = std::complex<double>;

/// Analytic continuation of log Gamma(z) (branch cut on the negative real axis
/// for Re z >= 0.5; reflection below that, where only exp() is guaranteed).
cplx log_gamma(cplx z);

/// 1 / Gamma(z), exactly zero at the poles.
cplx rgamma(cplx z);

/// Kummer confluent hypergeometric function M(a, b, z) = 1F1(a; b; z).
cplx kummer_m(cplx a, cplx b, cplx z);

/// Modified Bessel function of the second kind, order one.
double bessel_k1(double x);

/// exp(x) K1(x), finite for large x.
double bessel_k1_scaled(double x);

inline double norm_pdf(double x) { return 0.3989422804014327 * std::exp(-0.5 * x * x); }
inline double norm_cdf(double x) { return 0.5 * std::erfc(-x * 0.7071067811865476); }

namespace detail {
/// Radius above which kummer_m switches to the large-|z| expansion.
inline constexpr double kKummerAsymptoticRadius = 40.0;
cplx kummer_series(cplx a, cplx b, cplx z);
cplx kummer_asymptotic(cplx a, cplx b, cplx z);
}  // namespace detail

}  // namespace eeb
