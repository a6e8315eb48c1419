/**
 * @file cos.hpp
 * @brief Fourier-cosine density reconstruction and COS pricing
 */

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <functional>
#include <map>
#include <mutex>
#include <tuple>

#include "eeb/curve.hpp"

namespace eeb {

using cplx = std::complex<double>;

/// Truncation interval [a, b] in log-price and number of cosine terms.
struct CosConfig {
    double a = -10.0;
    double b = 10.0;
    int n = 64;

    double width() const { return b - a; }
    double omega(int k) const;
    void validate() const;
};

/// phi(omega) for a fixed horizon, conditioned on log-price 0.
using CfAtZero = std::function<cplx(double omega)>;

/// phi(k pi / (b - a)) for k = 0..N-1.
Eigen::VectorXcd cf_grid(const CfAtZero& cf, const CosConfig& cfg);

struct CosCoefficients {
    Eigen::VectorXd values;  ///< F_k, k = 0..N-1 (k = 0 not halved)
    CosConfig config;
    double x = 0.0;          ///< conditioning log-price
};

/// F_k via the shift identity phi(w; x) = exp(i w x) phi(w; 0).
/// `derivative` = 0, 1, 2 returns the coefficients of d^n/dx^n of the density.
CosCoefficients cos_coefficients(const Eigen::VectorXcd& phi0, double x, const CosConfig& cfg,
                                 int derivative = 0);
CosCoefficients cos_coefficients(const CfAtZero& cf, double x, const CosConfig& cfg);

/// F_k straight from a CF already conditioned on x (no cache, no shift).
CosCoefficients cos_coefficients_direct(const CfAtZero& cf_x, double x, const CosConfig& cfg);
CosCoefficients cos_coefficients_direct(const Eigen::VectorXcd& phi_x, double x, const CosConfig& cfg);

/// Sum' F_k cos(k pi (y - a) / (b - a)).
double density_reconstruct(const CosCoefficients& c, double y);

struct Cumulants {
    double c1 = 0.0, c2 = 0.0, c4 = 0.0;
};

/// Cumulants of the log-price from central differences of log phi at 0.
Cumulants cumulants_from_cf(const CfAtZero& cf);

struct TruncationPolicy {
    enum class Kind { fixed, cumulant };
    Kind kind = Kind::fixed;
    double a = -10.0, b = 10.0, L = 10.0;

    static TruncationPolicy fixed(double a, double b) { return {Kind::fixed, a, b, 0.0}; }
    static TruncationPolicy cumulant(double L) { return {Kind::cumulant, 0.0, 0.0, L}; }
};

/// (a, b) per policy; the cumulant rule is c1 -+ L sqrt(c2 + sqrt(c4)).
std::pair<double, double> truncation_range(const CfAtZero& cf, const TruncationPolicy& policy);

/// int_c^d exp(y) cos(w (y - a)) dy and int_c^d cos(w (y - a)) dy.
double cos_chi(double w, double a, double c, double d);
double cos_psi(double w, double a, double c, double d);

struct EuropeanResult {
    double price = 0.0;
    bool clamped = false;
};

/// European put: D * Sum' F_k * int_a^{log K} (K - e^y) cos(...) dy.
EuropeanResult european_put_cos(const CosCoefficients& c, double K, double discount);
EuropeanResult european_call_cos(const CosCoefficients& c, double K, double discount);

/// int_0^{X_B} (r K - q X) cos(k pi (X - a) / (b - a)) dX (price-space basis).
double eep_inner_coefficient(int k, const CosConfig& cfg, double xb, double r, double q, double K);

/// int_a^{x_B} (r K - q e^z) cos(k pi (z - a) / (b - a)) dz (log-price basis).
double eep_inner_coefficient_log(int k, const CosConfig& cfg, double log_xb, double r, double q,
                                 double K);

/// Memoised phi values per (t, u, v); safe for concurrent use.
class CfCache {
public:
    using Fn = std::function<cplx(double t, double u, double omega, double x, double v)>;

    CfCache(Fn cf, CosConfig cfg) : cf_(std::move(cf)), cfg_(cfg) {}

    /// phi(omega_k; x = 0) for k < N, computed on first use.
    const Eigen::VectorXcd& get(double t, double u, double v) const;
    /// phi(omega_k; x) evaluated directly, bypassing the cache.
    Eigen::VectorXcd evaluate(double t, double u, double x, double v) const;
    std::size_t size() const;
    const CosConfig& config() const { return cfg_; }

private:
    Fn cf_;
    CosConfig cfg_;
    mutable std::map<std::tuple<double, double, double>, Eigen::VectorXcd> map_;
    mutable std::mutex mu_;
};

/// Trapezoid weights on an arbitrary ascending grid.
Eigen::VectorXd trapezoid_weights(const Eigen::VectorXd& grid);

/// Early-exercise premium at (t, x = log price) from CF values.
///
/// u_grid ascends from t to T and boundary holds X_B(u_j) in price units.
/// The u_j = t node contributes nothing because x lies above X_B(t).
/// With use_cache = false every phi is evaluated directly at x.
double eep_from_cf(const CfCache& cache, double t, double x, double v, const Eigen::VectorXd& u_grid,
                   const Eigen::VectorXd& boundary, const Curve& r, const Curve& q, double K,
                   bool use_cache = true);

}  // namespace eeb
